"""Option-wise multiple-choice scoring and structured-response parsing.

Each option is an independent select/reject decision worth 1/n of the total,
so a response earns credit for wrong options it correctly leaves out. For a
four-option task the possible scores are {0, 0.25, 0.5, 0.75, 1}.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ParseFailure

# splits selection strings like "B, D" or "A and C" into candidate labels
_TOKEN_RE = re.compile(r"[^A-Za-z0-9]+")


@dataclass(frozen=True)
class TaskSpec:
    """A multiple-choice task: option labels, answer key, and prompts."""

    option_labels: tuple[str, ...]
    answer_key: frozenset[str]
    system_prompt: str = ""
    user_prompt: str = ""

    def __post_init__(self) -> None:
        labels = tuple(str(lab) for lab in self.option_labels)
        if not labels:
            raise ValueError("option_labels must be non-empty")
        if len(set(labels)) != len(labels):
            raise ValueError("option_labels must be distinct")
        key = frozenset(str(k) for k in self.answer_key)
        if not key <= set(labels):
            raise ValueError("answer_key must be a subset of option_labels")
        object.__setattr__(self, "option_labels", labels)
        object.__setattr__(self, "answer_key", key)

    @classmethod
    def from_mapping(cls, obj: Mapping) -> "TaskSpec":
        try:
            return cls(
                option_labels=tuple(obj["options"]),
                answer_key=frozenset(obj["key"]),
                system_prompt=str(obj.get("system_prompt", "")),
                user_prompt=str(obj.get("user_prompt", "")),
            )
        except KeyError as exc:
            raise ValueError(f"task spec missing field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class StructuredAnswer:
    """Parsed model output: free-text solution path plus selected labels."""

    solution_path: str
    selected: frozenset[str] = field(default_factory=frozenset)


def score_response(selected: Iterable[str], spec: TaskSpec) -> float:
    """Score a selection as the fraction of per-option decisions that agree
    with the answer key (selected and in key, or not selected and not in key).
    """
    chosen = frozenset(selected)
    unknown = chosen - set(spec.option_labels)
    if unknown:
        raise ValueError(f"unknown labels in selection: {sorted(unknown)}")
    agree = sum(
        1 for lab in spec.option_labels if (lab in chosen) == (lab in spec.answer_key)
    )
    return agree / len(spec.option_labels)


def _normalize_labels(tokens: Iterable[str], spec: TaskSpec) -> frozenset[str]:
    by_fold = {lab.casefold(): lab for lab in spec.option_labels}
    out = set()
    for tok in tokens:
        tok = str(tok).strip()
        if not tok:
            continue
        lab = by_fold.get(tok.casefold())
        if lab is None:
            raise ParseFailure(f"selection token {tok!r} is not an option label")
        out.add(lab)
    return frozenset(out)


def parse_structured(raw: str, spec: TaskSpec) -> StructuredAnswer:
    """Parse a JSON response body into a StructuredAnswer.

    The selection may arrive under ``answer`` or ``selected``, as an array of
    labels or as a single delimited string ("B, D"). Unknown labels raise
    ParseFailure rather than being dropped.
    """
    try:
        obj = json.loads(raw)
    except (json.JSONDecodeError, TypeError) as exc:
        raise ParseFailure(f"response is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseFailure("response JSON must be an object")

    if "answer" in obj:
        sel = obj["answer"]
    elif "selected" in obj:
        sel = obj["selected"]
    else:
        raise ParseFailure("response JSON lacks an 'answer' field")

    if isinstance(sel, str):
        tokens = [t for t in _TOKEN_RE.split(sel) if t]
    elif isinstance(sel, list):
        tokens = [str(t) for t in sel]
    else:
        raise ParseFailure("'answer' must be a string or an array of labels")

    return StructuredAnswer(
        solution_path=str(obj.get("solution_path", "")),
        selected=_normalize_labels(tokens, spec),
    )
