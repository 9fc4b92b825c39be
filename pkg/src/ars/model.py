"""Domain model: questions, the question pool, and question groups.

Question revisions are immutable; editing creates revision+1 and keeps the
old one in history. Groups pin specific revisions, so later pool edits never
change what a group presents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ars.errors import (
    DuplicateQuestionInGroupError,
    EmptyGroupError,
    EmptyOptionLabelError,
    EmptyTextError,
    TooFewOptionsError,
    UnknownQuestionError,
)


class ChoiceKind(str, Enum):
    SINGLE = "single"
    MULTIPLE = "multiple"


class GroupState(str, Enum):
    UNLOCKED = "unlocked"
    LOCKED = "locked"


class Visibility(str, Enum):
    PROTECTED = "protected"
    PUBLIC = "public"


@dataclass(frozen=True)
class Option:
    option_id: str
    label: str


@dataclass(frozen=True)
class QuestionRevision:
    question_id: str
    revision: int
    text: str
    kind: ChoiceKind
    options: tuple[Option, ...]

    def option_ids(self) -> frozenset[str]:
        return frozenset(o.option_id for o in self.options)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[tuple[str, str], ...] = ()


def validate_question(text: str, option_labels: list[str]) -> ValidationReport:
    """Check authoring input; ok iff violations is empty."""
    violations: list[tuple[str, str]] = []
    if not text or not text.strip():
        violations.append(("text", "question text must be non-empty"))
    if len(option_labels) < 2:
        violations.append(("options", "a question needs at least 2 options"))
    for i, label in enumerate(option_labels):
        if not label or not label.strip():
            violations.append((f"options[{i}]", "option label must be non-empty"))
    return ValidationReport(ok=not violations, violations=tuple(violations))


def raise_on_invalid(report: ValidationReport) -> None:
    for fld, msg in report.violations:
        if fld == "text":
            raise EmptyTextError(msg)
        if fld == "options":
            raise TooFewOptionsError(msg)
        raise EmptyOptionLabelError(f"{fld}: {msg}")


class QuestionPool:
    """All authored revisions, keyed by question id; tracks the latest."""

    def __init__(self):
        self._latest: dict[str, QuestionRevision] = {}
        self._history: dict[tuple[str, int], QuestionRevision] = {}

    def add(self, rev: QuestionRevision) -> None:
        key = (rev.question_id, rev.revision)
        if key in self._history:
            raise ValueError(f"revision {key} already recorded")
        self._history[key] = rev
        current = self._latest.get(rev.question_id)
        if current is None or rev.revision > current.revision:
            self._latest[rev.question_id] = rev

    def latest(self, question_id: str) -> QuestionRevision:
        try:
            return self._latest[question_id]
        except KeyError:
            raise UnknownQuestionError(f"no question {question_id!r}") from None

    def get(self, question_id: str, revision: int) -> QuestionRevision:
        try:
            return self._history[(question_id, revision)]
        except KeyError:
            raise UnknownQuestionError(
                f"no revision {revision} of question {question_id!r}"
            ) from None

    def exists(self, question_id: str) -> bool:
        return question_id in self._latest

    def question_ids(self) -> list[str]:
        return list(self._latest)


@dataclass
class QuestionGroup:
    group_id: str
    title: str
    items: tuple[tuple[str, int], ...]  # (question_id, pinned revision)
    state: GroupState = GroupState.UNLOCKED
    visibility: Visibility = Visibility.PROTECTED

    def pinned_revision(self, question_id: str) -> int | None:
        for qid, rev in self.items:
            if qid == question_id:
                return rev
        return None


def validate_group_items(question_ids: list[str], pool: QuestionPool) -> None:
    if not question_ids:
        raise EmptyGroupError("a group needs at least one question")
    seen: set[str] = set()
    for qid in question_ids:
        if qid in seen:
            raise DuplicateQuestionInGroupError(f"question {qid!r} listed twice")
        seen.add(qid)
        if not pool.exists(qid):
            raise UnknownQuestionError(f"no question {qid!r}")
