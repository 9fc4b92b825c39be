"""Session engine: authoring plus the live answering-window lifecycle.

Every state change is appended to the event log *before* it is applied
in memory, so replaying the log reproduces the engine state exactly.
Duplicate submissions are last-write-wins per (participant, window,
question) until the window closes. Deadlines are enforced lazily: any
operation that touches a timed window past its deadline auto-closes it
first.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ars import stats as _stats
from ars.clock import Clock, SystemClock
from ars.errors import (
    AlreadyClosedError,
    GroupLockedError,
    InvalidSelectionError,
    SnapshotOffsetMismatchError,
    UnknownGroupError,
    UnknownQuestionError,
    UnknownQuestionInWindowError,
    UnknownWindowError,
    WindowAlreadyOpenError,
    WindowClosedError,
)
from ars.eventlog import Event, MemoryEventLog, decode_snapshot, encode_snapshot
from ars.ids import new_id, new_join_code
from ars.model import (
    ChoiceKind,
    GroupState,
    Option,
    QuestionGroup,
    QuestionPool,
    QuestionRevision,
    Visibility,
    raise_on_invalid,
    validate_group_items,
    validate_question,
)

OPEN = "open"
CLOSED = "closed"


@dataclass
class AnsweringWindow:
    window_id: str
    group_id: str
    opened_at: int
    duration_s: Optional[float]  # None = open-ended (homework mode)
    join_code: str
    state: str = OPEN
    closed_at: Optional[int] = None
    published: bool = False

    @property
    def deadline_ms(self) -> Optional[int]:
        if self.duration_s is None:
            return None
        return self.opened_at + int(round(self.duration_s * 1000))


@dataclass(frozen=True)
class Submission:
    participant_token: str
    window_id: str
    question_id: str
    selected_options: frozenset[str]
    client_note: Optional[str] = None


@dataclass(frozen=True)
class SubmissionReceipt:
    receipt_id: str
    window_id: str
    question_id: str
    received_at: int
    accepted: bool
    replaced_prior: bool


@dataclass(frozen=True)
class WindowSummary:
    window_id: str
    group_id: str
    opened_at: int
    closed_at: int
    respondent_count: int
    responses_flushed: int


@dataclass(frozen=True)
class WindowStatus:
    state: str
    remaining_s: Optional[float]
    respondent_count: int


@dataclass(frozen=True)
class FinalResponse:
    selected: frozenset[str]
    received_at: int
    receipt_id: str


class Engine:
    """Single-process engine; all public operations are atomic under one lock.

    ``log`` may be a file-backed :class:`~ars.eventlog.EventLog` or a
    :class:`~ars.eventlog.MemoryEventLog`. Existing events in the log are
    replayed at construction, so reopening a log file resumes the state.
    """

    def __init__(self, log=None, clock: Clock | None = None):
        self.log = log if log is not None else MemoryEventLog()
        self.clock = clock or SystemClock()
        self.lock = threading.RLock()
        self.pool = QuestionPool()
        self.groups: dict[str, QuestionGroup] = {}
        self.windows: dict[str, AnsweringWindow] = {}
        # window_id -> (participant_token, question_id) -> FinalResponse
        self.responses: dict[str, dict[tuple[str, str], FinalResponse]] = {}
        self.summaries: dict[str, WindowSummary] = {}
        self._open_by_group: dict[str, str] = {}
        self._last_received: dict[str, int] = {}
        self._versions: dict[str, int] = {}
        self._idempotent: dict[tuple[str, str], SubmissionReceipt] = {}
        for event in self.log.events:
            self._apply(event.kind, event.payload)

    # -- authoring -----------------------------------------------------------

    def make_question(self, text: str, kind: ChoiceKind,
                      option_labels: list[str]) -> QuestionRevision:
        kind = ChoiceKind(kind)
        raise_on_invalid(validate_question(text, option_labels))
        with self.lock:
            payload = {
                "question_id": new_id("q"),
                "revision": 1,
                "text": text,
                "kind": kind.value,
                "options": [
                    {"option_id": new_id("o"), "label": label}
                    for label in option_labels
                ],
            }
            self._record("QuestionCreated", payload)
            return self.pool.latest(payload["question_id"])

    def edit_question(self, question_id: str, *, text: str | None = None,
                      kind: ChoiceKind | None = None,
                      option_labels: list[str] | None = None) -> QuestionRevision:
        with self.lock:
            prev = self.pool.latest(question_id)
            new_text = text if text is not None else prev.text
            new_kind = ChoiceKind(kind) if kind is not None else prev.kind
            if option_labels is not None:
                raise_on_invalid(validate_question(new_text, option_labels))
                options = [{"option_id": new_id("o"), "label": label}
                           for label in option_labels]
            else:
                raise_on_invalid(validate_question(new_text, [o.label for o in prev.options]))
                options = [{"option_id": o.option_id, "label": o.label}
                           for o in prev.options]
            payload = {
                "question_id": question_id,
                "revision": prev.revision + 1,
                "text": new_text,
                "kind": new_kind.value,
                "options": options,
            }
            self._record("QuestionEdited", payload)
            return self.pool.latest(question_id)

    def get_revision(self, question_id: str, revision: int) -> QuestionRevision:
        with self.lock:
            return self.pool.get(question_id, revision)

    def latest_revision(self, question_id: str) -> QuestionRevision:
        with self.lock:
            return self.pool.latest(question_id)

    def list_questions(self) -> list[QuestionRevision]:
        with self.lock:
            return [self.pool.latest(qid) for qid in self.pool.question_ids()]

    def compose_group(self, title: str, question_ids: list[str],
                      visibility: Visibility = Visibility.PROTECTED) -> QuestionGroup:
        with self.lock:
            validate_group_items(question_ids, self.pool)
            payload = {
                "group_id": new_id("g"),
                "title": title,
                "items": [
                    {"question_id": qid, "revision": self.pool.latest(qid).revision}
                    for qid in question_ids
                ],
                "visibility": Visibility(visibility).value,
                "state": GroupState.UNLOCKED.value,
            }
            self._record("GroupComposed", payload)
            return self.groups[payload["group_id"]]

    def set_group_state(self, group_id: str, state: GroupState) -> QuestionGroup:
        with self.lock:
            if group_id not in self.groups:
                raise UnknownGroupError(f"no group {group_id!r}")
            payload = {"group_id": group_id, "state": GroupState(state).value}
            self._record("GroupStateChanged", payload)
            return self.groups[group_id]

    def get_group(self, group_id: str) -> QuestionGroup:
        with self.lock:
            try:
                return self.groups[group_id]
            except KeyError:
                raise UnknownGroupError(f"no group {group_id!r}") from None

    # -- windows -------------------------------------------------------------

    def open_window(self, group_id: str,
                    duration_s: float | None = None) -> AnsweringWindow:
        with self.lock:
            group = self.get_group(group_id)
            if group.state is GroupState.LOCKED:
                raise GroupLockedError(f"group {group_id!r} is locked")
            open_id = self._open_by_group.get(group_id)
            if open_id is not None and not self._past_deadline(self.windows[open_id]):
                raise WindowAlreadyOpenError(
                    f"window {open_id!r} already open on group {group_id!r}")
            if open_id is not None:
                self._autoclose(self.windows[open_id])
            payload = {
                "window_id": new_id("w"),
                "group_id": group_id,
                "opened_at": self.clock.now_ms(),
                "duration_s": duration_s,
                "join_code": new_join_code(),
            }
            self._record("WindowOpened", payload)
            return self.windows[payload["window_id"]]

    def get_window(self, window_id: str) -> AnsweringWindow:
        with self.lock:
            try:
                return self.windows[window_id]
            except KeyError:
                raise UnknownWindowError(f"no window {window_id!r}") from None

    def submit(self, sub: Submission, received_at: int | None = None,
               idempotency_key: str | None = None) -> SubmissionReceipt:
        with self.lock:
            window = self.get_window(sub.window_id)
            if idempotency_key is not None:
                prior = self._idempotent.get((sub.window_id, idempotency_key))
                if prior is not None:
                    return prior
            if received_at is None:
                # server-assigned stamps are kept non-decreasing per window
                received_at = max(self.clock.now_ms(),
                                  self._last_received.get(sub.window_id, 0))
            self._autoclose(window)
            deadline = window.deadline_ms
            if window.state == CLOSED or (deadline is not None and received_at > deadline):
                raise WindowClosedError(f"window {sub.window_id!r} is closed")
            group = self.groups[window.group_id]
            pinned = group.pinned_revision(sub.question_id)
            if pinned is None:
                raise UnknownQuestionInWindowError(
                    f"question {sub.question_id!r} not in group {group.group_id!r}")
            question = self.pool.get(sub.question_id, pinned)
            self._validate_selection(question, sub.selected_options)

            prior_resp = self.responses[window.window_id].get(
                (sub.participant_token, sub.question_id))
            payload = {
                "receipt_id": new_id("r"),
                "window_id": window.window_id,
                "group_id": window.group_id,
                "question_id": sub.question_id,
                "participant_token": sub.participant_token,
                "selected_options": sorted(sub.selected_options),
                "received_at": received_at,
                "replaced_prior": prior_resp is not None,
            }
            self._record("ResponseRecorded", payload)
            receipt = SubmissionReceipt(
                receipt_id=payload["receipt_id"],
                window_id=window.window_id,
                question_id=sub.question_id,
                received_at=received_at,
                accepted=True,
                replaced_prior=prior_resp is not None,
            )
            if idempotency_key is not None:
                self._idempotent[(sub.window_id, idempotency_key)] = receipt
            return receipt

    def close_window(self, window_id: str, at: int | None = None) -> WindowSummary:
        with self.lock:
            window = self.get_window(window_id)
            self._autoclose(window)
            if window.state == CLOSED:
                raise AlreadyClosedError(f"window {window_id!r} already closed")
            self._do_close(window, at if at is not None else self.clock.now_ms())
            return self.summaries[window_id]

    def window_summary(self, window_id: str) -> WindowSummary:
        with self.lock:
            self.get_window(window_id)
            try:
                return self.summaries[window_id]
            except KeyError:
                raise WindowClosedError(f"window {window_id!r} not closed yet") from None

    def window_status(self, window_id: str) -> WindowStatus:
        with self.lock:
            window = self.get_window(window_id)
            self._autoclose(window)
            remaining = None
            if window.state == OPEN and window.deadline_ms is not None:
                remaining = max(0.0, (window.deadline_ms - self.clock.now_ms()) / 1000)
            respondents = len({t for t, _ in self.responses[window_id]})
            return WindowStatus(window.state, remaining, respondents)

    def publish(self, window_id: str) -> AnsweringWindow:
        with self.lock:
            window = self.get_window(window_id)
            if not window.published:
                self._record("PollPublished", {
                    "window_id": window_id,
                    "published_at": self.clock.now_ms(),
                })
            return window

    def sweep_deadlines(self) -> int:
        """Close every timed window whose deadline has passed; returns count."""
        with self.lock:
            closed = 0
            for window in list(self.windows.values()):
                if window.state == OPEN and self._past_deadline(window):
                    self._autoclose(window)
                    closed += 1
            return closed

    def window_version(self, window_id: str) -> int:
        with self.lock:
            self.get_window(window_id)
            return self._versions.get(window_id, 0)

    # -- statistics ----------------------------------------------------------

    def tabulate(self, flt: "_stats.StatsFilter") -> "_stats.TabulatedStats":
        with self.lock:
            # only the filter's windows can be past deadline and matter here
            if flt.window_id is not None and flt.window_id in self.windows:
                self._autoclose(self.windows[flt.window_id])
            elif flt.group_id is not None:
                for window in self.windows.values():
                    if window.group_id == flt.group_id:
                        self._autoclose(window)
            return _stats.tabulate(self, flt)

    def compare(self, left: "_stats.StatsFilter",
                right: "_stats.StatsFilter") -> "_stats.StatsComparison":
        with self.lock:
            return _stats.compare(self.tabulate(left), self.tabulate(right))

    # -- persistence ---------------------------------------------------------

    def snapshot(self) -> bytes:
        with self.lock:
            state = {
                "revisions": [
                    self._revision_payload(rev)
                    for rev in sorted(self.pool._history.values(),
                                      key=lambda r: (r.question_id, r.revision))
                ],
                "groups": [
                    {
                        "group_id": g.group_id, "title": g.title,
                        "items": [{"question_id": q, "revision": r} for q, r in g.items],
                        "state": g.state.value, "visibility": g.visibility.value,
                    }
                    for g in self.groups.values()
                ],
                "windows": [
                    {
                        "window_id": w.window_id, "group_id": w.group_id,
                        "opened_at": w.opened_at, "duration_s": w.duration_s,
                        "join_code": w.join_code, "state": w.state,
                        "closed_at": w.closed_at, "published": w.published,
                    }
                    for w in self.windows.values()
                ],
                "responses": [
                    {
                        "window_id": wid, "participant_token": token,
                        "question_id": qid, "selected": sorted(resp.selected),
                        "received_at": resp.received_at, "receipt_id": resp.receipt_id,
                    }
                    for wid, final in self.responses.items()
                    for (token, qid), resp in final.items()
                ],
            }
            return encode_snapshot(state, self.log.next_offset - 1)

    @classmethod
    def from_snapshot(cls, blob: bytes, tail: Iterable[Event] = (),
                      log=None, clock: Clock | None = None) -> "Engine":
        state, covers = decode_snapshot(blob)
        engine = cls(log=MemoryEventLog(), clock=clock)
        engine._load_state(state)
        expect = covers + 1
        for event in tail:
            if event.offset != expect:
                raise SnapshotOffsetMismatchError(
                    f"snapshot covers offset {covers}, tail event has offset "
                    f"{event.offset}, expected {expect}")
            engine._apply(event.kind, event.payload)
            expect += 1
        if log is not None:
            engine.log = log
        return engine

    # -- internals -----------------------------------------------------------

    @staticmethod
    def _validate_selection(question: QuestionRevision,
                            selected: frozenset[str]) -> None:
        if not selected:
            raise InvalidSelectionError("no option selected")
        if question.kind is ChoiceKind.SINGLE and len(selected) != 1:
            raise InvalidSelectionError("single choice takes exactly one option")
        foreign = selected - question.option_ids()
        if foreign:
            raise InvalidSelectionError(f"unknown option ids: {sorted(foreign)}")

    def _past_deadline(self, window: AnsweringWindow) -> bool:
        deadline = window.deadline_ms
        return (window.state == OPEN and deadline is not None
                and self.clock.now_ms() > deadline)

    def _autoclose(self, window: AnsweringWindow) -> None:
        if self._past_deadline(window):
            self._do_close(window, window.deadline_ms)

    def _do_close(self, window: AnsweringWindow, at: int) -> None:
        # closed_at never precedes an accepted response nor exceeds the deadline
        closed_at = max(at, window.opened_at,
                        self._last_received.get(window.window_id, 0))
        if window.deadline_ms is not None:
            closed_at = min(closed_at, window.deadline_ms)
        final = self.responses[window.window_id]
        payload = {
            "window_id": window.window_id,
            "closed_at": closed_at,
            "respondent_count": len({t for t, _ in final}),
            "responses_flushed": len(final),
        }
        self._record("WindowClosed", payload)

    @staticmethod
    def _revision_payload(rev: QuestionRevision) -> dict:
        return {
            "question_id": rev.question_id, "revision": rev.revision,
            "text": rev.text, "kind": rev.kind.value,
            "options": [{"option_id": o.option_id, "label": o.label}
                        for o in rev.options],
        }

    def _record(self, kind: str, payload: dict) -> None:
        self.log.append(kind, payload, self.clock.now_ms())
        self._apply(kind, payload)

    def _apply(self, kind: str, payload: dict) -> None:
        getattr(self, "_apply_" + kind)(payload)

    def _apply_QuestionCreated(self, p: dict) -> None:
        self.pool.add(QuestionRevision(
            question_id=p["question_id"], revision=p["revision"], text=p["text"],
            kind=ChoiceKind(p["kind"]),
            options=tuple(Option(o["option_id"], o["label"]) for o in p["options"]),
        ))

    _apply_QuestionEdited = _apply_QuestionCreated

    def _apply_GroupComposed(self, p: dict) -> None:
        self.groups[p["group_id"]] = QuestionGroup(
            group_id=p["group_id"], title=p["title"],
            items=tuple((i["question_id"], i["revision"]) for i in p["items"]),
            state=GroupState(p["state"]), visibility=Visibility(p["visibility"]),
        )

    def _apply_GroupStateChanged(self, p: dict) -> None:
        self.groups[p["group_id"]].state = GroupState(p["state"])

    def _apply_WindowOpened(self, p: dict) -> None:
        window = AnsweringWindow(
            window_id=p["window_id"], group_id=p["group_id"],
            opened_at=p["opened_at"], duration_s=p["duration_s"],
            join_code=p["join_code"],
        )
        self.windows[window.window_id] = window
        self.responses[window.window_id] = {}
        self._open_by_group[window.group_id] = window.window_id
        self._versions[window.window_id] = 0

    def _apply_ResponseRecorded(self, p: dict) -> None:
        wid = p["window_id"]
        self.responses[wid][(p["participant_token"], p["question_id"])] = FinalResponse(
            selected=frozenset(p["selected_options"]),
            received_at=p["received_at"],
            receipt_id=p["receipt_id"],
        )
        self._last_received[wid] = max(self._last_received.get(wid, 0),
                                       p["received_at"])
        self._versions[wid] = self._versions.get(wid, 0) + 1

    def _apply_WindowClosed(self, p: dict) -> None:
        window = self.windows[p["window_id"]]
        window.state = CLOSED
        window.closed_at = p["closed_at"]
        if self._open_by_group.get(window.group_id) == window.window_id:
            del self._open_by_group[window.group_id]
        self.summaries[window.window_id] = WindowSummary(
            window_id=window.window_id, group_id=window.group_id,
            opened_at=window.opened_at, closed_at=p["closed_at"],
            respondent_count=p["respondent_count"],
            responses_flushed=p["responses_flushed"],
        )
        self._versions[window.window_id] = self._versions.get(window.window_id, 0) + 1

    def _apply_PollPublished(self, p: dict) -> None:
        self.windows[p["window_id"]].published = True
        self._versions[p["window_id"]] = self._versions.get(p["window_id"], 0) + 1

    def _load_state(self, state: dict) -> None:
        for rev in state["revisions"]:
            self._apply_QuestionCreated(rev)
        for g in state["groups"]:
            self._apply_GroupComposed(g)
        for w in state["windows"]:
            window = AnsweringWindow(
                window_id=w["window_id"], group_id=w["group_id"],
                opened_at=w["opened_at"], duration_s=w["duration_s"],
                join_code=w["join_code"], state=w["state"],
                closed_at=w["closed_at"], published=w["published"],
            )
            self.windows[window.window_id] = window
            self.responses[window.window_id] = {}
            if window.state == OPEN:
                self._open_by_group[window.group_id] = window.window_id
            self._versions[window.window_id] = 0
        for r in state["responses"]:
            wid = r["window_id"]
            self.responses[wid][(r["participant_token"], r["question_id"])] = (
                FinalResponse(frozenset(r["selected"]), r["received_at"],
                              r["receipt_id"]))
            self._last_received[wid] = max(self._last_received.get(wid, 0),
                                           r["received_at"])
        for w in state["windows"]:
            if w["state"] == CLOSED:
                final = self.responses[w["window_id"]]
                self.summaries[w["window_id"]] = WindowSummary(
                    window_id=w["window_id"], group_id=w["group_id"],
                    opened_at=w["opened_at"], closed_at=w["closed_at"],
                    respondent_count=len({t for t, _ in final}),
                    responses_flushed=len(final),
                )
