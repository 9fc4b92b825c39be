import pytest

from ars.clock import ManualClock
from ars.engine import Engine, Submission
from ars.eventlog import MemoryEventLog
from ars.model import ChoiceKind, Visibility

T0 = 1_700_000_000_000  # arbitrary fixed epoch-ms origin


@pytest.fixture
def clock():
    return ManualClock(start_ms=T0)


@pytest.fixture
def engine(clock):
    return Engine(log=MemoryEventLog(), clock=clock)


def make_session(engine, n_options=3, kind=ChoiceKind.SINGLE, duration_s=60,
                 visibility=Visibility.PUBLIC):
    """One question, one group, one open window; returns (question, group, window)."""
    labels = [chr(ord("A") + i) for i in range(n_options)]
    q = engine.make_question("pick one", kind, labels)
    g = engine.compose_group("session", [q.question_id], visibility)
    w = engine.open_window(g.group_id, duration_s)
    return q, g, w


def submit_pick(engine, window, question, token, *indices, received_at=None):
    selected = frozenset(question.options[i].option_id for i in indices)
    return engine.submit(
        Submission(token, window.window_id, question.question_id, selected),
        received_at=received_at,
    )


def naive_recount(events, window_id):
    """Independent oracle: scan raw events, apply last-write-wins in scan
    order, drop responses after the window's close, count.

    Returns (counts: {qid: {oid: n}}, respondents: {qid: n}).
    """
    closed_at = None
    for ev in events:
        if ev.kind == "WindowClosed" and ev.payload["window_id"] == window_id:
            closed_at = ev.payload["closed_at"]
    final = {}
    for ev in events:
        if ev.kind != "ResponseRecorded" or ev.payload["window_id"] != window_id:
            continue
        p = ev.payload
        if closed_at is not None and p["received_at"] > closed_at:
            continue
        final[(p["participant_token"], p["question_id"])] = p["selected_options"]
    counts: dict[str, dict[str, int]] = {}
    respondents: dict[str, int] = {}
    for (_token, qid), selected in final.items():
        respondents[qid] = respondents.get(qid, 0) + 1
        per = counts.setdefault(qid, {})
        for oid in selected:
            per[oid] = per.get(oid, 0) + 1
    return counts, respondents
