import pytest

from ars.errors import (
    DuplicateQuestionInGroupError,
    EmptyGroupError,
    EmptyOptionLabelError,
    EmptyTextError,
    TooFewOptionsError,
    UnknownGroupError,
    UnknownQuestionError,
)
from ars.model import ChoiceKind, GroupState, Visibility, validate_question

from conftest import make_session, submit_pick


class TestMakeQuestion:
    def test_constructor_echo(self, engine):
        q = engine.make_question("2+2=?", ChoiceKind.SINGLE, ["3", "4", "5"])
        assert q.revision == 1
        assert q.kind is ChoiceKind.SINGLE
        assert [o.label for o in q.options] == ["3", "4", "5"]
        assert len({o.option_id for o in q.options}) == 3

    def test_too_few_options(self, engine):
        with pytest.raises(TooFewOptionsError):
            engine.make_question("x?", ChoiceKind.SINGLE, ["only one"])

    def test_multiple_choice(self, engine):
        q = engine.make_question("pick all primes", ChoiceKind.MULTIPLE,
                                 ["2", "3", "4", "5"])
        assert q.revision == 1
        assert q.kind is ChoiceKind.MULTIPLE

    def test_empty_text(self, engine):
        with pytest.raises(EmptyTextError):
            engine.make_question("   ", ChoiceKind.SINGLE, ["a", "b"])

    def test_empty_option_label(self, engine):
        with pytest.raises(EmptyOptionLabelError):
            engine.make_question("x?", ChoiceKind.SINGLE, ["a", ""])

    def test_no_upper_bound_on_options(self, engine):
        q = engine.make_question("many", ChoiceKind.SINGLE,
                                 [str(i) for i in range(100)])
        assert len(q.options) == 100


class TestEditQuestion:
    def test_edit_creates_next_revision(self, engine):
        q1 = engine.make_question("v1?", ChoiceKind.SINGLE, ["a", "b"])
        q2 = engine.edit_question(q1.question_id, text="v2?")
        assert q2.revision == 2
        assert engine.get_revision(q1.question_id, 1) == q1  # old one retrievable

    def test_edit_unknown_id(self, engine):
        with pytest.raises(UnknownQuestionError):
            engine.edit_question("nope", text="x")

    def test_invalid_edit_leaves_pool_unchanged(self, engine):
        q1 = engine.make_question("v1?", ChoiceKind.SINGLE, ["a", "b"])
        with pytest.raises(TooFewOptionsError):
            engine.edit_question(q1.question_id, option_labels=["solo"])
        assert engine.latest_revision(q1.question_id) == q1

    def test_revision_immutability(self, engine):
        q1 = engine.make_question("v1?", ChoiceKind.SINGLE, ["a", "b"])
        snapshot = engine.get_revision(q1.question_id, 1)
        for i in range(5):
            engine.edit_question(q1.question_id, text=f"v{i + 2}?")
        assert engine.get_revision(q1.question_id, 1) == snapshot
        assert engine.latest_revision(q1.question_id).revision == 6


class TestComposeGroup:
    def test_single_question_group(self, engine):
        q = engine.make_question("q?", ChoiceKind.SINGLE, ["a", "b"])
        g = engine.compose_group("solo", [q.question_id], Visibility.PROTECTED)
        assert g.state is GroupState.UNLOCKED
        assert g.items == ((q.question_id, 1),)

    def test_duplicate_question(self, engine):
        q = engine.make_question("q?", ChoiceKind.SINGLE, ["a", "b"])
        with pytest.raises(DuplicateQuestionInGroupError):
            engine.compose_group("dup", [q.question_id, q.question_id])

    def test_empty_group(self, engine):
        with pytest.raises(EmptyGroupError):
            engine.compose_group("empty", [])

    def test_unknown_question(self, engine):
        with pytest.raises(UnknownQuestionError):
            engine.compose_group("g", ["missing"])

    def test_group_pins_revision_across_edits(self, engine):
        q = engine.make_question("v1?", ChoiceKind.SINGLE, ["a", "b"])
        g = engine.compose_group("g", [q.question_id])
        for i in range(3):
            engine.edit_question(q.question_id, text=f"v{i + 2}?")
        pinned = engine.pool.get(q.question_id, g.pinned_revision(q.question_id))
        assert pinned.text == "v1?"

    def test_reuse_starts_at_zero_per_group(self, engine):
        from ars.stats import StatsFilter
        q = engine.make_question("q?", ChoiceKind.SINGLE, ["a", "b"])
        g1 = engine.compose_group("g1", [q.question_id])
        g2 = engine.compose_group("g2", [q.question_id])
        w1 = engine.open_window(g1.group_id, 60)
        submit_pick(engine, w1, q, "p1", 0)
        engine.close_window(w1.window_id)
        stats2 = engine.tabulate(StatsFilter(group_id=g2.group_id))
        assert stats2.questions[0].respondent_count == 0
        assert all(o.count == 0 for o in stats2.questions[0].options)


class TestGroupState:
    def test_lock_and_idempotent_lock(self, engine):
        q = engine.make_question("q?", ChoiceKind.SINGLE, ["a", "b"])
        g = engine.compose_group("g", [q.question_id])
        assert engine.set_group_state(g.group_id, GroupState.LOCKED).state \
            is GroupState.LOCKED
        assert engine.set_group_state(g.group_id, GroupState.LOCKED).state \
            is GroupState.LOCKED
        assert engine.set_group_state(g.group_id, GroupState.UNLOCKED).state \
            is GroupState.UNLOCKED

    def test_unknown_group(self, engine):
        with pytest.raises(UnknownGroupError):
            engine.set_group_state("nope", GroupState.LOCKED)


def test_validation_report_ok_iff_no_violations():
    assert validate_question("x?", ["a", "b"]).ok
    report = validate_question("", ["a"])
    assert not report.ok
    assert len(report.violations) == 2
