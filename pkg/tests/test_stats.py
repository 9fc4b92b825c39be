import random
from fractions import Fraction

import pytest

from ars.errors import EmptyFilterError, UnknownWindowError, ZeroWidthError
from ars.model import ChoiceKind
from ars.stats import (
    StatsFilter,
    bar_layout,
    compare,
    export_csv,
    format_fraction,
    tabulate,
)

from conftest import make_session, naive_recount, submit_pick


class TestTabulate:
    def test_single_choice_direct_count(self, engine):
        q, _, w = make_session(engine, n_options=3)
        submit_pick(engine, w, q, "p1", 0)
        submit_pick(engine, w, q, "p2", 0)
        submit_pick(engine, w, q, "p3", 1)
        engine.close_window(w.window_id)
        stats = engine.tabulate(StatsFilter(window_id=w.window_id))
        counts = [o.count for o in stats.questions[0].options]
        fractions = [o.fraction for o in stats.questions[0].options]
        assert counts == [2, 1, 0]
        assert fractions == [Fraction(2, 3), Fraction(1, 3), Fraction(0)]
        assert sum(fractions) == 1

    def test_multiple_choice_per_respondent_fractions(self, engine):
        q, _, w = make_session(engine, n_options=2, kind=ChoiceKind.MULTIPLE)
        submit_pick(engine, w, q, "p1", 0, 1)
        submit_pick(engine, w, q, "p2", 0)
        engine.close_window(w.window_id)
        stats = engine.tabulate(StatsFilter(window_id=w.window_id))
        a, b = stats.questions[0].options
        assert (a.count, a.fraction) == (2, Fraction(1))
        assert (b.count, b.fraction) == (1, Fraction(1, 2))

    def test_zero_respondents_zero_convention(self, engine):
        _, _, w = make_session(engine)
        engine.close_window(w.window_id)
        stats = engine.tabulate(StatsFilter(window_id=w.window_id))
        assert stats.questions[0].respondent_count == 0
        assert all(o.count == 0 and o.fraction == 0
                   for o in stats.questions[0].options)

    def test_matches_naive_recount_oracle(self, engine):
        # 1,000 simulated respondents with fixed per-option probabilities
        rng = random.Random(7)
        q, _, w = make_session(engine, n_options=4)
        weights = (0.5, 0.3, 0.15, 0.05)
        for i in range(1000):
            pick = rng.choices(range(4), weights=weights)[0]
            submit_pick(engine, w, q, f"p{i}", pick)
            if rng.random() < 0.3:
                submit_pick(engine, w, q, f"p{i}",
                            rng.choices(range(4), weights=weights)[0])
        engine.close_window(w.window_id)
        stats = engine.tabulate(StatsFilter(window_id=w.window_id))
        counts, respondents = naive_recount(engine.log.events, w.window_id)
        got = {o.option_id: o.count for o in stats.questions[0].options}
        want = counts[q.question_id]
        for oid in got:
            assert got[oid] == want.get(oid, 0)
        assert stats.questions[0].respondent_count == respondents[q.question_id]

    def test_empty_filter(self, engine):
        with pytest.raises(EmptyFilterError):
            engine.tabulate(StatsFilter())

    def test_window_group_mismatch(self, engine):
        q1, g1, w1 = make_session(engine)
        q2 = engine.make_question("other", ChoiceKind.SINGLE, ["a", "b"])
        g2 = engine.compose_group("g2", [q2.question_id])
        with pytest.raises(UnknownWindowError):
            engine.tabulate(StatsFilter(group_id=g2.group_id,
                                        window_id=w1.window_id))

    def test_open_window_needs_include_live(self, engine):
        q, _, w = make_session(engine)
        submit_pick(engine, w, q, "p1", 0)
        without = engine.tabulate(StatsFilter(window_id=w.window_id))
        with_live = engine.tabulate(StatsFilter(window_id=w.window_id,
                                                include_live=True))
        assert without.questions[0].respondent_count == 0
        assert with_live.questions[0].respondent_count == 1

    def test_time_filter_on_final_responses(self, engine):
        q, _, w = make_session(engine)
        t = w.opened_at
        submit_pick(engine, w, q, "p1", 0, received_at=t + 100)
        submit_pick(engine, w, q, "p1", 1, received_at=t + 5_000)  # final
        submit_pick(engine, w, q, "p2", 0, received_at=t + 200)
        engine.close_window(w.window_id)
        early = engine.tabulate(StatsFilter(window_id=w.window_id,
                                            time_range=(t, t + 1_000)))
        # only p2's final response falls in [t, t+1000); p1's final is later
        assert early.questions[0].respondent_count == 1
        assert [o.count for o in early.questions[0].options] == [1, 0, 0]

    def test_widening_time_range_is_monotone(self, engine):
        rng = random.Random(11)
        q, _, w = make_session(engine)
        t = w.opened_at
        for i in range(50):
            submit_pick(engine, w, q, f"p{i % 20}", rng.randrange(3),
                        received_at=t + rng.randrange(50_000))
        engine.close_window(w.window_id)
        prev = None
        for hi in range(0, 60_001, 5_000):
            stats = engine.tabulate(StatsFilter(window_id=w.window_id,
                                                time_range=(None, t + hi)))
            counts = [o.count for o in stats.questions[0].options]
            if prev is not None:
                assert all(c >= p for c, p in zip(counts, prev))
            prev = counts

    def test_group_isolation_under_extra_events(self, engine):
        q = engine.make_question("shared", ChoiceKind.SINGLE, ["a", "b"])
        g1 = engine.compose_group("g1", [q.question_id])
        g2 = engine.compose_group("g2", [q.question_id])
        w2 = engine.open_window(g2.group_id, 60)
        submit_pick(engine, w2, q, "p1", 1)
        engine.close_window(w2.window_id)
        before = export_csv(engine.tabulate(StatsFilter(group_id=g2.group_id)))
        w1 = engine.open_window(g1.group_id, 60)
        for i in range(25):
            submit_pick(engine, w1, q, f"x{i}", i % 2)
        engine.close_window(w1.window_id)
        after = export_csv(engine.tabulate(StatsFilter(group_id=g2.group_id)))
        assert before == after


class TestCompare:
    def _two_windows(self, engine):
        q = engine.make_question("q?", ChoiceKind.SINGLE, ["a", "b", "c"])
        g = engine.compose_group("g", [q.question_id])
        w1 = engine.open_window(g.group_id, 60)
        submit_pick(engine, w1, q, "p1", 0)
        submit_pick(engine, w1, q, "p2", 0)
        submit_pick(engine, w1, q, "p3", 1)
        engine.close_window(w1.window_id)
        w2 = engine.open_window(g.group_id, 60)
        submit_pick(engine, w2, q, "p4", 0)
        submit_pick(engine, w2, q, "p5", 1)
        submit_pick(engine, w2, q, "p6", 1)
        engine.close_window(w2.window_id)
        return q, w1, w2

    def test_identical_filters_zero_delta(self, engine):
        _, w1, _ = self._two_windows(engine)
        flt = StatsFilter(window_id=w1.window_id)
        comparison = engine.compare(flt, flt)
        assert all(row.fraction_delta == 0 for row in comparison.rows)

    def test_delta_arithmetic(self, engine):
        q, w1, w2 = self._two_windows(engine)
        comparison = engine.compare(StatsFilter(window_id=w1.window_id),
                                    StatsFilter(window_id=w2.window_id))
        first = next(r for r in comparison.rows
                     if r.option_id == q.options[0].option_id)
        assert first.fraction_left == Fraction(2, 3)
        assert first.fraction_right == Fraction(1, 3)
        assert first.fraction_delta == Fraction(1, 3)

    def test_commutation(self, engine):
        _, w1, w2 = self._two_windows(engine)
        ab = engine.compare(StatsFilter(window_id=w1.window_id),
                            StatsFilter(window_id=w2.window_id))
        ba = engine.compare(StatsFilter(window_id=w2.window_id),
                            StatsFilter(window_id=w1.window_id))
        deltas_ab = {(r.question_id, r.option_id): r.fraction_delta for r in ab.rows}
        for r in ba.rows:
            assert r.fraction_delta == -deltas_ab[(r.question_id, r.option_id)]

    def test_disjoint_questions_all_unaligned(self, engine):
        qa, _, wa = make_session(engine)
        engine.close_window(wa.window_id)
        qb = engine.make_question("other", ChoiceKind.SINGLE, ["x", "y"])
        gb = engine.compose_group("gb", [qb.question_id])
        wb = engine.open_window(gb.group_id, 60)
        engine.close_window(wb.window_id)
        comparison = engine.compare(StatsFilter(window_id=wa.window_id),
                                    StatsFilter(window_id=wb.window_id))
        assert comparison.rows
        assert all(not r.aligned for r in comparison.rows)


class TestBarLayout:
    def test_half_width(self, engine):
        q, _, w = make_session(engine, n_options=2)
        submit_pick(engine, w, q, "p1", 0)
        submit_pick(engine, w, q, "p2", 1)
        engine.close_window(w.window_id)
        spec = bar_layout(engine.tabulate(StatsFilter(window_id=w.window_id)), 100)
        assert [b.bar_length for b in spec.bars] == [50, 50]

    def test_two_thirds_at_width_ten(self, engine):
        # exact rational rounding oracle: 2/3 * 10 = 20/3 = 6.66.. -> 7
        q, _, w = make_session(engine, n_options=2)
        submit_pick(engine, w, q, "p1", 0)
        submit_pick(engine, w, q, "p2", 0)
        submit_pick(engine, w, q, "p3", 1)
        engine.close_window(w.window_id)
        spec = bar_layout(engine.tabulate(StatsFilter(window_id=w.window_id)), 10)
        want = []
        for o in engine.tabulate(StatsFilter(window_id=w.window_id)).questions[0].options:
            scaled = o.fraction * 10
            floor, rem = divmod(scaled.numerator, scaled.denominator)
            want.append(floor + (1 if Fraction(rem, scaled.denominator) >= Fraction(1, 2) else 0))
        assert [b.bar_length for b in spec.bars] == want == [7, 3]

    def test_zero_fraction_zero_bar(self, engine):
        _, _, w = make_session(engine)
        engine.close_window(w.window_id)
        spec = bar_layout(engine.tabulate(StatsFilter(window_id=w.window_id)), 100)
        assert all(b.bar_length == 0 for b in spec.bars)

    def test_color_index_stable(self, engine):
        _, _, w = make_session(engine, n_options=15)
        engine.close_window(w.window_id)
        spec = bar_layout(engine.tabulate(StatsFilter(window_id=w.window_id)), 10)
        assert [b.color_index for b in spec.bars] == [i % 12 for i in range(15)]

    def test_zero_width_rejected(self, engine):
        _, _, w = make_session(engine)
        engine.close_window(w.window_id)
        with pytest.raises(ZeroWidthError):
            bar_layout(engine.tabulate(StatsFilter(window_id=w.window_id)), 0)


class TestExportCsv:
    def test_formatting_contract(self, engine):
        q, _, w = make_session(engine, n_options=3)
        submit_pick(engine, w, q, "p1", 0)
        submit_pick(engine, w, q, "p2", 0)
        submit_pick(engine, w, q, "p3", 1)
        engine.close_window(w.window_id)
        body = export_csv(engine.tabulate(StatsFilter(window_id=w.window_id)))
        lines = body.decode().split("\r\n")
        assert lines[0] == "group_id,window_id,question_id,option_id,label,count,respondents,fraction"
        assert [line.rsplit(",", 1)[1] for line in lines[1:4]] == \
            ["0.666667", "0.333333", "0.000000"]

    def test_empty_stats_header_only(self, engine):
        q = engine.make_question("q?", ChoiceKind.SINGLE, ["a", "b"])
        g = engine.compose_group("g", [q.question_id])
        # no windows at all: zero rows would need zero questions; filter a
        # group with no closed windows still lists its options at count 0
        stats = engine.tabulate(StatsFilter(group_id=g.group_id))
        body = export_csv(stats).decode()
        assert body.startswith("group_id,window_id,")

    def test_determinism(self, engine):
        q, _, w = make_session(engine)
        submit_pick(engine, w, q, "p1", 0)
        engine.close_window(w.window_id)
        flt = StatsFilter(window_id=w.window_id)
        assert export_csv(engine.tabulate(flt)) == export_csv(engine.tabulate(flt))


class TestFormatFraction:
    def test_round_half_even(self):
        assert format_fraction(Fraction(1, 2)) == "0.500000"
        # 0.0000005 -> ties to even -> 0.000000; 0.0000015 -> 0.000002
        assert format_fraction(Fraction(5, 10_000_000)) == "0.000000"
        assert format_fraction(Fraction(15, 10_000_000)) == "0.000002"
        assert format_fraction(Fraction(2, 3)) == "0.666667"
        assert format_fraction(Fraction(1)) == "1.000000"
