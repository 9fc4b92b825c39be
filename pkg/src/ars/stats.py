"""Tabulation of final responses into per-option counts and fractions.

All arithmetic is exact (``fractions.Fraction``); decimal rendering happens
only in the CSV/JSON boundary helpers. Filters select by group or window,
optionally restricted to a half-open [from, to) receipt-time range applied
to each participant's *final* (last-write-wins) response.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Optional

from ars.errors import (
    EmptyFilterError,
    UnknownWindowError,
    ZeroWidthError,
)
from ars.model import ChoiceKind

if TYPE_CHECKING:
    from ars.engine import Engine

PALETTE_SIZE = 12

CSV_HEADER = ["group_id", "window_id", "question_id", "option_id",
              "label", "count", "respondents", "fraction"]


@dataclass(frozen=True)
class StatsFilter:
    group_id: Optional[str] = None
    window_id: Optional[str] = None
    time_range: Optional[tuple[Optional[int], Optional[int]]] = None
    include_live: bool = False

    def validate(self) -> None:
        if self.group_id is None and self.window_id is None:
            raise EmptyFilterError("filter needs a group_id or window_id")

    def to_json(self) -> dict:
        return {
            "group_id": self.group_id,
            "window_id": self.window_id,
            "from": self.time_range[0] if self.time_range else None,
            "to": self.time_range[1] if self.time_range else None,
            "include_live": self.include_live,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "StatsFilter":
        time_range = None
        if obj.get("from") is not None or obj.get("to") is not None:
            time_range = (obj.get("from"), obj.get("to"))
        return cls(
            group_id=obj.get("group_id"),
            window_id=obj.get("window_id"),
            time_range=time_range,
            include_live=bool(obj.get("include_live", False)),
        )


@dataclass(frozen=True)
class OptionStats:
    option_id: str
    label: str
    count: int
    fraction: Fraction


@dataclass(frozen=True)
class QuestionStats:
    question_id: str
    revision: int
    text: str
    kind: ChoiceKind
    respondent_count: int
    options: tuple[OptionStats, ...]


@dataclass(frozen=True)
class TabulatedStats:
    filter: StatsFilter
    questions: tuple[QuestionStats, ...]


@dataclass(frozen=True)
class ComparisonRow:
    question_id: str
    option_id: str
    aligned: bool
    count_left: Optional[int]
    count_right: Optional[int]
    fraction_left: Optional[Fraction]
    fraction_right: Optional[Fraction]
    fraction_delta: Optional[Fraction]


@dataclass(frozen=True)
class StatsComparison:
    left: StatsFilter
    right: StatsFilter
    rows: tuple[ComparisonRow, ...]


@dataclass(frozen=True)
class Bar:
    question_id: str
    option_id: str
    label: str
    fraction: Fraction
    bar_length: int
    color_index: int


@dataclass(frozen=True)
class BarChartSpec:
    max_width: int
    bars: tuple[Bar, ...]


def _in_range(received_at: int, time_range) -> bool:
    if time_range is None:
        return True
    lo, hi = time_range
    if lo is not None and received_at < lo:
        return False
    if hi is not None and received_at >= hi:
        return False
    return True


def tabulate(engine: "Engine", flt: StatsFilter) -> TabulatedStats:
    """Count final responses selected by ``flt``.

    Open windows contribute only when ``include_live`` is set. Respondents
    are counted per question as distinct (window, participant) pairs whose
    final response passes the time filter.
    """
    flt.validate()
    if flt.window_id is not None:
        window = engine.get_window(flt.window_id)
        if flt.group_id is not None and window.group_id != flt.group_id:
            raise UnknownWindowError(
                f"window {flt.window_id!r} does not belong to group {flt.group_id!r}")
        group = engine.get_group(window.group_id)
        windows = [window]
    else:
        group = engine.get_group(flt.group_id)
        windows = [w for w in engine.windows.values() if w.group_id == flt.group_id]

    from ars.engine import OPEN  # local import to avoid a module cycle
    windows = [w for w in windows if w.state != OPEN or flt.include_live]

    questions = []
    for question_id, revision in group.items:
        rev = engine.pool.get(question_id, revision)
        counts = {o.option_id: 0 for o in rev.options}
        respondents = 0
        for window in windows:
            for (token, qid), resp in engine.responses[window.window_id].items():
                if qid != question_id or not _in_range(resp.received_at, flt.time_range):
                    continue
                respondents += 1
                for oid in resp.selected:
                    if oid in counts:
                        counts[oid] += 1
        questions.append(QuestionStats(
            question_id=question_id,
            revision=revision,
            text=rev.text,
            kind=rev.kind,
            respondent_count=respondents,
            options=tuple(
                OptionStats(
                    option_id=o.option_id,
                    label=o.label,
                    count=counts[o.option_id],
                    fraction=(Fraction(counts[o.option_id], respondents)
                              if respondents else Fraction(0)),
                )
                for o in rev.options
            ),
        ))
    return TabulatedStats(filter=flt, questions=tuple(questions))


def compare(left: TabulatedStats, right: TabulatedStats) -> StatsComparison:
    """Pairwise deltas where both sides share (question_id, option_id);
    one-sided rows are kept and flagged unaligned."""
    left_idx = {(q.question_id, o.option_id): (q, o)
                for q in left.questions for o in q.options}
    right_idx = {(q.question_id, o.option_id): (q, o)
                 for q in right.questions for o in q.options}
    rows = []
    for key in list(left_idx) + [k for k in right_idx if k not in left_idx]:
        lhs = left_idx.get(key)
        rhs = right_idx.get(key)
        if lhs and rhs:
            rows.append(ComparisonRow(
                question_id=key[0], option_id=key[1], aligned=True,
                count_left=lhs[1].count, count_right=rhs[1].count,
                fraction_left=lhs[1].fraction, fraction_right=rhs[1].fraction,
                fraction_delta=lhs[1].fraction - rhs[1].fraction,
            ))
        else:
            rows.append(ComparisonRow(
                question_id=key[0], option_id=key[1], aligned=False,
                count_left=lhs[1].count if lhs else None,
                count_right=rhs[1].count if rhs else None,
                fraction_left=lhs[1].fraction if lhs else None,
                fraction_right=rhs[1].fraction if rhs else None,
                fraction_delta=None,
            ))
    return StatsComparison(left=left.filter, right=right.filter, rows=tuple(rows))


def _round_half_away(x: Fraction) -> int:
    n, r = divmod(x.numerator, x.denominator)
    if 2 * r >= x.denominator:
        n += 1
    return n


def bar_layout(stats: TabulatedStats, max_width: int) -> BarChartSpec:
    """Bar lengths in integer cells: round(fraction * max_width), half away
    from zero; colors cycle a fixed 12-entry palette by option position."""
    if max_width < 1:
        raise ZeroWidthError("max_width must be >= 1")
    bars = []
    for q in stats.questions:
        for idx, o in enumerate(q.options):
            bars.append(Bar(
                question_id=q.question_id,
                option_id=o.option_id,
                label=o.label,
                fraction=o.fraction,
                bar_length=_round_half_away(o.fraction * max_width),
                color_index=idx % PALETTE_SIZE,
            ))
    return BarChartSpec(max_width=max_width, bars=tuple(bars))


def format_fraction(f: Fraction) -> str:
    """Decimal with 6 fractional digits, round-half-even, computed exactly."""
    scaled, rem = divmod(f.numerator * 1_000_000, f.denominator)
    if 2 * rem > f.denominator or (2 * rem == f.denominator and scaled % 2):
        scaled += 1
    return f"{scaled // 1_000_000}.{scaled % 1_000_000:06d}"


def export_csv(stats: TabulatedStats) -> bytes:
    """RFC-4180-style CSV; byte-identical for identical stats."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    group_id = stats.filter.group_id or ""
    window_id = stats.filter.window_id or ""
    for q in stats.questions:
        for o in q.options:
            writer.writerow([
                group_id, window_id, q.question_id, o.option_id, o.label,
                o.count, q.respondent_count, format_fraction(o.fraction),
            ])
    return buf.getvalue().encode("utf-8")
