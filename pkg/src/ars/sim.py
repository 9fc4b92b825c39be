"""Deterministic audience simulator.

Drives a full session (author, open, submit, close, export) against either
an in-process engine ("loopback") or a running server over HTTP. The
simulator keeps its own shadow ledger of what the server must contain after
last-write-wins and deadline rejection; that ledger, not the server, is the
oracle. Exit code 0 iff the server's CSV export matches it exactly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ars.clock import ManualClock
from ars.engine import Engine, Submission
from ars.errors import (
    AlreadyClosedError,
    ArsError,
    AuthFailedError,
    TargetUnreachableError,
    WindowClosedError,
)
from ars.eventlog import MemoryEventLog
from ars.model import ChoiceKind, Visibility
from ars.stats import StatsFilter, export_csv

ARRIVALS = ("uniform", "burst-open", "burst-deadline")


@dataclass(frozen=True)
class SimQuestion:
    text: str
    kind: ChoiceKind
    labels: tuple[str, ...]
    probs: tuple[Fraction, ...]

    def __post_init__(self):
        if sum(self.probs, Fraction(0)) != 1:
            raise ValueError(f"probabilities for {self.text!r} do not sum to 1")
        if len(self.probs) != len(self.labels):
            raise ValueError("one probability per option required")


def default_questions() -> tuple[SimQuestion, ...]:
    quarter = (Fraction(1, 4),) * 4
    return (
        SimQuestion("warm-up", ChoiceKind.SINGLE, ("A", "B", "C", "D"), quarter),
        SimQuestion("follow-up", ChoiceKind.SINGLE, ("A", "B", "C", "D"), quarter),
    )


@dataclass
class SimConfig:
    participants: int
    seed: int
    target: str = "loopback"
    arrival: str = "uniform"
    resubmit_probability: float = 0.0
    late_fraction: float = 0.0
    duration_s: float = 60.0
    threads: int = 1
    questions: tuple[SimQuestion, ...] = field(default_factory=default_questions)
    password: Optional[str] = None

    def __post_init__(self):
        if self.participants < 1:
            raise ValueError("participants must be >= 1")
        if self.arrival not in ARRIVALS:
            raise ValueError(f"arrival must be one of {ARRIVALS}")
        if not 0.0 <= self.resubmit_probability <= 1.0:
            raise ValueError("resubmit probability must be in [0, 1]")
        if not 0.0 <= self.late_fraction <= 1.0:
            raise ValueError("late fraction must be in [0, 1]")


@dataclass
class SimReport:
    sent: int
    accepted: int
    rejected_late: int
    replaced: int
    expected: dict
    observed: dict
    equal: bool
    mismatch: Optional[str]
    wall_time_s: float
    latency_ms: dict

    def to_json(self) -> dict:
        return {
            "sent": self.sent, "accepted": self.accepted,
            "rejected_late": self.rejected_late, "replaced": self.replaced,
            "expected": self.expected, "observed": self.observed,
            "equal": self.equal, "mismatch": self.mismatch,
            "wall_time_s": round(self.wall_time_s, 3),
            "latency_ms": self.latency_ms,
        }


@dataclass(frozen=True)
class Planned:
    participant: int
    q_index: int
    opt_indices: tuple[int, ...]
    offset_ms: int
    late: bool


@dataclass
class SessionInfo:
    window_id: str
    group_id: str
    question_ids: list[str]
    option_ids: list[list[str]]  # per question, in option order
    duration_ms: int


def build_schedule(cfg: SimConfig, rng: random.Random,
                   duration_ms: int) -> list[Planned]:
    """Per-participant submission plan; per-key times strictly increase so
    last-write-wins is well defined in any thread interleaving."""

    def arrival_offset() -> int:
        if cfg.arrival == "burst-open":
            return int(rng.uniform(0, 0.05 * duration_ms))
        if cfg.arrival == "burst-deadline":
            return int(duration_ms - rng.uniform(0, 0.05 * duration_ms))
        return int(rng.uniform(0, duration_ms * 0.9))

    def pick(q: SimQuestion) -> tuple[int, ...]:
        roll = rng.random()
        acc = 0.0
        primary = len(q.probs) - 1
        for i, p in enumerate(q.probs):
            acc += float(p)
            if roll < acc:
                primary = i
                break
        chosen = {primary}
        if q.kind is ChoiceKind.MULTIPLE:
            for i in range(len(q.labels)):
                if i != primary and rng.random() < 0.25:
                    chosen.add(i)
        return tuple(sorted(chosen))

    plan: list[Planned] = []
    for p in range(cfg.participants):
        base = arrival_offset()
        for qi, q in enumerate(cfg.questions):
            offset = min(base + qi * 10, duration_ms - 1)
            late = rng.random() < cfg.late_fraction
            if late:
                offset = duration_ms + int(rng.uniform(1, 2000))
            plan.append(Planned(p, qi, pick(q), offset, late))
            if rng.random() < cfg.resubmit_probability:
                re_late = rng.random() < cfg.late_fraction
                if re_late:
                    re_offset = duration_ms + int(rng.uniform(2001, 4000))
                else:
                    re_offset = int(rng.uniform(offset + 1, duration_ms)) \
                        if not late else duration_ms - 1
                    re_offset = max(re_offset, 0 if late else offset + 1)
                    re_late = re_offset > duration_ms
                plan.append(Planned(p, qi, pick(q), re_offset, re_late))
    return plan


def shadow_ledger(cfg: SimConfig, plan: list[Planned],
                  info: SessionInfo) -> tuple[dict, dict]:
    """Expected final counts/respondents after LWW and deadline rejection."""
    finals: dict[tuple[int, int], tuple[int, ...]] = {}
    order: dict[tuple[int, int], list[Planned]] = {}
    for sub in plan:
        order.setdefault((sub.participant, sub.q_index), []).append(sub)
    for key, subs in order.items():
        ontime = [s for s in subs if not s.late]
        if ontime:
            finals[key] = max(ontime, key=lambda s: s.offset_ms).opt_indices
    counts = {qid: {oid: 0 for oid in info.option_ids[qi]}
              for qi, qid in enumerate(info.question_ids)}
    respondents = {qid: 0 for qid in info.question_ids}
    for (p, qi), opts in finals.items():
        qid = info.question_ids[qi]
        respondents[qid] += 1
        for oi in opts:
            counts[qid][info.option_ids[qi][oi]] += 1
    return counts, respondents


class LoopbackTarget:
    """In-process engine with a manual clock; no network, no UI."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.clock = ManualClock(start_ms=1_000_000)
        self.engine = Engine(log=MemoryEventLog(), clock=self.clock)
        self.info: SessionInfo | None = None

    def setup(self) -> SessionInfo:
        qids, oids = [], []
        for q in self.cfg.questions:
            rev = self.engine.make_question(q.text, q.kind, list(q.labels))
            qids.append(rev.question_id)
            oids.append([o.option_id for o in rev.options])
        group = self.engine.compose_group("sim session", qids, Visibility.PUBLIC)
        window = self.engine.open_window(group.group_id, self.cfg.duration_s)
        self.info = SessionInfo(
            window_id=window.window_id, group_id=group.group_id,
            question_ids=qids, option_ids=oids,
            duration_ms=int(self.cfg.duration_s * 1000),
        )
        return self.info

    def submit(self, sub: Planned) -> tuple[str, bool]:
        info = self.info
        try:
            receipt = self.engine.submit(
                Submission(
                    participant_token=f"sim-{self.cfg.seed}-{sub.participant:06d}",
                    window_id=info.window_id,
                    question_id=info.question_ids[sub.q_index],
                    selected_options=frozenset(
                        info.option_ids[sub.q_index][i] for i in sub.opt_indices),
                ),
                received_at=self.engine.windows[info.window_id].opened_at
                + sub.offset_ms,
            )
            return "accepted", receipt.replaced_prior
        except WindowClosedError:
            return "rejected_late", False

    def enter_late_phase(self) -> None:
        # keep the engine clock behind the deadline until every on-time
        # submission is in, then jump past it
        self.clock.set(self.engine.windows[self.info.window_id].opened_at
                       + self.info.duration_ms + 1)

    def close(self) -> None:
        try:
            self.engine.close_window(self.info.window_id)
        except AlreadyClosedError:
            pass  # the deadline sweep got there first

    def fetch_csv(self) -> bytes:
        return export_csv(self.engine.tabulate(
            StatsFilter(window_id=self.info.window_id)))

    def teardown(self) -> None:
        pass


class HttpTarget:
    """Drives a running server over the REST API in real time."""

    def __init__(self, cfg: SimConfig):
        import httpx

        if not cfg.password:
            raise AuthFailedError("an HTTP target needs --password")
        self.cfg = cfg
        self.client = httpx.Client(base_url=cfg.target, timeout=30.0)
        self.tokens: dict[int, str] = {}
        self.tokens_lock = threading.Lock()
        self.info: SessionInfo | None = None
        self.deadline_wall: float = 0.0

    def _check(self, resp):
        if resp.status_code in (401, 403):
            raise AuthFailedError(f"{resp.request.url}: {resp.text}")
        if resp.status_code >= 400:
            raise TargetUnreachableError(
                f"{resp.request.url}: {resp.status_code} {resp.text}")
        return resp.json()

    def setup(self) -> SessionInfo:
        auth = self._check(self.client.post(
            "/api/auth/login", json={"password": self.cfg.password}))
        self.client.headers["authorization"] = f"Bearer {auth['token']}"
        qids, oids = [], []
        for q in self.cfg.questions:
            body = self._check(self.client.post("/api/questions", json={
                "text": q.text, "kind": q.kind.value, "options": list(q.labels)}))
            qids.append(body["question_id"])
            oids.append([o["option_id"] for o in body["options"]])
        group = self._check(self.client.post("/api/groups", json={
            "title": "sim session", "question_ids": qids, "visibility": "public"}))
        window = self._check(self.client.post(
            f"/api/groups/{group['group_id']}/windows",
            json={"duration_s": self.cfg.duration_s}))
        self.deadline_wall = time.monotonic() + self.cfg.duration_s
        self.info = SessionInfo(
            window_id=window["window_id"], group_id=group["group_id"],
            question_ids=qids, option_ids=oids,
            duration_ms=int(self.cfg.duration_s * 1000),
        )
        return self.info

    def _token(self, participant: int) -> str:
        with self.tokens_lock:
            token = self.tokens.get(participant)
        if token is None:
            body = self._check(self.client.post(
                f"/api/windows/{self.info.window_id}/token", json={}))
            token = body["token"]
            with self.tokens_lock:
                self.tokens[participant] = token
        return token

    def submit(self, sub: Planned) -> tuple[str, bool]:
        resp = self.client.post(f"/api/windows/{self.info.window_id}/submit", json={
            "participant_token": self._token(sub.participant),
            "question_id": self.info.question_ids[sub.q_index],
            "selected_options": [self.info.option_ids[sub.q_index][i]
                                 for i in sub.opt_indices],
        })
        if resp.status_code == 409:
            return "rejected_late", False
        body = self._check(resp)
        return "accepted", body["replaced_prior"]

    def enter_late_phase(self) -> None:
        wait = self.deadline_wall - time.monotonic() + 0.2
        if wait > 0:
            time.sleep(wait)

    def close(self) -> None:
        resp = self.client.post(f"/api/windows/{self.info.window_id}/close")
        if resp.status_code not in (200, 409):
            self._check(resp)

    def fetch_csv(self) -> bytes:
        resp = self.client.get(f"/api/windows/{self.info.window_id}/stats.csv")
        if resp.status_code >= 400:
            self._check(resp)
        return resp.content

    def teardown(self) -> None:
        self.client.close()


def parse_observed(csv_bytes: bytes) -> tuple[dict, dict]:
    counts: dict[str, dict[str, int]] = {}
    respondents: dict[str, int] = {}
    reader = csv.DictReader(io.StringIO(csv_bytes.decode()))
    for row in reader:
        qid = row["question_id"]
        counts.setdefault(qid, {})[row["option_id"]] = int(row["count"])
        respondents[qid] = int(row["respondents"])
    return counts, respondents


def first_mismatch(expected: tuple[dict, dict],
                   observed: tuple[dict, dict]) -> Optional[str]:
    exp_counts, exp_resp = expected
    obs_counts, obs_resp = observed
    for qid, per_option in sorted(exp_counts.items()):
        if exp_resp[qid] != obs_resp.get(qid):
            return (f"question {qid}: expected {exp_resp[qid]} respondents, "
                    f"observed {obs_resp.get(qid)}")
        for oid, count in per_option.items():
            got = obs_counts.get(qid, {}).get(oid)
            if got != count:
                return f"option {qid}/{oid}: expected {count}, observed {got}"
    return None


def _percentile(sorted_values: list[float], q: float) -> float:
    if not sorted_values:
        return 0.0
    idx = min(len(sorted_values) - 1, int(q * len(sorted_values)))
    return sorted_values[idx]


def run_sim(cfg: SimConfig) -> SimReport:
    target = HttpTarget(cfg) if cfg.target != "loopback" else LoopbackTarget(cfg)
    started = time.perf_counter()
    try:
        info = target.setup()
        rng = random.Random(cfg.seed)
        plan = build_schedule(cfg, rng, info.duration_ms)
        expected = shadow_ledger(cfg, plan, info)

        by_participant: dict[int, list[Planned]] = {}
        for sub in plan:
            by_participant.setdefault(sub.participant, []).append(sub)
        for subs in by_participant.values():
            subs.sort(key=lambda s: s.offset_ms)

        tallies = {"accepted": 0, "rejected_late": 0, "replaced": 0}
        tally_lock = threading.Lock()
        latencies: list[float] = []

        def run_batch(batch: list[Planned]) -> None:
            local = {"accepted": 0, "rejected_late": 0, "replaced": 0}
            times = []
            for sub in batch:
                t0 = time.perf_counter()
                outcome, replaced = target.submit(sub)
                times.append((time.perf_counter() - t0) * 1000)
                local[outcome] += 1
                if replaced:
                    local["replaced"] += 1
            with tally_lock:
                for k, v in local.items():
                    tallies[k] += v
                latencies.extend(times)

        def run_phase(batches: list[list[Planned]]) -> None:
            batches = [b for b in batches if b]
            if cfg.threads > 1 and len(batches) > 1:
                with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                    for f in [pool.submit(run_batch, b) for b in batches]:
                        f.result()
            else:
                for batch in batches:
                    run_batch(batch)

        run_phase([[s for s in subs if not s.late]
                   for subs in by_participant.values()])
        target.enter_late_phase()
        run_phase([[s for s in subs if s.late]
                   for subs in by_participant.values()])
        target.close()
        observed = parse_observed(target.fetch_csv())
    finally:
        target.teardown()

    mismatch = first_mismatch(expected, observed)
    latencies.sort()
    return SimReport(
        sent=len(plan),
        accepted=tallies["accepted"],
        rejected_late=tallies["rejected_late"],
        replaced=tallies["replaced"],
        expected={"counts": expected[0], "respondents": expected[1]},
        observed={"counts": observed[0], "respondents": observed[1]},
        equal=mismatch is None,
        mismatch=mismatch,
        wall_time_s=time.perf_counter() - started,
        latency_ms={
            "p50": round(_percentile(latencies, 0.50), 3),
            "p95": round(_percentile(latencies, 0.95), 3),
            "p99": round(_percentile(latencies, 0.99), 3),
        },
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="arssim", description="deterministic audience simulator")
    parser.add_argument("--participants", type=int, required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--arrival", choices=ARRIVALS, default="uniform")
    parser.add_argument("--late", type=float, default=0.0,
                        help="fraction of submissions deliberately sent late")
    parser.add_argument("--resubmit", type=float, default=0.0,
                        help="probability of a second submission per question")
    parser.add_argument("--target", default="loopback",
                        help='"loopback" or a server base URL')
    parser.add_argument("--duration", type=float, default=60.0,
                        help="answering window length in seconds")
    parser.add_argument("--threads", type=int, default=1,
                        help="concurrent logical clients")
    parser.add_argument("--password", help="teacher password (HTTP targets)")
    args = parser.parse_args(argv)

    cfg = SimConfig(
        participants=args.participants, seed=args.seed, arrival=args.arrival,
        late_fraction=args.late, resubmit_probability=args.resubmit,
        target=args.target, duration_s=args.duration, threads=args.threads,
        password=args.password,
    )
    try:
        report = run_sim(cfg)
    except ArsError as exc:
        print(json.dumps({"error": exc.code, "detail": exc.detail}))
        return 2
    print(json.dumps(report.to_json(), indent=2))
    return 0 if report.equal else 1


if __name__ == "__main__":
    raise SystemExit(main())
