"""Static passive adversary: corrupted-party views and executable privacy checks.

The checks here are statistical proxies. A failing verdict demonstrates
leakage; a passing one only means no leakage was detected at the chosen
sample size.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import chi2

from .analysis import consistent_permutation_count
from .runtime import ProtocolAbort, Runtime, quorum_gen
from .shuffle import ShuffleJob, ShuffleOutcome, run_network

NOTE = ("statistical proxy: a pass means no difference was detected between the two input "
        "conditions; it does not certify simulation-based security")


class AdversaryError(ValueError):
    pass


def corrupt(runtime: Runtime, parties: Iterable[int], t: int, mode: str = "passive") -> None:
    """Statically corrupt ``parties``; only allowed before the first round."""
    parties = set(int(p) for p in parties)
    if mode != "passive":
        raise AdversaryError(f"unsupported corruption mode {mode!r}")
    if runtime.round > 0 or runtime.transcript:
        raise AdversaryError("corruption is static: the protocol has already started")
    if 3 * t >= runtime.n:
        raise AdversaryError(f"t={t} violates t < n/3 for n={runtime.n}")
    if len(parties) > t:
        raise AdversaryError(f"{len(parties)} parties exceed the corruption bound t={t}")
    runtime.corrupt(parties)


@dataclass
class PartyView:
    party: int
    own_input: int | None
    coins: list[np.ndarray]
    received: list[tuple]


def views(outcome: ShuffleOutcome, parties: Iterable[int] | None = None,
          inputs: Sequence[int] | None = None) -> dict[int, PartyView]:
    """View of each party (default: the corrupted ones): input, own coins, received messages."""
    rt = outcome.runtime
    parties = sorted(rt.corrupted if parties is None else parties)
    out = {}
    for p in parties:
        own = None if inputs is None else int(inputs[p - 1])
        out[p] = PartyView(p, own, list(rt.coins.get(p, [])), rt.received(p))
    return out


def _view_blocks(rt: Runtime, parties: Sequence[int], include_output: bool = False):
    """(key, flat values) per received batch of the joint view, in a fixed order."""
    for p in parties:
        for rnd, tag, kind, senders, values in rt.received(p):
            if not include_output and tag.startswith("output"):
                continue
            vals = np.asarray(values, dtype=np.int64).reshape(-1)
            yield (p, tag, vals.size), vals


@dataclass
class SlotResult:
    slot: str
    statistic: float
    df: int
    p_value: float
    verdict: str


@dataclass
class ViewTestReport:
    trials: int
    alpha: float
    threshold: float
    slots_tested: int
    min_p_value: float
    verdict: str
    corrupted: list[int]
    worst: list[SlotResult] = field(default_factory=list)
    aborted_runs: int = 0
    note: str = NOTE

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return asdict(self)


class _SlotCounter:
    """Per-slot value histograms accumulated across runs of one condition."""

    def __init__(self, p: int):
        self.p = p
        self.layout: dict[tuple, int] = {}
        self.size = 0
        self.counts = np.zeros((0, p), dtype=np.int64)
        self.present = np.zeros(0, dtype=np.int64)

    def index(self, key: tuple, width: int) -> np.ndarray:
        if key not in self.layout:
            self.layout[key] = self.size
            self.size += width
        start = self.layout[key]
        return np.arange(start, start + width)

    def add(self, blocks) -> None:
        idx, vals = [], []
        for key, v in blocks:
            idx.append(self.index(key, v.size))
            vals.append(v)
        if self.size > self.counts.shape[0]:
            grow = max(self.size, 2 * self.counts.shape[0])
            self.counts = np.vstack([self.counts, np.zeros((grow - self.counts.shape[0], self.p), dtype=np.int64)])
            self.present = np.concatenate([self.present, np.zeros(grow - self.present.size, dtype=np.int64)])
        if idx:
            i = np.concatenate(idx)
            np.add.at(self.counts, (i, np.concatenate(vals)), 1)
            np.add.at(self.present, i, 1)

    def slot_names(self) -> dict[int, str]:
        names = {}
        for (party, tag, width), start in self.layout.items():
            for o in range(width):
                names[start + o] = f"P{party}:{tag}:{o}"
        return names


def two_sample_chi2(counts_a: np.ndarray, counts_b: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise chi-square homogeneity test of two histograms; returns (stat, df, p-value)."""
    na = counts_a.sum(axis=1, keepdims=True).astype(float)
    nb = counts_b.sum(axis=1, keepdims=True).astype(float)
    col = (counts_a + counts_b).astype(float)
    tot = na + nb
    with np.errstate(divide="ignore", invalid="ignore"):
        ea = col * na / tot
        eb = col * nb / tot
        terms = np.where(col > 0, (counts_a - ea) ** 2 / ea + (counts_b - eb) ** 2 / eb, 0.0)
    stat = terms.sum(axis=1)
    df = (col > 0).sum(axis=1) - 1
    pval = np.where(df > 0, chi2.sf(stat, np.maximum(df, 1)), 1.0)
    return stat, df, pval


def view_indistinguishability_test(job: ShuffleJob, input_a: Sequence[int], input_b: Sequence[int],
                                   trials: int, *, alpha: float = 0.01, seed: int = 0,
                                   threshold: int | None = None, report_worst: int = 10) -> ViewTestReport:
    """Compare the corrupted parties' joint view under two input vectors, slot by slot.

    Quorums are fixed once (trusted setup); each trial reseeds the parties'
    randomness. A slot is one received field element, identified by receiver,
    message tag and position. Output-opening messages are left out because
    they reveal the shuffled outputs by design. Slots are tested with a
    two-sample chi-square test; the verdict applies a Bonferroni correction
    over all slots.
    """
    n = job.size
    net = job.build_network()
    corrupted = sorted(job.corrupt)
    if len(input_a) != n or len(input_b) != n:
        raise ValueError("input vectors must have one entry per party")
    diff = [i + 1 for i in range(n) if input_a[i] != input_b[i]]
    if any(d in corrupted for d in diff):
        raise ValueError("the two input vectors may only differ in honest parties' inputs")
    if not corrupted:
        return ViewTestReport(trials, alpha, alpha, 0, 1.0, "pass", [])
    root = np.random.SeedSequence(seed)
    setup, runs = root.spawn(2)
    quorums = quorum_gen(n, job.t, setup, size=job.quorum_size, corrupted=corrupted)
    counters = {"a": _SlotCounter(job.p), "b": _SlotCounter(job.p)}
    completed = {"a": 0, "b": 0}
    run_seeds = {"a": runs.spawn(trials), "b": runs.spawn(trials)}
    for cond, inputs in (("a", input_a), ("b", input_b)):
        for i in range(trials):
            out = run_network(net, inputs, t=job.t, p=job.p, seed=run_seeds[cond][i], corrupt=corrupted,
                              quorums=quorums, threshold=threshold)
            if out.aborted:
                continue
            completed[cond] += 1
            counters[cond].add(_view_blocks(out.runtime, corrupted))
    aborted = 2 * trials - completed["a"] - completed["b"]
    ca, cb = counters["a"], counters["b"]
    names = ca.slot_names()
    rows_a, rows_b, slot_labels = [], [], []
    # only slots seen in every completed run of both conditions (retries add optional ones)
    for k, sa in ca.layout.items():
        sb = cb.layout.get(k)
        if sb is None:
            continue
        for o in range(k[2]):
            if ca.present[sa + o] == completed["a"] and cb.present[sb + o] == completed["b"]:
                rows_a.append(sa + o)
                rows_b.append(sb + o)
                slot_labels.append(names[sa + o])
    if not rows_a:
        return ViewTestReport(trials, alpha, alpha, 0, 1.0, "pass", corrupted, aborted_runs=aborted)
    stat, df, pval = two_sample_chi2(ca.counts[rows_a], cb.counts[rows_b])
    m = len(rows_a)
    thr = alpha / m
    order = np.argsort(pval)[:report_worst]
    worst = [SlotResult(slot_labels[j], float(stat[j]), int(df[j]), float(pval[j]),
                        "fail" if pval[j] < thr else "pass") for j in order]
    verdict = "fail" if pval.min() < thr else "pass"
    return ViewTestReport(trials, alpha, thr, m, float(pval.min()), verdict, corrupted, worst, aborted)


def honest_coin_leakage(outcome: ShuffleOutcome) -> dict:
    """Look for honest parties' raw random draws inside the corrupted joint view.

    Needs a run with ``record_coins=True``. Returns the message kinds seen by
    corrupted parties and the number of honest coin values found verbatim.
    Over a large field an accidental match has negligible probability.
    """
    rt = outcome.runtime
    bad = sorted(rt.corrupted)
    honest_coins = [np.concatenate(v) for p, v in rt.coins.items() if p not in bad and v]
    coin_set = set(np.concatenate(honest_coins).tolist()) if honest_coins else set()
    kinds, seen = set(), set()
    for p in bad:
        for rnd, tag, kind, senders, values in rt.received(p):
            kinds.add(kind)
            seen.update(np.asarray(values).reshape(-1).tolist())
    hits = len(coin_set & seen)
    return {"kinds": sorted(kinds), "honest_coins": len(coin_set), "view_values": len(seen),
            "matches": hits, "leak": hits > 0 or not kinds <= {"share", "open"}}


def outputs_obtained(outcome: ShuffleOutcome) -> set[int]:
    """Parties holding the shuffled output after the run (everyone or nobody)."""
    if outcome.aborted:
        return set()
    return set(range(1, outcome.network.n + 1))


def linkability_check(outcome: ShuffleOutcome, known_inputs: Iterable[int]) -> int:
    """Permutations consistent with what an adversary knowing ``known_inputs`` sees.

    ``known_inputs`` are 1-based party indices. The adversary's best guess
    succeeds with probability 1/count when all consistent permutations are
    equally likely.
    """
    if outcome.realized is None:
        raise ValueError("linkability needs a successful run with distinct inputs")
    known = [int(k) - 1 for k in known_inputs]
    return consistent_permutation_count(outcome.network, known, outcome.realized)


def crash_abort_check(job: ShuffleJob, inputs: Sequence[int], party: int, at_round: int, seed=0) -> ShuffleOutcome:
    """Run with ``party`` crashing at ``at_round``; the caller inspects abort behaviour."""
    return run_network(job.build_network(), inputs, t=job.t, p=job.p, seed=seed,
                       corrupt=job.corrupt, crash={party: at_round}, quorum_size=job.quorum_size)


__all__ = ["AdversaryError", "corrupt", "views", "PartyView", "view_indistinguishability_test",
           "ViewTestReport", "two_sample_chi2", "honest_coin_leakage", "outputs_obtained",
           "linkability_check", "crash_abort_check", "ProtocolAbort"]
