"""Exact and statistical analyses of permutation networks and shuffle security.

Counts are exact Python integers throughout; floating point only appears in
probabilities, means and the Stirling cross-check.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .permnet import NetworkTopology, Permutation, log2_exact

# reference values reported for comparison
REFERENCE_OCCURRENCES = {8: 8192, 16: 14336, 32: 12288, 40: 2048, 64: 2816, 128: 512, 256: 128}
REFERENCE_MEAN = 26.0063
REFERENCE_STDDEV = 1.622
REFERENCE_BIRTHDAY = {32: 0.0625, 64: 0.0548, 128: 0.0461, 256: 0.0406}
REFERENCE_ZETA = {
    ("one", 128, 42): 433,
    ("two", 128, 42, 64, 2): 413,
    ("one", 256, 85): 1026,
    ("two", 256, 85, 64, 4): 908,
    ("two", 256, 85, 128, 2): 944,
    ("one", 512, 170): 2319,
    ("two", 512, 170, 64, 8): 2074,
    ("two", 512, 170, 128, 4): 2146,
    ("two", 512, 170, 256, 2): 2224,
}

DEFAULT_BUDGET = 24
MAX_ENCODABLE = 15


class BudgetExceeded(RuntimeError):
    pass


# -- enumeration ----------------------------------------------------------------------

def _check_budget(net: NetworkTopology, budget: int) -> None:
    if net.nbits > budget:
        raise BudgetExceeded(f"{net.nbits} configuration bits exceed the budget of {budget}")
    if net.n > MAX_ENCODABLE:
        raise BudgetExceeded(f"permutation codes support at most {MAX_ENCODABLE} wires")


def permutation_codes(net: NetworkTopology, budget: int = DEFAULT_BUDGET, chunk: int = 1 << 20) -> np.ndarray:
    """Code of the permutation realised by every configuration (index = configuration integer)."""
    _check_budget(net, budget)
    swaps, final = net.compiled
    total = 1 << net.nbits
    out = np.empty(total, dtype=np.int64)
    for lo in range(0, total, chunk):
        cnt = min(chunk, total - lo)
        out[lo:lo + cnt] = _kernels.enumerate_codes(swaps, final, net.nbits, lo, cnt)
    return out


def permutation_counts(net: NetworkTopology, budget: int = DEFAULT_BUDGET) -> dict[int, int]:
    """Map permutation code -> number of configurations realising it."""
    codes, counts = np.unique(permutation_codes(net, budget), return_counts=True)
    return {int(c): int(k) for c, k in zip(codes, counts)}


def reachable_permutations(net: NetworkTopology, budget: int = DEFAULT_BUDGET) -> list[Permutation]:
    return [Permutation.from_code(c, net.n) for c in sorted(permutation_counts(net, budget))]


@dataclass
class OccurrenceDistribution:
    histogram: dict[int, int]
    total_configs: int
    distinct: int

    def mass(self) -> int:
        return sum(occ * m for occ, m in self.histogram.items())

    def rows(self) -> list[dict]:
        return [{"occurrences": occ, "permutations": m} for occ, m in sorted(self.histogram.items())]


def distribution_from_counts(counts: Iterable[int], total_configs: int | None = None) -> OccurrenceDistribution:
    counts = list(counts)
    hist = dict(sorted(Counter(counts).items()))
    total = sum(counts) if total_configs is None else total_configs
    return OccurrenceDistribution(hist, total, len(counts))


def enumerate_distribution(net: NetworkTopology, budget: int = DEFAULT_BUDGET) -> OccurrenceDistribution:
    """Exhaustive occurrence histogram: occurrence count -> number of permutations with it."""
    counts = permutation_counts(net, budget)
    return distribution_from_counts(counts.values(), 1 << net.nbits)


def distribution_stats(dist: OccurrenceDistribution) -> tuple[float, float]:
    """(mean, population standard deviation) of per-permutation occurrence counts."""
    if dist.distinct == 0:
        raise ValueError("empty distribution")
    d = dist.distinct
    s1 = sum(occ * m for occ, m in dist.histogram.items())
    s2 = sum(occ * occ * m for occ, m in dist.histogram.items())
    mean = s1 / d
    var = (s2 * d - s1 * s1) / (d * d)
    return mean, math.sqrt(var)


def consistent_permutation_count(net: NetworkTopology, known_positions: Iterable[int],
                                 realized: Permutation | None = None,
                                 budget: int = DEFAULT_BUDGET) -> int:
    """Reachable permutations agreeing with ``realized`` on where the known inputs went.

    ``known_positions`` are 0-based input indices whose values the adversary
    knows, so it can see their output positions. Without ``realized`` the
    smallest such class over all reachable permutations is returned (the
    adversary's best case).
    """
    known = sorted(set(int(k) for k in known_positions))
    if any(not 0 <= k < net.n for k in known):
        raise ValueError("known position out of range")
    codes = np.array(sorted(permutation_counts(net, budget)), dtype=np.int64)
    mapping = np.empty((codes.size, net.n), dtype=np.int64)
    rest = codes.copy()
    for k in range(net.n):
        rest, mapping[:, k] = np.divmod(rest, net.n)
    if not known:
        return int(codes.size) if realized is None or realized.code in set(codes.tolist()) else 0
    where = np.argsort(mapping, axis=1)[:, known]
    if realized is not None:
        target = np.array(realized.inverse().mapping)[known]
        return int(np.all(where == target, axis=1).sum())
    _, sizes = np.unique(where, axis=0, return_counts=True)
    return int(sizes.min())


# -- f_pi and unlinkability ---------------------------------------------------------------

def _falling(hi: int, lo: int) -> int:
    """hi * (hi - 1) * ... * lo."""
    out = 1
    for v in range(lo, hi + 1):
        out *= v
    return out


@lru_cache(maxsize=None)
def f_pi(N: int) -> int:
    """Upper bound on permutations of the symmetric blocking construction on N wires."""
    if N < 1:
        raise ValueError("N must be positive")
    if N <= 3:
        return math.factorial(N)
    if N & (N - 1) == 0:
        return math.factorial(N)
    if N % 2:
        # odd sizes above 3 only arise from arbitrary-size Beneš blocks, which are rearrangeable
        return math.factorial(N)
    half = N // 2
    if half % 2 == 0:
        return _falling(N, half + 1) * f_pi(half)
    return 2 * _falling(N - 2, half + 1) * f_pi(half)


@dataclass
class UnlinkabilityReport:
    protocol: str
    n: int
    t: int
    count: int
    zeta: int
    n1: int | None = None
    n2: int | None = None
    theta1: int | None = None
    theta2: int | None = None
    reference: int | None = None
    estimate: float = field(default=0.0)

    @property
    def matches_reference(self) -> bool | None:
        return None if self.reference is None else self.reference == self.zeta

    def to_dict(self) -> dict:
        d = asdict(self)
        d["count"] = str(self.count)
        d["matches_reference"] = self.matches_reference
        return d


def zeta_of(count: int) -> int:
    if count < 1:
        raise ValueError("count must be positive")
    return count.bit_length() - 1


def log2_factorial(m: int) -> float:
    return math.lgamma(m + 1) / math.log(2) if m > 0 else 0.0


def zeta_shuffle_one(n: int, t: int, all_permutations: bool = True) -> UnlinkabilityReport:
    """Unlinkability of a single n-input network with t adversary-known inputs."""
    if not 0 <= t < n:
        raise ValueError("need 0 <= t < n")
    m = n - t
    count = math.factorial(m) if all_permutations else f_pi(m)
    est = log2_factorial(m) if all_permutations else math.log2(count)
    return UnlinkabilityReport("one", n, t, count, zeta_of(count),
                               reference=REFERENCE_ZETA.get(("one", n, t)), estimate=est)


def zeta_shuffle_two(n1: int, n2: int, t: int) -> UnlinkabilityReport:
    """Unlinkability of n2 blocks of n1 wires followed by the riffle, t known inputs."""
    d2 = log2_exact(n2)
    n = n1 * n2
    if not 0 <= t <= n:
        raise ValueError("need 0 <= t <= n")
    theta1 = t // n2
    theta2 = max(0, (d2 * n - t) // 2)
    m = n1 - theta1
    block = f_pi(m) if m >= 1 else 1
    count = block ** n2 * (1 << theta2)
    est = n2 * (math.log2(block) if block > 1 else 0.0) + theta2
    return UnlinkabilityReport("two", n, t, count, zeta_of(count), n1=n1, n2=n2, theta1=theta1,
                               theta2=theta2, reference=REFERENCE_ZETA.get(("two", n, t, n1, n2)),
                               estimate=est)


def zeta_table() -> list[UnlinkabilityReport]:
    out = []
    for key in REFERENCE_ZETA:
        if key[0] == "one":
            out.append(zeta_shuffle_one(key[1], key[2]))
        else:
            out.append(zeta_shuffle_two(key[3], key[4], key[2]))
    return out


# -- birthday bound -------------------------------------------------------------------------

def birthday_probability(n: int, q: float) -> float:
    """Collision probability of n uniform draws from q values, 1 - exp(-n(n-1)/(2q))."""
    if n < 2:
        raise ValueError("need n >= 2")
    if q < n:
        raise ValueError("space smaller than sample")
    return -math.expm1(-n * (n - 1) / (2.0 * q))


def birthday_exact(n: int, q: float) -> float:
    """1 - prod_{i<n} (1 - i/q)."""
    if q < n:
        raise ValueError("space smaller than sample")
    log_keep = sum(math.log1p(-i / q) for i in range(1, n))
    return -math.expm1(log_keep)


def sorting_randomness_space(n: int) -> float:
    return 1.5 * n * n * math.log2(n)


def birthday_table(ns: Sequence[int] = (32, 64, 128, 256)) -> list[dict]:
    rows = []
    for n in ns:
        q = sorting_randomness_space(n)
        rows.append({
            "n": n,
            "n_bits": math.ceil(math.log2(n)),
            "q": int(round(q)) if float(q).is_integer() else q,
            "q_bits": math.ceil(math.log2(q)),
            "probability": round(birthday_probability(n, q), 6),
            "exact": round(birthday_exact(n, q), 6),
            "reference": REFERENCE_BIRTHDAY.get(n),
        })
    return rows


def fpi_table(max_n: int) -> list[dict]:
    return [{"N": N, "f_pi": str(f_pi(N)), "factorial": str(math.factorial(N)),
             "bits": f_pi(N).bit_length() - 1} for N in range(1, max_n + 1)]


# -- table emitters -------------------------------------------------------------------------

def to_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable)


def _jsonable(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")
