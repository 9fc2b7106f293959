"""Acceptance criteria 1-10, one test each; every test reports a PASS/FAIL line.

Run alone with ``python3 -m pytest tests/test_acceptance.py -v`` (the lines are
repeated in the terminal summary) or ``python3 tests/test_acceptance.py``.
"""
import json
import math
import sys
import time
from contextlib import contextmanager

import numpy as np
from scipy.stats import chi2, chisquare

from mpshuffle.adversary import honest_coin_leakage, outputs_obtained, view_indistinguishability_test
from mpshuffle.analysis import (REFERENCE_BIRTHDAY, REFERENCE_MEAN, REFERENCE_OCCURRENCES, REFERENCE_STDDEV,
                                birthday_probability, distribution_stats, enumerate_distribution, f_pi,
                                permutation_counts, sorting_randomness_space, zeta_shuffle_one)
from mpshuffle.cli import main as cli_main
from mpshuffle.field import Field
from mpshuffle.mpc_ops import MPCContext, input_share, random_swap, reconstruct_rows
from mpshuffle.permnet import apply_configuration, build_arbitrary_benes, build_benes, build_symmetric_npi
from mpshuffle.runtime import Runtime, quorum_gen
from mpshuffle.sharing import deal_batch
from mpshuffle.shuffle import ShuffleJob, network_round_cost, run_job, shuffle_one, shuffle_two

RESULTS: list[str] = []
INPUTS8 = [11, 22, 33, 44, 55, 66, 77, 88]


@contextmanager
def criterion(num: int, title: str, limit: float):
    notes: list[str] = []
    t0 = time.perf_counter()
    try:
        yield notes
        elapsed = time.perf_counter() - t0
        assert elapsed < limit, f"took {elapsed:.1f}s, limit {limit}s"
    except BaseException as exc:
        line = f"CRITERION {num} {title}: FAIL ({exc})"
        RESULTS.append(line)
        print(line)
        raise
    detail = "; ".join(notes)
    line = f"CRITERION {num} {title}: PASS ({elapsed:.1f}s{'; ' + detail if detail else ''})"
    RESULTS.append(line)
    print(line)


def test_criterion_01_occurrence_distribution(capsys):
    with criterion(1, "occurrence distribution", 60) as notes:
        code = cli_main(["analyze", "dist", "--d", "3", "--format", "json"])
        d = json.loads(capsys.readouterr().out)
        assert code == 0
        hist = {r["occurrences"]: r["permutations"] for r in d["rows"]}
        assert hist == REFERENCE_OCCURRENCES
        assert d["mass"] == 1_048_576 and d["total_configs"] == 1 << 20
        assert d["distinct"] == 40_320 == math.factorial(8)
        notes.append("7-row histogram matches reference, mass 1048576, 40320 distinct")


def test_criterion_02_distribution_mean():
    with criterion(2, "distribution mean", 60) as notes:
        mean, std = distribution_stats(enumerate_distribution(build_benes(3)))
        assert abs(mean - REFERENCE_MEAN) <= 1e-4
        notes.append(f"mean {mean:.6f}; stddev {std:.6f} reported (reference {REFERENCE_STDDEV}, "
                     "not required)")


def test_criterion_03_rearrangeability():
    with criterion(3, "rearrangeability", 10) as notes:
        assert len(permutation_counts(build_benes(2))) == 24
        for n in (3, 5, 6, 7):
            assert len(permutation_counts(build_arbitrary_benes(n))) == math.factorial(n), n
        notes.append("d=2 reaches 24; n=3,5,6,7 reach n!")


def test_criterion_04_zeta_shuffle_one():
    with criterion(4, "zeta Shuffle-I", 1) as notes:
        assert zeta_shuffle_one(128, 42).zeta == 433
        assert zeta_shuffle_one(256, 85).zeta == 1026
        r = zeta_shuffle_one(512, 170)
        assert r.zeta == math.factorial(342).bit_length() - 1
        notes.append(f"433 and 1026 match; (512,170) computed {r.zeta} vs reference {r.reference} "
                     "(mismatch reported)")


def test_criterion_05_birthday():
    with criterion(5, "birthday table", 1) as notes:
        for n in (32, 128, 256):
            pr = birthday_probability(n, sorting_randomness_space(n))
            assert abs(pr - REFERENCE_BIRTHDAY[n]) <= 5e-4, (n, pr)
        p64 = birthday_probability(64, sorting_randomness_space(64))
        flagged = abs(p64 - REFERENCE_BIRTHDAY[64]) > 5e-4
        assert flagged
        notes.append(f"n=32,128,256 within 5e-4; n=64 computed {p64:.4f} vs reference "
                     f"{REFERENCE_BIRTHDAY[64]} flagged")


def test_criterion_06_oracle_equivalence():
    with criterion(6, "MPC/plaintext oracle equivalence", 30) as notes:
        for seed in range(100):
            out = shuffle_one(INPUTS8, seed=seed, test_mode=True)
            assert not out.aborted
            assert out.outputs == apply_configuration(out.network, out.coins, INPUTS8), seed
        for seed in range(100):
            out = shuffle_two(INPUTS8, 4, 2, seed=seed, test_mode=True)
            assert not out.aborted
            assert out.outputs == apply_configuration(out.network, out.coins, INPUTS8), seed
        notes.append("100/100 Shuffle-I n=8 and 100/100 Shuffle-II (4,2) runs match")


def test_criterion_07_statistical_correctness():
    with criterion(7, "statistical shuffle correctness", 300) as notes:
        net = build_benes(3)
        counts = permutation_counts(net)
        classes = sorted(REFERENCE_OCCURRENCES)
        expected_mass = np.array([occ * REFERENCE_OCCURRENCES[occ] for occ in classes]) / float(1 << 20)
        runs = 10_000
        observed = np.zeros(len(classes))
        for seed in range(runs):
            out = shuffle_one(INPUTS8, seed=seed, p=257)
            assert not out.aborted
            occ = counts[out.realized.code]
            observed[classes.index(occ)] += 1
        res = chisquare(observed, expected_mass * runs)
        assert res.pvalue > 0.01, res
        notes.append(f"chi2 over {len(classes)} occurrence classes: stat {res.statistic:.2f}, "
                     f"p {res.pvalue:.3f} > 0.01")


def test_criterion_08_round_accounting():
    with criterion(8, "round accounting", 30) as notes:
        jobs = [ShuffleJob("one", n=n) for n in (2, 4, 8, 16)]
        jobs += [ShuffleJob("two", n1=a, n2=b) for a, b in ((4, 2), (4, 4), (8, 2))]
        measured = []
        for job in jobs:
            out = run_job(job)
            assert not out.aborted
            assert out.rounds == network_round_cost(job.build_network()), job
            measured.append(out.rounds)
        rt = Runtime(8, Field(257), seed=0)
        ctx = MPCContext(rt, quorum_gen(8, 0, seed=0))
        x = input_share(ctx, np.array([1]), np.array([5]), np.array([1]))
        y = input_share(ctx, np.array([2]), np.array([9]), np.array([1]))
        r0 = rt.round
        a, b = random_swap(ctx, x, y)
        assert rt.round - r0 == 3
        assert sorted(int(v) for v in np.concatenate([reconstruct_rows(ctx, a), reconstruct_rows(ctx, b)])) == [5, 9]
        notes.append(f"measured {measured} equal the formula; random swap takes 3 rounds")


def test_criterion_09_privacy_suite():
    with criterion(9, "privacy property suite", 300) as notes:
        # share uniformity: two fixed shares of a degree-2 sharing of a fixed secret
        p, trials = 257, 100_000
        f = Field(p)
        rng = np.random.default_rng(0)
        shares = deal_batch(f, np.full(trials, 123), rng.integers(0, p, size=(trials, 2)), f.vandermonde(2, [2, 5]))
        for col in range(2):
            assert chisquare(np.bincount(shares[:, col], minlength=p)).pvalue > 0.001

        job = ShuffleJob("one", n=8, t=2, p=257, corrupt=(3, 6))
        honest = [i for i in range(8) if i + 1 not in job.corrupt]
        b = list(INPUTS8)
        rotated = [INPUTS8[i] for i in honest[1:] + honest[:1]]
        for i, v in zip(honest, rotated):
            b[i] = v
        rep = view_indistinguishability_test(job, INPUTS8, b, trials=10_000, seed=1)
        assert rep.passed, rep.worst[:3]
        neg = view_indistinguishability_test(job, INPUTS8, b, trials=1_000, seed=1, threshold=1)
        assert not neg.passed

        leak = honest_coin_leakage(run_job(ShuffleJob("one", n=8, t=2, corrupt=(3, 6), seed=2), INPUTS8,
                                           record_coins=True))
        assert not leak["leak"]

        ok = shuffle_one(INPUTS8, t=2, corrupt=[3], seed=4, p=257)
        for li, start in enumerate(ok.layer_rounds):
            for rnd in range(start, start + 4):
                out = shuffle_one(INPUTS8, t=2, corrupt=[3], seed=4, p=257, crash={3: rnd})
                assert out.aborted and outputs_obtained(out) == set(), (li, rnd)
        notes.append(f"share chi2 ok; view test pass over {rep.slots_tested} slots "
                     f"(min p {rep.min_p_value:.2e}, Bonferroni threshold {rep.threshold:.1e}); "
                     f"negative control fails (min p {neg.min_p_value:.1e}); 0 coin matches; "
                     f"abort at all {len(ok.layer_rounds)} layers")


def test_criterion_10_f_pi():
    with criterion(10, "f_pi", 60) as notes:
        for k in range(6):
            assert f_pi(2 ** k) == math.factorial(2 ** k)
        assert all(f_pi(N) <= math.factorial(N) for N in range(1, 65))
        distinct = len(permutation_counts(build_symmetric_npi(2)))
        assert distinct <= f_pi(6) == 48 and distinct < 720
        notes.append(f"symmetric blocking network N=6 reaches {distinct} <= 48 < 720")


if __name__ == "__main__":
    import pytest
    sys.exit(pytest.main([__file__, "-q"]))
