import dataclasses
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpshuffle.analysis import permutation_counts
from mpshuffle.permnet import (Configuration, apply_configuration, build_arbitrary_benes, build_reduced_npi,
                               build_symmetric_npi, configuration_permutation)
from mpshuffle.shuffle import (ShuffleJob, gate_quorum, network_round_cost, round_cost, run_job, run_network,
                               shuffle_one, shuffle_two)

INPUTS8 = [11, 22, 33, 44, 55, 66, 77, 88]


def test_n2_forced_zero_is_identity():
    out = shuffle_one([11, 22], forced=[0])
    assert out.outputs == [11, 22] and not out.aborted
    assert shuffle_one([11, 22], forced=[1]).outputs == [22, 11]


def test_two_forced_zero_is_identity():
    out = shuffle_two([1, 2, 3, 4], 2, 2, forced=[0] * build_reduced_npi(2, 2).nbits)
    assert out.outputs == [1, 2, 3, 4]


@pytest.mark.parametrize("seed", range(5))
def test_one_matches_plaintext_oracle(seed):
    out = shuffle_one(INPUTS8, seed=seed, test_mode=True)
    assert out.outputs == apply_configuration(out.network, out.coins, INPUTS8)
    assert out.realized == configuration_permutation(out.network, out.coins)


@pytest.mark.parametrize("seed", range(5))
def test_two_matches_plaintext_oracle(seed):
    out = shuffle_two(INPUTS8, 4, 2, seed=seed, test_mode=True)
    assert out.outputs == apply_configuration(build_reduced_npi(4, 2), out.coins, INPUTS8)


def test_npi_network_matches_oracle():
    inputs = list(range(31, 41))
    out = shuffle_one(inputs, network="npi", seed=3, test_mode=True)
    assert out.network.name == "npi10"
    assert out.outputs == apply_configuration(build_symmetric_npi(4), out.coins, inputs)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([2, 3, 4, 5, 6, 7, 8]), st.integers(0, 2**32 - 1), st.sampled_from([257, 2**61 - 1]))
def test_output_multiset_preserved(n, seed, p):
    rng = np.random.default_rng(seed)
    inputs = [int(v) for v in rng.integers(0, p, n)]
    out = shuffle_one(inputs, seed=seed, p=p)
    assert sorted(out.outputs) == sorted(inputs)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, (1 << 20) - 1))
def test_coin_forcing_equivalence_benes8(code):
    cfg = Configuration.from_int(code, 20)
    out = shuffle_one(INPUTS8, forced=cfg, seed=code, p=257, test_mode=True)
    assert out.outputs == apply_configuration(out.network, cfg, INPUTS8)
    assert out.coins == cfg


def test_coin_forcing_exhaustive_small():
    net = build_arbitrary_benes(3)
    inputs = [5, 6, 7]
    seen = set()
    for bits in itertools.product((0, 1), repeat=net.nbits):
        out = run_network(net, inputs, forced=bits, p=257, seed=sum(bits))
        assert out.outputs == apply_configuration(net, Configuration(bits), inputs)
        seen.add(tuple(out.outputs))
    assert len(seen) == 6


@pytest.mark.slow
def test_exhaustive_forcing_support_reduced_4x2():
    net = build_reduced_npi(4, 2)
    reachable = {tuple(configuration_permutation(net, Configuration.from_int(c, net.nbits)).mapping)
                 for c in range(1 << net.nbits)}
    support = set()
    for code in range(1 << net.nbits):
        cfg = Configuration.from_int(code, net.nbits)
        out = run_network(net, INPUTS8, forced=cfg, p=257, seed=code, quorum_size=3)
        assert out.outputs == apply_configuration(net, cfg, INPUTS8)
        support.add(out.realized.mapping)
    assert support == reachable
    assert len(support) == len(permutation_counts(net)) == 9216


def test_gate_quorum_rule():
    assert [gate_quorum(g, 8) for g in range(10)] == [1, 2, 3, 4, 5, 6, 7, 8, 1, 2]


@pytest.mark.parametrize("protocol,kw,expected", [
    ("one", {"n": 8}, 19), ("one", {"n": 2}, 3), ("one", {"n": 4}, 11), ("two", {"n1": 4, "n2": 2}, 15),
])
def test_round_cost_examples(protocol, kw, expected):
    assert round_cost(protocol, **kw) == expected


@pytest.mark.parametrize("job", [
    ShuffleJob("one", n=2), ShuffleJob("one", n=3), ShuffleJob("one", n=4), ShuffleJob("one", n=6),
    ShuffleJob("one", n=8), ShuffleJob("one", n=10, network="npi"), ShuffleJob("two", n1=4, n2=2),
    ShuffleJob("two", n1=2, n2=4),
], ids=lambda j: f"{j.protocol}-{j.n or (j.n1, j.n2)}-{j.network}")
def test_measured_rounds_match_formula(job):
    out = run_job(dataclasses.replace(job, p=257))
    assert not out.aborted
    assert out.rounds == network_round_cost(job.build_network())
    assert out.total_rounds == out.rounds + 2


def test_layers_are_synchronous():
    out = shuffle_one(INPUTS8, seed=1)
    steps = np.diff(out.layer_rounds)
    assert len(out.layer_rounds) == 5 and np.all(steps == 4)


@pytest.mark.parametrize("protocol", ["one", "two"])
def test_crash_at_every_round_aborts(protocol):
    job = ShuffleJob(protocol, n=8, n1=4, n2=2)
    ok = run_job(dataclasses.replace(job, p=257), INPUTS8)
    victim = ok.quorums[0].members[0]
    for rnd in range(ok.total_rounds):
        out = run_job(ShuffleJob(protocol, n=8, n1=4, n2=2, p=257, crash={victim: rnd}), INPUTS8)
        assert out.aborted and out.outputs is None and out.realized is None


def test_crash_after_run_is_harmless():
    ok = shuffle_one(INPUTS8, seed=2)
    out = shuffle_one(INPUTS8, seed=2, crash={1: ok.total_rounds})
    assert out.outputs == ok.outputs


def test_tampering_aborts():
    def bump(rows):
        rows = rows.copy()
        rows[:, 0] += 1
        return rows

    out = shuffle_one(INPUTS8, seed=4, tamper={3: bump})
    assert out.aborted and out.outputs is None
    assert "party 3" in out.abort_reason or "3" in out.abort_reason


def test_transcript_determinism():
    a, b = shuffle_one(INPUTS8, seed=9), shuffle_one(INPUTS8, seed=9)
    assert a.transcript_digest() == b.transcript_digest()
    assert a.outputs == b.outputs
    assert shuffle_one(INPUTS8, seed=10).transcript_digest() != a.transcript_digest()


def test_corruption_with_good_quorums():
    out = shuffle_one(list(range(1, 17)), t=5, corrupt=[2, 9], seed=3, p=257)
    assert sorted(out.outputs) == list(range(1, 17))
    for q in out.quorums:
        assert 2 * sum(m in (2, 9) for m in q.members) < q.size


def test_input_errors():
    with pytest.raises(ValueError):
        shuffle_two(INPUTS8, 3, 2)
    with pytest.raises(ValueError):
        run_network(build_arbitrary_benes(4), [1, 2, 3])
    with pytest.raises(ValueError):
        shuffle_one(INPUTS8, forced=[0, 1])
    with pytest.raises(ValueError):
        ShuffleJob("one", n=8, network="npi").build_network()
    with pytest.raises(ValueError):
        shuffle_one(INPUTS8, t=1, corrupt=[1, 2])


def test_outcome_dict():
    d = shuffle_one(INPUTS8, seed=1).to_dict()
    assert d["aborted"] is False and d["rounds"] == 19 and d["network"] == "benes8"
    assert sorted(d["permutation"]) == list(range(1, 9))
    assert sorted(int(v) for v in d["outputs"]) == INPUTS8
