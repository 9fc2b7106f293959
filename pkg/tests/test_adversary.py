import json

import numpy as np
import pytest

from mpshuffle.adversary import (AdversaryError, corrupt, honest_coin_leakage, linkability_check,
                                 outputs_obtained, two_sample_chi2, view_indistinguishability_test, views)
from mpshuffle.field import Field
from mpshuffle.runtime import Runtime
from mpshuffle.shuffle import ShuffleJob, run_job, shuffle_one

INPUTS8 = [11, 22, 33, 44, 55, 66, 77, 88]


def test_corrupt_bounds():
    rt = Runtime(8, Field(257), seed=0)
    corrupt(rt, [], t=2)
    assert rt.corrupted == set()
    corrupt(rt, [1, 2], t=2)
    assert rt.corrupted == {1, 2}
    with pytest.raises(AdversaryError):
        corrupt(Runtime(8, Field(257), seed=0), [1], t=3)
    with pytest.raises(AdversaryError):
        corrupt(Runtime(8, Field(257), seed=0), [1, 2, 3], t=2)
    with pytest.raises(AdversaryError):
        corrupt(Runtime(8, Field(257), seed=0), [1], t=2, mode="active")


def test_corruption_is_static():
    rt = Runtime(8, Field(257), seed=0)
    rt.deliver_round()
    with pytest.raises(AdversaryError):
        corrupt(rt, [1], t=2)


def test_empty_adversary_view():
    out = shuffle_one(INPUTS8, seed=0)
    assert views(out) == {}


def test_views_hold_received_messages():
    out = run_job(ShuffleJob("one", n=8, t=2, p=257, corrupt=(2, 5), seed=1), INPUTS8)
    v = views(out, inputs=INPUTS8)
    assert sorted(v) == [2, 5]
    assert v[2].own_input == 22 and v[2].received


def test_t_zero_passes_vacuously():
    rep = view_indistinguishability_test(ShuffleJob("one", n=8, p=257), INPUTS8, INPUTS8[::-1], trials=5)
    assert rep.passed and rep.slots_tested == 0


def test_inputs_may_only_differ_for_honest_parties():
    job = ShuffleJob("one", n=8, t=2, p=257, corrupt=(1, 2))
    with pytest.raises(ValueError):
        view_indistinguishability_test(job, INPUTS8, [99] + INPUTS8[1:], trials=2)


def test_two_sample_chi2():
    a = np.array([[50, 50, 0], [100, 0, 0]])
    b = np.array([[48, 52, 0], [0, 100, 0]])
    stat, df, p = two_sample_chi2(a, b)
    assert df.tolist() == [1, 1]
    assert p[0] > 0.5 and p[1] < 1e-10
    _, _, same = two_sample_chi2(np.array([[10, 0]]), np.array([[7, 0]]))
    assert same[0] == 1.0


def test_view_test_small_pass_and_negative_control():
    job = ShuffleJob("one", n=8, t=2, p=257, corrupt=(3, 6))
    honest = [i for i in range(8) if i + 1 not in job.corrupt]
    b = list(INPUTS8)
    vals = [INPUTS8[i] for i in honest]
    for i, v in zip(honest, vals[1:] + vals[:1]):
        b[i] = v
    rep = view_indistinguishability_test(job, INPUTS8, b, trials=300, seed=1)
    assert rep.passed, rep.worst[:3]
    assert rep.slots_tested > 100
    broken = view_indistinguishability_test(job, INPUTS8, b, trials=300, seed=1, threshold=1)
    assert not broken.passed and broken.min_p_value < 1e-10
    d = json.loads(json.dumps(broken.to_dict()))
    assert {"verdict", "min_p_value", "worst", "note"} <= set(d)


def test_no_honest_coin_leakage():
    out = run_job(ShuffleJob("one", n=8, t=2, corrupt=(1, 4), seed=3), INPUTS8, record_coins=True)
    rep = honest_coin_leakage(out)
    assert not rep["leak"] and rep["matches"] == 0
    assert rep["honest_coins"] > 0 and rep["view_values"] > 0
    assert set(rep["kinds"]) <= {"share", "open"}


def test_leakage_check_detects_forwarded_coins():
    out = run_job(ShuffleJob("one", n=8, t=2, corrupt=(1,), seed=3), INPUTS8, record_coins=True)
    rt = out.runtime
    coin = int(np.concatenate(rt.coins[2])[0])
    rt.post("leak", [[2]], [[1]], np.array([[[[coin]]]], dtype=np.int64))
    rt.deliver_round()
    assert honest_coin_leakage(out)["leak"]


def test_all_or_nothing():
    ok = shuffle_one(INPUTS8, seed=5)
    assert outputs_obtained(ok) == set(range(1, 9))
    out = shuffle_one(INPUTS8, seed=5, t=2, corrupt=[7], crash={7: 6})
    assert out.aborted and outputs_obtained(out) == set()


def test_linkability():
    out = shuffle_one(INPUTS8, seed=6)
    assert linkability_check(out, range(1, 9)) == 1
    assert linkability_check(out, []) == 40320
    assert linkability_check(out, [1, 2]) == 720
    assert linkability_check(out, [4]) == 5040
    with pytest.raises(ValueError):
        linkability_check(shuffle_one([1, 1, 2, 3], seed=0), [1])
