import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spscan import ConfigurationError
from spscan.mcmc import InvalidTargetError, Target, TWalkParams, hdi, run_chain, twalk_step


def normal_target(dim, mean=0.0, sd=1.0, **kw):
    return Target(lambda x: -0.5 * float(np.sum(((x - mean) / sd) ** 2)), dim, **kw)


def test_out_of_support_rejected():
    target = Target(lambda x: 0.0, 1, lower=[0.0], upper=[1.0])
    assert target(np.array([1.5])) == -math.inf
    rng = np.random.default_rng(0)
    x, xp = np.array([0.9]), np.array([0.95])
    for _ in range(500):
        x2, xp2, ux, uxp, move, ok = twalk_step(x, xp, 0.0, 0.0, target, rng)
        assert 0 <= x2[0] <= 1 and 0 <= xp2[0] <= 1
        if not ok:
            assert np.array_equal(x2, x) and np.array_equal(xp2, xp)
        x, xp = x2, xp2


def test_nan_target_raises():
    target = Target(lambda x: float("nan"), 1)
    with pytest.raises(InvalidTargetError, match="invalid target"):
        run_chain(target, [0.0], [1.0], 5)


def test_init_errors():
    with pytest.raises(ConfigurationError):
        run_chain(normal_target(2), [0, 0], [0, 0], 10)
    with pytest.raises(ConfigurationError):
        run_chain(normal_target(1, lower=[0.0]), [-1.0], [1.0], 10)
    with pytest.raises(ConfigurationError):
        TWalkParams(move_probs=(0.5, 0.5, 0.5, 0.5))


def test_both_points_visit_both_sides():
    target = normal_target(1)
    seen = {"x": set(), "xp": set()}

    rng = np.random.default_rng(1)
    x, xp = np.array([2.0]), np.array([2.5])
    ux, uxp = target(x), target(xp)
    for _ in range(5000):
        x, xp, ux, uxp, _, _ = twalk_step(x, xp, ux, uxp, target, rng)
        seen["x"].add(bool(x[0] > 0))
        seen["xp"].add(bool(xp[0] > 0))
    assert seen["x"] == {True, False} and seen["xp"] == {True, False}


def test_zero_steps_and_determinism():
    t = normal_target(2)
    assert len(run_chain(t, [0, 0], [1, 1], 0)) == 0
    a = run_chain(t, [0, 0], [1, 1], 300, 50, 2, seed=9)
    b = run_chain(t, [0, 0], [1, 1], 300, 50, 2, seed=9)
    assert len(a) == 125
    assert np.array_equal(a.params, b.params) and np.array_equal(a.log_target, b.log_target)
    assert a.acceptance_rate == b.acceptance_rate
    assert sum(a.proposed.values()) == 300
    assert sum(a.accepted.values()) == round(a.acceptance_rate * 300)


def test_callback_and_csv(tmp_path):
    calls = []
    res = run_chain(normal_target(1), [0.0], [1.0], 20, callback=lambda k, x, u: calls.append(k))
    assert calls == list(range(1, 21))
    res.to_csv(tmp_path / "c.csv", names=["r"])
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[1] == "step,r,log_target" and len(lines) == 22


def test_2d_standard_normal_moments():
    res = run_chain(normal_target(2), [0.1, -0.2], [0.5, 0.4], 100_000, seed=3)
    m, v = res.params.mean(axis=0), res.params.var(axis=0)
    assert np.all(np.abs(m) < 0.05)
    assert np.all((v > 0.9) & (v < 1.1))


def test_1d_normal_moments():
    res = run_chain(normal_target(1, 3.0, 2.0), [0.0], [1.0], 200_000, seed=4)
    assert abs(res.params.mean() - 3) < 0.1
    assert abs(res.params.std() - 2) < 0.1


def test_hdi_examples():
    rng = np.random.default_rng(0)
    lo, hi = hdi(rng.uniform(size=100_000))
    assert abs((hi - lo) - 0.89) < 0.01
    lo, hi = hdi(rng.standard_normal(100_000))
    assert abs(lo + 1.598) < 0.05 and abs(hi - 1.598) < 0.05
    assert hdi(np.full(50, 2.5)) == (2.5, 2.5)
    with pytest.raises(ValueError):
        hdi([1.0, 2.0])


@settings(max_examples=30)
@given(st.lists(st.floats(-100, 100), min_size=10, max_size=200), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_hdi_properties(xs, m1, m2):
    lo1, hi1 = hdi(xs, min(m1, m2))
    lo2, hi2 = hdi(xs, max(m1, m2))
    assert min(xs) <= lo1 <= hi1 <= max(xs)
    assert hi1 - lo1 <= hi2 - lo2 + 1e-9
    inside = sum(lo2 <= x <= hi2 for x in xs)
    assert inside >= math.ceil(max(m1, m2) * len(xs) - 1e-9)
