import math

import numpy as np
import pytest
from scipy import stats

from spscan import ConfigurationError
from spscan.bayes import (
    COLUMN_BETTER,
    INCONCLUSIVE,
    ROW_BETTER,
    BayesConfig,
    PriorBox,
    TwoGroupParams,
    _chain_target,
    compare_groups,
    decide,
    effect_size,
    sample_posterior,
    student_t_logpdf,
    two_group_log_posterior,
)

FAST = BayesConfig(n_chains=2, n_steps=12_000, burn_in=2_000, thin=2, seed=1)


def test_logpdf_limits():
    assert student_t_logpdf(0.0, 1e6, 0, 1) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-4)
    assert student_t_logpdf(0.0, 1, 0, 1) == pytest.approx(-math.log(math.pi), abs=1e-12)


@pytest.mark.parametrize("nu,mu,sigma", [(1.5, 2.0, 0.3), (7.0, -1.0, 2.0), (60.0, 18.0, 1.1)])
def test_logpdf_matches_scipy(nu, mu, sigma):
    y = np.linspace(-5, 25, 31)
    assert np.allclose(student_t_logpdf(y, nu, mu, sigma), stats.t.logpdf(y, nu, mu, sigma))
    assert np.allclose(student_t_logpdf(mu + 1.3, nu, mu, sigma), student_t_logpdf(mu - 1.3, nu, mu, sigma))


def test_logpdf_invalid():
    with pytest.raises(ValueError):
        student_t_logpdf(0.0, 0.0, 0, 1)
    with pytest.raises(ValueError):
        student_t_logpdf(0.0, 3.0, 0, -1)


def test_posterior_examples():
    priors = PriorBox(-10, 10, 0.01, 100, 1, 100)
    inside = TwoGroupParams(1.0, 2.0, 1.0, 1.0, 1.0)
    expect = 2 * math.log(1 / math.pi) + priors.log_density()
    assert two_group_log_posterior(inside, [1.0], [2.0], priors) == pytest.approx(expect)
    outside = TwoGroupParams(11.0, 2.0, 1.0, 1.0, 1.0)
    assert two_group_log_posterior(outside, [1.0], [2.0], priors) == -math.inf
    with pytest.raises(ConfigurationError):
        TwoGroupParams(0, 0, -1, 1, 1)


def test_chain_target_is_posterior_plus_jacobian():
    g1, g2 = np.array([17.0, 18.2, 16.4]), np.array([18.0, 19.1])
    priors = PriorBox.from_data(g1, g2)
    target = _chain_target(g1, g2, priors)
    p = TwoGroupParams(17.1, 18.4, 0.8, 1.3, 5.0)
    z = np.array([p.mu1, p.mu2, math.log(p.sigma1), math.log(p.sigma2), math.log(p.nu)])
    jac = math.log(p.sigma1 * p.sigma2 * p.nu)
    assert target(z) == pytest.approx(two_group_log_posterior(p, g1, g2, priors) + jac)


def test_effect_size_examples():
    assert effect_size(TwoGroupParams(3, 3, 1, 2, 5)) == 0
    assert effect_size(TwoGroupParams(2, 1, 1, 1, 5)) == 1.0
    assert effect_size(TwoGroupParams(18.38, 18.18, 1.07, 1.07, 5)) == pytest.approx(0.187, abs=5e-4)


def test_decision_rule():
    assert decide(0.1, 0.5) == ROW_BETTER
    assert decide(-0.5, -0.1) == COLUMN_BETTER
    assert decide(-0.1, 0.2) == INCONCLUSIVE
    assert decide(0.0, 0.2) == INCONCLUSIVE


def test_posterior_recovers_normal_data():
    rng = np.random.default_rng(5)
    g1, g2 = rng.normal(18.0, 1.0, 200), rng.normal(17.0, 0.5, 200)
    post, rates, _ = sample_posterior(g1, g2, FAST)
    assert abs(post[:, 0].mean() - g1.mean()) < 0.05
    assert abs(post[:, 1].mean() - g2.mean()) < 0.05
    assert abs(post[:, 2].mean() - g1.std()) < 0.08
    assert abs(post[:, 3].mean() - g2.std()) < 0.05
    assert all(0.05 < r < 0.9 for r in rates)


def test_same_group_inconclusive():
    g = np.random.default_rng(2).normal(17.5, 1.0, 100)
    rep = compare_groups(g, g, FAST)
    assert rep.hdi89[0] < 0 < rep.hdi89[1]
    assert rep.decision == INCONCLUSIVE
    assert rep.min_hdi == rep.hdi89[0]


def test_antisymmetry_and_shift_equivariance():
    rng = np.random.default_rng(3)
    a, b = rng.normal(18.0, 1.0, 120), rng.normal(17.5, 1.0, 120)
    ab, ba = compare_groups(a, b, FAST), compare_groups(b, a, FAST)
    assert ab.decision == ROW_BETTER and ba.decision == COLUMN_BETTER
    assert ab.mean_effect == pytest.approx(-ba.mean_effect, abs=0.03)
    assert ab.hdi89[0] == pytest.approx(-ba.hdi89[1], abs=0.05)
    shifted = compare_groups(a + 7.0, b + 7.0, FAST)
    assert shifted.mean_effect == pytest.approx(ab.mean_effect, abs=0.03)


def test_report_serialises():
    rng = np.random.default_rng(4)
    rep = compare_groups(rng.normal(1, 1, 30), rng.normal(0, 1, 30), BayesConfig(1, 2000, 500, 1))
    d = rep.to_dict()
    assert set(d) >= {"hdi", "min_hdi", "decision", "priors", "mcmc"}
    assert "effect_samples" in rep.to_dict(include_samples=True)
    assert rep.to_json().startswith("{")


def test_empty_group():
    with pytest.raises(ConfigurationError):
        sample_posterior([], [1.0, 2.0])
