"""Bayesian two-group comparison with a Student-t likelihood.

Both groups share one normality parameter ``nu``; means and scales are
per-group.  Priors are uniform boxes derived from the pooled data.  The chain
runs on ``(mu1, mu2, log sigma1, log sigma2, log nu)`` with the Jacobian added
so that the priors stay uniform on the original scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln

from . import ConfigurationError
from .mcmc import Target, TWalkParams, hdi, run_chain

ROW_BETTER = "row_better"
COLUMN_BETTER = "column_better"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TwoGroupParams:
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    nu: float

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0 and self.nu > 0):
            raise ConfigurationError("sigma1, sigma2 and nu must be positive")


@dataclass(frozen=True)
class PriorBox:
    mu_lo: float
    mu_hi: float
    sigma_lo: float
    sigma_hi: float
    nu_lo: float = 1.0
    nu_hi: float = 100.0

    @classmethod
    def from_data(cls, group1, group2) -> "PriorBox":
        y = np.concatenate([np.asarray(group1, float), np.asarray(group2, float)])
        sd = float(y.std(ddof=1)) if y.size > 1 else 0.0
        sd = max(sd, 1e-6)
        return cls(float(y.min()) - 5 * sd, float(y.max()) + 5 * sd, sd / 1000, sd * 1000)

    def contains(self, p: TwoGroupParams) -> bool:
        return (
            self.mu_lo <= p.mu1 <= self.mu_hi
            and self.mu_lo <= p.mu2 <= self.mu_hi
            and self.sigma_lo <= p.sigma1 <= self.sigma_hi
            and self.sigma_lo <= p.sigma2 <= self.sigma_hi
            and self.nu_lo <= p.nu <= self.nu_hi
        )

    def log_density(self) -> float:
        return -(
            2 * math.log(self.mu_hi - self.mu_lo)
            + 2 * math.log(self.sigma_hi - self.sigma_lo)
            + math.log(self.nu_hi - self.nu_lo)
        )


@dataclass(frozen=True)
class BayesConfig:
    n_chains: int = 2
    n_steps: int = 50_000
    burn_in: int = 10_000
    thin: int = 5
    seed: int = 0
    mass: float = 0.89


def student_t_logpdf(y, nu: float, mu: float, sigma: float):
    """Log of the Student-t density with normality ``nu``, location ``mu``, scale ``sigma``."""
    if not (nu > 0 and sigma > 0):
        raise ValueError("Student-t needs nu > 0 and sigma > 0")
    z = (np.asarray(y, dtype=float) - mu) / sigma
    const = gammaln((nu + 1) / 2) - gammaln(nu / 2) - 0.5 * math.log(nu * math.pi) - math.log(sigma)
    return const - (nu + 1) / 2 * np.log1p(z * z / nu)


def two_group_log_posterior(params: TwoGroupParams, group1, group2, priors: PriorBox) -> float:
    """Unnormalised log posterior; ``-inf`` outside the prior box."""
    if not priors.contains(params):
        return -math.inf
    ll1 = float(np.sum(student_t_logpdf(group1, params.nu, params.mu1, params.sigma1)))
    ll2 = float(np.sum(student_t_logpdf(group2, params.nu, params.mu2, params.sigma2)))
    return ll1 + ll2 + priors.log_density()


def effect_size(params: TwoGroupParams) -> float:
    return (params.mu1 - params.mu2) / math.sqrt(0.5 * (params.sigma1**2 + params.sigma2**2))


@dataclass
class ComparisonReport:
    effect_samples: np.ndarray
    hdi89: tuple
    min_hdi: float
    mean_effect: float
    decision: str
    priors: PriorBox
    config: BayesConfig
    acceptance_rates: list = field(default_factory=list)
    mu1_mean: float = float("nan")
    mu2_mean: float = float("nan")

    def to_dict(self, include_samples: bool = False) -> dict:
        d = {
            "hdi": list(self.hdi89),
            "hdi_mass": self.config.mass,
            "min_hdi": self.min_hdi,
            "mean_effect": self.mean_effect,
            "decision": self.decision,
            "priors": asdict(self.priors),
            "mcmc": asdict(self.config),
            "acceptance_rates": self.acceptance_rates,
            "mu1_mean": self.mu1_mean,
            "mu2_mean": self.mu2_mean,
        }
        if include_samples:
            d["effect_samples"] = self.effect_samples.tolist()
        return d

    def to_json(self, include_samples: bool = False) -> str:
        return json.dumps(self.to_dict(include_samples), indent=2, sort_keys=True)


def decide(lo: float, hi: float) -> str:
    if lo > 0:
        return ROW_BETTER
    if hi < 0:
        return COLUMN_BETTER
    return INCONCLUSIVE


def _chain_target(g1, g2, priors: PriorBox) -> Target:
    n1, n2 = g1.size, g2.size
    log_prior = priors.log_density()

    def log_density(z):
        mu1, mu2, ls1, ls2, lnu = z
        s1, s2, nu = math.exp(ls1), math.exp(ls2), math.exp(lnu)
        c = gammaln((nu + 1) / 2) - gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
        r1 = (g1 - mu1) / s1
        r2 = (g2 - mu2) / s2
        ll = (n1 + n2) * c - n1 * ls1 - n2 * ls2
        ll -= (nu + 1) / 2 * (np.log1p(r1 * r1 / nu).sum() + np.log1p(r2 * r2 / nu).sum())
        # Jacobian of the log transforms
        return ll + log_prior + ls1 + ls2 + lnu

    lower = [priors.mu_lo, priors.mu_lo, math.log(priors.sigma_lo), math.log(priors.sigma_lo), math.log(priors.nu_lo)]
    upper = [priors.mu_hi, priors.mu_hi, math.log(priors.sigma_hi), math.log(priors.sigma_hi), math.log(priors.nu_hi)]
    return Target(log_density, 5, np.array(lower), np.array(upper))


def sample_posterior(group1, group2, config: BayesConfig = BayesConfig(), priors: PriorBox | None = None):
    """Posterior draws ``(n, 5)`` of ``(mu1, mu2, sigma1, sigma2, nu)`` pooled over chains."""
    g1 = np.asarray(group1, dtype=float)
    g2 = np.asarray(group2, dtype=float)
    if g1.size == 0 or g2.size == 0:
        raise ConfigurationError("both groups need data")
    priors = priors or PriorBox.from_data(g1, g2)
    target = _chain_target(g1, g2, priors)
    seeds = np.random.SeedSequence(config.seed).generate_state(config.n_chains, dtype=np.uint32)
    draws, rates = [], []
    for seed in seeds:
        rng = np.random.default_rng(int(seed))
        pooled = max(float(np.concatenate([g1, g2]).std()), 1e-3)
        x0 = np.array(
            [g1.mean(), g2.mean(), math.log(max(g1.std(), pooled / 10)), math.log(max(g2.std(), pooled / 10)), math.log(10.0)]
        )
        scale = np.array([0.1 * pooled, 0.1 * pooled, 0.1, 0.1, 0.1])
        xp0 = x0 + scale * rng.standard_normal(5)
        x0, xp0 = (np.clip(p, target.lower, target.upper) for p in (x0, xp0))
        res = run_chain(target, x0, xp0, config.n_steps, config.burn_in, config.thin, int(seed), TWalkParams())
        z = res.params
        draws.append(np.column_stack([z[:, 0], z[:, 1], np.exp(z[:, 2]), np.exp(z[:, 3]), np.exp(z[:, 4])]))
        rates.append(res.acceptance_rate)
    return np.concatenate(draws), rates, priors


def compare_groups(group1, group2, config: BayesConfig = BayesConfig()) -> ComparisonReport:
    """Effect-size posterior of group1 ("row") versus group2 ("column")."""
    post, rates, priors = sample_posterior(group1, group2, config)
    effects = (post[:, 0] - post[:, 1]) / np.sqrt(0.5 * (post[:, 2] ** 2 + post[:, 3] ** 2))
    lo, hi = hdi(effects, config.mass)
    return ComparisonReport(
        effect_samples=effects,
        hdi89=(lo, hi),
        min_hdi=lo,
        mean_effect=float(effects.mean()),
        decision=decide(lo, hi),
        priors=priors,
        config=config,
        acceptance_rates=rates,
        mu1_mean=float(post[:, 0].mean()),
        mu2_mean=float(post[:, 1].mean()),
    )
