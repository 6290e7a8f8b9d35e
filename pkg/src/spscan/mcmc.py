"""The t-walk sampler and highest-density intervals.

The t-walk keeps two points ``(x, xp)`` of the parameter space and targets the
product density ``f(x) f(xp)``.  Each step moves one of the two points with
one of four kernels (walk, traverse, blow, hop) chosen at random, followed by a
Metropolis-Hastings accept/reject on the product space.  Only ``x`` is
recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import ConfigurationError
from .io import write_csv

MOVES = ("walk", "traverse", "blow", "hop")
LOG_2PI = math.log(2 * math.pi)


class InvalidTargetError(RuntimeError):
    """The target log-density returned NaN."""


@dataclass(frozen=True)
class TWalkParams:
    move_probs: tuple = (0.4918, 0.4918, 0.0082, 0.0082)
    walk_a: float = 1.5
    traverse_a: float = 6.0
    n1: float = 4.0

    def __post_init__(self):
        if len(self.move_probs) != 4 or abs(sum(self.move_probs) - 1) > 1e-9:
            raise ConfigurationError("move_probs must be four probabilities summing to 1")
        if self.walk_a <= 0 or self.traverse_a <= 1 or self.n1 <= 0:
            raise ConfigurationError("invalid t-walk kernel parameters")


@dataclass
class Target:
    """Log-density with optional box support ``lower <= x <= upper``."""

    log_density: Callable[[np.ndarray], float]
    dim: int
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        if self.lower is not None:
            self.lower = np.asarray(self.lower, dtype=float).reshape(self.dim)
        if self.upper is not None:
            self.upper = np.asarray(self.upper, dtype=float).reshape(self.dim)

    def in_support(self, x) -> bool:
        if self.lower is not None and np.any(x < self.lower):
            return False
        if self.upper is not None and np.any(x > self.upper):
            return False
        return True

    def __call__(self, x) -> float:
        if not self.in_support(x):
            return -math.inf
        val = float(self.log_density(x))
        if math.isnan(val):
            raise InvalidTargetError(f"invalid target: NaN log-density at {x}")
        return val


@dataclass
class ChainResult:
    params: np.ndarray  # (n_kept, dim)
    log_target: np.ndarray  # (n_kept,)
    acceptance_rate: float
    seed: int
    proposed: dict = field(default_factory=dict)
    accepted: dict = field(default_factory=dict)
    final_pair: tuple = ()  # (x, x') after the last step, for continuing the chain

    def __len__(self):
        return len(self.log_target)

    def to_csv(self, path, header: str = "", names=None) -> None:
        names = list(names) if names is not None else [f"p{k}" for k in range(self.params.shape[1])]
        rows = ([k, *p.tolist(), lt] for k, (p, lt) in enumerate(zip(self.params, self.log_target)))
        write_csv(path, header or f"t-walk chain seed={self.seed}", ["step", *names, "log_target"], rows)


def _beta(rng, a):
    if rng.random() < (a - 1) / (2 * a):
        return math.exp(math.log(rng.random()) / (a + 1))
    return math.exp(math.log(rng.random()) / (1 - a))


def _gauss_neglog(h, center, sigma, phi):
    n = int(phi.sum())
    d = (h - center)[phi]
    return 0.5 * n * LOG_2PI + n * math.log(sigma) + 0.5 * float(d @ d) / sigma**2


def twalk_step(x, xp, ux, uxp, target: Target, rng: np.random.Generator, params: TWalkParams = TWalkParams()):
    """One t-walk transition.

    ``ux`` and ``uxp`` are the current log-target values of ``x`` and ``xp``.
    Returns ``(x, xp, ux, uxp, move, accepted)``.
    """
    d = x.size
    move = MOVES[int(np.searchsorted(np.cumsum(params.move_probs), rng.random(), side="right").clip(0, 3))]
    swap = rng.random() < 0.5
    # the point that moves is `a`, the pivot is `b`
    a, b, ua = (xp, x, uxp) if swap else (x, xp, ux)
    pphi = min(d, params.n1) / d
    phi = rng.random(d) < pphi
    while not phi.any():
        phi = rng.random(d) < pphi
    nphi = int(phi.sum())

    log_ratio_extra = 0.0
    if move == "walk":
        u = rng.random(d)
        z = (params.walk_a / (1 + params.walk_a)) * (params.walk_a * u**2 + 2 * u - 1)
        y = np.where(phi, a + (a - b) * z, a)
    elif move == "traverse":
        beta = _beta(rng, params.traverse_a)
        y = np.where(phi, b + beta * (b - a), a)
        log_ratio_extra = (nphi - 2) * math.log(beta)
    else:
        sigma = float(np.max(np.abs(b - a)[phi]))
        if sigma <= 0:
            return x, xp, ux, uxp, move, False
        z = rng.standard_normal(d)
        if move == "blow":
            y = np.where(phi, b + sigma * z, a)
            sigma_back = float(np.max(np.abs(b - y)[phi]))
            if sigma_back <= 0:
                return x, xp, ux, uxp, move, False
            log_ratio_extra = _gauss_neglog(y, b, sigma, phi) - _gauss_neglog(a, b, sigma_back, phi)
        else:
            sigma /= 3.0
            y = np.where(phi, a + sigma * z, a)
            sigma_back = float(np.max(np.abs(b - y)[phi])) / 3.0
            if sigma_back <= 0:
                return x, xp, ux, uxp, move, False
            log_ratio_extra = _gauss_neglog(y, a, sigma, phi) - _gauss_neglog(a, y, sigma_back, phi)

    # t-walk needs the two points to differ in every coordinate
    if not np.all(y != b):
        return x, xp, ux, uxp, move, False
    uy = target(y)
    if uy == -math.inf:
        return x, xp, ux, uxp, move, False
    log_accept = uy - ua + log_ratio_extra
    if log_accept >= 0 or math.log(rng.random()) < log_accept:
        if swap:
            return x, y, ux, uy, move, True
        return y, xp, uy, uxp, move, True
    return x, xp, ux, uxp, move, False


def run_chain(
    target: Target,
    x0,
    xp0,
    n_steps: int,
    burn_in: int = 0,
    thin: int = 1,
    seed: int = 0,
    params: TWalkParams = TWalkParams(),
    callback: Callable | None = None,
) -> ChainResult:
    """Run a t-walk chain from the pair ``(x0, xp0)``.

    After step ``k`` (1-based) the first point is recorded when ``k > burn_in``
    and ``(k - burn_in) % thin == 0``.
    """
    x = np.asarray(x0, dtype=float).reshape(target.dim).copy()
    xp = np.asarray(xp0, dtype=float).reshape(target.dim).copy()
    if np.array_equal(x, xp):
        raise ConfigurationError("t-walk needs two distinct initial points")
    if n_steps < 0 or burn_in < 0 or thin < 1:
        raise ConfigurationError("invalid chain budget")
    ux, uxp = target(x), target(xp)
    if ux == -math.inf or uxp == -math.inf:
        raise ConfigurationError("initial points must lie in the support")
    rng = np.random.default_rng(seed)
    proposed = dict.fromkeys(MOVES, 0)
    accepted = dict.fromkeys(MOVES, 0)
    kept, kept_u = [], []
    for k in range(1, n_steps + 1):
        x, xp, ux, uxp, move, ok = twalk_step(x, xp, ux, uxp, target, rng, params)
        proposed[move] += 1
        accepted[move] += ok
        if k > burn_in and (k - burn_in) % thin == 0:
            kept.append(x.copy())
            kept_u.append(ux)
        if callback is not None:
            callback(k, x, ux)
    rate = sum(accepted.values()) / n_steps if n_steps else 0.0
    samples = np.array(kept).reshape(-1, target.dim)
    return ChainResult(samples, np.array(kept_u), rate, seed, proposed, accepted, (x.copy(), xp.copy()))


def hdi(samples, mass: float = 0.89) -> tuple[float, float]:
    """Shortest interval holding ``ceil(mass * n)`` of the sorted samples."""
    s = np.sort(np.asarray(samples, dtype=float).ravel())
    n = s.size
    if n < 10:
        raise ValueError("hdi needs at least 10 samples")
    if not 0 < mass < 1:
        raise ValueError("mass must lie in (0, 1)")
    k = max(1, math.ceil(mass * n - 1e-9))
    widths = s[k - 1 :] - s[: n - k + 1]
    i = int(np.argmin(widths))
    return float(s[i]), float(s[i + k - 1])
