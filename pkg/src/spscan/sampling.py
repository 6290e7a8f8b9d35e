"""Single- and multi-level probe sampling, and PSNR-driven MCMC exploration.

A sampling *level* is a circular probe radius.  A multi-level scheme mixes
four radii, splitting the sample budget between them with an exponential
power law in the level index.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import ConfigurationError, DegenerateMeasurementError, EmptyProbeError
from .fdri import FdriConfig
from .mcmc import ChainResult, Target, TWalkParams, run_chain
from .metrics import batch_psnr
from .probe import Probe, SamplePoint, build_measurement_matrix, grid_positions, measure

N_LEVELS = 4
R_MAX = 31.0
POINT_RADIUS = 0.5  # below this a circle degenerates to a point probe


@dataclass(frozen=True)
class MultiLevelSpec:
    radii: tuple
    alpha: float = 0.0
    m_total: int = 784

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        object.__setattr__(self, "radii", radii)
        if len(radii) != N_LEVELS:
            raise ConfigurationError(f"need {N_LEVELS} radii")
        if any(not 0 <= r <= R_MAX for r in radii):
            raise ConfigurationError(f"radii must lie in [0, {R_MAX}]")
        if not self.alpha >= 0:
            raise ConfigurationError("alpha must be non-negative")
        if self.m_total <= 0:
            raise ConfigurationError("m_total must be positive")


@dataclass(frozen=True)
class SingleLevelSpec:
    radius: float
    m_total: int = 784

    def __post_init__(self):
        if not 0 <= self.radius <= R_MAX:
            raise ConfigurationError(f"radius must lie in [0, {R_MAX}]")
        if self.m_total <= 0:
            raise ConfigurationError("m_total must be positive")


def allocation(alpha: float, m_total: int, n_levels: int = N_LEVELS) -> tuple[int, ...]:
    """Split ``m_total`` samples over levels with weights ``exp(-alpha * i / n_levels)``.

    Floors of the normalised shares are topped up, one sample per level in
    descending-weight order, until the counts sum to ``m_total``.
    """
    if m_total <= 0:
        raise ConfigurationError("m_total must be positive")
    if alpha < 0:
        raise ConfigurationError("alpha must be non-negative")
    w = np.exp(-alpha * np.arange(n_levels) / n_levels)
    c = 1.0 / w.sum()
    counts = np.floor(c * w * m_total).astype(int)
    order = np.argsort(-w, kind="stable")
    k = 0
    while counts.sum() < m_total:
        counts[order[k % n_levels]] += 1
        k += 1
    return tuple(int(v) for v in counts)


def allocate_samples(spec: MultiLevelSpec) -> tuple[int, ...]:
    return allocation(spec.alpha, spec.m_total)


def probe_for_radius(radius: float) -> Probe:
    if radius < POINT_RADIUS:
        return Probe("point")
    return Probe("circle", 2 * radius)


def _levels(spec) -> list[tuple[float, int]]:
    if isinstance(spec, SingleLevelSpec):
        return [(spec.radius, spec.m_total)]
    return list(zip(spec.radii, allocate_samples(spec)))


def draw_points(spec, img_w: int, img_h: int, rng: np.random.Generator, positions: str = "uniform"):
    """Probe placements ``[(SamplePoint, Probe), ...]`` for a sampling spec.

    ``positions="uniform"`` draws centres uniformly over the image rectangle;
    ``"grid"`` uses the cells of a square grid (``m_total`` must be a square),
    shuffled across levels.
    """
    levels = _levels(spec)
    m = sum(n for _, n in levels)
    if positions == "uniform":
        xs = rng.uniform(0.0, img_w, m)
        ys = rng.uniform(0.0, img_h, m)
        pts = [SamplePoint(float(x), float(y)) for x, y in zip(xs, ys)]
    elif positions == "grid":
        g = math.isqrt(m)
        if g * g != m:
            raise ConfigurationError("grid positions need a square sample count")
        pts = grid_positions(g, g, img_w, img_h)
        if len(levels) > 1:
            pts = [pts[k] for k in rng.permutation(m)]
    else:
        raise ConfigurationError(f"unknown position mode {positions!r}")
    out = []
    k = 0
    for radius, n in levels:
        probe = probe_for_radius(radius)
        out.extend((p, probe) for p in pts[k : k + n])
        k += n
    return out


def psnr_scores(spec, images, fdri: FdriConfig, seed: int, positions: str = "uniform") -> np.ndarray:
    """Per-image PSNR of FDRI reconstructions from one random probe layout."""
    images = np.asarray(images, dtype=float)
    h, w = images.shape[-2:]
    placed = draw_points(spec, w, h, np.random.default_rng(seed), positions)
    M = build_measurement_matrix([p for p, _ in placed], [q for _, q in placed], w, h)
    return batch_psnr(fdri.solve(M, measure(images, M)), images)


def psnr_objective(spec, images, fdri: FdriConfig = FdriConfig(), seed: int = 0, positions: str = "uniform") -> float:
    """Mean PSNR (dB) over ``images``; 0 dB when the layout is degenerate."""
    if len(images) == 0:
        raise ConfigurationError("objective needs at least one image")
    try:
        return float(np.mean(psnr_scores(spec, images, fdri, seed, positions)))
    except (EmptyProbeError, DegenerateMeasurementError):
        return 0.0


@dataclass(frozen=True)
class ExploreConfig:
    n_steps: int = 2000
    burn_in: int = 200
    thin: int = 1
    seed: int = 0
    temperature: float = 1.0
    anneal_from: float | None = None
    anneal_stages: int = 10
    subset_size: int = 20
    alpha_max: float = 10.0
    positions: str = "uniform"
    quantum: float = 1e-6
    rescore_full: bool = True
    fdri: FdriConfig = field(default_factory=lambda: FdriConfig(method="gram"))
    twalk: TWalkParams = field(default_factory=TWalkParams)

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigurationError("temperature must be positive")
        if self.anneal_from is not None and self.anneal_from <= 0:
            raise ConfigurationError("anneal_from must be positive")
        if self.anneal_stages < 1:
            raise ConfigurationError("anneal_stages must be >= 1")
        if self.subset_size <= 0:
            raise ConfigurationError("subset_size must be positive")


@dataclass
class Exploration:
    chain: ChainResult
    names: list
    psnr_trace: np.ndarray  # subset mean PSNR of each kept state
    full_psnr: np.ndarray | None = None  # same states re-scored on the whole dataset
    evaluations: int = 0


def subset_indices(n: int, k: int) -> np.ndarray:
    """Deterministic, evenly spread subset of ``k`` out of ``n`` images."""
    k = min(k, n)
    return np.unique(np.round(np.linspace(0, n - 1, k)).astype(int))


def layout_seed(params, base_seed: int, quantum: float) -> int:
    """Probe-layout seed as a deterministic function of the (quantised) parameters."""
    q = [int(round(float(p) / quantum)) for p in params]
    digest = hashlib.sha256(struct.pack(f"<q{len(q)}q", base_seed, *q)).digest()
    return int.from_bytes(digest[:8], "little")


class _Objective:
    """Maps a parameter vector to a spec, and caches scores per layout seed."""

    def __init__(self, make_spec, images, cfg: ExploreConfig):
        self.make_spec = make_spec
        self.images = np.asarray(images, dtype=float)
        self.subset = self.images[subset_indices(len(self.images), cfg.subset_size)]
        self.cfg = cfg
        self.calls = 0
        self._full = {}

    def seed(self, params) -> int:
        return layout_seed(params, self.cfg.seed, self.cfg.quantum)

    def __call__(self, params) -> float:
        """Mean subset PSNR (dB) of the layout belonging to ``params``."""
        self.calls += 1
        spec = self.make_spec(params)
        return psnr_objective(spec, self.subset, self.cfg.fdri, self.seed(params), self.cfg.positions)

    def full(self, params) -> float:
        key = tuple(float(p) for p in params)
        if key not in self._full:
            spec = self.make_spec(params)
            self._full[key] = psnr_objective(spec, self.images, self.cfg.fdri, self.seed(params), self.cfg.positions)
        return self._full[key]


def _burn_in_schedule(cfg: ExploreConfig) -> list[tuple[float, int]]:
    """(temperature, steps) stages run before recording starts."""
    if cfg.burn_in == 0:
        return []
    if cfg.anneal_from is None:
        return [(cfg.temperature, cfg.burn_in)]
    n = min(cfg.anneal_stages, cfg.burn_in)
    temps = np.geomspace(cfg.anneal_from, cfg.temperature, n)
    steps = np.diff(np.linspace(0, cfg.burn_in, n + 1).round().astype(int))
    return [(float(t), int(k)) for t, k in zip(temps, steps)]


def _explore(objective: _Objective, lower, upper, names, cfg: ExploreConfig) -> Exploration:
    """t-walk over the box ``[lower, upper]`` with log-target ``PSNR / temperature``.

    With ``anneal_from`` set, the burn-in is split into stages whose
    temperature falls geometrically from ``anneal_from`` to ``temperature``;
    only states after the burn-in are recorded.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)

    def target(temp):
        return Target(lambda p: objective(p) / temp, len(lower), lower, upper)

    init_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    x, xp = init_rng.uniform(lower, upper), init_rng.uniform(lower, upper)
    n_main = cfg.n_steps - cfg.burn_in
    if n_main < 0:
        raise ConfigurationError("burn_in exceeds n_steps")
    proposed, accepted = {}, {}
    for stage, (temp, steps) in enumerate(_burn_in_schedule(cfg)):
        warm = run_chain(target(temp), x, xp, steps, steps, 1, cfg.seed + 1000 * (stage + 1), cfg.twalk)
        x, xp = warm.final_pair
        for m in warm.proposed:
            proposed[m] = proposed.get(m, 0) + warm.proposed[m]
            accepted[m] = accepted.get(m, 0) + warm.accepted[m]
    chain = run_chain(target(cfg.temperature), x, xp, n_main, 0, cfg.thin, cfg.seed, cfg.twalk)
    for m in chain.proposed:
        chain.proposed[m] += proposed.get(m, 0)
        chain.accepted[m] += accepted.get(m, 0)
    if cfg.n_steps:
        chain.acceptance_rate = sum(chain.accepted.values()) / cfg.n_steps
    trace = chain.log_target * cfg.temperature
    full = None
    if cfg.rescore_full:
        full = np.array([objective.full(p) for p in chain.params])
    return Exploration(chain, list(names), trace, full, objective.calls)


def explore_single_level(images, cfg: ExploreConfig = ExploreConfig(), m_total: int = 784) -> Exploration:
    """t-walk over the probe radius in [0, 31] with mean subset PSNR as log-target."""
    objective = _Objective(lambda p: SingleLevelSpec(float(p[0]), m_total), images, cfg)
    return _explore(objective, [0.0], [R_MAX], ["radius"], cfg)


def explore_multi_level(images, cfg: ExploreConfig = ExploreConfig(), m_total: int = 784) -> Exploration:
    """t-walk over ``(r0, r1, r2, r3, alpha)`` in ``[0, 31]^4 x [0, alpha_max]``."""
    objective = _Objective(lambda p: MultiLevelSpec(tuple(p[:4]), float(p[4]), m_total), images, cfg)
    lower = [0.0] * N_LEVELS + [0.0]
    upper = [R_MAX] * N_LEVELS + [cfg.alpha_max]
    return _explore(objective, lower, upper, ["r0", "r1", "r2", "r3", "alpha"], cfg)
