"""Experiment orchestration: dataset, probe sweeps, the algorithm tournament and
multi-level exploration, with reproducible CSV/JSON outputs."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ConfigurationError, __version__
from .bayes import BayesConfig, compare_groups
from .deadleaves import DeadLeavesConfig, generate_dataset, image_seeds, save_dataset
from .fdri import FdriConfig, ReconstructionMatrix, reconstruct
from .interp import decimate_average, upscale
from .io import write_csv
from .metrics import batch_psnr, mean_psnr
from .probe import MeasurementMatrix, Probe, build_measurement_matrix, grid_positions, measure
from .sampling import ExploreConfig, explore_multi_level, explore_single_level

log = logging.getLogger(__name__)

ALGORITHMS = ("Nearest", "Linear", "Cubic", "Lanczos", "CS-FPA", "CS-Circle", "CS-Square")
_INTERP = {"Nearest": "nearest", "Linear": "bilinear", "Cubic": "bicubic", "Lanczos": "lanczos"}


@dataclass(frozen=True)
class DatasetSection:
    width: int = 64
    height: int = 64
    power_exponent: float = 3.0
    r_min: float = 0.7
    r_max: float = 18.0
    n_images: int = 200
    supersample: int = 2


@dataclass(frozen=True)
class SweepSection:
    start: float = 1.0
    stop: float = 6.0
    step: float = 0.1
    band_mcmc: BayesConfig = field(default_factory=lambda: BayesConfig(n_chains=1, n_steps=20_000, burn_in=4_000, thin=2))

    def sizes(self) -> list[float]:
        n = int(round((self.stop - self.start) / self.step)) + 1
        return [round(self.start + k * self.step, 10) for k in range(n)]


@dataclass(frozen=True)
class ExploreSection:
    single_steps: int = 2000
    multi_steps: int = 10000
    burn_in_fraction: float = 0.3
    thin: int = 1
    temperature: float = 0.15
    anneal_from: float | None = 1.0
    subset_size: int = 20
    alpha_max: float = 10.0
    positions: str = "uniform"
    rescore_full: bool = False
    hist_bins: int = 40


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "spscan"
    seed: int = 0
    output_dir: str = "runs/default"
    dataset: DatasetSection = field(default_factory=DatasetSection)
    grid: int = 28
    square_side: float = 3.34
    circle_diameter: float = 3.71
    lanczos_lobes: int = 4
    fdri: FdriConfig = field(default_factory=FdriConfig)
    bayes: BayesConfig = field(default_factory=BayesConfig)
    sweep: SweepSection = field(default_factory=SweepSection)
    explore: ExploreSection = field(default_factory=ExploreSection)

    # sub-seeds are derived from the master seed; seeds inside sections are ignored
    def sub_seed(self, role: str, index: int = 0) -> int:
        digest = hashlib.sha256(f"{self.seed}:{role}:{index}".encode()).digest()
        return int.from_bytes(digest[:4], "little")

    def dataset_config(self) -> DeadLeavesConfig:
        return DeadLeavesConfig(**dataclasses.asdict(self.dataset), seed=self.sub_seed("dataset"))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return _build(cls, d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _build(cls, d):
    if not isinstance(d, dict):
        raise ConfigurationError(f"expected an object for {cls.__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(d) - set(fields)
    if unknown:
        raise ConfigurationError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for name, value in d.items():
        default = fields[name].default_factory() if fields[name].default_factory is not dataclasses.MISSING else None
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value)
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def _header(cfg: RunConfig, what: str) -> str:
    return f"spscan {__version__} config={cfg.config_hash()} {what}"


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_dataset(cfg: RunConfig, persist: bool = False) -> np.ndarray:
    dcfg = cfg.dataset_config()
    log.info("generating %d dead-leaves images", dcfg.n_images)
    images = generate_dataset(dcfg)
    if persist:
        save_dataset(
            images,
            dcfg,
            image_seeds(dcfg),
            _out(cfg) / "dataset",
            extra={"config_hash": cfg.config_hash(), "version": __version__},
        )
    return np.array(images)


# --- algorithms ---------------------------------------------------------------


def grid_probe_matrix(cfg: RunConfig, probe: Probe) -> MeasurementMatrix:
    d = cfg.dataset
    pts = grid_positions(cfg.grid, cfg.grid, d.width, d.height)
    return build_measurement_matrix(pts, probe, d.width, d.height)


def reconstruction_matrix(cfg: RunConfig, M: MeasurementMatrix, key: str) -> ReconstructionMatrix:
    """FDRI matrix for ``M``, cached as raw binary under ``<output_dir>/cache``."""
    tag = hashlib.sha256(
        json.dumps([key, dataclasses.asdict(cfg.fdri), cfg.grid, cfg.dataset.width, cfg.dataset.height]).encode()
    ).hexdigest()[:16]
    path = Path(cfg.output_dir) / "cache" / f"P_{tag}.bin"
    if path.exists():
        return ReconstructionMatrix.load(path)
    P = cfg.fdri.build(M)
    path.parent.mkdir(parents=True, exist_ok=True)
    P.save(path)
    return P


def algorithm_probe(cfg: RunConfig, name: str) -> Probe:
    if name == "CS-FPA":
        return Probe("square", cfg.dataset.width / cfg.grid)
    if name == "CS-Square":
        return Probe("square", cfg.square_side)
    if name == "CS-Circle":
        return Probe("circle", cfg.circle_diameter)
    raise ConfigurationError(f"{name} is not a compressed-sensing algorithm")


def cs_reconstruct(cfg: RunConfig, probe: Probe, images) -> np.ndarray:
    M = grid_probe_matrix(cfg, probe)
    P = reconstruction_matrix(cfg, M, f"{probe.shape.value}:{probe.size!r}")
    return reconstruct(P, measure(images, M))


def run_algorithm(cfg: RunConfig, name: str, images) -> np.ndarray:
    """Reconstructions of ``images`` (stack) by one of :data:`ALGORITHMS`."""
    images = np.asarray(images, dtype=float)
    d = cfg.dataset
    if name in _INTERP:
        method = _INTERP[name]
        return np.array(
            [
                upscale(decimate_average(img, cfg.grid, cfg.grid), d.width, d.height, method, cfg.lanczos_lobes)
                for img in images
            ]
        )
    return cs_reconstruct(cfg, algorithm_probe(cfg, name), images)


# --- probe sweep ----------------------------------------------------------------


@dataclass
class SweepResult:
    shape: str
    sizes: list
    means: list
    sds: list
    argmax_size: float
    band: list  # sizes whose effect-size HDI against the argmax contains 0
    min_hdi: list  # lower HDI bound of (size vs argmax); nan for the argmax itself
    psnrs: list = field(default_factory=list, repr=False)

    @property
    def peak(self) -> float:
        return max(self.means)


def run_probe_sweep(shape: str, sizes, cfg: RunConfig, images) -> SweepResult:
    """Mean PSNR of grid sampling per probe size, and the HDI band around the best."""
    sizes = [float(s) for s in sizes]
    if not sizes:
        raise ConfigurationError("empty size grid")
    if sizes != sorted(sizes):
        raise ConfigurationError("size grid must be ascending")
    if shape not in ("square", "circle"):
        raise ConfigurationError(f"sweep shape must be square or circle, got {shape!r}")
    means, sds, psnrs = [], [], []
    for s in sizes:
        rec = cs_reconstruct(cfg, Probe(shape, s), images)
        m, sd, vals = mean_psnr(batch_psnr(rec, images))
        log.info("sweep %s size %.3f: %.3f dB", shape, s, m)
        means.append(m)
        sds.append(sd)
        psnrs.append(vals)
    best = int(np.argmax(means))
    band, lows = [], []
    for k, s in enumerate(sizes):
        if k == best:
            lows.append(float("nan"))
            continue
        bcfg = dataclasses.replace(cfg.sweep.band_mcmc, seed=cfg.sub_seed(f"band-{shape}", k))
        rep = compare_groups(psnrs[k], psnrs[best], bcfg)
        lows.append(rep.min_hdi)
        if rep.hdi89[0] <= 0 <= rep.hdi89[1]:
            band.append(s)
    return SweepResult(shape, sizes, means, sds, sizes[best], band, lows, psnrs)


def write_sweep(cfg: RunConfig, res: SweepResult) -> Path:
    band = set(res.band)
    rows = [
        [s, m, sd, int(s in band), int(s == res.argmax_size), lo]
        for s, m, sd, lo in zip(res.sizes, res.means, res.sds, res.min_hdi)
    ]
    return write_csv(
        _out(cfg) / f"sweep_{res.shape}.csv",
        _header(cfg, f"probe sweep shape={res.shape}"),
        ["size_px", "mean_psnr_db", "sd_psnr_db", "in_hdi_band", "is_argmax", "min_hdi_vs_argmax"],
        rows,
    )


# --- table 1 --------------------------------------------------------------------


@dataclass
class Table1Result:
    algorithms: tuple
    means: dict
    sds: dict
    psnrs: dict
    comparisons: dict  # (row, column) -> ComparisonReport, row ranked above column

    def min_hdi(self, row: str, column: str) -> float:
        return self.comparisons[(row, column)].min_hdi


def run_table1(cfg: RunConfig, images) -> Table1Result:
    """All seven algorithms over the dataset plus the 21 pairwise comparisons."""
    means, sds, psnrs = {}, {}, {}
    for name in ALGORITHMS:
        rec = run_algorithm(cfg, name, images)
        means[name], sds[name], psnrs[name] = mean_psnr(batch_psnr(rec, images))
        log.info("%-9s %.3f dB (%.3f)", name, means[name], sds[name])
    comparisons = {}
    k = 0
    for i in range(len(ALGORITHMS) - 1, -1, -1):
        for j in range(i):
            row, col = ALGORITHMS[i], ALGORITHMS[j]
            bcfg = dataclasses.replace(cfg.bayes, seed=cfg.sub_seed("table1", k))
            comparisons[(row, col)] = compare_groups(psnrs[row], psnrs[col], bcfg)
            log.info("%s vs %s: min HDI %.3f", row, col, comparisons[(row, col)].min_hdi)
            k += 1
    return Table1Result(ALGORITHMS, means, sds, psnrs, comparisons)


def write_table1(cfg: RunConfig, res: Table1Result) -> dict:
    out = _out(cfg)
    rows = []
    for name in reversed(res.algorithms):
        rows.append([name, name, res.means[name], res.sds[name], "", "", "", ""])
    for (row, col), rep in res.comparisons.items():
        rows.append([row, col, "", "", rep.hdi89[0], rep.hdi89[1], rep.mean_effect, rep.decision])
    paths = {
        "table1": write_csv(
            out / "table1.csv",
            _header(cfg, "grid sampling tournament; diagonal=mean/sd, off-diagonal=89% HDI of effect size row vs column"),
            ["row", "column", "mean_psnr_db", "sd_psnr_db", "min_hdi", "max_hdi", "mean_effect", "decision"],
            rows,
        ),
        "psnr": write_csv(
            out / "psnr_per_image.csv",
            _header(cfg, "per-image PSNR"),
            ["image_id", "algorithm", "psnr_db"],
            [[k, name, v] for name in res.algorithms for k, v in enumerate(res.psnrs[name])],
        ),
    }
    report = {
        "config_hash": cfg.config_hash(),
        "version": __version__,
        "comparisons": [
            {"row": r, "column": c, **rep.to_dict()} for (r, c), rep in res.comparisons.items()
        ],
    }
    paths["comparisons"] = out / "comparisons.json"
    paths["comparisons"].write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return paths


# --- multi-level exploration ----------------------------------------------------


def explore_configs(cfg: RunConfig) -> tuple[ExploreConfig, ExploreConfig]:
    e = cfg.explore
    common = dict(
        thin=e.thin,
        temperature=e.temperature,
        anneal_from=e.anneal_from,
        subset_size=e.subset_size,
        alpha_max=e.alpha_max,
        positions=e.positions,
        rescore_full=e.rescore_full,
        fdri=dataclasses.replace(cfg.fdri, method="gram"),
    )
    single = ExploreConfig(
        n_steps=e.single_steps,
        burn_in=int(e.single_steps * e.burn_in_fraction),
        seed=cfg.sub_seed("explore-single"),
        **common,
    )
    multi = ExploreConfig(
        n_steps=e.multi_steps,
        burn_in=int(e.multi_steps * e.burn_in_fraction),
        seed=cfg.sub_seed("explore-multi"),
        **common,
    )
    return single, multi


@dataclass
class MultilevelResult:
    single: object
    multi: object

    @property
    def single_mean(self) -> float:
        return float(np.mean(self.single.psnr_trace))

    @property
    def multi_mean(self) -> float:
        return float(np.mean(self.multi.psnr_trace))


def run_multilevel(cfg: RunConfig, images) -> MultilevelResult:
    single_cfg, multi_cfg = explore_configs(cfg)
    log.info("single-level exploration, %d steps", single_cfg.n_steps)
    single = explore_single_level(images, single_cfg, cfg.grid * cfg.grid)
    log.info("multi-level exploration, %d steps", multi_cfg.n_steps)
    multi = explore_multi_level(images, multi_cfg, cfg.grid * cfg.grid)
    return MultilevelResult(single, multi)


def _chain_rows(ex):
    full = ex.full_psnr if ex.full_psnr is not None else [""] * len(ex.psnr_trace)
    for k, (p, lt, ps, pf) in enumerate(zip(ex.chain.params, ex.chain.log_target, ex.psnr_trace, full)):
        yield [k, *p.tolist(), lt, ps, pf]


def write_multilevel(cfg: RunConfig, res: MultilevelResult) -> dict:
    out = _out(cfg)
    paths = {}
    for label, ex in (("single", res.single), ("multi", res.multi)):
        paths[f"chain_{label}"] = write_csv(
            out / f"chain_{label}.csv",
            _header(cfg, f"{label}-level t-walk chain seed={ex.chain.seed} acceptance={ex.chain.acceptance_rate!r}"),
            ["step", *ex.names, "log_target", "psnr_subset_db", "psnr_full_db"],
            _chain_rows(ex),
        )
    lo = float(min(res.single.psnr_trace.min(), res.multi.psnr_trace.min()))
    hi = float(max(res.single.psnr_trace.max(), res.multi.psnr_trace.max()))
    edges = np.linspace(lo, hi if hi > lo else lo + 1.0, cfg.explore.hist_bins + 1)
    hs, _ = np.histogram(res.single.psnr_trace, edges)
    hm, _ = np.histogram(res.multi.psnr_trace, edges)
    paths["distribution"] = write_csv(
        out / "psnr_distribution.csv",
        _header(cfg, f"PSNR trace histograms single_mean={res.single_mean!r} multi_mean={res.multi_mean!r}"),
        ["bin_lo_db", "bin_hi_db", "single_count", "multi_count"],
        [[edges[k], edges[k + 1], int(hs[k]), int(hm[k])] for k in range(len(hs))],
    )
    names = res.multi.names
    scatter = []
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            for p, ps in zip(res.multi.chain.params, res.multi.psnr_trace):
                scatter.append([names[a], names[b], p[a], p[b], ps])
    paths["scatter"] = write_csv(
        out / "multilevel_pairs.csv",
        _header(cfg, "multi-level parameter pairs"),
        ["param_x", "param_y", "x", "y", "psnr_subset_db"],
        scatter,
    )
    return paths
