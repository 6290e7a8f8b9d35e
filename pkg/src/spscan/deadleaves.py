"""Scale-invariant dead-leaves test images.

Disks with power-law distributed radii fall one after another; every new leaf
lands *beneath* the ones already down, so a pixel keeps the gray level of the
first disk that covers it.  Generation stops once no pixel is left unpainted,
which yields an exact sample of the stationary dead-leaves image.

Disks are painted on a ``supersample``-times finer grid (membership decided
by sub-pixel centres) and box-averaged down, so edge pixels carry partial
coverage.  ``supersample=1`` gives hard pixel-centre rasterisation.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import ConfigurationError
from .io import write_pgm
from .metrics import quantize

MAX_DISKS = 1_000_000
_BATCH = 4096


@dataclass(frozen=True)
class DeadLeavesConfig:
    width: int = 64
    height: int = 64
    power_exponent: float = 3.0
    r_min: float = 0.7
    r_max: float = 18.0
    n_images: int = 200
    seed: int = 0
    supersample: int = 2

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigurationError("image dimensions must be positive")
        if not 0 < self.r_min < self.r_max:
            raise ConfigurationError("need 0 < r_min < r_max")
        if self.power_exponent <= 1:
            raise ConfigurationError("power_exponent must exceed 1")
        if self.n_images <= 0:
            raise ConfigurationError("n_images must be positive")
        if self.supersample < 1:
            raise ConfigurationError("supersample must be >= 1")


def radius_cdf(r, cfg: DeadLeavesConfig):
    """Analytic CDF of the truncated power law ``f(r) ~ r**-k`` on [r_min, r_max]."""
    e = 1.0 - cfg.power_exponent
    lo, hi = cfg.r_min**e, cfg.r_max**e
    r = np.clip(np.asarray(r, dtype=float), cfg.r_min, cfg.r_max)
    return (lo - r**e) / (lo - hi)


def sample_radius(u, cfg: DeadLeavesConfig):
    """Inverse-CDF transform of uniform variate(s) ``u`` into leaf radii."""
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)):
        raise ConfigurationError("uniform variate outside [0, 1]")
    e = 1.0 - cfg.power_exponent
    lo, hi = cfg.r_min**e, cfg.r_max**e
    r = (lo - u * (lo - hi)) ** (1.0 / e)
    r = np.clip(r, cfg.r_min, cfg.r_max)
    return float(r) if r.ndim == 0 else r


def generate_image(cfg: DeadLeavesConfig, rng: np.random.Generator, trace: list | None = None):
    """Draw one dead-leaves image as a ``(height, width)`` float array in [0, 1].

    If ``trace`` is a list, the radius of every drawn disk (including those that
    miss the image) is appended to it.
    """
    ss = cfg.supersample
    w, h = cfg.width, cfg.height
    hh, ww = h * ss, w * ss
    canvas = np.full((hh, ww), np.nan)
    # sub-pixel centres in output-pixel units
    xs = (np.arange(ww) + 0.5) / ss
    ys = (np.arange(hh) + 0.5) / ss
    remaining = hh * ww
    drawn = 0
    while remaining:
        if drawn >= MAX_DISKS:
            raise RuntimeError(f"dead-leaves image not covered after {MAX_DISKS} disks")
        n = min(_BATCH, MAX_DISKS - drawn)
        cx = rng.uniform(-cfg.r_max, w + cfg.r_max, n)
        cy = rng.uniform(-cfg.r_max, h + cfg.r_max, n)
        radii = sample_radius(rng.uniform(0.0, 1.0, n), cfg)
        gray = rng.uniform(0.0, 1.0, n)
        drawn += n
        if trace is not None:
            trace.extend(radii.tolist())
        hit = (cx + radii > 0) & (cx - radii < w) & (cy + radii > 0) & (cy - radii < h)
        for x0, y0, r, g in zip(cx[hit], cy[hit], radii[hit], gray[hit]):
            j0 = max(int(np.floor((x0 - r) * ss)), 0)
            j1 = min(int(np.ceil((x0 + r) * ss)), ww)
            i0 = max(int(np.floor((y0 - r) * ss)), 0)
            i1 = min(int(np.ceil((y0 + r) * ss)), hh)
            if j0 >= j1 or i0 >= i1:
                continue
            patch = canvas[i0:i1, j0:j1]
            inside = (xs[j0:j1][None, :] - x0) ** 2 + (ys[i0:i1][:, None] - y0) ** 2 <= r * r
            paint = inside & np.isnan(patch)
            if paint.any():
                patch[paint] = g
                remaining -= int(paint.sum())
                if not remaining:
                    break
    if ss == 1:
        return canvas
    return canvas.reshape(h, ss, w, ss).mean(axis=(1, 3))


def image_seeds(cfg: DeadLeavesConfig) -> list[int]:
    """Per-image seeds derived deterministically from ``cfg.seed``."""
    state = np.random.SeedSequence(cfg.seed).generate_state(cfg.n_images, dtype=np.uint32)
    return [int(s) for s in state]


def generate_dataset(cfg: DeadLeavesConfig, out_dir: str | Path | None = None) -> list[np.ndarray]:
    """Generate ``cfg.n_images`` independent images; optionally persist them.

    When ``out_dir`` is given, every image is written as 16-bit binary PGM next
    to a ``manifest.json`` holding the config and per-image seeds.
    """
    seeds = image_seeds(cfg)
    images = [generate_image(cfg, np.random.default_rng(s)) for s in seeds]
    if out_dir is not None:
        save_dataset(images, cfg, seeds, out_dir)
    return images


def save_dataset(images, cfg: DeadLeavesConfig, seeds, out_dir, extra: dict | None = None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for k, img in enumerate(images):
        name = f"leaves_{k:04d}.pgm"
        write_pgm(out / name, quantize(img))
        files.append(name)
    manifest = {"config": asdict(cfg), "seeds": list(seeds), "files": files}
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out / "manifest.json"


def load_dataset(out_dir) -> tuple[list[np.ndarray], DeadLeavesConfig]:
    """Regenerate a persisted dataset from its manifest (PGM files are 16-bit copies)."""
    manifest = json.loads((Path(out_dir) / "manifest.json").read_text())
    cfg = DeadLeavesConfig(**manifest["config"])
    images = [generate_image(cfg, np.random.default_rng(s)) for s in manifest["seeds"]]
    return images, cfg
