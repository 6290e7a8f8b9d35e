"""16-bit quantization and PSNR."""

from __future__ import annotations

import math

import numpy as np

BITS = 16
PEAK = 2**BITS - 1
PSNR_CAP = 20.0 * math.log10(PEAK)


def quantize(img) -> np.ndarray:
    """Clamp to [0, 1] and round half away from zero onto 0..65535."""
    v = np.clip(np.asarray(img, dtype=float), 0.0, 1.0) * PEAK
    return np.floor(v + 0.5).astype(np.uint16)


def mse(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    d = a.astype(np.int64) - b.astype(np.int64)
    return float(np.mean(d * d))


def psnr_from_mse(err: float) -> float:
    if err >= 1.0:
        return 20.0 * math.log10(PEAK / math.sqrt(err))
    return PSNR_CAP


def psnr(test, ref) -> float:
    """PSNR in dB of two quantized images; capped when MSE < 1."""
    return psnr_from_mse(mse(test, ref))


def image_psnr(recon, ref) -> float:
    """PSNR of two float images after clamping and quantization."""
    return psnr(quantize(recon), quantize(ref))


def batch_psnr(recons, refs) -> np.ndarray:
    """Vectorised :func:`image_psnr` over stacks of shape ``(n, h, w)``."""
    a = quantize(recons).astype(np.int64)
    b = quantize(refs).astype(np.int64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    err = ((a - b) ** 2).reshape(len(a), -1).mean(axis=1)
    return np.array([psnr_from_mse(e) for e in err])


def mean_psnr(values) -> tuple[float, float, list[float]]:
    """Mean and sample standard deviation (0 for a single value) of per-image PSNRs."""
    values = [float(v) for v in values]
    if not values:
        raise ValueError("no PSNR values")
    n = len(values)
    # fsum keeps the summary independent of image order
    mean = math.fsum(values) / n
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1)) if n > 1 else 0.0
    return mean, sd, values
