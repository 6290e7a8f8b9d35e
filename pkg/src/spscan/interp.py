"""Staring-array decimation and classical separable upscaling."""

from __future__ import annotations

import numpy as np

from . import ConfigurationError

METHODS = ("nearest", "bilinear", "bicubic", "lanczos")
CUBIC_A = -0.5
LANCZOS_LOBES = 4


def _box_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row k averages the input interval covered by output cell k (exact fractions)."""
    scale = n_in / n_out
    lo = np.arange(n_out)[:, None] * scale
    hi = lo + scale
    k = np.arange(n_in)[None, :]
    overlap = np.clip(np.minimum(hi, k + 1) - np.maximum(lo, k), 0.0, None)
    return overlap / scale


def decimate_average(img, out_w: int, out_h: int) -> np.ndarray:
    """Area-weighted block average onto an ``out_h x out_w`` grid."""
    img = np.asarray(img, dtype=float)
    h, w = img.shape[-2:]
    if out_w <= 0 or out_h <= 0:
        raise ConfigurationError("output dimensions must be positive")
    if out_w > w or out_h > h:
        raise ConfigurationError("decimation cannot enlarge the image")
    return _box_matrix(h, out_h) @ img @ _box_matrix(w, out_w).T


def cubic_kernel(x, a: float = CUBIC_A):
    x = np.abs(x)
    return np.where(
        x <= 1,
        (a + 2) * x**3 - (a + 3) * x**2 + 1,
        np.where(x < 2, a * x**3 - 5 * a * x**2 + 8 * a * x - 4 * a, 0.0),
    )


def lanczos_kernel(x, lobes: int = LANCZOS_LOBES):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < lobes, np.sinc(x) * np.sinc(x / lobes), 0.0)


def linear_kernel(x):
    return np.clip(1.0 - np.abs(x), 0.0, None)


def resample_matrix(n_in: int, n_out: int, method: str, lobes: int = LANCZOS_LOBES) -> np.ndarray:
    """``(n_out, n_in)`` weights with half-pixel-centre alignment and clamped edges."""
    src = (np.arange(n_out) + 0.5) * n_in / n_out - 0.5
    W = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    if method == "nearest":
        idx = np.clip(np.floor(src + 0.5).astype(int), 0, n_in - 1)
        W[rows, idx] = 1.0
        return W
    if method == "bilinear":
        support, kernel = 1, linear_kernel
    elif method == "bicubic":
        support, kernel = 2, cubic_kernel
    elif method == "lanczos":
        support, kernel = lobes, lambda t: lanczos_kernel(t, lobes)
    else:
        raise ConfigurationError(f"unknown interpolation method {method!r}")
    base = np.floor(src).astype(int)
    for off in range(-support + 1, support + 1):
        tap = base + off
        wts = kernel(src - tap)
        np.add.at(W, (rows, np.clip(tap, 0, n_in - 1)), wts)
    # Lanczos taps do not sum to one exactly
    return W / W.sum(axis=1, keepdims=True)


def upscale(img, out_w: int, out_h: int, method: str = "bicubic", lobes: int = LANCZOS_LOBES) -> np.ndarray:
    img = np.asarray(img, dtype=float)
    h, w = img.shape[-2:]
    if out_w < w or out_h < h:
        raise ConfigurationError("upscale cannot shrink the image")
    if method not in METHODS:
        raise ConfigurationError(f"unknown interpolation method {method!r}")
    return resample_matrix(h, out_h, method, lobes) @ img @ resample_matrix(w, out_w, method, lobes).T
