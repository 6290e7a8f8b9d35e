"""Fourier-domain regularized inversion (FDRI).

The reconstruction matrix is ``P = G @ pinv(M @ G)`` where ``G = F^H diag(w) F``
is a real, symmetric smoothing filter defined by spectral weights ``w`` on the
DFT grid.  ``G`` is only ever applied through FFTs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ConfigurationError, DegenerateMeasurementError
from .io import KIND_RECONSTRUCTION, read_matrix, write_matrix
from .probe import MeasurementMatrix

DEFAULT_MU = 0.5
DEFAULT_SVD_REL_CUTOFF = 1e-10
DEFAULT_EPS = 1e-5
LAWS = ("half_angle", "mixed")
# Eigenvalues of M G (M G)^T are only resolved to ~1e-16 relative, i.e. ~1e-8 in
# singular value; the Gram route never truncates more finely than this.
GRAM_MIN_REL_CUTOFF = 1e-7


def build_spectral_weights(
    width: int, height: int, mu: float = DEFAULT_MU, law: str = "half_angle", eps: float = DEFAULT_EPS
) -> np.ndarray:
    """Spectral weights on the DFT grid ``w = 2 pi k / n``, shape ``(height, width)``.

    ``half_angle``: ``[(1-mu)^2 (sin^2(w1/2) + sin^2(w2/2)) + mu^2]^(-1/2)``;
    identity at ``mu = 1``.

    ``mixed``: ``[(1-mu)^2 (sin^2 w1 + sin^2 w2) + eps + mu^2 (w1^2 + w2^2) / (2 pi^2)]^(-1/2)``,
    a blend of a finite-difference and a Sobolev-type penalty with ``w`` taken
    in ``[-pi, pi)``.  This is the weighting of the original FDRI method.
    """
    if not 0 < mu <= 1:
        raise ConfigurationError(f"mu must lie in (0, 1], got {mu}")
    wy = 2 * np.pi * np.fft.fftfreq(height)[:, None]
    wx = 2 * np.pi * np.fft.fftfreq(width)[None, :]
    if law == "half_angle":
        s = np.sin(wy / 2) ** 2 + np.sin(wx / 2) ** 2
        return 1.0 / np.sqrt((1 - mu) ** 2 * s + mu**2)
    if law == "mixed":
        if not eps > 0:
            raise ConfigurationError("eps must be positive")
        s = np.sin(wy) ** 2 + np.sin(wx) ** 2
        return 1.0 / np.sqrt((1 - mu) ** 2 * s + eps + mu**2 * (wx**2 + wy**2) / (2 * np.pi**2))
    raise ConfigurationError(f"unknown spectral weight law {law!r}")


def apply_filter(weights: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """Apply ``G`` to every row of ``stack`` (rows are flattened images)."""
    h, w = weights.shape
    imgs = stack.reshape(-1, h, w)
    # weights are even in frequency, so the half spectrum suffices
    half = weights[:, : w // 2 + 1]
    out = np.fft.irfft2(np.fft.rfft2(imgs) * half, s=(h, w))
    return np.ascontiguousarray(out).reshape(stack.shape)


@dataclass
class ReconstructionMatrix:
    matrix: np.ndarray  # (width*height, m)
    width: int
    height: int
    mu: float
    svd_rel_cutoff: float
    law: str = "half_angle"
    rank: int = -1

    def save(self, path) -> None:
        write_matrix(path, self.matrix, KIND_RECONSTRUCTION, self.width, self.height, self.mu, self.svd_rel_cutoff, self.law)

    @classmethod
    def load(cls, path) -> "ReconstructionMatrix":
        d = read_matrix(path)
        if d["kind"] != KIND_RECONSTRUCTION:
            raise ValueError(f"{path} does not hold a reconstruction matrix")
        return cls(d["matrix"], d["width"], d["height"], d["mu"], d["svd_rel_cutoff"], d["law"])


def _factor_svd(a: np.ndarray, rel_cutoff: float):
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or not s[0] > 0:
        raise DegenerateMeasurementError("degenerate measurement")
    keep = s >= rel_cutoff * s[0]
    # pinv(A) = left @ right
    return vt[keep].T / s[keep], u[:, keep].T


def _factor_gram(a: np.ndarray, rel_cutoff: float):
    # pinv(A) = A^T U diag(1/s^2) U^T with A A^T = U diag(s^2) U^T
    lam, u = np.linalg.eigh(a @ a.T)
    top = lam[-1] if lam.size else 0.0
    if not top > 0:
        raise DegenerateMeasurementError("degenerate measurement")
    cut = max(rel_cutoff, GRAM_MIN_REL_CUTOFF)
    keep = lam >= (cut**2) * top
    uk = u[:, keep]
    return _GramLeft(a, uk / lam[keep]), uk.T


class _GramLeft:
    """Lazy ``A^T @ scaled``; avoids the N x m product when few images are solved."""

    def __init__(self, a, scaled):
        self.a = a
        self.scaled = scaled

    def dense(self) -> np.ndarray:
        return self.a.T @ self.scaled

    def apply_rows(self, z: np.ndarray) -> np.ndarray:
        # rows of z @ left.T
        return (z @ self.scaled.T) @ self.a


def _factor(M: MeasurementMatrix, mu, svd_rel_cutoff, method, law, eps):
    m, n = M.matrix.shape
    if m == 0:
        raise ConfigurationError("empty measurement matrix")
    if m > n:
        raise ConfigurationError("more measurements than pixels")
    weights = build_spectral_weights(M.width, M.height, mu, law, eps)
    a = apply_filter(weights, M.matrix)
    if method == "svd":
        left, right = _factor_svd(a, svd_rel_cutoff)
    elif method == "gram":
        left, right = _factor_gram(a, svd_rel_cutoff)
    else:
        raise ConfigurationError(f"unknown pseudoinverse method {method!r}")
    return weights, left, right


def build_reconstruction_matrix(
    M: MeasurementMatrix,
    mu: float = DEFAULT_MU,
    svd_rel_cutoff: float = DEFAULT_SVD_REL_CUTOFF,
    method: str = "svd",
    law: str = "half_angle",
    eps: float = DEFAULT_EPS,
) -> ReconstructionMatrix:
    """Precompute the FDRI inversion matrix for measurement matrix ``M``.

    ``method="svd"`` takes a full SVD of ``M G``; ``method="gram"`` diagonalises
    the m x m Gram matrix instead, which is several times faster but cannot
    resolve singular values below ``GRAM_MIN_REL_CUTOFF`` of the largest.
    """
    weights, left, right = _factor(M, mu, svd_rel_cutoff, method, law, eps)
    if isinstance(left, _GramLeft):
        left = left.dense()
    pinv = left @ right
    rank = right.shape[0]
    P = apply_filter(weights, np.ascontiguousarray(pinv.T)).T
    return ReconstructionMatrix(np.ascontiguousarray(P), M.width, M.height, mu, svd_rel_cutoff, law, rank)


def solve(
    M: MeasurementMatrix,
    readings,
    mu: float = DEFAULT_MU,
    svd_rel_cutoff: float = DEFAULT_SVD_REL_CUTOFF,
    method: str = "svd",
    law: str = "half_angle",
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """Reconstruct a stack of reading vectors ``(n, m)`` without materialising P.

    Same result as ``reconstruct(build_reconstruction_matrix(M, ...), readings)``
    but cheaper when only a few images are reconstructed per matrix.
    """
    weights, left, right = _factor(M, mu, svd_rel_cutoff, method, law, eps)
    y = np.atleast_2d(np.asarray(readings, dtype=float))
    z = y @ right.T
    coeffs = left.apply_rows(z) if isinstance(left, _GramLeft) else z @ left.T
    return apply_filter(weights, coeffs).reshape(len(y), M.height, M.width)


def reconstruct(P: ReconstructionMatrix, y) -> np.ndarray:
    """Image(s) ``P @ y``; ``y`` is one reading vector or a stack ``(n, m)``. No clipping."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != P.matrix.shape[1]:
        raise ValueError(f"expected {P.matrix.shape[1]} readings, got {y.shape[-1]}")
    if y.ndim == 1:
        return (P.matrix @ y).reshape(P.height, P.width)
    return (y @ P.matrix.T).reshape(len(y), P.height, P.width)


@dataclass(frozen=True)
class FdriConfig:
    mu: float = DEFAULT_MU
    svd_rel_cutoff: float = DEFAULT_SVD_REL_CUTOFF
    law: str = "mixed"
    eps: float = DEFAULT_EPS
    method: str = "svd"

    def __post_init__(self):
        if not 0 < self.mu <= 1:
            raise ConfigurationError(f"mu must lie in (0, 1], got {self.mu}")
        if self.law not in LAWS:
            raise ConfigurationError(f"unknown spectral weight law {self.law!r}")
        if self.method not in ("svd", "gram"):
            raise ConfigurationError(f"unknown pseudoinverse method {self.method!r}")

    def build(self, M: MeasurementMatrix, method: str | None = None) -> ReconstructionMatrix:
        return build_reconstruction_matrix(M, self.mu, self.svd_rel_cutoff, method or self.method, self.law, self.eps)

    def solve(self, M: MeasurementMatrix, readings) -> np.ndarray:
        return solve(M, readings, self.mu, self.svd_rel_cutoff, self.method, self.law, self.eps)
