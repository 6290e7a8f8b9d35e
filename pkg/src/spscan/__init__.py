"""Desk-scale simulation of single-pixel scanning image formation.

Dead-leaves test data, probe-based measurement matrices, FDRI reconstruction,
classical interpolation baselines, 16-bit PSNR scoring, Bayesian two-group
comparison and t-walk MCMC exploration of multi-level sampling.
"""

__version__ = "0.1.0"


class ConfigurationError(ValueError):
    """Invalid configuration or parameter values."""


class DegenerateMeasurementError(RuntimeError):
    """A measurement matrix has no usable singular values."""


class EmptyProbeError(ValueError):
    """A probe does not overlap the image at all."""
