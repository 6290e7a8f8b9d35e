import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spscan import ConfigurationError
from spscan.interp import METHODS, cubic_kernel, decimate_average, lanczos_kernel, linear_kernel, resample_matrix, upscale
from spscan.probe import Probe, build_measurement_matrix, grid_positions, measure


@given(st.floats(0, 1))
def test_raw_kernels_partition_of_unity(t):
    k = np.arange(-5, 6)
    assert abs(linear_kernel(t - k).sum() - 1) < 1e-9
    assert abs(cubic_kernel(t - k).sum() - 1) < 1e-9


def test_kernel_interpolating_property():
    k = np.arange(-4, 5)
    for kern in (linear_kernel, cubic_kernel, lanczos_kernel):
        assert np.allclose(kern(k.astype(float)), (k == 0).astype(float))


@settings(max_examples=60)
@given(st.integers(1, 40), st.integers(0, 60), st.sampled_from(METHODS))
def test_resample_rows_sum_to_one(n_in, extra, method):
    W = resample_matrix(n_in, n_in + extra, method)
    assert np.abs(W.sum(axis=1) - 1).max() < 1e-9


@pytest.mark.parametrize("method", METHODS)
def test_upscale_constant(method):
    out = upscale(np.full((28, 28), 0.37), 64, 64, method)
    assert out.shape == (64, 64)
    assert np.abs(out - 0.37).max() < 1e-6


def test_nearest_single_pixel():
    assert np.all(upscale(np.array([[0.8]]), 4, 4, "nearest") == 0.8)


@pytest.mark.parametrize("method", ["nearest", "bilinear"])
def test_monotone_methods_stay_in_range(rng, method):
    img = rng.uniform(size=(9, 9))
    out = upscale(img, 20, 20, method)
    assert out.min() >= img.min() - 1e-12 and out.max() <= img.max() + 1e-12


def test_identity_scale(rng):
    img = rng.uniform(size=(7, 5))
    for method in METHODS:
        assert np.allclose(upscale(img, 5, 7, method), img)


def test_decimate_examples():
    assert np.allclose(decimate_average(np.full((64, 64), 0.2), 28, 28), 0.2)
    checker = (np.indices((64, 64)).sum(axis=0) % 2).astype(float)
    assert np.allclose(decimate_average(checker, 32, 32), 0.5)


def test_decimate_equals_fpa_measurement(rng):
    img = rng.uniform(size=(64, 64))
    M = build_measurement_matrix(grid_positions(28, 28, 64, 64), Probe("square", 64 / 28), 64, 64)
    expect = measure(img, M).reshape(28, 28) / (64 / 28) ** 2
    assert np.abs(decimate_average(img, 28, 28) - expect).max() < 1e-9


def test_errors():
    with pytest.raises(ConfigurationError):
        upscale(np.zeros((4, 4)), 8, 8, "spline")
    with pytest.raises(ConfigurationError):
        upscale(np.zeros((4, 4)), 2, 2)
    with pytest.raises(ConfigurationError):
        decimate_average(np.zeros((4, 4)), 8, 8)
