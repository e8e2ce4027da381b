import numpy as np
import pytest
from hypothesis import given, strategies as st

from fraclp.field import (
    GridError,
    GridSpec,
    ScalarField,
    SpaceTimeField,
    lp_norm,
    lp_power,
    sobolev_norm,
)


@pytest.mark.parametrize("nx", [0, 3, 100])
def test_gridspec_rejects_non_power_of_two(nx):
    with pytest.raises(GridError):
        GridSpec(nx=nx)


@pytest.mark.parametrize("kw", [dict(dim=4), dict(nt=1), dict(m=0), dict(L=0.0), dict(a=1.0, b=1.0)])
def test_gridspec_rejects_bad_fields(kw):
    with pytest.raises(GridError):
        GridSpec(**kw)


def test_gridspec_geometry():
    spec = GridSpec(dim=2, L=2.0, nx=8, a=1.0, b=3.0, nt=4, m=3)
    assert spec.h == 0.5
    assert spec.dt == 0.5
    assert spec.shape == (4, 8, 8, 3)
    assert spec.cell_volume == 0.25
    np.testing.assert_allclose(spec.times(), [1.25, 1.75, 2.25, 2.75])
    np.testing.assert_allclose(spec.axis()[[0, -1]], [-2.0, 1.5])


def test_field_shape_and_finiteness_checked():
    spec = GridSpec(nx=8, nt=4)
    with pytest.raises(GridError):
        SpaceTimeField(spec, np.zeros((4, 8)))
    bad = np.zeros(spec.shape)
    bad[0, 0, 0] = np.nan
    with pytest.raises(GridError):
        SpaceTimeField(spec, bad)


def test_field_is_read_only():
    f = SpaceTimeField.zeros(GridSpec(nx=8, nt=4))
    with pytest.raises(ValueError):
        f.values[0, 0, 0] = 1.0


def test_constant_field_norm():
    spec = GridSpec(nx=16, nt=8, L=1.0, b=2.0)
    f = SpaceTimeField(spec, np.full(spec.shape, 3.0))
    # |f| = 3 on [0, 2] x [-1, 1]
    assert lp_norm(f, 2) == pytest.approx(3.0 * 4.0**0.5, rel=1e-14)
    assert lp_norm(f, 4) == pytest.approx(3.0 * 4.0**0.25, rel=1e-14)


def test_hilbert_norm_over_channels():
    spec = GridSpec(nx=8, nt=4, m=2)
    vals = np.zeros(spec.shape)
    vals[..., 0] = 3.0
    vals[..., 1] = 4.0
    f = SpaceTimeField(spec, vals)
    np.testing.assert_allclose(f.hnorm(), 5.0)


def test_lp_norm_rejects_small_p():
    with pytest.raises(ValueError):
        lp_norm(SpaceTimeField.zeros(GridSpec(nx=8, nt=4)), 0.5)


def test_lp_norm_large_p_does_not_overflow():
    spec = GridSpec(nx=8, nt=4)
    f = SpaceTimeField(spec, np.full(spec.shape, 1e200))
    assert np.isfinite(lp_norm(f, 8))


def test_sine_l2_norm():
    spec = GridSpec(nx=64)
    g = ScalarField.from_function(spec, lambda x: np.sin(3 * x))
    # int_{-pi}^{pi} sin^2(3x) dx = pi, exact for the rectangle rule
    assert lp_norm(g, 2) ** 2 == pytest.approx(np.pi, rel=1e-13)


@given(c=st.floats(0.1, 10.0), p=st.sampled_from([1.0, 2.0, 3.5, 8.0]))
def test_norm_homogeneity(c, p):
    spec = GridSpec(nx=16, nt=4, m=2)
    vals = np.random.default_rng(1).normal(size=spec.shape)
    f = SpaceTimeField(spec, vals)
    assert lp_norm(f.scaled(c), p) == pytest.approx(c * lp_norm(f, p), rel=1e-12)
    assert lp_power(f, p) == pytest.approx(lp_norm(f, p) ** p, rel=1e-12)


def test_sobolev_norm_of_single_mode():
    spec = GridSpec(nx=64)
    g = ScalarField.from_function(spec, lambda x: np.cos(4 * x))
    # multiplier (1 + 16)^{s/2} on a single mode
    s = 0.75
    assert sobolev_norm(g, s, 2) == pytest.approx(17 ** (s / 2) * np.sqrt(np.pi), rel=1e-12)


def test_from_function_samples_midpoints():
    spec = GridSpec(nx=8, nt=4)
    f = SpaceTimeField.from_function(spec, lambda t, x: (t + 0 * x)[..., None])
    np.testing.assert_allclose(f.values[:, 0, 0], spec.times())
