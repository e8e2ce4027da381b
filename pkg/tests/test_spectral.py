import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fraclp.field import GridSpec, ScalarField, lp_norm
from fraclp.kernel import kernel_grid
from fraclp.spectral import (
    CANONICAL,
    PAPER,
    FourierConvention,
    MultiplierSpec,
    ResolutionWarning,
    bessel_potential,
    dft_forward,
    dft_inverse,
    frac_deriv_semigroup,
    frac_laplacian,
    imag_residue,
    paper_convolution_mass,
    paper_kernel_convolution,
    plancherel_sum,
    resolution_time,
    semigroup_apply,
)


def _mode(spec, k):
    return ScalarField.from_function(spec, lambda *x: np.cos(k * x[0]))


@pytest.mark.parametrize("beta", [0.0, 0.5, 1.0, 1.7])
@pytest.mark.parametrize("k", [1, 3, 7])
def test_frac_laplacian_on_mode(beta, k):
    spec = GridSpec(nx=32)
    g = _mode(spec, k)
    np.testing.assert_allclose(frac_laplacian(g, beta).values, k**beta * g.values, atol=1e-13)


def test_frac_laplacian_two_is_minus_second_derivative():
    spec = GridSpec(nx=64)
    g = ScalarField.from_function(spec, lambda x: np.sin(2 * x) + 0.3 * np.cos(5 * x))
    expect = 4 * np.sin(2 * spec.axis()) + 0.3 * 25 * np.cos(5 * spec.axis())
    np.testing.assert_allclose(frac_laplacian(g, 2.0).values, expect, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_semigroup_on_mode_and_mean(alpha):
    spec = GridSpec(nx=32)
    g = ScalarField.from_function(spec, lambda x: 2.0 + np.cos(3 * x))
    out = semigroup_apply(g, 0.3, alpha)
    expect = 2.0 + np.exp(-0.3 * 3**alpha) * np.cos(3 * spec.axis())
    np.testing.assert_allclose(out.values, expect, atol=1e-13)
    assert out.values.mean() == pytest.approx(2.0, rel=1e-14)


@pytest.mark.filterwarnings("ignore::fraclp.spectral.ResolutionWarning")
@given(s=st.floats(0.01, 1.0), t=st.floats(0.01, 1.0))
def test_semigroup_property(s, t):
    spec = GridSpec(nx=32)
    g = ScalarField(spec, np.random.default_rng(3).normal(size=32))
    lhs = semigroup_apply(semigroup_apply(g, s, 1.3), t, 1.3)
    rhs = semigroup_apply(g, s + t, 1.3)
    np.testing.assert_allclose(lhs.values, rhs.values, atol=1e-12)


@pytest.mark.filterwarnings("ignore::fraclp.spectral.ResolutionWarning")
def test_paper_convention_is_time_rescaled_canonical():
    spec = GridSpec(nx=32)
    g = ScalarField(spec, np.random.default_rng(4).normal(size=32))
    alpha, t = 0.8, 0.01
    a = semigroup_apply(g, t, alpha, PAPER)
    b = semigroup_apply(g, (2 * np.pi) ** alpha * t, alpha, CANONICAL)
    np.testing.assert_allclose(a.values, b.values, atol=1e-13)


def test_paper_kernel_convolution_carries_mass_factor():
    # literal convolution with the paper kernel is (2 pi)^d times the multiplier
    spec = GridSpec(nx=64)
    g = ScalarField(spec, np.random.default_rng(5).normal(size=64))
    t, alpha = 0.05, 1.2
    K = kernel_grid(alpha, 0.0, 1, spec.L, spec.nx, t=t, conv=PAPER).values
    conv = paper_kernel_convolution(g, K)
    mult = semigroup_apply(g, t, alpha, PAPER)
    np.testing.assert_allclose(conv.values, paper_convolution_mass(1) * mult.values, atol=1e-11)


def test_paper_kernel_mass():
    g = kernel_grid(1.0, 0.0, 1, 400.0, 2**16)
    assert g.h * g.values.sum() == pytest.approx(2 * np.pi, rel=1e-2)


def test_frac_deriv_semigroup_on_mode():
    spec = GridSpec(nx=32)
    g = _mode(spec, 4)
    out = frac_deriv_semigroup(g, 0.1, 1.5, 0.75)
    np.testing.assert_allclose(out.values, 4**0.75 * np.exp(-0.1 * 4**1.5) * g.values, atol=1e-13)


def test_bessel_potential_mode():
    spec = GridSpec(nx=32)
    g = _mode(spec, 2)
    np.testing.assert_allclose(bessel_potential(g, 1.0).values, np.sqrt(5.0) * g.values, atol=1e-13)


def test_resolution_warning():
    spec = GridSpec(nx=64)
    g = _mode(spec, 1)
    tmin = resolution_time(spec, 1.0)
    with pytest.warns(ResolutionWarning):
        semigroup_apply(g, tmin / 10, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        semigroup_apply(g, tmin * 10, 1.0)


def test_delta_has_flat_spectrum():
    spec = GridSpec(nx=16)
    v = np.zeros(16)
    v[8] = 1.0 / spec.h  # unit mass at x = 0
    s = dft_forward(ScalarField(spec, v))
    np.testing.assert_allclose(s.coeffs, 1.0, atol=1e-14)


def test_dft_roundtrip_and_plancherel(rng):
    spec = GridSpec(dim=2, nx=16)
    g = ScalarField(spec, rng.normal(size=(16, 16)))
    s = dft_forward(g)
    back = dft_inverse(s, imag_tol=1e-12)
    np.testing.assert_allclose(back.values, g.values, atol=1e-13)
    assert plancherel_sum(s) == pytest.approx(lp_norm(g, 2) ** 2, rel=1e-12)


def test_radial_symbol_keeps_real_output(rng):
    spec = GridSpec(dim=2, nx=16)
    g = ScalarField(spec, rng.normal(size=(16, 16)))
    assert imag_residue(g, MultiplierSpec.laplacian_power(0.5)) < 1e-13


@pytest.mark.parametrize(
    "build",
    [
        lambda: MultiplierSpec.laplacian_power(-1.0),
        lambda: MultiplierSpec.semigroup(0.0, 1.0),
        lambda: MultiplierSpec.semigroup(1.0, 2.5),
        lambda: MultiplierSpec.bessel_potential(0.0),
    ],
)
def test_multiplier_validation(build):
    with pytest.raises(ValueError):
        build()


def test_convention_parse():
    assert FourierConvention.parse("Paper") is PAPER
    assert PAPER.rate(1.0) == pytest.approx(2 * np.pi)
    assert CANONICAL.rate(0.3) == 1.0
