import numpy as np
import pytest
from scipy import integrate, optimize, special

from fraclp.kernel import (
    Envelope,
    KernelQuery,
    TABLE_COLUMNS,
    bessel_j,
    bound_certificate,
    contour_angle,
    decay_fit,
    envelope_derivative,
    envelope_eval,
    envelope_fit,
    envelope_left,
    envelope_right,
    envelope_tail_integral,
    evaluate,
    fourier_bound_check,
    fourier_peak,
    fourier_symbol,
    kernel_at_origin,
    kernel_contour_1d,
    kernel_grid,
    kernel_radial_bessel,
    kernel_table_csv,
    kernel_value,
    sphere_area,
)
from fraclp.quadrature import QuadBudget

TWO_PI = 2 * np.pi

# phi_beta(x; 1) in 1-d from a 40-digit real-axis quadrature (mpmath, breakpoints at
# every period of cos(xi x)); frozen here as an independent oracle.
MP_VALUES = {
    (0.5, 0.5, 3.0): 0.016426700279905082,
    (1.5, 0.75, 2.0): 0.046115075115584466,
    (1.0, 0.5, 1.0): 0.10736703837907948,
    (1.5, 0.25, 0.7): 0.15039802551297861,
    (0.5, 0.25, 20.0): -0.00070322172153203791,
}


def cauchy(x):
    return 4 * np.pi / (4 * np.pi**2 + x**2)


def poisson(d, r, t=TWO_PI):
    if d == 2:
        return 2 * np.pi * t / (t**2 + r**2) ** 1.5
    return 8 * np.pi * t / (t**2 + r**2) ** 2


@pytest.mark.parametrize("x", [0.01, 0.5, 1.0, 7.0, 100.0, 3e4])
def test_contour_matches_cauchy(x):
    s = kernel_contour_1d(1.0, 0.0, x)
    assert s.value == pytest.approx(cauchy(x), rel=1e-8)
    assert s.method == "contour"


@pytest.mark.parametrize("key", sorted(MP_VALUES))
def test_contour_matches_mpmath(key):
    alpha, beta, x = key
    got = kernel_contour_1d(alpha, beta, x).value
    assert got == pytest.approx(MP_VALUES[key], rel=1e-9, abs=1e-15)


def test_paper_ray_works_below_one():
    a = kernel_contour_1d(0.7, 0.3, 2.0, ray="paper").value
    b = kernel_contour_1d(0.7, 0.3, 2.0).value
    assert a == pytest.approx(b, rel=1e-8)


def test_contour_angles():
    assert contour_angle(1.0) == pytest.approx(np.pi / 4)
    assert contour_angle(0.5, "paper") == pytest.approx(np.pi / 2)
    assert contour_angle(1.5, "paper") == pytest.approx(np.pi / 3)
    with pytest.raises(ValueError):
        contour_angle(1.0, "steep")


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("r", [0.1, 1.0, 6.0, 50.0, 400.0])
def test_bessel_route_matches_poisson(d, r):
    s = kernel_radial_bessel(1.0, 0.0, d, r)
    assert s.value == pytest.approx(poisson(d, r), rel=1e-8)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_origin_matches_poisson(d):
    expect = cauchy(0.0) if d == 1 else poisson(d, 0.0)
    assert kernel_at_origin(1.0, 0.0, d) == pytest.approx(expect, rel=1e-14)


def test_origin_value_one_dim():
    assert kernel_at_origin(1.0, 0.0, 1) == pytest.approx(1 / np.pi, rel=1e-15)


@pytest.mark.parametrize("alpha,beta", [(0.5, 0.0), (1.5, 0.5), (1.0, 1.0)])
def test_origin_limit(alpha, beta):
    # Richardson extrapolation of contour values towards x = 0
    h = 1e-3
    v1 = kernel_contour_1d(alpha, beta, h).value
    v2 = kernel_contour_1d(alpha, beta, h / 2).value
    extrap = 2 * v2 - v1
    assert extrap == pytest.approx(kernel_at_origin(alpha, beta, 1), rel=1e-4)


@pytest.mark.parametrize("alpha", [0.5, 1.2, 1.8])
@pytest.mark.parametrize("t", [0.3, 2.0])
def test_heat_kernel_scaling(alpha, t):
    x = 1.7
    lhs = kernel_contour_1d(alpha, 0.0, x, t=t).value
    rhs = t ** (-1 / alpha) * kernel_contour_1d(alpha, 0.0, x * t ** (-1 / alpha)).value
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_gaussian_on_grid():
    g = kernel_grid(2.0, 0.0, 1, 64.0, 1024)
    x = g.radius()
    expect = np.sqrt(np.pi) / TWO_PI * np.exp(-(x**2) / (16 * np.pi**2))
    np.testing.assert_allclose(g.values, expect, atol=1e-11)


@pytest.mark.parametrize("x", [0.5, 2.0, 10.0])
def test_grid_agrees_with_contour_moderate(x):
    g = kernel_grid(1.5, 0.0, 1, 2048.0, 2**16)
    ev = evaluate(KernelQuery(1.5, 0.0, 1, x, "grid"), L=2048.0, nx=2**16)
    assert ev.value == pytest.approx(kernel_contour_1d(1.5, 0.0, x).value, abs=1e-5)
    assert g.values[g.nx // 2] == pytest.approx(kernel_at_origin(1.5, 0.0, 1), abs=1e-5)


def test_grid_agrees_with_bessel_two_dim():
    g = kernel_grid(1.0, 0.0, 2, 256.0, 1024)
    rad, vals, _ = g.samples(0.4, 5.0)
    ref = poisson(2, rad)
    np.testing.assert_allclose(vals, ref, atol=1e-5)


def test_grid_error_estimate_attached():
    g = kernel_grid(1.0, 0.0, 1, 64.0, 256, estimate_error=True)
    assert g.err is not None and g.err.shape == g.values.shape
    # periodization error is roughly the Cauchy tail at distance 2L
    assert g.err.max() < 10 * cauchy(64.0)


def test_canonical_grid_normalization():
    paper = kernel_grid(1.0, 0.0, 2, 16.0, 64, t=1.0 / TWO_PI)
    canon = kernel_grid(1.0, 0.0, 2, 16.0, 64, conv="canonical")
    np.testing.assert_allclose(canon.values * TWO_PI**2, paper.values, atol=1e-12)


@pytest.mark.parametrize("n", [0.0, 0.5, 1.0, 2.5])
@pytest.mark.parametrize("z", [0.01, 1.0, 10.0, 29.9, 30.1, 150.0, 2000.0])
def test_bessel_j_against_scipy(n, z):
    assert bessel_j(n, z) == pytest.approx(special.jv(n, z), abs=1e-13)


def test_bessel_j_special_values():
    assert bessel_j(0.0, 0.0) == pytest.approx(1.0)
    assert bessel_j(0.5, np.pi / 2) == pytest.approx(2 / np.pi, rel=1e-13)
    assert abs(bessel_j(0.0, 2.404825557695773)) < 1e-13


def test_bessel_j_continuous_at_switch():
    lo = bessel_j(1.0, 30.0 - 1e-9)
    hi = bessel_j(1.0, 30.0 + 1e-9)
    assert abs(lo - hi) < 1e-9


def test_sphere_area():
    assert sphere_area(0) == 2.0
    assert sphere_area(1) == pytest.approx(TWO_PI)
    assert sphere_area(2) == pytest.approx(4 * np.pi)


def test_kernel_value_dispatch():
    assert kernel_value(1.0, 0.0, 1, 0.0).method == "origin"
    assert kernel_value(1.0, 0.0, 1, 1.0).method == "contour"
    assert kernel_value(1.0, 0.0, 2, 1.0).method == "bessel"


@pytest.mark.parametrize(
    "kw",
    [
        dict(alpha=0.0, beta=0.0, d=1, r=1.0, method="contour"),
        dict(alpha=2.0, beta=0.0, d=1, r=1.0, method="contour"),
        dict(alpha=1.0, beta=-0.1, d=1, r=1.0, method="contour"),
        dict(alpha=1.0, beta=0.0, d=4, r=1.0, method="grid"),
        dict(alpha=1.0, beta=0.0, d=2, r=1.0, method="contour"),
        dict(alpha=1.0, beta=0.0, d=1, r=1.0, method="bessel"),
        dict(alpha=1.0, beta=0.0, d=1, r=1.0, method="series"),
    ],
)
def test_query_validation(kw):
    with pytest.raises(ValueError):
        KernelQuery(**kw)


def test_contour_rejects_origin():
    with pytest.raises(ValueError):
        kernel_contour_1d(1.0, 0.0, 0.0)


# ---------------------------------------------------------------- envelope


@pytest.mark.parametrize("alpha,beta,d", [(0.5, 0.0, 1), (1.0, 0.5, 2), (1.5, 1.0, 3)])
def test_envelope_is_c1_at_knot(alpha, beta, d):
    e = Envelope(alpha, beta, d, 2.5)
    k = e.knot
    assert k == pytest.approx(10 ** (-1 / alpha))
    assert envelope_left(e, k) == pytest.approx(envelope_right(e, k), rel=1e-13)
    assert envelope_derivative(e, k, "left") == pytest.approx(envelope_derivative(e, k, "right"), rel=1e-13)
    assert envelope_eval(e, k) == pytest.approx(envelope_right(e, k))


@pytest.mark.parametrize("alpha,beta,d,r", [(1.0, 0.5, 1, 0.1), (0.5, 0.25, 2, 3.0), (1.5, 1.0, 3, 1.0)])
def test_envelope_tail_integral(alpha, beta, d, r):
    e = Envelope(alpha, beta, d, 1.3)
    num, _ = integrate.quad(lambda s: abs(envelope_derivative(e, s)) * s**d, r, np.inf, epsabs=0, epsrel=1e-12)
    assert envelope_tail_integral(e, r) == pytest.approx(num, rel=1e-8)


def test_envelope_tail_integral_guards():
    with pytest.raises(ValueError):
        envelope_tail_integral(Envelope(1.0, 0.0, 1), 1.0)
    with pytest.raises(ValueError):
        envelope_tail_integral(Envelope(1.0, 0.5, 1), 0.01)


def test_envelope_fit_amplitude_is_tight():
    radii = np.array([0.05, 0.5, 2.0, 9.0])
    phi = np.array([1.0, 0.4, 0.1, 0.01])
    grad = np.array([0.2, 0.3, 0.05, 0.001])
    e = envelope_fit(1.0, 0.0, 1, radii, phi, grad)
    lhs = phi + grad * (1 + radii)
    ratio = lhs / envelope_eval(e, radii)
    assert ratio.max() == pytest.approx(1.0, rel=1e-14)


def test_envelope_fit_rejects_nan():
    with pytest.raises(ValueError):
        envelope_fit(1.0, 0.0, 1, [1.0, 2.0], [np.nan, 1.0], [0.0, 0.0])


def test_envelope_validation():
    with pytest.raises(ValueError):
        Envelope(1.0, 0.0, 1, 0.0)
    with pytest.raises(ValueError):
        envelope_eval(Envelope(1.0, 0.0, 1), -1.0)


# ---------------------------------------------------------------- decay and bounds


def test_decay_fit_exact_power():
    r = np.logspace(0, 3, 20)
    fit = decay_fit(r, 3.0 * r**-2.5)
    assert fit.exponent == pytest.approx(-2.5, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-10)
    assert fit.r2 == pytest.approx(1.0)


@pytest.mark.parametrize(
    "r,v",
    [
        (np.logspace(0, 3, 5), np.ones(5)),
        (np.logspace(0, 1, 10), np.ones(10)),
        (np.logspace(0, 3, 10), -np.ones(10)),
        (np.linspace(0, 100, 10), np.ones(10)),
    ],
)
def test_decay_fit_validation(r, v):
    with pytest.raises(ValueError):
        decay_fit(r, v)


def test_cauchy_decay_and_certificate():
    r = np.logspace(3, 5, 12)
    vals = [kernel_contour_1d(1.0, 0.0, x).value for x in r]
    assert decay_fit(r, vals).exponent == pytest.approx(-2.0, abs=1e-3)
    cert = bound_certificate(1.0, 0.0, 1, 0.1, 100.0, n_per_decade=6)
    assert cert.drift < 0.05
    # sup of r |phi| for the Cauchy kernel on [0.1, 1000] sits at r = 2 pi
    assert cert.sup_extended <= 1.0 + 1e-9


# ---------------------------------------------------------------- Fourier side


@pytest.mark.parametrize("alpha,beta,lam", [(0.5, 0.0, 1.0), (1.0, 0.5, 2.0), (1.5, 1.0, 0.5)])
def test_fourier_peak_matches_numeric_max(alpha, beta, lam):
    xs, peak = fourier_peak(alpha, beta, lam)
    res = optimize.minimize_scalar(
        lambda s: -(s**lam) * fourier_symbol(s, alpha, beta),
        bounds=(xs / 3, xs * 3),
        method="bounded",
        options={"xatol": 1e-12},
    )
    assert xs == pytest.approx(res.x, rel=1e-6)
    assert peak == pytest.approx(-res.fun, rel=1e-10)


def test_fourier_bound_report():
    xi = np.logspace(-4, 2, 500)
    rep = fourier_bound_check(1.0, 0.0, xi)
    assert rep["ratio_bounded"] and rep["monotone"]
    assert rep["sup_weighted_sweep"] <= rep["sup_weighted"] * (1 + 1e-12)
    rep = fourier_bound_check(1.0, 0.5, xi)
    assert rep["ratio_bounded"] and rep["monotone"] is None


def test_fourier_symbol_positive_for_beta_zero():
    xi = np.linspace(-50, 50, 1001)
    sym = fourier_symbol(xi, 0.7, 0.0)
    assert np.all(sym > 0) and sym.max() == 1.0


def test_kernel_table_columns():
    row = dict(alpha=1.0, beta=0.0, d=1, r=2.0, value=0.1, method="contour", err_estimate=1e-12)
    text = kernel_table_csv([row])
    lines = text.splitlines()
    assert lines[0].split(",") == list(TABLE_COLUMNS)
    assert lines[1] == "1.0,0.0,1,2.0,0.1,contour,1e-12"


def test_budget_is_respected():
    s = kernel_contour_1d(1.0, 0.0, 3.0, QuadBudget(tol=1e-6))
    assert s.value == pytest.approx(cauchy(3.0), rel=1e-6)
