"""End-to-end acceptance campaign; each test records one PASS/FAIL line."""

import filecmp
import os

import numpy as np
import pytest
from scipy import integrate

from fraclp import cli
from fraclp import kernel as K
from fraclp.families import TestFieldFamily
from fraclp.field import GridSpec, SpaceTimeField
from fraclp.sqop import PsiSpec, TimeQuadMesh, square_function, square_function_via_derivative
from fraclp.spde import (
    NoiseSpec,
    energy_inequality_check,
    energy_stability,
    ito_isometry_check,
    simulate_stochastic_convolution,
)
from fraclp.verify import (
    fefferman_stein_ratio,
    l2_identity_check,
    lp_ratio_estimate,
    pointwise_sharp_check,
    scaling_check,
)

pytestmark = pytest.mark.slow

ALPHAS = (0.5, 1.0, 1.5)


def test_c01_exact_l2_constant(verdict):
    fam = TestFieldFamily("random_bandlimited", seed=0)
    details, ok = [], True
    for alpha in ALPHAS:
        rep = l2_identity_check(alpha, fam.member(0), GridSpec(nx=256, nt=128))
        ok &= rep.passed
        details.append(f"a={alpha}: {rep.ratios[-1]:.7f}/{rep.target:.7f}")
        if alpha == 1.0:
            ok &= abs(rep.target - 0.0795775) < 5e-8
    assert verdict(1, "exact p=2 constant", ok, "; ".join(details))


def test_c02_cauchy_oracle(verdict):
    x = np.linspace(0.05, 50, 50)
    got = np.array([K.kernel_contour_1d(1.0, 0.0, r).value for r in x])
    rel = np.max(np.abs(got / (4 * np.pi / (4 * np.pi**2 + x**2)) - 1))
    assert verdict(2, "contour vs Cauchy", rel <= 1e-8, f"max rel err {rel:.2e}")


def test_c03_cross_method(verdict):
    cases = [(1, 0.5, 0.0), (1, 1.0, 0.0), (1, 1.5, 0.0), (1, 1.0, 0.5), (2, 1.0, 0.0), (2, 1.5, 0.0), (3, 1.0, 0.0), (3, 1.5, 0.0)]
    details, ok = [], True
    for d, alpha, beta in cases:
        L, nx = cli.KERNEL_GRIDS[d]
        g = K.kernel_grid(alpha, beta, d, L, nx)
        rad, vals, _ = g.samples(0.2, 5.0)
        pick = np.unique(np.linspace(0, rad.size - 1, 12).round().astype(int))
        ref = np.array([K.kernel_value(alpha, beta, d, float(rad[i])).value for i in pick])
        err = float(np.max(np.abs(ref - vals[pick])))
        tol = 1e-5 if d == 1 else 1e-4
        ok &= err <= tol
        details.append(f"d={d},a={alpha},b={beta}: {err:.1e}")
    assert verdict(3, "cross-method kernel agreement", ok, "; ".join(details))


def test_c04_decay_and_bounds(verdict):
    details, ok = [], True
    for d, alpha in [(1, 0.5), (1, 1.0), (1, 1.5), (2, 1.0)]:
        lo, hi = (1e3, 1e5) if d == 1 else (300.0, 1e4)
        radii = np.logspace(np.log10(lo), np.log10(hi), 12)
        fit = K.decay_fit(radii, [K.kernel_value(alpha, 0.0, d, r).value for r in radii])
        ok &= abs(fit.exponent + d + alpha) <= 0.05
        details.append(f"({d},{alpha}) slope {fit.exponent:.4f}")
        for beta in (0.25, alpha / 2):
            r_hi = 1e5 if alpha < 1 else 1e4
            cert = K.bound_certificate(alpha, beta, d, 0.1, r_hi, n_per_decade=8 if d == 1 else 4)
            ok &= np.isfinite(cert.sup_extended) and cert.drift < 0.05
            details.append(f"b={beta:g} drift {cert.drift:.1e}")
    assert verdict(4, "decay exponents and bound certificates", ok, "; ".join(details))


def test_c05_envelope(verdict):
    details, ok = [], True
    for d, alpha, beta in [(1, 0.5, 0.25), (1, 1.0, 0.5), (1, 1.5, 0.75), (2, 1.0, 0.5)]:
        sweep = np.logspace(-3, 3, 40 if d == 1 else 24)
        env = K.fit_envelope(alpha, beta, d, sweep)
        rho0 = env.knot
        gap_v = abs(K.envelope_left(env, rho0) / K.envelope_right(env, rho0) - 1)
        gap_d = abs(K.envelope_derivative(env, rho0, "left") / K.envelope_derivative(env, rho0, "right") - 1)
        dense = np.logspace(-3, 3, 3 * sweep.size)
        phi, grad = K.envelope_samples(alpha, beta, d, dense)
        dom = float(np.max(K.envelope_ratio(alpha, beta, d, dense, phi, grad)) / env.N)
        tails = []
        for r in (rho0, 1.0, 10.0):
            num, _ = integrate.quad(
                lambda s: abs(K.envelope_derivative(env, s)) * s**d, r, np.inf, epsabs=0, epsrel=1e-12, limit=200
            )
            tails.append(abs(K.envelope_tail_integral(env, r) / num - 1))
        tail = max(tails)
        ok &= gap_v <= 1e-12 and gap_d <= 1e-12 and dom <= 1 + 1e-8 and tail <= 1e-8
        details.append(f"({d},{alpha},{beta}) dom {dom:.8f} tail {tail:.0e}")
    assert verdict(5, "envelope", ok, "; ".join(details))


def test_c06_derivative_form(verdict, rng):
    worst = 0.0
    for alpha in ALPHAS:
        spec = GridSpec(nx=64, nt=32, m=3)
        vals = rng.normal(size=spec.shape)
        f = SpaceTimeField(spec, vals)
        mesh = TimeQuadMesh.build(spec, alpha)
        a = square_function(f, PsiSpec.phi_beta(alpha), mesh).values
        b = square_function_via_derivative(f, alpha, mesh).values
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(a)))
    assert verdict(6, "derivative-form identity", worst <= 1e-10, f"max rel diff {worst:.1e}")


def test_c07_scaling(verdict):
    fam = TestFieldFamily("random_bandlimited", seed=0)
    worst = 0.0
    for alpha in ALPHAS:
        rep = scaling_check(alpha, (0.5, 2.0), fam.member(0), GridSpec(nx=256, nt=128))
        worst = max(worst, *rep.rel_discrepancy)
    assert verdict(7, "scaling", worst < 1e-5, f"max discrepancy {worst:.1e}")


def test_c08_inequality_stability(verdict):
    fam = TestFieldFamily("random_bandlimited", seed=0)
    ladder = ((128, 64), (256, 128), (512, 256))
    details, ok = [], True
    for alpha in ALPHAS:
        ests = lp_ratio_estimate(alpha, (2.0, 4.0, 8.0), fam, 50, ladder)
        for p, est in ests.items():
            ok &= est.passed
            details.append(f"a={alpha},p={p:g}: growth {est.growth[-1]:+.1e}")
    assert verdict(8, "inequality stability", ok, "; ".join(details))


def test_c09_sharp_estimates(verdict):
    fam = TestFieldFamily("random_bandlimited", seed=0)
    details, ok = [], True
    for alpha in ALPHAS:
        ps = pointwise_sharp_check(alpha, fam, 30)
        fs = fefferman_stein_ratio(2.0, fam, 30, alpha)
        for name, rep in (("pointwise", ps), ("FS", fs)):
            ok &= rep.passed
            details.append(f"a={alpha} {name}: {rep.refinement_drift:.1e}/{rep.sample_drift:.1e}")
    assert verdict(9, "sharp-function estimates", ok, "; ".join(details))


def test_c10_spde(verdict):
    spec = GridSpec(nx=64, nt=64, m=4)
    f = TestFieldFamily("random_bandlimited", seed=0, m=4).sample(spec, 0)
    details, ok = [], True
    for alpha in ALPHAS:
        noise = NoiseSpec(4, 1, spec.dt, spec.nt)
        big = simulate_stochastic_convolution(f, alpha, noise, 4000)
        small = big.head(2000)
        iso = ito_isometry_check(small, f, alpha)
        ok &= iso.passed
        details.append(f"a={alpha}: z={iso.final_z:+.2f}")
        for p in (2, 4):
            e_small = energy_inequality_check(small, f, alpha, p)
            e_big = energy_inequality_check(big, f, alpha, p)
            ok &= e_small.finite and e_big.finite and energy_stability(e_small, e_big)
    assert verdict(10, "SPDE isometry and energy", ok, "; ".join(details))


DETERMINISM_RUNS = [
    ("kernel", "--dim", "2", "--alpha", "1.0"),
    ("verify-l2", "--nx", "64", "--nt", "32"),
    ("estimate-constant", "--nx", "32", "--nt", "16", "--samples", "30"),
    ("scaling", "--nx", "64", "--nt", "32"),
    ("sharp", "--nx", "32", "--nt", "16", "--samples", "4"),
    ("spde", "--nx", "32", "--nt", "32", "--samples", "400"),
]


def test_c11_determinism(verdict, tmp_path):
    same = []
    for args in DETERMINISM_RUNS:
        out = str(tmp_path)
        cli.main([*args, "--seed", "5", "--out", out])
        cli.main([*args, "--seed", "5", "--out", out])
        a, b = (os.path.join(out, f"{args[0]}-{k}", "results.csv") for k in (0, 1))
        same.append(filecmp.cmp(a, b, shallow=False))
    bad = [r[0] for r, s in zip(DETERMINISM_RUNS, same) if not s]
    assert verdict(11, "determinism", all(same), "mismatch: " + ",".join(bad) if bad else "all CSVs identical")
