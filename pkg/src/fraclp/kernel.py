"""Pointwise and grid evaluation of the alpha-stable kernel and its fractional derivatives.

All evaluators return the paper-convention function

    phi_beta(x; t) = int_{R^d} |xi|^beta e^{i xi.x} exp(-(2 pi)^alpha t |xi|^alpha) dxi,

so ``phi_0(x; t) = p(t, x)`` has total mass ``(2 pi)^d``.  Three independent
routes are provided:

``contour``
    d = 1 only.  The half-line integral ``2 Re int_0^inf`` is moved onto a ray
    ``xi = eta e^{i theta}`` in the sector where both ``e^{i xi x}`` and
    ``exp(-c xi^alpha)`` decay, then integrated with a double-exponential rule.
``bessel``
    d >= 2.  One-dimensional Hankel-type integral against ``J_{d/2-1}``.
``grid``
    Any d.  Periodized kernel from an inverse FFT of the symbol.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from fraclp.quadrature import (
    QuadBudget,
    QuadratureError,
    exp_sinh,
    gauss_legendre,
    geometric_breaks,
    panel_gauss,
)
from fraclp.spectral import FourierConvention, PAPER

METHODS = ("contour", "bessel", "grid")


@dataclass(frozen=True)
class KernelSample:
    value: float
    method: str
    err: float

    def __post_init__(self):
        if not (np.isfinite(self.value) and np.isfinite(self.err) and self.err >= 0):
            raise ValueError(f"invalid kernel sample {self}")


@dataclass(frozen=True)
class KernelQuery:
    alpha: float
    beta: float
    d: int
    r: float
    method: str
    budget: QuadBudget = QuadBudget()

    def __post_init__(self):
        _check_params(self.alpha, self.beta, self.d, allow_two=self.method == "grid")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "contour" and self.d != 1:
            raise ValueError("contour method requires d = 1")
        if self.method == "bessel" and self.d < 2:
            raise ValueError("bessel method requires d >= 2")


def _check_params(alpha, beta, d, allow_two=False):
    hi_ok = alpha <= 2 if allow_two else alpha < 2
    if not (0 < alpha and hi_ok):
        raise ValueError(f"alpha out of range: {alpha}")
    if not beta >= 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if d not in (1, 2, 3):
        raise ValueError(f"d must be 1, 2 or 3, got {d}")


def _rate(alpha, t):
    return (2.0 * np.pi) ** alpha * t


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere ``S^n`` in ``R^{n+1}``; ``S^0`` counts two points."""
    return 2.0 * np.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


# ---------------------------------------------------------------- origin


def kernel_at_origin(alpha: float, beta: float, d: int, t: float = 1.0) -> float:
    """Exact ``phi_beta(0; t) = A_{d-1} Gamma((beta+d)/alpha) / (alpha c^{(beta+d)/alpha})``."""
    _check_params(alpha, beta, d, allow_two=True)
    c = _rate(alpha, t)
    s = (beta + d) / alpha
    return sphere_area(d - 1) * math.gamma(s) / (alpha * c**s)


# ---------------------------------------------------------------- contour (d = 1)


def contour_angle(alpha: float, ray: str = "balanced") -> float:
    """Rotation angle of the integration ray.

    ``"paper"`` is the edge of the admissible sector: the imaginary axis for
    ``alpha <= 1`` and ``pi/(2 alpha)`` otherwise.  ``"balanced"`` is
    ``pi / (2 (1 + alpha))``, where both exponentials oscillate at the same
    rate relative to their decay; it stays well conditioned for every ``x``.
    """
    if ray == "paper":
        return np.pi / 2 if alpha <= 1 else np.pi / (2 * alpha)
    if ray == "balanced":
        return np.pi / (2.0 * (1.0 + alpha))
    raise ValueError(f"unknown ray {ray!r}")


def _ray_integrand(x, alpha, beta, c, theta, order):
    """Integrand of ``int_0^inf xi^{beta+order} e^{i xi x} e^{-c xi^alpha} dxi`` on the ray."""
    rot = np.exp(1j * theta)
    rot_a = np.exp(1j * alpha * theta)
    pw = beta + order

    def f(eta):
        expo = 1j * x * eta * rot - c * eta**alpha * rot_a
        out = np.zeros(eta.shape, dtype=complex)
        ok = expo.real > -740.0
        e = eta[ok]
        out[ok] = e**pw * np.exp(1j * pw * theta) * rot * np.exp(expo[ok])
        return out

    return f


def kernel_contour_1d(
    alpha: float,
    beta: float,
    x: float,
    budget: QuadBudget = QuadBudget(),
    *,
    t: float = 1.0,
    ray: str = "balanced",
) -> KernelSample:
    """``phi_beta(x; t)`` in one dimension by contour rotation."""
    _check_params(alpha, beta, 1)
    if x == 0:
        raise ValueError("x = 0 is not handled by the contour method; use kernel_at_origin")
    x = abs(float(x))
    theta = contour_angle(alpha, ray)
    c = _rate(alpha, t)
    res = exp_sinh(_ray_integrand(x, alpha, beta, c, theta, 0), budget)
    return KernelSample(float(2.0 * res.value.real), "contour", 2.0 * res.error)


def kernel_oscillatory_1d(alpha: float, beta: float, x: float, *, t: float = 1.0, limit: int = 2000) -> float:
    """Direct real-axis oscillatory integral; a low-accuracy sanity check only."""
    from scipy import integrate

    _check_params(alpha, beta, 1)
    c = _rate(alpha, t)
    val, _ = integrate.quad(
        lambda s: s**beta * np.exp(-c * s**alpha), 0, np.inf, weight="cos", wvar=abs(x), limlst=200
    )
    return 2.0 * val


# ---------------------------------------------------------------- Bessel


_ASYM_SWITCH = 30.0


def _bessel_integral(n, z, nodes):
    t, w = special.roots_jacobi(nodes, n - 0.5, n - 0.5)
    z = np.asarray(z, dtype=float)
    s = np.cos(np.multiply.outer(z, t)) @ w
    return (0.5 * z) ** n / (math.gamma(n + 0.5) * np.sqrt(np.pi)) * s


def _bessel_asymptotic(n, z, terms=30):
    z = np.asarray(z, dtype=float)
    mu = 4.0 * n * n
    P = np.zeros_like(z)
    Q = np.zeros_like(z)
    a = 1.0
    zk = np.ones_like(z)
    for k in range(terms):
        term = a / zk
        if k % 4 == 0:
            P += term
        elif k % 4 == 1:
            Q += term
        elif k % 4 == 2:
            P -= term
        else:
            Q -= term
        a *= (mu - (2 * k + 1) ** 2) / ((k + 1) * 8.0)
        zk = zk * z
        if a == 0.0:
            break
    w = z - 0.5 * n * np.pi - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * z)) * (P * np.cos(w) - Q * np.sin(w))


def bessel_j(n: float, z, *, nodes: int = 64, check: bool = False):
    """``J_n(z)`` for real ``n > -1/2`` and ``z >= 0``.

    Below ``z = 30`` the Poisson integral
    ``(z/2)^n / (Gamma(n+1/2) sqrt(pi)) int_{-1}^{1} (1-t^2)^{n-1/2} cos(zt) dt``
    is evaluated with Gauss-Jacobi nodes for the weight ``(1-t^2)^{n-1/2}``;
    above it the Hankel asymptotic expansion is used.  With ``check=True`` the
    integral branch is compared against ``nodes/2`` points and a
    :class:`QuadratureError` is raised if they disagree beyond 1e-13.
    """
    if not n > -0.5:
        raise ValueError(f"order must exceed -1/2, got {n}")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be non-negative")
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    lo = z < _ASYM_SWITCH
    if np.any(lo):
        val = _bessel_integral(n, z[lo], nodes)
        if check:
            coarse = _bessel_integral(n, z[lo], nodes // 2)
            err = float(np.max(np.abs(val - coarse)))
            if err > 1e-13:
                raise QuadratureError("Bessel integral not converged", val, err)
        out[lo] = val
    if np.any(~lo):
        out[~lo] = _bessel_asymptotic(n, z[~lo])
    return out[0] if scalar else out


def _bessel_half(z):
    z = np.asarray(z, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.sqrt(2.0 / (np.pi * z)) * np.sin(z)
    return np.where(z == 0, 0.0, out)


def kernel_radial_bessel(
    alpha: float,
    beta: float,
    d: int,
    r: float,
    budget: QuadBudget = QuadBudget(),
    *,
    t: float = 1.0,
    cutoff_exponent: float = 50.0,
) -> KernelSample:
    """``phi_beta`` at radius ``r`` for ``d >= 2`` via the radial Bessel integral.

    Evaluates ``(A_{d-2} 2^{d/2-1} Gamma((d-1)/2) sqrt(pi) / r^{beta+d})
    int_0^inf rho^{beta+d/2} J_{d/2-1}(rho) exp(-c (rho/r)^alpha) drho``, cut at
    the radius where the exponential factor falls below ``exp(-cutoff_exponent)``.
    """
    _check_params(alpha, beta, d)
    if d < 2:
        raise ValueError("radial Bessel representation needs d >= 2")
    if not r > 0:
        raise ValueError("r must be positive; use kernel_at_origin for r = 0")
    c = _rate(alpha, t)
    nu = d / 2.0 - 1.0
    rho_c = r * (cutoff_exponent / c) ** (1.0 / alpha)
    if not np.isfinite(rho_c) or rho_c > 1e7:
        raise QuadratureError(f"cutoff radius {rho_c:.3e} exceeds the panel budget", np.nan, np.inf)
    jfun = _bessel_half if d == 3 else (lambda z: bessel_j(nu, z))
    pw = beta + d / 2.0

    def f(rho):
        return rho**pw * jfun(rho) * np.exp(-c * (rho / r) ** alpha)

    n_uniform = max(64, int(np.ceil(rho_c)))
    rho_s = rho_c / n_uniform
    breaks = np.concatenate(
        ([0.0], geometric_breaks(rho_s * 2.0**-40, rho_s), np.linspace(rho_s, rho_c, n_uniform + 1)[1:])
    )
    res = panel_gauss(f, breaks, n=16, budget=budget)
    scale = _abs_integral(f, breaks)
    err = res.error + 1e-15 * scale
    if err > budget.tol * abs(res.value) + 1e-13 * scale:
        raise QuadratureError(f"radial Bessel quadrature not converged at r={r}", res.value, err)
    pref = sphere_area(d - 2) * 2.0 ** (d / 2.0 - 1.0) * math.gamma((d - 1) / 2.0) * np.sqrt(np.pi)
    scale_r = r ** (beta + d)
    return KernelSample(float(pref * res.value / scale_r), "bessel", float(pref * err / scale_r))


def _abs_integral(f, breaks):
    from fraclp.quadrature import panel_nodes

    x, w = panel_nodes(np.asarray(breaks), 8)
    return float(np.sum(w * np.abs(f(x))))


# ---------------------------------------------------------------- grid FFT


@dataclass(frozen=True)
class KernelGrid:
    """Periodized kernel on ``[-L, L)^d``; ``values`` has the origin at index ``nx/2``."""

    alpha: float
    beta: float
    d: int
    L: float
    nx: int
    t: float
    values: np.ndarray = field(repr=False)
    err: np.ndarray | None = field(default=None, repr=False)

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.nx

    def radius(self) -> np.ndarray:
        ax = -self.L + self.h * np.arange(self.nx)
        grids = np.meshgrid(*([ax] * self.d), indexing="ij")
        return np.sqrt(sum(g**2 for g in grids))

    def samples(self, r_lo: float, r_hi: float, *, decimals: int = 9):
        """Distinct radii in ``[r_lo, r_hi]`` with one grid value each (sorted by radius)."""
        rad = self.radius().ravel()
        vals = self.values.ravel()
        errs = None if self.err is None else self.err.ravel()
        sel = np.nonzero((rad >= r_lo) & (rad <= r_hi))[0]
        key = np.round(rad[sel], decimals)
        _, first = np.unique(key, return_index=True)
        idx = sel[first]
        e = np.zeros(idx.size) if errs is None else errs[idx]
        return rad[idx], vals[idx], e


def _grid_values(alpha, beta, d, L, nx, t, conv):
    conv = FourierConvention.parse(conv)
    from scipy import fft as sfft

    k = sfft.fftfreq(nx, d=1.0 / nx)
    xi1 = k * (np.pi / L)
    sign = np.where(np.rint(k).astype(int) % 2 == 0, 1.0, -1.0)
    grids = np.meshgrid(*([xi1] * d), indexing="ij", sparse=True)
    xi = np.sqrt(sum(g**2 for g in grids))
    sym = np.power(xi, beta) if beta else np.ones_like(xi)
    sym = sym * np.exp(-conv.rate(alpha) * t * np.power(xi, alpha))
    phase = np.ones((1,) * d)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = nx
        phase = phase * sign.reshape(shape)
    vals = sfft.ifftn(sym * phase).real * nx**d * (np.pi / L) ** d
    if conv is FourierConvention.CANONICAL:
        vals /= (2.0 * np.pi) ** d
    return vals


def kernel_grid(
    alpha: float,
    beta: float,
    d: int,
    L: float,
    nx: int,
    *,
    t: float = 1.0,
    conv=PAPER,
    estimate_error: bool = False,
) -> KernelGrid:
    """Kernel on the periodic grid as the inverse DFT of the symbol.

    This is the periodization ``sum_n phi(x + 2 L n)`` truncated to the
    resolved band.  With ``estimate_error`` the grid is recomputed on
    ``[-2L, 2L)`` at the same spacing and the difference is attached as the
    error estimate (it measures the periodization error).
    """
    _check_params(alpha, beta, d, allow_two=True)
    vals = _grid_values(alpha, beta, d, L, nx, t, conv)
    err = None
    if estimate_error:
        big = _grid_values(alpha, beta, d, 2 * L, 2 * nx, t, conv)
        q = nx // 2
        inner = big[tuple(slice(q, q + nx) for _ in range(d))]
        err = np.abs(inner - vals)
    return KernelGrid(alpha, beta, d, L, nx, t, vals, err)


# ---------------------------------------------------------------- dispatch


def kernel_value(alpha, beta, d, r, budget: QuadBudget = QuadBudget(), *, t: float = 1.0) -> KernelSample:
    """Method of record for a single radius: contour in 1-d, Bessel otherwise."""
    if r == 0:
        return KernelSample(kernel_at_origin(alpha, beta, d, t), "origin", 0.0)
    if d == 1:
        return kernel_contour_1d(alpha, beta, r, budget, t=t)
    return kernel_radial_bessel(alpha, beta, d, r, budget, t=t)


def evaluate(q: KernelQuery, *, L: float | None = None, nx: int | None = None) -> KernelSample:
    """Evaluate a :class:`KernelQuery`; the grid method needs ``L`` and ``nx``."""
    if q.method == "contour":
        return kernel_contour_1d(q.alpha, q.beta, q.r, q.budget)
    if q.method == "bessel":
        return kernel_radial_bessel(q.alpha, q.beta, q.d, q.r, q.budget)
    if L is None or nx is None:
        raise ValueError("grid evaluation needs L and nx")
    g = kernel_grid(q.alpha, q.beta, q.d, L, nx, estimate_error=True)
    rad, vals, errs = g.samples(0.0, np.inf)
    i = int(np.argmin(np.abs(rad - q.r)))
    if abs(rad[i] - q.r) > 1e-9 * max(1.0, q.r):
        raise ValueError(f"radius {q.r} is not a grid radius (nearest {rad[i]})")
    return KernelSample(float(vals[i]), "grid", float(errs[i]))


def kernel_gradient(alpha, beta, d, r, budget: QuadBudget = QuadBudget(), *, t: float = 1.0) -> float:
    """``|grad phi_beta|`` at radius ``r`` by a central difference in ``r``.

    The step is ``max(r, 1e-3) * tol^{1/3}``, balancing truncation and
    quadrature noise.  At ``r = 0`` the gradient vanishes by symmetry.
    """
    if r == 0:
        return 0.0
    step = max(r, 1e-3) * budget.tol ** (1.0 / 3.0)
    step = min(step, 0.5 * r)
    hi = kernel_value(alpha, beta, d, r + step, budget, t=t).value
    lo = kernel_value(alpha, beta, d, r - step, budget, t=t).value
    return abs(hi - lo) / (2.0 * step)


# ---------------------------------------------------------------- envelope


@dataclass(frozen=True)
class Envelope:
    """Two-branch C^1 majorant: ``N rho^{-(d+beta)}`` beyond ``rho0 = 10^{-1/alpha}``,
    ``N 10^{(d+beta)/alpha} exp(-(d+beta)(10^{1/alpha} rho - 1))`` below it."""

    alpha: float
    beta: float
    d: int
    N: float = 1.0

    def __post_init__(self):
        if not self.N > 0:
            raise ValueError("amplitude must be positive")

    @property
    def knot(self) -> float:
        return 10.0 ** (-1.0 / self.alpha)

    @property
    def power(self) -> float:
        return self.d + self.beta


def envelope_eval(e: Envelope, rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("rho must be non-negative")
    k = e.power
    with np.errstate(divide="ignore"):
        tail = e.N / np.where(rho > 0, rho, 1.0) ** k
    head = e.N * 10.0 ** (k / e.alpha) * np.exp(-k * (10.0 ** (1.0 / e.alpha) * rho - 1.0))
    return np.where(rho >= e.knot, tail, head)


def envelope_left(e: Envelope, rho):
    """Inner (exponential) branch, evaluated for any ``rho``."""
    k = e.power
    return e.N * 10.0 ** (k / e.alpha) * np.exp(-k * (10.0 ** (1.0 / e.alpha) * np.asarray(rho) - 1.0))


def envelope_right(e: Envelope, rho):
    """Outer (power-law) branch, evaluated for any ``rho > 0``."""
    return e.N / np.asarray(rho, dtype=float) ** e.power


def envelope_derivative(e: Envelope, rho, branch: str | None = None):
    """``d/drho`` of the envelope (or of a named branch)."""
    rho = np.asarray(rho, dtype=float)
    k = e.power
    left = -k * 10.0 ** (1.0 / e.alpha) * envelope_left(e, rho)
    with np.errstate(divide="ignore"):
        right = -k * e.N / np.where(rho > 0, rho, 1.0) ** (k + 1)
    if branch == "left":
        return left
    if branch == "right":
        return right
    return np.where(rho >= e.knot, right, left)


def envelope_tail_integral(e: Envelope, r: float) -> float:
    """Closed form of ``int_r^inf |env'(rho)| rho^d drho = (d+beta) N r^{-beta} / beta`` for ``r >= rho0``."""
    if e.beta <= 0:
        raise ValueError("the tail integral diverges for beta = 0")
    if r < e.knot:
        raise ValueError("closed form only holds for r >= 10^{-1/alpha}")
    return e.power * e.N * r ** (-e.beta) / e.beta


def envelope_ratio(alpha, beta, d, radii, phi_abs, grad_abs):
    """``(|phi| + |grad phi| + rho |grad phi|) / env_{N=1}(rho)`` per sample."""
    radii = np.asarray(radii, dtype=float)
    lhs = np.asarray(phi_abs) + np.asarray(grad_abs) * (1.0 + radii)
    return lhs / envelope_eval(Envelope(alpha, beta, d, 1.0), radii)


def envelope_samples(alpha, beta, d, radii, budget: QuadBudget = QuadBudget()):
    """``|phi_beta|`` and ``|grad phi_beta|`` at each radius (method of record)."""
    phi = np.array([abs(kernel_value(alpha, beta, d, r, budget).value) for r in radii])
    grad = np.array([kernel_gradient(alpha, beta, d, r, budget) for r in radii])
    return phi, grad


def envelope_fit(alpha, beta, d, radii, phi_abs, grad_abs, *, refine=None) -> Envelope:
    """Smallest amplitude ``N`` with ``|phi| + |grad phi| + |x| |grad phi| <= env`` on the samples.

    If ``refine`` (a callable ``rho -> (|phi|, |grad phi|)``) is given, each
    interior local maximum of the sampled ratio is polished with a bounded
    scalar search between its neighbours and the amplitude covers those
    maxima too.
    """
    radii = np.asarray(radii, dtype=float)
    phi_abs = np.asarray(phi_abs, dtype=float)
    grad_abs = np.asarray(grad_abs, dtype=float)
    if not (np.all(np.isfinite(phi_abs)) and np.all(np.isfinite(grad_abs)) and np.all(np.isfinite(radii))):
        raise ValueError("envelope fit received non-finite samples")
    order = np.argsort(radii)
    radii, phi_abs, grad_abs = radii[order], phi_abs[order], grad_abs[order]
    ratio = envelope_ratio(alpha, beta, d, radii, phi_abs, grad_abs)
    best = float(np.max(ratio))
    if refine is not None:
        for i in range(1, radii.size - 1):
            if ratio[i] >= ratio[i - 1] and ratio[i] >= ratio[i + 1]:

                def neg(rho):
                    p, g = refine(rho)
                    return -float(envelope_ratio(alpha, beta, d, [rho], [p], [g])[0])

                res = optimize.minimize_scalar(
                    neg, bounds=(radii[i - 1], radii[i + 1]), method="bounded", options={"xatol": 1e-10}
                )
                best = max(best, -float(res.fun))
    return Envelope(alpha, beta, d, best)


def fit_envelope(alpha, beta, d, radii, budget: QuadBudget = QuadBudget()) -> Envelope:
    """Sample the kernel on ``radii`` and fit the envelope with local-maximum refinement."""

    def refine(rho):
        phi, grad = envelope_samples(alpha, beta, d, [rho], budget)
        return phi[0], grad[0]

    phi, grad = envelope_samples(alpha, beta, d, radii, budget)
    return envelope_fit(alpha, beta, d, radii, phi, grad, refine=refine)


# ---------------------------------------------------------------- decay fits


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    prefactor: float
    r2: float
    r_lo: float
    r_hi: float
    n: int


def decay_fit(radii, values) -> DecayFit:
    """Least-squares slope of ``log|value|`` against ``log r``."""
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if radii.size < 8:
        raise ValueError("decay fit needs at least 8 radii")
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    if np.log10(radii.max() / radii.min()) < 1.5 - 1e-12:
        raise ValueError("radii must span at least 1.5 decades")
    if np.any(values <= 0):
        raise ValueError("decay fit needs positive samples")
    lx, ly = np.log(radii), np.log(values)
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    ss = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / ss) if ss > 0 else 1.0
    return DecayFit(float(slope), float(np.exp(icpt)), r2, float(radii.min()), float(radii.max()), radii.size)


@dataclass(frozen=True)
class BoundCertificate:
    """``sup |phi| r^{power}`` on a base radius range and on the range extended by a decade."""

    power: float
    sup_base: float
    sup_extended: float

    @property
    def drift(self) -> float:
        return abs(self.sup_extended - self.sup_base) / self.sup_base


def bound_certificate(alpha, beta, d, r_lo, r_hi, *, n_per_decade: int = 12, power=None, gradient=False,
                      budget: QuadBudget = QuadBudget()) -> BoundCertificate:
    """Weighted sup of ``|phi_beta|`` (or ``|grad phi_beta|``) before and after extending ``r_hi`` tenfold."""
    if power is None:
        power = d + beta + (1 if gradient else 0)
    decades = np.log10(10 * r_hi / r_lo)
    radii = np.logspace(np.log10(r_lo), np.log10(10 * r_hi), int(np.ceil(decades * n_per_decade)) + 1)
    if gradient:
        vals = np.array([kernel_gradient(alpha, beta, d, r, budget) for r in radii])
    else:
        vals = np.array([abs(kernel_value(alpha, beta, d, r, budget).value) for r in radii])
    weighted = vals * radii**power
    base = radii <= r_hi * (1 + 1e-12)
    return BoundCertificate(float(power), float(weighted[base].max()), float(weighted.max()))


# ---------------------------------------------------------------- Fourier side


def fourier_symbol(xi, alpha, beta):
    """``|xi|^beta exp(-(2 pi)^alpha |xi|^alpha)``."""
    xi = np.abs(np.asarray(xi, dtype=float))
    return (np.power(xi, beta) if beta else np.ones_like(xi)) * np.exp(-((2 * np.pi) ** alpha) * xi**alpha)


def fourier_peak(alpha, beta, lam=1.0):
    """Maximizer and maximum of ``|xi|^lam phi_hat_beta(xi)``: ``xi* = ((lam+beta)/(alpha c))^{1/alpha}``."""
    c = (2 * np.pi) ** alpha
    xs = ((lam + beta) / (alpha * c)) ** (1.0 / alpha)
    return xs, float(xs**lam * fourier_symbol(xs, alpha, beta))


def fourier_bound_check(alpha, beta, xi, lam=1.0) -> dict:
    """Sweep-based report on ``phi_hat_beta <= |xi|^beta`` and ``sup |xi|^lam phi_hat_beta < inf``."""
    xi = np.asarray(xi, dtype=float)
    xi = xi[xi > 0]
    sym = fourier_symbol(xi, alpha, beta)
    ratio = sym / np.power(xi, beta) if beta else sym
    xs, peak = fourier_peak(alpha, beta, lam)
    weighted = xi**lam * sym
    diffs = np.diff(sym)
    return {
        "sup_ratio_sweep": float(ratio.max()),
        "sup_ratio_limit": 1.0,
        "ratio_bounded": bool(np.all(ratio <= 1.0)),
        "sup_weighted_sweep": float(weighted.max()),
        "sup_weighted": peak,
        "argmax": xs,
        "monotone": bool(np.all(diffs <= 0)) if beta == 0 else None,
    }


# ---------------------------------------------------------------- tables


TABLE_COLUMNS = ("alpha", "beta", "d", "r", "value", "method", "err_estimate")


def kernel_table_csv(rows) -> str:
    """CSV text with the kernel table columns; ``rows`` are dicts keyed by column."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in TABLE_COLUMNS])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)
