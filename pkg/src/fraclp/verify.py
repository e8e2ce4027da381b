"""Exact identities, bound certificates and empirical constant estimates.

Every check returns a plain dataclass report carrying the numbers behind its
verdict, so callers (tests, the CLI) can both assert and tabulate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from fraclp.families import FieldGenerator, TestFieldFamily
from fraclp.field import GridSpec, ScalarField, SpaceTimeField, lp_norm, lp_power
from fraclp.quadrature import gauss_legendre, geometric_breaks
from fraclp.spectral import FourierConvention, PAPER, CANONICAL, wavevectors
from fraclp.sqop import (
    PsiSpec,
    TimeQuadMesh,
    _nodes_for_ratio,
    default_scales,
    l2_constant,
    maximal_t,
    maximal_x,
    sharp_function,
    square_function,
)


def _relative_drift(new: float, old: float) -> float:
    return abs(new - old) / abs(old) if old else (0.0 if new == old else math.inf)


# ---------------------------------------------------------------- p = 2 identity


@dataclass(frozen=True)
class L2Report:
    alpha: float
    target: float
    windows: tuple
    ratios: tuple
    tol: float

    @property
    def final_error(self) -> float:
        return abs(self.ratios[-1] - self.target) / self.target

    @property
    def increasing(self) -> bool:
        r = self.ratios
        return all(b >= a - 1e-12 * self.target for a, b in zip(r, r[1:]))

    @property
    def bounded(self) -> bool:
        return all(r <= self.target + 1e-10 for r in self.ratios)

    @property
    def passed(self) -> bool:
        return self.increasing and self.bounded and self.final_error <= self.tol


def _require_support(gen: FieldGenerator, spec: GridSpec):
    lo, hi = gen.support
    if lo < spec.a - 1e-12 or hi > spec.b + 1e-12:
        raise ValueError(f"field support {gen.support} is not inside the window [{spec.a}, {spec.b}]")


def l2_identity_check(
    alpha: float,
    gen: FieldGenerator,
    base: GridSpec,
    windows=(1.0, 1.25, 1.5, 2.0, 3.0),
    *,
    tol: float = 0.02,
    conv=PAPER,
    workers: int = 1,
) -> L2Report:
    """``||G f||_2^2 / ||f||_2^2`` with ``psi = phi_{alpha/2}`` as the window ``[a, a + T]`` grows.

    The time step of ``base`` is kept, so ``nt`` grows with ``T``.
    """
    _require_support(gen, base)
    psi = PsiSpec.phi_beta(alpha, conv=conv)
    ratios = []
    for T in windows:
        nt = int(round(T / base.dt))
        if not math.isclose(nt * base.dt, T, rel_tol=1e-9):
            raise ValueError(f"window length {T} is not a multiple of dt={base.dt}")
        spec = base.replace(b=base.a + T, nt=nt)
        _require_support(gen, spec)
        f = gen.sample(spec)
        G = square_function(f, psi, a=spec.a, workers=workers)
        ratios.append(G.lp_norm(2) ** 2 / lp_norm(f, 2) ** 2)
    return L2Report(alpha, l2_constant(alpha, conv), tuple(windows), tuple(ratios), tol)


# ---------------------------------------------------------------- L_p constants


@dataclass(frozen=True)
class ConstantEstimate:
    """Ratios ``||G f||_p^p / ||f||_p^p`` per rung (rows) and sample (columns)."""

    alpha: float
    p: float
    psi_tag: str
    ladder: tuple
    seeds: tuple
    ratios: np.ndarray = field(repr=False)
    growth_tol: float = 0.10
    l2_target: float | None = None
    outside_range: bool = False

    def __post_init__(self):
        r = np.asarray(self.ratios, dtype=float)
        if r.ndim != 2 or r.shape[0] != len(self.ladder):
            raise ValueError("ratios must be (rungs, samples)")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise ValueError("ratios must be finite and non-negative")
        for (n0, t0), (n1, t1) in zip(self.ladder, self.ladder[1:]):
            if not (n1 > n0 and t1 > t0):
                raise ValueError("ladder must be strictly refining")
        object.__setattr__(self, "ratios", r)

    @property
    def max(self) -> np.ndarray:
        return self.ratios.max(axis=1)

    @property
    def median(self) -> np.ndarray:
        return np.median(self.ratios, axis=1)

    @property
    def q95(self) -> np.ndarray:
        return np.quantile(self.ratios, 0.95, axis=1)

    @property
    def growth(self) -> np.ndarray:
        """Relative increase of the max ratio from each rung to the next."""
        m = self.max
        return (m[1:] - m[:-1]) / m[:-1]

    @property
    def stable(self) -> bool:
        return bool(self.growth.size == 0 or self.growth[-1] < self.growth_tol)

    @property
    def within_l2(self) -> bool | None:
        if self.l2_target is None:
            return None
        return bool(np.all(self.max <= self.l2_target * 1.02))

    @property
    def passed(self) -> bool:
        ok = self.stable
        if self.within_l2 is not None:
            ok = ok and self.within_l2
        return ok


def lp_ratio_estimate(
    alpha: float,
    ps,
    family: TestFieldFamily,
    n_samples: int,
    ladder,
    *,
    allow_below_two: bool = False,
    conv=PAPER,
    workers: int = 1,
) -> dict:
    """Sample ratios for every ``p`` in ``ps``; ``G f`` is computed once per sample and rung.

    ``ladder`` is a sequence of ``(nx, nt)``; the box and window come from the
    family.  Returns ``{p: ConstantEstimate}``.
    """
    ps = [float(p) for p in np.atleast_1d(ps)]
    if n_samples < 30:
        raise ValueError("n_samples must be >= 30")
    below = any(p < 2 for p in ps)
    if below and not allow_below_two:
        raise ValueError("p < 2 is outside the theorem range; pass allow_below_two=True")
    if any(p < 1 for p in ps):
        raise ValueError("p must be >= 1")
    ladder = tuple((int(nx), int(nt)) for nx, nt in ladder)
    psi = PsiSpec.phi_beta(alpha, conv=conv)
    a0, b0 = family.support
    ratios = {p: np.zeros((len(ladder), n_samples)) for p in ps}
    for r, (nx, nt) in enumerate(ladder):
        spec = GridSpec(dim=family.dim, L=family.L, nx=nx, a=a0, b=b0, nt=nt, m=family.m)
        family.check_grid(spec)
        mesh = TimeQuadMesh.build(spec, alpha, conv)
        for i in range(n_samples):
            f = family.sample(spec, i)
            G = square_function(f, psi, mesh, workers=workers).as_field()
            for p in ps:
                ratios[p][r, i] = lp_power(G, p) / lp_power(f, p)
    target = l2_constant(alpha, conv)
    return {
        p: ConstantEstimate(
            alpha,
            p,
            psi.tag,
            ladder,
            (family.seed,),
            ratios[p],
            l2_target=target if p == 2 else None,
            outside_range=p < 2,
        )
        for p in ps
    }


# ---------------------------------------------------------------- elliptic form


@dataclass(frozen=True)
class EllipticReport:
    alpha: float
    p: float
    mode: str
    horizons: tuple
    ratios: tuple
    target: float | None

    @property
    def saturation(self) -> float:
        """Relative change of the ratio over the last horizon step."""
        return _relative_drift(self.ratios[-1], self.ratios[-2]) if len(self.ratios) > 1 else 0.0


def _horizon_nodes(T: float, floor: float, tol: float = 1e-12):
    breaks = np.concatenate(([0.0], geometric_breaks(floor, T)))
    ts, ws = [], []
    for p0, p1 in zip(breaks[:-1], breaks[1:]):
        n = 4 if p0 == 0 else _nodes_for_ratio(p1 / p0, tol)
        x, w = gauss_legendre(n)
        half = 0.5 * (p1 - p0)
        ts.append(p0 + half * (x + 1.0))
        ws.append(half * w)
    return np.concatenate(ts), np.concatenate(ws)


def elliptic_inner(g: ScalarField, alpha: float, T: float, *, mode: str = "fractional", conv=PAPER) -> np.ndarray:
    """``int_0^T |D T_s g|^2 ds`` pointwise.

    ``mode="fractional"``: ``D = (-Delta)^{alpha/4}`` with the alpha-stable semigroup.
    ``mode="gradient"``: ``alpha = 2``, ``D = grad`` with the heat semigroup.
    """
    spec = g.spec
    conv = FourierConvention.parse(conv)
    rate = conv.rate(alpha)
    ks = wavevectors(spec)
    xi = np.sqrt(sum(k**2 for k in ks))
    xi_max = np.pi / spec.h * math.sqrt(spec.dim)
    floor = 1e-3 / (2.0 * rate * xi_max**alpha)
    taus, wts = _horizon_nodes(T, floor)
    G = sfft.fftn(g.values)
    out = np.zeros(spec.space_shape)
    for s, w in zip(taus, wts):
        semi = np.exp(-rate * s * xi**alpha)
        if mode == "fractional":
            u = sfft.ifftn(G * xi ** (alpha / 2.0) * semi).real
            out += w * u * u
        elif mode == "gradient":
            for k in ks:
                u = sfft.ifftn(G * 1j * k * semi).real
                out += w * u * u
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return out


def elliptic_lp_check(
    alpha: float,
    p: float,
    g,
    horizons=(1.0, 2.0, 4.0, 8.0),
    *,
    mode: str = "fractional",
    conv=PAPER,
) -> EllipticReport:
    """``int (int_0^T |D T_s g|^2 ds)^{p/2} dx / ||g||_p^p`` for growing ``T``.

    In ``"gradient"`` mode ``alpha`` must be 2 and the canonical heat semigroup
    is used, giving the classical p = 2 value 1/2.
    """
    if not isinstance(g, ScalarField):
        raise TypeError("elliptic check needs a time-independent ScalarField")
    if mode == "gradient":
        if alpha != 2:
            raise ValueError("gradient mode requires alpha = 2")
        conv = CANONICAL
    ratios = []
    for T in horizons:
        inner = elliptic_inner(g, alpha, T, mode=mode, conv=conv)
        lhs = np.sum(np.maximum(inner, 0.0) ** (p / 2.0)) * g.spec.cell_volume
        ratios.append(lhs / lp_power(g, p))
    target = None
    if p == 2:
        target = 0.5 if mode == "gradient" else l2_constant(alpha, conv)
    return EllipticReport(alpha, p, mode, tuple(horizons), tuple(ratios), target)


# ---------------------------------------------------------------- sharp function checks


@dataclass(frozen=True)
class StabilityReport:
    """Per-sample sups on a coarse and a fine rung, with drift measures."""

    name: str
    coarse: np.ndarray = field(repr=False)
    fine: np.ndarray = field(repr=False)
    tol: float = 0.15

    @property
    def sup_coarse(self) -> float:
        return float(np.max(self.coarse))

    @property
    def sup_fine(self) -> float:
        return float(np.max(self.fine))

    @property
    def refinement_drift(self) -> float:
        return _relative_drift(self.sup_fine, self.sup_coarse)

    @property
    def sample_drift(self) -> float:
        """Change of the sup from the first half of the samples to all of them (fine rung)."""
        half = max(1, self.fine.size // 2)
        return _relative_drift(self.sup_fine, float(np.max(self.fine[:half])))

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coarse)) and np.all(np.isfinite(self.fine)))

    @property
    def passed(self) -> bool:
        return self.finite and self.refinement_drift < self.tol and self.sample_drift < self.tol


def _physical_radii(coarse: GridSpec) -> np.ndarray:
    k = np.arange(int(math.floor(math.log2(coarse.L / coarse.h))) + 1)
    return np.concatenate(([0.0], coarse.h * 2.0**k))


def _halfwidths_for(spec: GridSpec, coarse: GridSpec) -> np.ndarray:
    ratio = int(round(coarse.dt / spec.dt))
    k = np.arange(int(math.floor(math.log2(coarse.nt))) + 1)
    return np.concatenate(([0], ratio * 2**k)).astype(int)


def sharp_ratio_field(f: SpaceTimeField, alpha: float, scales, radii, halfwidths, *, conv=PAPER, eps=1e-10):
    """``(G f)^# / (M_t M_x |f|_H^2)^{1/2}`` where the denominator exceeds ``eps * max``; NaN elsewhere."""
    spec = f.spec
    psi = PsiSpec.phi_beta(alpha, conv=conv)
    G = square_function(f, psi).values
    num = sharp_function(G, spec, alpha, scales)
    f2 = np.sum(f.values**2, axis=-1)
    den = np.sqrt(maximal_t(maximal_x(f2, radii, spec=spec), halfwidths, axis=0))
    peak = den.max()
    if peak == 0:
        raise ValueError("denominator vanishes identically")
    mask = den > eps * peak
    out = np.full(den.shape, np.nan)
    out[mask] = num[mask] / den[mask]
    return out


def pointwise_sharp_check(
    alpha: float,
    family: TestFieldFamily,
    n_samples: int,
    rungs=((128, 64), (256, 128)),
    *,
    tol: float = 0.15,
    conv=PAPER,
) -> StabilityReport:
    """Sup of the pointwise sharp-function ratio per sample on two rungs.

    Box scales, ball radii and time windows are fixed in physical units from
    the coarse rung so both rungs probe the same operators.
    """
    a0, b0 = family.support
    specs = [GridSpec(dim=family.dim, L=family.L, nx=nx, a=a0, b=b0, nt=nt, m=family.m) for nx, nt in rungs]
    coarse = specs[0]
    scales = default_scales(coarse, alpha)
    radii = _physical_radii(coarse)
    sups = []
    for spec in specs:
        family.check_grid(spec)
        hw = _halfwidths_for(spec, coarse)
        row = [
            float(np.nanmax(sharp_ratio_field(family.sample(spec, i), alpha, scales, radii, hw, conv=conv)))
            for i in range(n_samples)
        ]
        sups.append(np.array(row))
    return StabilityReport("pointwise_sharp", sups[0], sups[-1], tol)


def fefferman_stein_ratio(
    q: float,
    family: TestFieldFamily,
    n_samples: int,
    alpha: float = 1.0,
    rungs=((128, 64), (256, 128)),
    *,
    tol: float = 0.15,
) -> StabilityReport:
    """``||h||_q / ||h^#||_q`` for mean-zero scalar fields ``h`` (first channel of each member)."""
    if not q > 1:
        raise ValueError("q must exceed 1")
    a0, b0 = family.support
    specs = [GridSpec(dim=family.dim, L=family.L, nx=nx, a=a0, b=b0, nt=nt, m=1) for nx, nt in rungs]
    scales = default_scales(specs[0], alpha)
    sups = []
    for spec in specs:
        family.check_grid(spec)
        row = []
        for i in range(n_samples):
            h = family.sample(spec, i).values[..., 0]
            scale = np.max(np.abs(h))
            if abs(h.mean()) > 1e-10 * scale:
                raise ValueError("Fefferman-Stein check needs mean-zero fields")
            hs = sharp_function(h, spec, alpha, scales)
            w = spec.cell_volume * spec.dt
            num = (np.sum(np.abs(h) ** q) * w) ** (1.0 / q)
            den = (np.sum(hs**q) * w) ** (1.0 / q)
            row.append(num / den)
        sups.append(np.array(row))
    return StabilityReport("fefferman_stein", sups[0], sups[-1], tol)


# ---------------------------------------------------------------- scaling


@dataclass(frozen=True)
class ScalingReport:
    alpha: float
    cs: tuple
    abs_discrepancy: tuple
    rel_discrepancy: tuple
    tol: float = 1e-5

    @property
    def passed(self) -> bool:
        return all(r < self.tol for r in self.rel_discrepancy)


def dilated_grid(spec: GridSpec, c: float, alpha: float) -> GridSpec:
    """Companion grid carrying ``f(c^alpha t, c x)``: box ``L/c``, window scaled by ``c^-alpha``."""
    s = c**alpha
    return spec.replace(L=spec.L / c, a=spec.a / s, b=spec.b / s)


def scaling_check(alpha: float, cs, gen: FieldGenerator, spec: GridSpec, *, tol: float = 1e-5, conv=PAPER) -> ScalingReport:
    """Compare ``G(f_c)`` on the companion grid with ``G f`` at the dilated points.

    Companion grid point ``(t', x')`` maps to ``(c^alpha t', c x')``, which is
    exactly a point of ``spec``, so no interpolation is involved.  The
    relative discrepancy is normalized by ``max |G f|``.
    """
    psi = PsiSpec.phi_beta(alpha, conv=conv)
    G = square_function(gen.sample(spec), psi).values
    scale = float(np.max(G))
    absd, reld = [], []
    for c in cs:
        if not c > 0:
            raise ValueError("dilation factor must be positive")
        spec_c = dilated_grid(spec, c, alpha)
        Gc = square_function(gen.dilated(c, alpha).sample(spec_c), psi).values
        d = float(np.max(np.abs(Gc - G)))
        absd.append(d)
        reld.append(d / scale if scale else d)
    return ScalingReport(alpha, tuple(cs), tuple(absd), tuple(reld), tol)
