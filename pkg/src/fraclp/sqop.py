"""Parabolic square function, its derivative-semigroup form, maximal and sharp functions.

Time integrals are taken in the lag variable ``tau = t - s``.  Because field
values are constant on time cells, the contribution of cell ``j`` to the
square function at the midpoint ``t_i`` depends only on the lag ``l = i - j``
and covers ``tau`` in ``[(l - 1/2) dt, (l + 1/2) dt]`` (``[0, dt/2]`` for
``l = 0``).  :class:`TimeQuadMesh` stores one Gauss-Legendre node set per lag
that is shared by all evaluation times, so each node costs one batched inverse
FFT over every time slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft as sfft
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from fraclp.field import GridSpec, ScalarField, SpaceTimeField, lp_norm
from fraclp.quadrature import gauss_legendre
from fraclp.spectral import FourierConvention, PAPER, frac_deriv_semigroup_symbol


class MeshError(ValueError):
    """The time quadrature mesh is inconsistent with the field or evaluation times."""


# ---------------------------------------------------------------- psi


@dataclass(frozen=True)
class PsiSpec:
    """The generating function ``psi`` through its radial Fourier symbol.

    ``symbol(zeta)`` is evaluated at ``zeta = |xi| tau^{1/alpha}``.  The
    certified parameters ``nu, lam, delta, K`` are carried along for reports.
    """

    tag: str
    alpha: float
    symbol: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    nu: float
    lam: float
    delta: float
    K: float | None = None
    beta: float | None = None
    conv: FourierConvention = PAPER

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not (self.nu > 0 and self.lam > 0 and self.delta > 0):
            raise ValueError("nu, lambda and delta must be positive")

    @classmethod
    def phi_beta(cls, alpha: float, beta: float | None = None, conv=PAPER) -> "PsiSpec":
        """``psi = phi_beta``: symbol ``|zeta|^beta exp(-c |zeta|^alpha)``; default ``beta = alpha/2``."""
        conv = FourierConvention.parse(conv)
        beta = alpha / 2.0 if beta is None else float(beta)
        if not beta > 0:
            raise ValueError("beta must be positive for a square-function kernel")
        rate = conv.rate(alpha)

        def sym(z):
            z = np.asarray(z, dtype=float)
            return np.power(z, beta) * np.exp(-rate * np.power(z, alpha))

        return cls(f"phi_{beta:g}", alpha, sym, nu=beta, lam=1.0, delta=beta, beta=beta, conv=conv)

    @classmethod
    def custom(cls, alpha: float, zeta, values, *, nu, lam, delta, K, tag: str = "custom") -> "PsiSpec":
        """Tabulated radial symbol, linearly interpolated and zero beyond the table."""
        zeta = np.asarray(zeta, dtype=float)
        values = np.asarray(values, dtype=float)
        if zeta.ndim != 1 or zeta.shape != values.shape or np.any(np.diff(zeta) <= 0):
            raise ValueError("custom table needs strictly increasing zeta and matching values")

        def sym(z):
            return np.interp(np.asarray(z, dtype=float), zeta, values, right=0.0)

        return cls(tag, alpha, sym, nu=nu, lam=lam, delta=delta, K=K)

    def l2_constant(self) -> float | None:
        """``int_0^inf |psi_hat(xi t^{1/alpha})|^2 dt / t`` when ``psi = phi_beta``."""
        if self.beta is None:
            return None
        # substitute u = 2 c t |xi|^alpha: Gamma(s) / (2 c)^s with s = 2 beta / alpha
        s = 2.0 * self.beta / self.alpha
        rate = self.conv.rate(self.alpha)
        return math.gamma(s) / (2.0 * rate) ** s


def l2_constant(alpha: float, conv=PAPER) -> float:
    """``1 / (2 c)`` with ``c = (2 pi)^alpha`` (paper) or 1 (canonical)."""
    return 1.0 / (2.0 * FourierConvention.parse(conv).rate(alpha))


# ---------------------------------------------------------------- spectral helpers


def _rfft_modulus(spec: GridSpec) -> np.ndarray:
    k_full = sfft.fftfreq(spec.nx, d=1.0 / spec.nx) * (np.pi / spec.L)
    k_half = sfft.rfftfreq(spec.nx, d=1.0 / spec.nx) * (np.pi / spec.L)
    grids = []
    for ax in range(spec.dim):
        k = k_half if ax == spec.dim - 1 else k_full
        shape = [1] * spec.dim
        shape[ax] = k.size
        grids.append(k.reshape(shape))
    return np.sqrt(sum(g**2 for g in grids))


def _space_axes(spec: GridSpec, lead: int):
    return tuple(range(lead, lead + spec.dim))


def psi_transform(g: ScalarField, tau: float, psi: PsiSpec) -> ScalarField:
    """``Psi_tau g`` as the multiplier ``psi_hat(|xi| tau^{1/alpha})``."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    spec = g.spec
    axes = _space_axes(spec, 0)
    sym = psi.symbol(_rfft_modulus(spec) * tau ** (1.0 / psi.alpha))
    out = sfft.irfftn(sfft.rfftn(g.values, axes=axes) * sym, s=spec.space_shape, axes=axes)
    return ScalarField(spec, out)


# ---------------------------------------------------------------- time mesh


def _gl_error_bound(n: int, ratio: float) -> float:
    """Worst-case relative Gauss-Legendre error for ``exp(-k tau)`` on ``[lo, ratio*lo]`` over all ``k``."""
    x = 2.0 * n
    q = (ratio - 1.0) / 2.0
    logb = 2 * n * math.log(q * x) - x - math.lgamma(2 * n + 1) if q > 0 else -math.inf
    return math.exp(logb)


def _nodes_for_ratio(ratio: float, tol: float, n_max: int = 24) -> int:
    for n in range(2, n_max + 1):
        if _gl_error_bound(n, ratio) < tol:
            return n
    return n_max


@dataclass(frozen=True)
class TimeQuadMesh:
    """Per-lag quadrature nodes in ``tau`` for sample-and-hold fields.

    ``taus[l]`` and ``weights[l]`` integrate over the part of cell ``i - l``
    seen from the midpoint of cell ``i``.  Panels break at the cell edges and
    at the geometric points ``floor * ratio^k``; node counts per panel are
    chosen from the panel's end-point ratio so exponentials ``exp(-k tau)`` of
    any rate are integrated to ``tol``.  The first panel ``[0, floor]`` lies
    below the resolution of the grid.
    """

    dt: float
    floor: float
    ratio: float
    tol: float
    taus: tuple = field(repr=False)
    weights: tuple = field(repr=False)

    def __post_init__(self):
        if len(self.taus) != len(self.weights) or not self.taus:
            raise MeshError("mesh needs one node set per lag")
        for lag, (t, w) in enumerate(zip(self.taus, self.weights)):
            lo = max(0.0, (lag - 0.5) * self.dt)
            hi = (lag + 0.5) * self.dt
            if t.size == 0 or np.any(w <= 0):
                raise MeshError(f"lag {lag}: weights must be positive")
            if np.any(np.diff(t) <= 0):
                raise MeshError(f"lag {lag}: nodes must be strictly increasing")
            if t[0] <= lo * (1 - 1e-14) or t[-1] >= hi * (1 + 1e-14) or t[0] <= 0:
                raise MeshError(f"lag {lag}: nodes fall outside the lag cell")

    @property
    def n_lags(self) -> int:
        return len(self.taus)

    @property
    def n_nodes(self) -> int:
        return int(sum(t.size for t in self.taus))

    @classmethod
    def build(
        cls,
        spec: GridSpec,
        alpha: float,
        conv=PAPER,
        *,
        tol: float = 1e-10,
        ratio: float = 2.0,
        floor: float | None = None,
    ) -> "TimeQuadMesh":
        """Mesh for the grid ``spec``.

        The default floor ``1e-3 / (2 c xi_max^alpha)`` is where the fastest
        resolved mode has barely started to decay.
        """
        conv = FourierConvention.parse(conv)
        if floor is None:
            xi_max = np.pi / spec.h * math.sqrt(spec.dim)
            floor = 1e-3 / (2.0 * conv.rate(alpha) * xi_max**alpha)
        dt = spec.dt
        if not 0 < floor < dt / 2:
            raise MeshError(f"floor {floor} must lie in (0, dt/2)")
        k_hi = math.ceil(math.log((spec.nt + 0.5) * dt / floor) / math.log(ratio))
        geo = floor * ratio ** np.arange(k_hi + 1)
        taus, weights = [], []
        for lag in range(spec.nt):
            lo = max(0.0, (lag - 0.5) * dt)
            hi = (lag + 0.5) * dt
            inner = geo[(geo > lo * (1 + 1e-12)) & (geo < hi * (1 - 1e-12))]
            breaks = np.concatenate(([lo], inner, [hi]))
            ts, ws = [], []
            for p0, p1 in zip(breaks[:-1], breaks[1:]):
                n = 4 if p0 == 0 else _nodes_for_ratio(p1 / p0, tol)
                x, w = gauss_legendre(n)
                half = 0.5 * (p1 - p0)
                ts.append(p0 + half * (x + 1.0))
                ws.append(half * w)
            t = np.concatenate(ts)
            w = np.concatenate(ws)
            t.setflags(write=False)
            w.setflags(write=False)
            taus.append(t)
            weights.append(w)
        return cls(dt, float(floor), float(ratio), float(tol), tuple(taus), tuple(weights))

    def check_grid(self, spec: GridSpec):
        if not math.isclose(spec.dt, self.dt, rel_tol=1e-12):
            raise MeshError("mesh time step does not match the field grid")
        if spec.nt > self.n_lags:
            raise MeshError("mesh has fewer lags than the field has time cells")


# ---------------------------------------------------------------- square function


@dataclass(frozen=True)
class SquareFunctionResult:
    """``G f(t_i, x_j)`` at the cell midpoints; shape ``(nt, nx, ..., nx)``."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)
    route: str = "psi"

    def as_field(self) -> SpaceTimeField:
        return SpaceTimeField(self.spec.replace(m=1), self.values[..., None])

    def lp_norm(self, p: float) -> float:
        return lp_norm(self.as_field(), p)


def _start_cell(spec: GridSpec, a: float | None) -> int:
    if a is None:
        return 0
    j = (a - spec.a) / spec.dt
    jr = int(round(j))
    if abs(j - jr) > 1e-9 or jr < 0 or jr >= spec.nt:
        raise MeshError(f"a={a} must be a cell edge inside the time window")
    return jr


def _accumulate(f: SpaceTimeField, mesh: TimeQuadMesh, a, symbol_weight, workers):
    """Sum over lags and nodes of ``weight * |multiplier(tau) f(t_i - tau)|_H^2``."""
    spec = f.spec
    mesh.check_grid(spec)
    j0 = _start_cell(spec, a)
    # (nt, m, *space) so the spatial axes are trailing
    vals = np.moveaxis(f.values, -1, 1)
    axes = _space_axes(spec, 2)
    F = sfft.rfftn(vals, axes=axes, workers=workers)
    if j0:
        F[:j0] = 0.0
    xi = _rfft_modulus(spec)
    out = np.zeros((spec.nt,) + spec.space_shape)
    for lag in range(spec.nt):
        n_out = spec.nt - lag
        src = F[:n_out]
        acc = np.zeros((n_out,) + spec.space_shape)
        for tau, w in zip(mesh.taus[lag], mesh.weights[lag]):
            sym, wt = symbol_weight(xi, tau, w)
            u = sfft.irfftn(src * sym, s=spec.space_shape, axes=axes, workers=workers)
            acc += wt * np.sum(u * u, axis=1)
        out[lag:] += acc
    return out


def square_function(
    f: SpaceTimeField,
    psi: PsiSpec,
    mesh: TimeQuadMesh | None = None,
    a: float | None = None,
    *,
    workers: int = 1,
) -> SquareFunctionResult:
    """``G_a f(t, x) = [int_a^t |Psi_{t-s} f(s)(x)|_H^2 ds / (t - s)]^{1/2}`` at cell midpoints.

    ``a`` defaults to the start of the time window and must be a cell edge.
    """
    if mesh is None:
        mesh = TimeQuadMesh.build(f.spec, psi.alpha, psi.conv)
    inv = 1.0 / psi.alpha

    def sw(xi, tau, w):
        return psi.symbol(xi * tau**inv), w / tau

    g2 = _accumulate(f, mesh, a, sw, workers)
    return SquareFunctionResult(f.spec, np.sqrt(g2), "psi")


def square_function_via_derivative(
    f: SpaceTimeField,
    alpha: float,
    mesh: TimeQuadMesh | None = None,
    a: float | None = None,
    *,
    conv=PAPER,
    workers: int = 1,
) -> SquareFunctionResult:
    """``[int_a^t |(-Delta)^{alpha/4} T_{t-s} f(s)(x)|_H^2 ds]^{1/2}`` on the same mesh."""
    if mesh is None:
        mesh = TimeQuadMesh.build(f.spec, alpha, conv)

    def sw(xi, tau, w):
        return frac_deriv_semigroup_symbol(xi, tau, alpha, alpha / 2.0, conv), w

    g2 = _accumulate(f, mesh, a, sw, workers)
    return SquareFunctionResult(f.spec, np.sqrt(g2), "derivative")


# ---------------------------------------------------------------- maximal functions


def dyadic_radii(spec: GridSpec) -> np.ndarray:
    """``0`` together with ``h 2^k <= L``."""
    k = np.arange(int(math.floor(math.log2(spec.L / spec.h))) + 1)
    return np.concatenate(([0.0], spec.h * 2.0**k))


def _ball_indicator(spec: GridSpec, r: float) -> np.ndarray:
    # periodic offsets in FFT order, so the ball is centred at index 0
    idx = sfft.fftfreq(spec.nx, d=1.0 / spec.nx) * spec.h
    grids = np.meshgrid(*([idx] * spec.dim), indexing="ij", sparse=True)
    dist = np.sqrt(sum(g**2 for g in grids))
    return (dist <= r * (1 + 1e-12)).astype(float)


def maximal_x(g: ScalarField | np.ndarray, radii=None, *, spec: GridSpec | None = None) -> np.ndarray:
    """Sup over ``radii`` of periodic discrete ball averages of ``|g|``.

    ``g`` may carry leading batch axes when passed as an array together with
    ``spec``; the spatial axes are the trailing ``spec.dim`` ones.
    """
    if isinstance(g, ScalarField):
        spec, vals = g.spec, g.values
    else:
        if spec is None:
            raise ValueError("an array input needs its GridSpec")
        vals = np.asarray(g, dtype=float)
    if radii is None:
        radii = dyadic_radii(spec)
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ValueError("radii must be non-empty")
    if np.any(radii < 0):
        raise ValueError("radii must be non-negative")
    absg = np.abs(vals)
    axes = tuple(range(absg.ndim - spec.dim, absg.ndim))
    G = sfft.rfftn(absg, axes=axes)
    out = np.full(absg.shape, -np.inf)
    for r in radii:
        ball = _ball_indicator(spec, r)
        count = ball.sum()
        if count == 1:
            avg = absg
        else:
            conv = sfft.irfftn(G * sfft.rfftn(ball), s=spec.space_shape, axes=axes)
            avg = np.maximum(conv / count, 0.0)
        out = np.maximum(out, avg)
    return out


def dyadic_halfwidths(nt: int) -> np.ndarray:
    """``0, 1, 2, 4, ...`` cell half-widths up to ``nt``."""
    k = np.arange(int(math.floor(math.log2(nt))) + 1)
    return np.concatenate(([0], 2**k)).astype(int)


def maximal_t(h: np.ndarray, halfwidths=None, *, axis: int = 0) -> np.ndarray:
    """Sup over symmetric windows of ``2k + 1`` cells of the average of ``|h|``.

    Values beyond the time window count as zero.
    """
    h = np.abs(np.asarray(h, dtype=float))
    h = np.moveaxis(h, axis, 0)
    nt = h.shape[0]
    if halfwidths is None:
        halfwidths = dyadic_halfwidths(nt)
    halfwidths = np.asarray(halfwidths, dtype=int)
    if halfwidths.size == 0:
        raise ValueError("window set must be non-empty")
    if np.any(halfwidths < 0):
        raise ValueError("half-widths must be non-negative")
    cs = np.concatenate((np.zeros((1,) + h.shape[1:]), np.cumsum(h, axis=0)), axis=0)
    i = np.arange(nt)
    out = np.full(h.shape, -np.inf)
    for k in halfwidths:
        lo = np.clip(i - k, 0, nt)
        hi = np.clip(i + k + 1, 0, nt)
        avg = (cs[hi] - cs[lo]) / (2 * k + 1)
        out = np.maximum(out, np.maximum(avg, 0.0))
    return np.moveaxis(out, 0, axis)


# ---------------------------------------------------------------- sharp function


@dataclass(frozen=True)
class ParabolicBox:
    """``Q_c(s, y) = (s - c^alpha, s) x prod_i (y_i - c/2, y_i + c/2)``."""

    s: float
    y: tuple
    c: float
    alpha: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("box scale must be positive")

    @property
    def duration(self) -> float:
        return self.c**self.alpha

    def contains(self, t: float, x) -> bool:
        x = np.atleast_1d(x)
        return (self.s - self.duration < t <= self.s) and bool(np.all(np.abs(x - np.asarray(self.y)) < self.c / 2))


@dataclass(frozen=True)
class BoxShape:
    """Discrete box: ``nt_cells`` time cells ending at the anchor, ``nx_cells`` (odd) centred cells per axis."""

    c: float
    nt_cells: int
    nx_cells: int


def box_shape(spec: GridSpec, alpha: float, c: float) -> BoxShape:
    nt_cells = max(1, int(round(c**alpha / spec.dt)))
    half = int(round(c / (2.0 * spec.h)))
    return BoxShape(c, nt_cells, 2 * half + 1)


def default_scales(spec: GridSpec, alpha: float) -> np.ndarray:
    """Dyadic ``c = 2^k`` with ``2h <= c <= 2L`` and ``2 dt <= c^alpha <= b - a``."""
    out = []
    for k in range(-40, 40):
        c = 2.0**k
        if c < 2 * spec.h or c > 2 * spec.L:
            continue
        if c**alpha < 2 * spec.dt or c**alpha > spec.b - spec.a:
            continue
        out.append(c)
    return np.array(out)


def _anchor_lists(spec: GridSpec, shp: BoxShape, stride):
    st = max(1, shp.nt_cells // 4) if stride is None else stride
    sx = max(1, shp.nx_cells // 4) if stride is None else stride
    t_anchor = np.arange(shp.nt_cells - 1, spec.nt, st)
    x_anchor = np.arange(0, spec.nx, sx)
    return t_anchor, x_anchor


def box_mad(g: np.ndarray, spec: GridSpec, shp: BoxShape, t_anchor, x_anchor) -> np.ndarray:
    """Mean absolute deviation from the box mean for each anchor combination."""
    d = spec.dim
    half = shp.nx_cells // 2
    # wrap space periodically, then take sliding windows
    padded = np.pad(g, [(0, 0)] + [(half, half)] * d, mode="wrap")
    win = sliding_window_view(padded, (shp.nt_cells,) + (shp.nx_cells,) * d)
    t_idx = t_anchor - shp.nt_cells + 1
    sel = win[np.ix_(t_idx, *([x_anchor] * d))]
    box_axes = tuple(range(1 + d, 2 + 2 * d))
    mean = sel.mean(axis=box_axes, keepdims=True)
    return np.abs(sel - mean).mean(axis=box_axes)


def sharp_function(g: np.ndarray, spec: GridSpec, alpha: float, scales=None, *, stride=None) -> np.ndarray:
    """``g^#(t, x)``: sup over sampled boxes containing ``(t, x)`` of the mean absolute deviation.

    ``g`` has shape ``(nt, nx, ..., nx)``.  For each scale, boxes are anchored
    at time cells ``s`` (their last cell) and space cells ``y`` (their centre)
    on a lattice of step ``max(1, n // 4)`` per axis, or ``stride`` if given
    (``stride=1`` samples every grid-anchored box).  Boxes stay inside the time
    window and wrap periodically in space.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (spec.nt,) + spec.space_shape:
        raise ValueError("field shape does not match grid")
    if scales is None:
        scales = default_scales(spec, alpha)
    scales = np.asarray(scales, dtype=float)
    if scales.size == 0:
        raise ValueError("scale set must be non-empty")
    d = spec.dim
    out = np.zeros(g.shape)
    for c in scales:
        shp = box_shape(spec, alpha, c)
        if shp.nt_cells > spec.nt or shp.nx_cells > spec.nx:
            continue
        t_anchor, x_anchor = _anchor_lists(spec, shp, stride)
        mad = box_mad(g, spec, shp, t_anchor, x_anchor)
        marks = np.full(g.shape, -np.inf)
        marks[np.ix_(t_anchor, *([x_anchor] * d))] = mad
        # point (t, x) sees anchors s in [t, t + nT - 1] and |y - x| <= half
        size = (shp.nt_cells,) + (shp.nx_cells,) * d
        origin = (_forward_origin(shp.nt_cells),) + (0,) * d
        spread = ndimage.maximum_filter(
            marks, size=size, mode=["constant"] + ["wrap"] * d, cval=-np.inf, origin=origin
        )
        out = np.maximum(out, spread)
    return out


def _forward_origin(n: int) -> int:
    """``origin`` making an ndimage window of length ``n`` cover ``[i, i + n - 1]``."""
    return -(n // 2)
