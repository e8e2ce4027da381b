"""Monte Carlo for the stochastic convolution ``u(t) = sum_k int_0^t T_{t-s} f^k(s) dw^k_s``.

The mild Euler scheme advances all paths at once in Fourier space::

    u_hat[n+1] = exp(-c dt |xi|^alpha) (u_hat[n] + sum_k f_hat^k[n] dW^k[n]),

with ``f^k[n]`` the (sample-and-hold) value of channel ``k`` on cell ``n``.
Per-path generators are spawned from one seed sequence, so path ``i`` is the
same whatever the ensemble size.  Only per-time norms are kept unless full
paths are requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from fraclp.field import GridSpec, SpaceTimeField, lp_power
from fraclp.spectral import CANONICAL, FourierConvention
from fraclp.sqop import _rfft_modulus


@dataclass(frozen=True)
class NoiseSpec:
    """``K`` independent Wiener channels sampled on ``nt`` steps of length ``dt``."""

    K: int
    seed: int
    dt: float
    nt: int
    antithetic: bool = False

    def __post_init__(self):
        if self.K < 1 or self.nt < 1:
            raise ValueError("K and nt must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    def increments(self, M: int, start: int = 0) -> np.ndarray:
        """``dW`` for paths ``start .. start + M - 1``; shape ``(M, nt, K)``."""
        children = np.random.SeedSequence(self.seed).spawn(start + M)[start:]
        out = np.empty((M, self.nt, self.K))
        sd = math.sqrt(self.dt)
        for i, ss in enumerate(children):
            out[i] = np.random.default_rng(ss).normal(0.0, sd, size=(self.nt, self.K))
        return -out if self.antithetic else out


@dataclass(frozen=True)
class PathResult:
    """Per-path summaries on the step times ``a + n dt``, ``n = 0..nt``.

    ``l2sq[i, n] = ||u_i(t_n)||_2^2``, ``mean[i, n]`` the spatial mean,
    ``energy[p][i] = sum_{n >= 1} dt ||u_i(t_n)||^p_{H^{alpha/2}_p}``.
    """

    spec: GridSpec
    alpha: float
    conv: FourierConvention
    l2sq: np.ndarray = field(repr=False)
    mean: np.ndarray = field(repr=False)
    energy: dict = field(repr=False)
    paths: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.l2sq)):
            raise ValueError("non-finite path norms")

    @property
    def M(self) -> int:
        return self.l2sq.shape[0]

    def head(self, M: int) -> "PathResult":
        """The first ``M`` paths; identical to simulating ``M`` paths with the same seed."""
        if not 1 <= M <= self.M:
            raise ValueError("head size out of range")
        return PathResult(
            self.spec,
            self.alpha,
            self.conv,
            self.l2sq[:M],
            self.mean[:M],
            {p: v[:M] for p, v in self.energy.items()},
            None if self.paths is None else self.paths[:M],
        )

    def ensemble(self, values: np.ndarray):
        """Sample mean and its standard error along the path axis."""
        values = np.asarray(values, dtype=float)
        m = values.mean(axis=0)
        se = values.std(axis=0, ddof=1) / math.sqrt(values.shape[0])
        return m, se


def simulate_stochastic_convolution(
    f: SpaceTimeField,
    alpha: float,
    noise: NoiseSpec,
    M: int,
    *,
    conv=CANONICAL,
    ps=(2, 4),
    keep_paths: bool = False,
    batch: int = 500,
    workers: int = 1,
) -> PathResult:
    """Simulate ``M`` paths of the mild Euler scheme driven by ``noise``."""
    spec = f.spec
    conv = FourierConvention.parse(conv)
    if M < 100:
        raise ValueError("M must be >= 100")
    if spec.m != noise.K:
        raise ValueError(f"field has {spec.m} channels but noise has K={noise.K}")
    if noise.nt != spec.nt or not math.isclose(noise.dt, spec.dt, rel_tol=1e-12):
        raise ValueError("noise time grid differs from the field grid")
    d = spec.dim
    axes = tuple(range(1, 1 + d))
    xi = _rfft_modulus(spec)
    step = np.exp(-conv.rate(alpha) * spec.dt * xi**alpha)
    bessel = (1.0 + xi**2) ** (alpha / 4.0)
    # (nt, K, *rfft)
    F = sfft.rfftn(np.moveaxis(f.values, -1, 1), axes=tuple(range(2, 2 + d)), workers=workers)
    vol = spec.cell_volume
    l2sq = np.zeros((M, spec.nt + 1))
    mean = np.zeros((M, spec.nt + 1))
    energy = {float(p): np.zeros(M) for p in ps}
    paths = np.zeros((M, spec.nt + 1) + spec.space_shape) if keep_paths else None
    for b0 in range(0, M, batch):
        nb = min(batch, M - b0)
        dW = noise.increments(nb, start=b0)
        U = np.zeros((nb,) + xi.shape, dtype=complex)
        for n in range(spec.nt):
            U = step * (U + np.tensordot(dW[:, n, :], F[n], axes=(1, 0)))
            u = sfft.irfftn(U, s=spec.space_shape, axes=axes, workers=workers)
            flat = u.reshape(nb, -1)
            l2sq[b0 : b0 + nb, n + 1] = np.sum(flat**2, axis=1) * vol
            mean[b0 : b0 + nb, n + 1] = flat.mean(axis=1)
            if energy:
                v = sfft.irfftn(U * bessel, s=spec.space_shape, axes=axes, workers=workers).reshape(nb, -1)
                av = np.abs(v)
                for p in energy:
                    energy[p][b0 : b0 + nb] += spec.dt * np.sum(av**p, axis=1) * vol
            if keep_paths:
                paths[b0 : b0 + nb, n + 1] = u
    return PathResult(spec, alpha, conv, l2sq, mean, energy, paths)


# ---------------------------------------------------------------- oracles


def _spectral_power(f: SpaceTimeField, weight=None) -> np.ndarray:
    """``sum_k |F f^k_n(xi)|^2`` normalized so that summing over ``xi`` gives ``||f^k_n||_2^2``."""
    spec = f.spec
    d = spec.dim
    F = sfft.fftn(np.moveaxis(f.values, -1, 1), axes=tuple(range(2, 2 + d)))
    P = np.sum(np.abs(F) ** 2, axis=1) * spec.cell_volume / spec.nx**d
    if weight is not None:
        P = P * weight
    return P


def isometry_oracle(f: SpaceTimeField, alpha: float, *, conv=CANONICAL, rule: str = "scheme", weight=None) -> np.ndarray:
    """``E ||u(t_n)||_2^2`` for ``n = 0..nt``.

    ``rule="scheme"`` is the exact expectation of the Euler scheme,
    ``sum_{j<n} dt ||T_{(n-j) dt} f_j||^2``.  ``rule="exact"`` integrates the
    continuum ``int_0^{t_n} ||T_{t_n - s} f(s)||^2 ds`` exactly over each cell.
    ``weight`` is an optional extra multiplier on ``|F f|^2`` (e.g. a Bessel
    potential squared).
    """
    spec = f.spec
    conv = FourierConvention.parse(conv)
    xi_full = np.sqrt(sum(g**2 for g in np.meshgrid(*([sfft.fftfreq(spec.nx, 1.0 / spec.nx) * np.pi / spec.L] * spec.dim), indexing="ij")))
    lam = 2.0 * conv.rate(alpha) * xi_full**alpha
    P = _spectral_power(f, weight)
    dt = spec.dt
    out = np.zeros(spec.nt + 1)
    for n in range(1, spec.nt + 1):
        lags = n - np.arange(n)  # lag in steps for cells j = 0..n-1
        if rule == "scheme":
            kern = dt * np.exp(-np.multiply.outer(lags * dt, lam))
        elif rule == "exact":
            lo = np.multiply.outer((lags - 1) * dt, lam)
            hi = np.multiply.outer(lags * dt, lam)
            with np.errstate(invalid="ignore", divide="ignore"):
                kern = np.where(lam > 0, (np.exp(-lo) - np.exp(-hi)) / np.where(lam > 0, lam, 1.0), dt)
        else:
            raise ValueError(f"unknown rule {rule!r}")
        out[n] = float(np.sum(kern * P[:n]))
    return out


@dataclass(frozen=True)
class IsometryReport:
    times: np.ndarray = field(repr=False)
    mc: np.ndarray = field(repr=False)
    se: np.ndarray = field(repr=False)
    oracle: np.ndarray = field(repr=False)
    M: int
    n_sigma: float = 3.0

    @property
    def z(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.se > 0, (self.mc - self.oracle) / self.se, 0.0)

    @property
    def final_z(self) -> float:
        return float(self.z[-1])

    @property
    def final_rel(self) -> float:
        o = self.oracle[-1]
        return abs(self.mc[-1] - o) / o if o else abs(self.mc[-1])

    @property
    def small_ensemble(self) -> bool:
        return self.M < 1000

    @property
    def passed(self) -> bool:
        return abs(self.final_z) <= self.n_sigma


def ito_isometry_check(result: PathResult, f: SpaceTimeField, alpha: float) -> IsometryReport:
    """Monte Carlo ``E ||u(T)||_2^2`` against the scheme's exact expectation."""
    oracle = isometry_oracle(f, alpha, conv=result.conv, rule="scheme")
    mc, se = result.ensemble(result.l2sq)
    times = f.spec.a + f.spec.dt * np.arange(f.spec.nt + 1)
    return IsometryReport(times, mc, se, oracle, result.M)


@dataclass(frozen=True)
class EnergyReport:
    p: float
    lhs: float
    lhs_se: float
    rhs: float
    M: int
    exact_lhs: float | None = None

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs else 0.0

    @property
    def ratio_se(self) -> float:
        return self.lhs_se / self.rhs if self.rhs else 0.0

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.ratio) and np.isfinite(self.ratio_se))


def energy_inequality_check(result: PathResult, f: SpaceTimeField, alpha: float, p: float) -> EnergyReport:
    """``E int_0^T ||u||^p_{H^{alpha/2}_p} dt`` over ``int_0^T || |f|_H ||_p^p ds``.

    For ``p = 2`` the exact left side (from the isometry oracle with the Bessel
    multiplier) is attached.
    """
    p = float(p)
    if p not in result.energy:
        raise ValueError(f"simulation did not record p={p}")
    rhs = lp_power(f, p)
    if rhs == 0:
        return EnergyReport(p, 0.0, 0.0, 0.0, result.M, 0.0 if p == 2 else None)
    lhs, se = result.ensemble(result.energy[p])
    exact = None
    if p == 2:
        spec = f.spec
        k = sfft.fftfreq(spec.nx, 1.0 / spec.nx) * np.pi / spec.L
        xi2 = sum(g**2 for g in np.meshgrid(*([k] * spec.dim), indexing="ij"))
        w = (1.0 + xi2) ** (alpha / 2.0)
        exact = float(spec.dt * np.sum(isometry_oracle(f, alpha, conv=result.conv, weight=w)[1:]))
    return EnergyReport(p, float(lhs), float(se), rhs, result.M, exact)


def energy_stability(small: EnergyReport, large: EnergyReport, n_sigma: float = 3.0) -> bool:
    """Ratios at ``M`` and ``2M`` agree within ``n_sigma`` combined standard errors."""
    if not (small.finite and large.finite):
        return False
    return abs(large.ratio - small.ratio) <= n_sigma * math.hypot(small.ratio_se, large.ratio_se)
