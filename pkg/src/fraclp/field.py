"""Grids, H-valued space-time fields and the norms built on them.

The spatial domain is the periodic box ``[-L, L)^d`` sampled at ``nx`` points
per axis; the time window ``[a, b]`` is split into ``nt`` equal cells.  Field
values are *sample-and-hold* in time: ``values[i]`` is the value of the field
on the whole cell ``[a + i*dt, a + (i+1)*dt)`` and is sampled at the cell
midpoint.  Integrals use the rectangle rule, which is exact for such fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Raised when a grid or field violates its invariants."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Discretization of ``[a, b] x [-L, L)^d`` with ``m`` field channels."""

    dim: int = 1
    L: float = np.pi
    nx: int = 256
    a: float = 0.0
    b: float = 1.0
    nt: int = 128
    m: int = 1

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise GridError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not _is_pow2(int(self.nx)) or self.nx < 2:
            raise GridError(f"nx must be a power of two >= 2, got {self.nx}")
        if self.nt < 2:
            raise GridError(f"nt must be >= 2, got {self.nt}")
        if self.m < 1:
            raise GridError(f"m must be >= 1, got {self.m}")
        if not self.L > 0:
            raise GridError(f"L must be positive, got {self.L}")
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.b > self.a):
            raise GridError(f"need finite a < b, got a={self.a}, b={self.b}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.nx

    @property
    def dt(self) -> float:
        return (self.b - self.a) / self.nt

    @property
    def space_shape(self) -> tuple[int, ...]:
        return (self.nx,) * self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nt, *self.space_shape, self.m)

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def axis(self) -> np.ndarray:
        """Coordinates ``-L + j h`` of one spatial axis."""
        return -self.L + self.h * np.arange(self.nx)

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per spatial axis."""
        ax = self.axis()
        out = []
        for k in range(self.dim):
            shape = [1] * self.dim
            shape[k] = self.nx
            out.append(ax.reshape(shape))
        return out

    def radius(self) -> np.ndarray:
        """|x| on the spatial grid."""
        return np.sqrt(sum(c**2 for c in self.coords()))

    def times(self) -> np.ndarray:
        """Cell midpoints ``a + (i + 1/2) dt``."""
        return self.a + (np.arange(self.nt) + 0.5) * self.dt

    def cell_edges(self) -> np.ndarray:
        return self.a + np.arange(self.nt + 1) * self.dt

    def replace(self, **changes) -> "GridSpec":
        kw = dict(dim=self.dim, L=self.L, nx=self.nx, a=self.a, b=self.b, nt=self.nt, m=self.m)
        kw.update(changes)
        return GridSpec(**kw)


def _check_finite(values: np.ndarray, what: str):
    if not np.all(np.isfinite(values)):
        raise GridError(f"{what} contains NaN or Inf entries")


@dataclass(frozen=True)
class SpaceTimeField:
    """H-valued samples ``f(t_i, x_j)`` with shape ``(nt, nx, ..., nx, m)``."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.spec.shape:
            raise GridError(f"field shape {v.shape} does not match grid shape {self.spec.shape}")
        _check_finite(v, "field")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def hnorm(self) -> np.ndarray:
        """Pointwise Hilbert norm ``|f(t, x)|_H`` (Euclidean over channels)."""
        if self.spec.m == 1:
            return np.abs(self.values[..., 0])
        return np.hypot.reduce(self.values, axis=-1)

    def channel(self, k: int) -> np.ndarray:
        return self.values[..., k]

    def scaled(self, c: float) -> "SpaceTimeField":
        return SpaceTimeField(self.spec, c * self.values)

    def __add__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        if other.spec != self.spec:
            raise GridError("cannot add fields on different grids")
        return SpaceTimeField(self.spec, self.values + other.values)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "SpaceTimeField":
        return cls(spec, np.zeros(spec.shape))

    @classmethod
    def from_function(cls, spec: GridSpec, func) -> "SpaceTimeField":
        """Sample ``func(t, *coords)`` (returning ``(..., m)``) at cell midpoints."""
        t = spec.times().reshape((spec.nt,) + (1,) * spec.dim)
        coords = [c[None, ...] for c in spec.coords()]
        vals = np.asarray(func(t, *coords), dtype=float)
        vals = np.broadcast_to(vals, spec.shape).copy()
        return cls(spec, vals)


@dataclass(frozen=True)
class ScalarField:
    """Real values on the spatial grid; the time part of ``spec`` is ignored."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.spec.space_shape:
            raise GridError(f"scalar field shape {v.shape} does not match {self.spec.space_shape}")
        _check_finite(v, "scalar field")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, spec: GridSpec, func) -> "ScalarField":
        vals = np.broadcast_to(np.asarray(func(*spec.coords()), dtype=float), spec.space_shape)
        return cls(spec, vals.copy())


def lp_norm(f: SpaceTimeField | ScalarField, p: float) -> float:
    """Rectangle-rule ``L_p`` norm.

    For a :class:`SpaceTimeField` this is
    ``(sum_ij |f(t_i, x_j)|_H^p h^d dt)^(1/p)``; for a :class:`ScalarField`
    the time factor is dropped.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    spec = f.spec
    if isinstance(f, SpaceTimeField):
        mag = f.hnorm()
        weight = spec.cell_volume * spec.dt
    else:
        mag = np.abs(f.values)
        weight = spec.cell_volume
    _check_finite(mag, "field")
    peak = float(mag.max(initial=0.0))
    if peak == 0.0:
        return 0.0
    # scale by the peak so large p cannot overflow
    s = np.sum((mag.ravel() / peak) ** p)
    return peak * float(s * weight) ** (1.0 / p)


def lp_power(f: SpaceTimeField | ScalarField, p: float) -> float:
    """``lp_norm(f, p) ** p`` without the final root."""
    return lp_norm(f, p) ** p


def sobolev_norm(g: ScalarField, s: float, p: float) -> float:
    """Bessel-potential norm ``||(1 - Delta)^(s/2) g||_p``."""
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    from fraclp import spectral

    return lp_norm(spectral.bessel_potential(g, s), p)
