"""Seeded families of smooth, compactly supported test fields.

Every generated field is a finite sum ``sum_q T_q(t) X_q(x)`` per channel,
where ``T_q`` carries a C-infinity bump vanishing on the outer 10% of the
support window and ``X_q`` is a zero-mean trigonometric polynomial of the
periodic box.  Fields are continuous callables, so the same member can be
sampled on any grid (refinement rungs, dilated companion grids).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from fraclp.field import GridSpec, SpaceTimeField


class FamilyTag(enum.Enum):
    SMOOTH_BUMP = "smooth_bump"
    RANDOM_BANDLIMITED = "random_bandlimited"
    SINGLE_MODE = "single_mode"
    TENSOR_SEPARABLE = "tensor_separable"

    @classmethod
    def parse(cls, value) -> "FamilyTag":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def time_bump(t, a: float, b: float):
    """``exp(1 - 1/(1 - u^2))`` on the middle 80% of ``[a, b]``, zero elsewhere; peak value 1."""
    t = np.asarray(t, dtype=float)
    u = ((t - a) / (b - a) - 0.5) / 0.4
    inside = np.abs(u) < 1
    out = np.zeros(np.shape(t))
    ui = u[inside] if np.ndim(u) else u
    val = np.exp(1.0 - 1.0 / (1.0 - np.square(ui)))
    if np.ndim(u):
        out[inside] = val
        return out
    return val if inside else 0.0


@dataclass(frozen=True)
class TrigPoly:
    """``sum_n a_n cos(pi n.x / L) + b_n sin(pi n.x / L)`` over integer vectors ``n != 0``."""

    L: float
    modes: np.ndarray  # (n_modes, d) integer
    a: np.ndarray
    b: np.ndarray

    def __call__(self, *coords):
        out = 0.0
        k = np.pi / self.L
        for n, ca, cb in zip(self.modes, self.a, self.b):
            phase = sum(k * int(ni) * x for ni, x in zip(n, coords))
            out = out + ca * np.cos(phase) + cb * np.sin(phase)
        return out


@dataclass(frozen=True)
class FieldGenerator:
    """Continuous field ``f(t, x)`` with ``m`` channels, each ``sum_q T_q(t) X_q(x)``."""

    support: tuple
    channels: tuple = field(repr=False)  # per channel: tuple of (time_fn, TrigPoly)

    @property
    def m(self) -> int:
        return len(self.channels)

    def __call__(self, t, *coords):
        outs = []
        for terms in self.channels:
            acc = 0.0
            for tfun, xfun in terms:
                acc = acc + tfun(t) * xfun(*coords)
            outs.append(np.asarray(acc, dtype=float))
        shape = np.broadcast_shapes(*(o.shape for o in outs))
        return np.stack([np.broadcast_to(o, shape) for o in outs], axis=-1)

    def sample(self, spec: GridSpec) -> SpaceTimeField:
        if spec.m != self.m:
            spec = spec.replace(m=self.m)
        return SpaceTimeField.from_function(spec, self)

    def dilated(self, c: float, alpha: float) -> "DilatedGenerator":
        return DilatedGenerator(self, c, alpha)


@dataclass(frozen=True)
class DilatedGenerator:
    """``f_c(t, x) = f(c^alpha t, c x)``."""

    base: FieldGenerator
    c: float
    alpha: float

    @property
    def m(self) -> int:
        return self.base.m

    def __call__(self, t, *coords):
        return self.base(self.c**self.alpha * t, *(self.c * x for x in coords))

    def sample(self, spec: GridSpec) -> SpaceTimeField:
        if spec.m != self.m:
            spec = spec.replace(m=self.m)
        return SpaceTimeField.from_function(spec, self)


def _mode_vectors(d: int, band: int) -> np.ndarray:
    """Integer vectors with ``1 <= |n|_inf <= band``, one of each ``+-n`` pair."""
    rng = np.arange(-band, band + 1)
    grid = np.stack(np.meshgrid(*([rng] * d), indexing="ij"), axis=-1).reshape(-1, d)
    keep = []
    for n in grid:
        nz = np.nonzero(n)[0]
        if nz.size and n[nz[0]] > 0:
            keep.append(n)
    return np.array(keep, dtype=int)


@dataclass(frozen=True)
class TestFieldFamily:
    """A seeded generator family; member ``i`` is reproducible from ``(seed, i)``.

    ``band`` is the largest integer wavenumber index per axis; keep it at or
    below a quarter of the coarsest ``nx`` so every rung resolves it.
    """

    tag: FamilyTag
    seed: int = 0
    dim: int = 1
    m: int = 1
    band: int = 8
    L: float = np.pi
    support: tuple = (0.0, 1.0)
    amplitude: str = "inverse"

    __test__ = False  # not a pytest class

    def __post_init__(self):
        object.__setattr__(self, "tag", FamilyTag.parse(self.tag))
        if self.band < 1:
            raise ValueError("band must be >= 1")
        if self.amplitude not in ("inverse", "flat"):
            raise ValueError(f"unknown amplitude law {self.amplitude!r}")
        if not self.support[1] > self.support[0]:
            raise ValueError("support window must have positive length")

    def check_grid(self, spec: GridSpec):
        """Reject grids whose Nyquist/2 falls below the family band."""
        if spec.L != self.L or spec.dim != self.dim:
            raise ValueError("grid box or dimension differs from the family")
        if self.band > spec.nx // 4:
            raise ValueError(f"band {self.band} exceeds Nyquist/2 of nx={spec.nx}")

    def _rng(self, i: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, i]))

    def _coeffs(self, rng, modes):
        k = np.sqrt(np.sum(modes.astype(float) ** 2, axis=1))
        scale = 1.0 / k if self.amplitude == "inverse" else np.ones_like(k)
        return rng.normal(size=k.size) * scale, rng.normal(size=k.size) * scale

    def member(self, i: int) -> FieldGenerator:
        rng = self._rng(i)
        a0, b0 = self.support
        d = self.dim

        def bump(t):
            return time_bump(t, a0, b0)

        channels = []
        for _ in range(self.m):
            if self.tag is FamilyTag.SINGLE_MODE:
                n = np.zeros((1, d), dtype=int)
                n[0, 0] = rng.integers(1, self.band + 1)
                if d > 1:
                    n[0, 1:] = rng.integers(0, self.band + 1, size=d - 1)
                th = rng.uniform(0, 2 * np.pi)
                poly = TrigPoly(self.L, n, np.array([np.cos(th)]), np.array([np.sin(th)]))
                channels.append(((bump, poly),))
            elif self.tag is FamilyTag.SMOOTH_BUMP:
                modes = _mode_vectors(d, self.band)
                x0 = rng.uniform(-self.L, self.L, size=d)
                width = rng.uniform(0.2, 0.6)
                xi = np.pi / self.L * modes
                env = np.exp(-0.5 * width**2 * np.sum(xi**2, axis=1))
                ph = xi @ x0
                poly = TrigPoly(self.L, modes, env * np.cos(ph), env * np.sin(ph))
                channels.append(((bump, poly),))
            elif self.tag is FamilyTag.RANDOM_BANDLIMITED:
                modes = _mode_vectors(d, self.band)
                p0 = TrigPoly(self.L, modes, *self._coeffs(rng, modes))
                p1 = TrigPoly(self.L, modes, *self._coeffs(rng, modes))
                w = int(rng.integers(1, 4))
                th = rng.uniform(0, 2 * np.pi)

                def t1(t, w=w, th=th):
                    return bump(t) * np.sin(2 * np.pi * w * (t - a0) / (b0 - a0) + th)

                channels.append(((bump, p0), (t1, p1)))
            else:
                modes1 = np.arange(1, self.band + 1)[:, None]
                factors = []
                for ax in range(d):
                    n = np.zeros((self.band, d), dtype=int)
                    n[:, ax] = modes1[:, 0]
                    factors.append(TrigPoly(self.L, n, *self._coeffs(rng, modes1)))
                channels.append(((bump, _Product(tuple(factors))),))
        return FieldGenerator((a0, b0), tuple(channels))

    def sample(self, spec: GridSpec, i: int) -> SpaceTimeField:
        self.check_grid(spec)
        return self.member(i).sample(spec)


@dataclass(frozen=True)
class _Product:
    factors: tuple

    def __call__(self, *coords):
        out = 1.0
        for f in self.factors:
            out = out * f(*coords)
        return out
