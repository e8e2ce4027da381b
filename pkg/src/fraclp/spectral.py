"""Discrete Fourier plumbing and radial Fourier multipliers.

Internally every transform uses the *canonical* convention

    F[h](xi) = int e^{-i xi.x} h(x) dx,     h(x) = (2 pi)^{-d} int e^{i xi.x} F[h](xi) dxi,

sampled at the wavenumbers ``xi_k = pi k / L``, ``k in [-nx/2, nx/2)^d``.
Multipliers are applied to the raw FFT coefficients, so the phase factor
from the shifted grid origin cancels.

Two conventions are exposed for the alpha-stable semigroup:

* ``CANONICAL``: multiplier ``exp(-t |xi|^alpha)``.
* ``PAPER``: multiplier ``exp(-(2 pi)^alpha t |xi|^alpha)``.  Its kernel
  ``p(t, x) = int e^{i xi.x} exp(-(2 pi)^alpha t |xi|^alpha) dxi`` has total
  mass ``(2 pi)^d``, so literal convolution with ``p`` equals
  ``paper_convolution_mass(d)`` times the multiplier operator; see
  :func:`paper_convolution_mass`.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft as sfft

from fraclp.field import GridSpec, ScalarField


class ResolutionWarning(UserWarning):
    """The semigroup time is below what the grid can resolve."""


class FourierConvention(enum.Enum):
    CANONICAL = "canonical"
    PAPER = "paper"

    def rate(self, alpha: float) -> float:
        """Factor ``c`` in the semigroup symbol ``exp(-c t |xi|^alpha)``."""
        return 1.0 if self is FourierConvention.CANONICAL else (2.0 * np.pi) ** alpha

    @classmethod
    def parse(cls, value) -> "FourierConvention":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


CANONICAL = FourierConvention.CANONICAL
PAPER = FourierConvention.PAPER


def paper_convolution_mass(d: int) -> float:
    """Total mass ``int p(t, x) dx = (2 pi)^d`` of the paper-convention kernel."""
    return (2.0 * np.pi) ** d


# ---------------------------------------------------------------- wavenumbers


def wavenumbers_1d(spec: GridSpec) -> np.ndarray:
    """``pi k / L`` in FFT order."""
    return sfft.fftfreq(spec.nx, d=1.0 / spec.nx) * (np.pi / spec.L)


def wavevectors(spec: GridSpec) -> list[np.ndarray]:
    """Broadcastable per-axis wavenumber arrays in FFT order."""
    k = wavenumbers_1d(spec)
    out = []
    for ax in range(spec.dim):
        shape = [1] * spec.dim
        shape[ax] = spec.nx
        out.append(k.reshape(shape))
    return out


def wavenumber_modulus(spec: GridSpec) -> np.ndarray:
    """``|xi|`` on the full FFT grid."""
    return np.sqrt(sum(k**2 for k in wavevectors(spec)))


def _origin_phase(spec: GridSpec) -> np.ndarray:
    # e^{i xi_k L} = (-1)^k for the shifted origin x_0 = -L
    k = np.rint(sfft.fftfreq(spec.nx, d=1.0 / spec.nx)).astype(int)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    out = np.ones(spec.space_shape)
    for ax in range(spec.dim):
        shape = [1] * spec.dim
        shape[ax] = spec.nx
        out = out * sign.reshape(shape)
    return out


# ---------------------------------------------------------------- transforms


@dataclass(frozen=True)
class Spectrum:
    """Canonical transform samples ``F[g](xi_k)`` on the FFT-ordered grid."""

    spec: GridSpec
    coeffs: np.ndarray

    def xi(self) -> np.ndarray:
        return wavenumber_modulus(self.spec)


def _axes(spec: GridSpec) -> tuple[int, ...]:
    return tuple(range(-spec.dim, 0))


def dft_forward(g: ScalarField) -> Spectrum:
    """Rectangle-rule approximation of the canonical transform at ``xi_k``."""
    spec = g.spec
    if np.shape(g.values) != spec.space_shape:
        raise ValueError("shape mismatch between values and grid")
    raw = sfft.fftn(g.values, axes=_axes(spec))
    return Spectrum(spec, spec.cell_volume * _origin_phase(spec) * raw)


def dft_inverse(s: Spectrum, *, imag_tol: float | None = None) -> ScalarField:
    """Inverse of :func:`dft_forward`; the imaginary residue is discarded.

    If ``imag_tol`` is given the residue is checked against it first.
    """
    spec = s.spec
    if s.coeffs.shape != spec.space_shape:
        raise ValueError("spectrum shape does not match grid")
    vals = sfft.ifftn(s.coeffs * _origin_phase(spec), axes=_axes(spec)) / spec.cell_volume
    if imag_tol is not None:
        resid = float(np.max(np.abs(vals.imag)))
        if resid > imag_tol:
            raise ValueError(f"imaginary residue {resid:.3e} exceeds {imag_tol:.1e}")
    return ScalarField(spec, vals.real)


def plancherel_sum(s: Spectrum) -> float:
    """``(2 pi)^-d sum |F g|^2 dxi^d``, equal to ``||g||_2^2`` on the grid."""
    dxi = np.pi / s.spec.L
    return float(np.sum(np.abs(s.coeffs) ** 2) * (dxi / (2.0 * np.pi)) ** s.spec.dim)


# ---------------------------------------------------------------- symbols


def laplacian_power_symbol(xi, beta: float):
    """``|xi|^beta`` (``0^0 = 1``)."""
    return np.power(xi, beta) if beta != 0 else np.ones_like(xi)


def semigroup_symbol(xi, t: float, alpha: float, conv=CANONICAL):
    conv = FourierConvention.parse(conv)
    return np.exp(-conv.rate(alpha) * t * np.power(xi, alpha))


def frac_deriv_semigroup_symbol(xi, t, alpha: float, beta: float, conv=CANONICAL):
    """``|xi|^beta exp(-c t |xi|^alpha)``; ``t`` may be an array broadcast against ``xi``."""
    conv = FourierConvention.parse(conv)
    return laplacian_power_symbol(xi, beta) * np.exp(-conv.rate(alpha) * t * np.power(xi, alpha))


def bessel_potential_symbol(xi, s: float):
    return np.power(1.0 + xi**2, s / 2.0)


@dataclass(frozen=True)
class MultiplierSpec:
    """A radial real symbol ``xi -> m(|xi|)`` together with a label."""

    name: str
    symbol: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def laplacian_power(cls, beta: float) -> "MultiplierSpec":
        _check_beta(beta)
        return cls(f"|xi|^{beta}", lambda xi: laplacian_power_symbol(xi, beta))

    @classmethod
    def semigroup(cls, t: float, alpha: float, conv=CANONICAL) -> "MultiplierSpec":
        _check_t_alpha(t, alpha)
        return cls(f"exp(-t|xi|^{alpha})", lambda xi: semigroup_symbol(xi, t, alpha, conv))

    @classmethod
    def deriv_semigroup(cls, t: float, alpha: float, beta: float, conv=CANONICAL) -> "MultiplierSpec":
        _check_t_alpha(t, alpha)
        _check_beta(beta)
        return cls(
            f"|xi|^{beta} exp(-t|xi|^{alpha})",
            lambda xi: frac_deriv_semigroup_symbol(xi, t, alpha, beta, conv),
        )

    @classmethod
    def bessel_potential(cls, s: float) -> "MultiplierSpec":
        if not s > 0:
            raise ValueError(f"s must be positive, got {s}")
        return cls(f"(1+|xi|^2)^{s / 2}", lambda xi: bessel_potential_symbol(xi, s))


def _check_beta(beta):
    if not beta >= 0:
        raise ValueError(f"beta must be >= 0, got {beta}")


def _check_t_alpha(t, alpha):
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")


def apply_symbol(values: np.ndarray, spec: GridSpec, symbol: np.ndarray) -> np.ndarray:
    """Apply a multiplier array to ``values`` whose trailing axes are spatial.

    Leading axes are treated as a batch.  The result is complex; callers take
    the real part once they have checked (or trust) that the symbol is radial
    and real.
    """
    axes = _axes(spec)
    return sfft.ifftn(symbol * sfft.fftn(values, axes=axes), axes=axes)


def apply_multiplier(g: ScalarField, mult: MultiplierSpec) -> ScalarField:
    out = apply_symbol(g.values, g.spec, mult.symbol(wavenumber_modulus(g.spec)))
    return ScalarField(g.spec, out.real)


def imag_residue(g: ScalarField, mult: MultiplierSpec) -> float:
    """Largest imaginary part produced by ``mult`` on ``g`` before truncation."""
    out = apply_symbol(g.values, g.spec, mult.symbol(wavenumber_modulus(g.spec)))
    return float(np.max(np.abs(out.imag)))


# ---------------------------------------------------------------- operators


def resolution_time(spec: GridSpec, alpha: float, conv=CANONICAL) -> float:
    """``t_min = (h / pi)^alpha / c``: below it the symbol is ~1 on the resolved band."""
    conv = FourierConvention.parse(conv)
    return (spec.h / np.pi) ** alpha / conv.rate(alpha)


def _warn_resolution(spec, t, alpha, conv):
    tmin = resolution_time(spec, alpha, conv)
    if t < tmin:
        warnings.warn(
            f"t={t:.3e} is below the grid resolution time {tmin:.3e}; "
            "the semigroup acts almost as the identity on the resolved band",
            ResolutionWarning,
            stacklevel=3,
        )


def frac_laplacian(g: ScalarField, beta: float) -> ScalarField:
    """``(-Delta)^{beta/2} g`` via the symbol ``|xi|^beta``."""
    return apply_multiplier(g, MultiplierSpec.laplacian_power(beta))


def semigroup_apply(g: ScalarField, t: float, alpha: float, conv=CANONICAL) -> ScalarField:
    """``T_t g`` as the multiplier ``exp(-c t |xi|^alpha)``.

    The zero mode is untouched, so the spatial mean is preserved in both
    conventions.
    """
    mult = MultiplierSpec.semigroup(t, alpha, conv)
    _warn_resolution(g.spec, t, alpha, conv)
    return apply_multiplier(g, mult)


def frac_deriv_semigroup(g: ScalarField, t: float, alpha: float, beta: float, conv=CANONICAL) -> ScalarField:
    """``(-Delta)^{beta/2} T_t g`` in a single pass."""
    mult = MultiplierSpec.deriv_semigroup(t, alpha, beta, conv)
    _warn_resolution(g.spec, t, alpha, conv)
    return apply_multiplier(g, mult)


def bessel_potential(g: ScalarField, s: float) -> ScalarField:
    """``(1 - Delta)^{s/2} g``."""
    return apply_multiplier(g, MultiplierSpec.bessel_potential(s))


def paper_kernel_convolution(g: ScalarField, kernel: np.ndarray) -> ScalarField:
    """Periodic quadrature ``h^d sum_y K(x - y) g(y)`` of a kernel sampled on the grid.

    ``kernel`` holds ``K`` at the grid points ``x_j`` (origin at index
    ``nx/2`` on every axis).  Used to check the mass factor of the paper
    convention against :func:`semigroup_apply`.
    """
    spec = g.spec
    axes = _axes(spec)
    centred = np.fft.ifftshift(kernel, axes=axes)
    out = sfft.ifftn(sfft.fftn(centred, axes=axes) * sfft.fftn(g.values, axes=axes), axes=axes)
    return ScalarField(spec, spec.cell_volume * out.real)
