"""Fourier-side primitives on the 2-torus (R/2pi Z)^2.

Equispaced n x n collocation grid with full complex-FFT storage, and the
mode-wise operators everything else is built from: transforms, derivatives,
Leray projection, 2/3-rule dealiasing, rectangle-rule quadrature.

Conventions, fixed project-wide:

* Coefficients are mean-normalized: ``f_hat[0, 0]`` equals the mean of
  ``f``, so Parseval reads ``(2pi)^2 * sum |f_hat|^2 = integral |f|^2``.
* The per-axis mode set is {-n/2+1, ..., n/2}; the single Nyquist mode is
  stored with positive sign.
* Odd-derivative multipliers zero the Nyquist mode (its sine interpolant
  vanishes on the nodes, and the coefficient would break conjugate
  symmetry).  The same derivative wavenumbers drive divergence and the
  Leray projection, so ``div(leray_project(u)) == 0`` holds mode-wise for
  every input, Nyquist included.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
TORUS_AREA = TWO_PI**2


@dataclass(frozen=True)
class SpectralGrid:
    """Torus discretization: nodes, wavenumber tables, dealias mask.

    ``modes`` is the per-axis integer mode set {-n/2+1, ..., n/2}.  The
    ``k*`` tables are broadcastable float copies; ``kd*`` are the
    odd-derivative variants with the Nyquist entry zeroed.  ``inv_ksq_d``
    maps modes with vanishing derivative wavenumber to 0, which makes the
    zero mode (and pure-Nyquist modes) pass through Poisson solves and the
    Leray projection untouched.
    """

    n: int
    h: float
    modes: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    kd1: np.ndarray
    kd2: np.ndarray
    ksq: np.ndarray
    ksq_d: np.ndarray
    inv_ksq_d: np.ndarray
    dealias_mask: np.ndarray
    x1: np.ndarray
    x2: np.ndarray


def make_grid(n: int) -> SpectralGrid:
    """Build the discretization for an n x n periodic grid (n even, >= 8)."""
    if n != int(n) or n % 2 != 0:
        raise ValueError(f"grid size must be even, got {n}")
    n = int(n)
    if n < 8:
        raise ValueError(f"grid size must be at least 8, got {n}")

    modes = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    modes[n // 2] = n // 2

    k1 = modes.astype(np.float64)[:, None]
    k2 = modes.astype(np.float64)[None, :]
    kd = modes.astype(np.float64).copy()
    kd[n // 2] = 0.0
    kd1 = kd[:, None]
    kd2 = kd[None, :]

    ksq = k1**2 + k2**2
    ksq_d = kd1**2 + kd2**2
    with np.errstate(divide="ignore"):
        inv_ksq_d = np.where(ksq_d > 0.0, 1.0 / np.where(ksq_d > 0.0, ksq_d, 1.0), 0.0)

    cutoff = n / 3.0
    dealias_mask = (np.abs(k1) <= cutoff) & (np.abs(k2) <= cutoff)

    h = TWO_PI / n
    x = h * np.arange(n, dtype=np.float64)
    return SpectralGrid(
        n=n,
        h=h,
        modes=modes,
        k1=k1,
        k2=k2,
        kd1=kd1,
        kd2=kd2,
        ksq=ksq,
        ksq_d=ksq_d,
        inv_ksq_d=inv_ksq_d,
        dealias_mask=dealias_mask,
        x1=x[:, None],
        x2=x[None, :],
    )


def to_spectral(values: np.ndarray) -> np.ndarray:
    """Forward transform of (n, n, ...) samples, mean-normalized."""
    n = values.shape[0]
    return np.fft.fft2(values, axes=(0, 1)) / (n * n)


def to_physical(coeffs: np.ndarray) -> np.ndarray:
    """Inverse transform back to real node samples."""
    n = coeffs.shape[0]
    return np.real(np.fft.ifft2(coeffs, axes=(0, 1))) * (n * n)


class Field:
    """m-component periodic field with dual physical/spectral representation.

    Either representation may be absent; the missing one is computed on
    first access and cached, so a Field behaves like an immutable value
    offering two views of the same data.  Physical data is float64 of shape
    (n, n, m), spectral data complex128 of the same shape.
    """

    __slots__ = ("grid", "_physical", "_spectral")

    def __init__(self, grid: SpectralGrid, physical=None, spectral=None):
        if physical is None and spectral is None:
            raise ValueError("a Field needs at least one representation")
        self.grid = grid
        self._physical = physical
        self._spectral = spectral

    @classmethod
    def from_physical(cls, grid: SpectralGrid, values) -> "Field":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 2:
            values = values[:, :, None]
        cls._check_shape(grid, values)
        return cls(grid, physical=values)

    @classmethod
    def from_spectral(cls, grid: SpectralGrid, coeffs) -> "Field":
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.ndim == 2:
            coeffs = coeffs[:, :, None]
        cls._check_shape(grid, coeffs)
        return cls(grid, spectral=coeffs)

    @staticmethod
    def _check_shape(grid: SpectralGrid, arr: np.ndarray) -> None:
        if arr.ndim != 3 or arr.shape[0] != grid.n or arr.shape[1] != grid.n:
            raise ValueError(
                f"expected shape ({grid.n}, {grid.n}, m), got {arr.shape}"
            )
        if arr.shape[2] not in (1, 2, 3):
            raise ValueError(f"component count must be 1, 2 or 3, got {arr.shape[2]}")

    @property
    def m(self) -> int:
        arr = self._physical if self._physical is not None else self._spectral
        return arr.shape[2]

    @property
    def valid_repr(self) -> str:
        if self._physical is not None and self._spectral is not None:
            return "both"
        return "physical" if self._physical is not None else "spectral"

    @property
    def physical(self) -> np.ndarray:
        if self._physical is None:
            self._physical = to_physical(self._spectral)
        return self._physical

    @property
    def spectral(self) -> np.ndarray:
        if self._spectral is None:
            self._spectral = to_spectral(self._physical)
        return self._spectral


def forward_transform(f: Field) -> Field:
    return Field.from_spectral(f.grid, f.spectral)


def inverse_transform(f: Field) -> Field:
    return Field.from_physical(f.grid, f.physical)


def gradient(f: Field) -> Field:
    """Spectral gradient of a scalar field, returned as a 2-component field."""
    if f.m != 1:
        raise ValueError("gradient expects a scalar field")
    g = f.grid
    fh = f.spectral[:, :, 0]
    out = np.empty((g.n, g.n, 2), dtype=np.complex128)
    out[:, :, 0] = 1j * g.kd1 * fh
    out[:, :, 1] = 1j * g.kd2 * fh
    return Field.from_spectral(g, out)


def laplacian(f: Field) -> Field:
    g = f.grid
    return Field.from_spectral(g, -g.ksq[:, :, None] * f.spectral)


def perp_gradient(f: Field) -> Field:
    """Rotated gradient (-d2 f, d1 f); always divergence-free."""
    if f.m != 1:
        raise ValueError("perp_gradient expects a scalar field")
    g = f.grid
    fh = f.spectral[:, :, 0]
    out = np.empty((g.n, g.n, 2), dtype=np.complex128)
    out[:, :, 0] = -1j * g.kd2 * fh
    out[:, :, 1] = 1j * g.kd1 * fh
    return Field.from_spectral(g, out)


def divergence(u: Field) -> Field:
    if u.m != 2:
        raise ValueError("divergence expects a 2-component field")
    g = u.grid
    uh = u.spectral
    dh = 1j * (g.kd1 * uh[:, :, 0] + g.kd2 * uh[:, :, 1])
    return Field.from_spectral(g, dh[:, :, None])


def project_solenoidal(grid: SpectralGrid, uh: np.ndarray) -> np.ndarray:
    """Array-level Leray projection of (n, n, 2) spectral data."""
    along_k = grid.kd1 * uh[:, :, 0] + grid.kd2 * uh[:, :, 1]
    factor = along_k * grid.inv_ksq_d
    out = np.empty_like(uh)
    out[:, :, 0] = uh[:, :, 0] - grid.kd1 * factor
    out[:, :, 1] = uh[:, :, 1] - grid.kd2 * factor
    return out


def leray_project(u: Field) -> Field:
    """Mode-wise projection onto divergence-free fields; zero mode untouched."""
    if u.m != 2:
        raise ValueError("leray_project expects a 2-component field")
    return Field.from_spectral(u.grid, project_solenoidal(u.grid, u.spectral))


def dealias(f: Field) -> Field:
    """Zero all modes with max(|k1|, |k2|) > n/3."""
    g = f.grid
    return Field.from_spectral(g, f.spectral * g.dealias_mask[:, :, None])


def integrate(f: Field) -> float:
    """Rectangle-rule torus integral; spectrally exact for band-limited f."""
    if f.m != 1:
        raise ValueError("integrate expects a scalar field")
    return float(f.grid.h**2 * np.sum(f.physical))


def integrate_samples(grid: SpectralGrid, values: np.ndarray) -> float:
    """Rectangle rule on a raw (n, n) sample array."""
    return float(grid.h**2 * np.sum(values))
