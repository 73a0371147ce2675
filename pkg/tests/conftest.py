"""Shared fixtures and field builders for the test suite."""

import numpy as np
import pytest

from glnematic.spectral import Field, make_grid


def band_limited_field(n: int, m: int, kc: int, seed: int, unit_peak: bool = True) -> Field:
    """Random real field with modes confined to |k|_inf <= kc."""
    rng = np.random.default_rng(seed)
    coeffs = np.zeros((n, n, m), dtype=np.complex128)
    for a in range(-kc, kc + 1):
        for b in range(-kc, kc + 1):
            coeffs[a % n, b % n, :] = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    phys = np.real(np.fft.ifft2(coeffs, axes=(0, 1))) * (n * n)
    if unit_peak:
        phys /= np.max(np.abs(phys))
    return Field.from_physical(make_grid(n), phys)


def rotation_matrix(seed: int = 0) -> np.ndarray:
    """A deterministic 3x3 rotation, built by QR from a seeded Gaussian."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@pytest.fixture(scope="session")
def grid16():
    return make_grid(16)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32)


@pytest.fixture(scope="session")
def grid64():
    return make_grid(64)
