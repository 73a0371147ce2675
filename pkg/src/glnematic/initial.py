"""Initial-data generators.

Every generator returns a state with pointwise unit director (to 1e-12)
and a projected, mean-free velocity (spectral divergence below 1e-12).
"""

from __future__ import annotations

import numpy as np

from .spectral import TWO_PI, Field, SpectralGrid, project_solenoidal, to_spectral
from .state import SimState


def _taylor_green(grid: SpectralGrid, amplitude: float) -> np.ndarray:
    x, y = grid.x1, grid.x2
    v = np.empty((grid.n, grid.n, 2))
    v[:, :, 0] = amplitude * np.sin(x) * np.cos(y)
    v[:, :, 1] = -amplitude * np.cos(x) * np.sin(y)
    return v


def _finalize_velocity(grid: SpectralGrid, v_phys: np.ndarray) -> Field:
    vh = project_solenoidal(grid, to_spectral(v_phys))
    vh[0, 0, :] = 0.0
    return Field.from_spectral(grid, vh)


def gen_constant(grid: SpectralGrid, params: dict, rng) -> tuple:
    direction = np.asarray(params.get("direction", (0.0, 0.0, 1.0)), dtype=np.float64)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        raise ValueError("constant generator needs a nonzero direction")
    direction = direction / norm
    d = np.broadcast_to(direction, (grid.n, grid.n, 3)).copy()
    v = np.zeros((grid.n, grid.n, 2))
    return v, d


def gen_smooth_wave(grid: SpectralGrid, params: dict, rng) -> tuple:
    """Unit director from two smooth angle fields plus a Taylor-Green flow."""
    beta0 = float(params.get("beta0", np.pi / 3.0))
    a = float(params.get("a", 0.7))
    b = float(params.get("b", 0.5))
    amplitude = float(params.get("amplitude", 0.5))

    x, y = grid.x1, grid.x2
    beta = beta0 + a * np.sin(x) * np.sin(y)
    gamma = b * (np.sin(x) + np.cos(y))
    d = np.empty((grid.n, grid.n, 3))
    d[:, :, 0] = np.sin(beta) * np.cos(gamma)
    d[:, :, 1] = np.sin(beta) * np.sin(gamma)
    d[:, :, 2] = np.cos(beta)
    return _taylor_green(grid, amplitude), d


def _smooth_ramp(s: np.ndarray) -> np.ndarray:
    """C-infinity monotone ramp with ramp(0)=0, ramp(1)=1, flat at both ends."""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(s > 0.0, np.exp(-1.0 / np.where(s > 0.0, s, 1.0)), 0.0)
        f1 = np.where(s < 1.0, np.exp(-1.0 / np.where(s < 1.0, 1.0 - s, 1.0)), 0.0)
    return f / (f + f1)


def gen_defect_pair(grid: SpectralGrid, params: dict, rng) -> tuple:
    """Two opposite unit-winding bubbles, energy concentrated near two points.

    Inside each disk of radius sigma the director performs a full sweep of
    the sphere (polar angle pi * ramp(rho/sigma), azimuth = winding * theta);
    outside both disks it sits at the antipode of the disk-center value, so
    the field is globally smooth with |d| == 1 everywhere.
    """
    sigma = float(params.get("sigma", 0.5))
    if not (0.0 < sigma < np.pi / 2.0):
        raise ValueError(f"defect disk radius must lie in (0, pi/2), got {sigma}")
    centers = params.get(
        "centers", ((np.pi / 2.0, np.pi), (3.0 * np.pi / 2.0, np.pi))
    )
    windings = params.get("windings", (1, -1))
    if len(centers) != 2 or len(windings) != 2:
        raise ValueError("defect-pair needs exactly two centers and windings")
    c0 = np.asarray(centers[0], dtype=np.float64)
    c1 = np.asarray(centers[1], dtype=np.float64)
    sep = (c0 - c1 + np.pi) % TWO_PI - np.pi
    if float(np.hypot(*sep)) < 2.0 * sigma:
        raise ValueError("defect disks overlap; reduce sigma or move centers")

    d = np.zeros((grid.n, grid.n, 3))
    d[:, :, 2] = -1.0  # background: antipode of the disk-center value
    x, y = grid.x1, grid.x2
    for center, m in zip((c0, c1), windings):
        dx = (x - center[0] + np.pi) % TWO_PI - np.pi
        dy = (y - center[1] + np.pi) % TWO_PI - np.pi
        rho = np.hypot(dx, dy)
        inside = rho < sigma
        theta = np.arctan2(dy, dx)
        ang = np.pi * _smooth_ramp(rho / sigma)
        d0 = np.sin(ang) * np.cos(m * theta)
        d1 = np.sin(ang) * np.sin(m * theta)
        d2 = np.cos(ang)
        d[:, :, 0] = np.where(inside, d0, d[:, :, 0])
        d[:, :, 1] = np.where(inside, d1, d[:, :, 1])
        d[:, :, 2] = np.where(inside, d2, d[:, :, 2])
    return np.zeros((grid.n, grid.n, 2)), d


def gen_random_smooth(grid: SpectralGrid, params: dict, rng) -> tuple:
    """Band-limited random velocity and a normalized random director."""
    kc = int(params.get("kc", 3))
    v_amp = float(params.get("v_amplitude", 0.3))
    d_amp = float(params.get("d_amplitude", 0.3))
    base = np.asarray(params.get("base", (0.0, 0.0, 1.0)), dtype=np.float64)
    base = base / np.linalg.norm(base)

    n = grid.n
    band = (np.abs(grid.k1) <= kc) & (np.abs(grid.k2) <= kc)

    def band_limited(components: int) -> np.ndarray:
        coeffs = rng.standard_normal((n, n, components)) + 1j * rng.standard_normal(
            (n, n, components)
        )
        coeffs *= band[:, :, None]
        coeffs[0, 0, :] = 0.0
        phys = np.real(np.fft.ifft2(coeffs, axes=(0, 1))) * (n * n)
        peak = np.max(np.abs(phys))
        return phys / peak if peak > 0 else phys

    v = v_amp * band_limited(2)
    pert = d_amp * band_limited(3)
    d = np.broadcast_to(base, (n, n, 3)) + pert
    d = d / np.sqrt(np.sum(d**2, axis=2, keepdims=True))
    return v, d


GENERATORS = {
    "constant": gen_constant,
    "smooth-wave": gen_smooth_wave,
    "defect-pair": gen_defect_pair,
    "random-smooth": gen_random_smooth,
}


def generate_initial(name: str, params: dict, grid: SpectralGrid, seed: int) -> SimState:
    """Build the initial state for a registered generator."""
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; known: {sorted(GENERATORS)}")
    rng = np.random.default_rng(seed)
    v_phys, d_phys = GENERATORS[name](grid, params or {}, rng)

    mod = np.sqrt(np.sum(d_phys**2, axis=2))
    if np.max(np.abs(mod - 1.0)) > 1e-12:
        raise ValueError(f"generator {name!r} produced a non-unit director")
    v = _finalize_velocity(grid, v_phys)
    d = Field.from_physical(grid, d_phys)
    return SimState(t=0.0, v=v, d=d, step=0, params=None)
