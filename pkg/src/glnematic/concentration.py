"""Local-energy ball analysis: concentration detector and defect bookkeeping.

A point concentrates when the local energy

    int_{B_r(x0)} 1/2 |grad d|^2 + (1 - |d|^2)^2 / (4 eps^2)

exceeds the detector threshold eps0^2.  The detector marks every grid node
whose centered ball exceeds the threshold, links marked nodes closer than
the ball radius into clusters, and then attributes the energy density
disjointly to clusters (each node of the torus counts toward at most one
cluster, its nearest, and only within one ball radius).  A cluster is
reported only if its attributed energy exceeds eps0^2, which makes the
cardinality bound

    count <= ceil(total_energy / eps0^2)

a construction invariant: reported clusters own disjoint energy parcels,
each larger than eps0^2, summing to at most the total.

The threshold has no canonical numeric value; the default used throughout
is 0.05 * (dirichlet + penalty energy) of the snapshot under analysis, and
reports flag whether the default calibration or a user value was used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .spectral import TORUS_AREA, TWO_PI, Field, to_physical, to_spectral

#: default detector threshold as a fraction of the snapshot director energy
DEFAULT_EPS0_FRACTION = 0.05
#: default ball radius in grid spacings
DEFAULT_RADIUS_CELLS = 16


@dataclass(frozen=True)
class BallSpec:
    """Ball on the torus; the radius must embed without self-overlap."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not (0.0 < self.radius < np.pi):
            raise ValueError(f"ball radius must lie in (0, pi), got {self.radius}")


@dataclass(frozen=True)
class ClusterPoint:
    center: tuple
    max_local_energy: float
    attributed_energy: float
    node_count: int


@dataclass(frozen=True)
class ConcentrationReport:
    t: float
    epsilon: float
    eps0_sq: float
    eps0_is_default: bool
    radius: float
    points: tuple
    count: int
    k_bound: int
    total_energy: float

    @property
    def passed(self) -> bool:
        return self.count <= self.k_bound


@dataclass(frozen=True)
class DefectEstimate:
    """Cross-eps stress pairings and the linear-extrapolation gap."""

    t: float
    test_k_max: int
    epsilons: tuple
    ks: tuple
    pairings: np.ndarray       # (n_eps, n_k) complex
    eta_estimate: np.ndarray   # (n_k,) complex


def energy_density(d: Field, epsilon: float) -> np.ndarray:
    """Node samples of 1/2 |grad d|^2 + (1-|d|^2)^2/(4 eps^2)."""
    g = d.grid
    dh = d.spectral
    n = g.n
    stack = np.empty(dh.shape + (2,), dtype=np.complex128)
    stack[..., 0] = 1j * g.kd1[:, :, None] * dh
    stack[..., 1] = 1j * g.kd2[:, :, None] * dh
    grad = np.real(np.fft.ifft2(stack, axes=(0, 1))) * (n * n)
    dp = d.physical
    deficit = 1.0 - np.sum(dp**2, axis=2)
    return 0.5 * np.sum(grad**2, axis=(2, 3)) + deficit**2 / (4.0 * epsilon**2)


def _periodic_delta(a: np.ndarray, b) -> np.ndarray:
    return (a - b + np.pi) % TWO_PI - np.pi


def local_energy(d: Field, epsilon: float, ball: BallSpec) -> float:
    """Rectangle-rule local energy over nodes within the periodic ball."""
    g = d.grid
    density = energy_density(d, epsilon)
    dx = _periodic_delta(g.x1, ball.center[0])
    dy = _periodic_delta(g.x2, ball.center[1])
    mask = dx**2 + dy**2 <= ball.radius**2
    return float(g.h**2 * np.sum(density[mask]))


def default_eps0_sq(d: Field, epsilon: float) -> float:
    g = d.grid
    total = float(g.h**2 * np.sum(energy_density(d, epsilon)))
    return DEFAULT_EPS0_FRACTION * total


def default_ball_radius(n: int) -> float:
    return DEFAULT_RADIUS_CELLS * TWO_PI / n


def count_bound(total_energy: float, eps0_sq: float) -> int:
    """Cardinality bound ceil(total_energy / eps0^2)."""
    if eps0_sq <= 0.0:
        raise ValueError("eps0_sq must be positive")
    if total_energy < 0.0:
        raise ValueError("total_energy must be nonnegative")
    return int(math.ceil(total_energy / eps0_sq))


def _cluster_marked(g, marked_idx: np.ndarray, radius: float):
    """Connected components of marked nodes under periodic linking <= radius."""
    coords = np.stack(
        [g.x1[marked_idx[:, 0], 0], g.x2[0, marked_idx[:, 1]]], axis=1
    )
    m = coords.shape[0]
    rows, cols = [], []
    chunk = max(1, 2**22 // max(m, 1))
    r_sq = radius**2
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        dx = _periodic_delta(coords[start:stop, 0:1], coords[None, :, 0])
        dy = _periodic_delta(coords[start:stop, 1:2], coords[None, :, 1])
        close = dx**2 + dy**2 <= r_sq
        r, c = np.nonzero(close)
        rows.append(r + start)
        cols.append(c)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    adj = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(m, m))
    n_comp, labels = connected_components(adj, directed=False)
    # relabel components by their smallest member (lexicographic node order)
    order = {}
    for i, lab in enumerate(labels):
        if lab not in order:
            order[lab] = len(order)
    labels = np.array([order[lab] for lab in labels])
    return n_comp, labels, coords


def detect_sigma(
    d: Field,
    epsilon: float,
    radius: float,
    eps0_sq: Optional[float] = None,
    t: float = 0.0,
) -> ConcentrationReport:
    """Concentration detector: threshold, cluster, attribute, report.

    Ball energies at every node are evaluated at once by circular
    convolution of the energy density with the ball indicator.
    """
    if not (0.0 < radius < np.pi):
        raise ValueError(f"radius must lie in (0, pi), got {radius}")
    g = d.grid
    n = g.n
    eps0_is_default = eps0_sq is None
    density = energy_density(d, epsilon)
    total_energy = float(g.h**2 * np.sum(density))
    if eps0_is_default:
        eps0_sq = DEFAULT_EPS0_FRACTION * total_energy
    if eps0_sq <= 0.0:
        raise ValueError("eps0_sq must be positive")

    dx = _periodic_delta(g.x1, 0.0)
    dy = _periodic_delta(g.x2, 0.0)
    indicator = (dx**2 + dy**2 <= radius**2).astype(np.float64)
    ball_energy = g.h**2 * np.real(
        np.fft.ifft2(np.fft.fft2(density) * np.fft.fft2(indicator))
    )

    marked = ball_energy > eps0_sq
    k = count_bound(total_energy, eps0_sq)
    if not np.any(marked):
        return ConcentrationReport(
            t=t,
            epsilon=epsilon,
            eps0_sq=eps0_sq,
            eps0_is_default=eps0_is_default,
            radius=radius,
            points=(),
            count=0,
            k_bound=k,
            total_energy=total_energy,
        )

    marked_idx = np.argwhere(marked)
    n_comp, labels, coords = _cluster_marked(g, marked_idx, radius)

    # nearest-cluster distance field over all nodes, for disjoint attribution
    xs = g.x1[:, 0][:, None, None]
    ys = g.x2[0, :][None, :, None]
    dist_sq = np.full((n, n, n_comp), np.inf)
    for c in range(n_comp):
        pts = coords[labels == c]
        ddx = _periodic_delta(xs, pts[None, None, :, 0])
        ddy = _periodic_delta(ys, pts[None, None, :, 1])
        dist_sq[:, :, c] = np.min(ddx**2 + ddy**2, axis=2)
    nearest = np.argmin(dist_sq, axis=2)
    nearest_d_sq = np.take_along_axis(dist_sq, nearest[:, :, None], axis=2)[:, :, 0]
    within = nearest_d_sq <= radius**2

    points = []
    for c in range(n_comp):
        members = labels == c
        own = within & (nearest == c)
        attributed = float(g.h**2 * np.sum(density[own]))
        if attributed <= eps0_sq:
            continue
        mi = marked_idx[members]
        weights = ball_energy[mi[:, 0], mi[:, 1]]
        cx = _circular_mean(coords[members, 0], weights)
        cy = _circular_mean(coords[members, 1], weights)
        points.append(
            ClusterPoint(
                center=(cx, cy),
                max_local_energy=float(np.max(weights)),
                attributed_energy=attributed,
                node_count=int(np.count_nonzero(members)),
            )
        )

    return ConcentrationReport(
        t=t,
        epsilon=epsilon,
        eps0_sq=eps0_sq,
        eps0_is_default=eps0_is_default,
        radius=radius,
        points=tuple(points),
        count=len(points),
        k_bound=k,
        total_energy=total_energy,
    )


def _circular_mean(angles: np.ndarray, weights: np.ndarray) -> float:
    s = float(np.sum(weights * np.sin(angles)))
    c = float(np.sum(weights * np.cos(angles)))
    return float(np.arctan2(s, c) % TWO_PI)


def defect_estimate(snapshots: Sequence[tuple], k_max: int, t: float = 0.0) -> DefectEstimate:
    """Stress pairings per epsilon against grad(perp-grad e^{ik.x}).

    ``snapshots`` is a list of (epsilon, director Field) at a common time on
    a common grid.  The eta estimate is the gap between the finest-epsilon
    pairing and the linear-in-epsilon extrapolation to 0 built from the two
    coarsest entries; no particular value is asserted anywhere.
    """
    if len(snapshots) < 3:
        raise ValueError("defect_estimate needs at least three epsilons")
    grids = {s[1].grid.n for s in snapshots}
    if len(grids) != 1:
        raise ValueError(f"snapshots live on mismatched grids: {sorted(grids)}")
    snaps = sorted(snapshots, key=lambda s: -s[0])
    eps = tuple(s[0] for s in snaps)
    if len(set(eps)) != len(eps):
        raise ValueError("epsilon values must be distinct")

    g = snaps[0][1].grid
    n = g.n
    ks = []
    for a in range(-k_max, k_max + 1):
        for b in range(-k_max, k_max + 1):
            if a == 0 and b == 0:
                continue
            ks.append((a, b))
    ks = tuple(ks)

    pairings = np.empty((len(snaps), len(ks)), dtype=np.complex128)
    for row, (_, d) in enumerate(snaps):
        dh = d.spectral
        stack = np.empty(dh.shape + (2,), dtype=np.complex128)
        stack[..., 0] = 1j * g.kd1[:, :, None] * dh
        stack[..., 1] = 1j * g.kd2[:, :, None] * dh
        grad = np.real(np.fft.ifft2(stack, axes=(0, 1))) * (n * n)
        s_tensor = np.einsum("xyai,xyaj->xyij", grad, grad)
        s_hat = np.fft.fft2(s_tensor, axes=(0, 1)) / (n * n)
        for col, (a, b) in enumerate(ks):
            ia, ib = (-a) % n, (-b) % n
            w = np.array([-1j * b, 1j * a])
            kvec = (a, b)
            val = 0.0 + 0.0j
            for i in range(2):
                for j in range(2):
                    val += w[i] * 1j * kvec[j] * s_hat[ia, ib, i, j]
            pairings[row, col] = TORUS_AREA * val

    e1, e2 = eps[0], eps[1]  # two coarsest
    p1, p2 = pairings[0], pairings[1]
    extrap = (e1 * p2 - e2 * p1) / (e1 - e2)
    eta = pairings[-1] - extrap
    return DefectEstimate(
        t=t, test_k_max=k_max, epsilons=eps, ks=ks, pairings=pairings, eta_estimate=eta
    )
