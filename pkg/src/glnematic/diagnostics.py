"""Energy bookkeeping and weak-form residual monitors.

The energy convention used throughout is

    total = 1/2 |v|_L2^2 + 1/2 |grad d|_L2^2 + 1/(4 eps^2) |1 - |d|^2|_L2^2,

so the classical dissipation identity for the penalized system reads, in
integrated form,

    2*total(t) + 2 * int_0^t (|grad v|^2 + |tau|^2) <= 2*total(0),

with tau = Lap d + eps^-2 (1 - |d|^2) d the tension field.  The audit
checks exactly this inequality (plus per-sample monotonicity) with the
dissipation integral accumulated by the trapezoid rule over the sampled
trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import TORUS_AREA, Field, to_physical
from .state import SimState

#: per-sample energy increase tolerance, relative to the initial energy
STEP_SLACK = 1e-8
#: cumulative dissipation-inequality slack, relative to the initial energy
CUMULATIVE_SLACK = 1e-6


@dataclass(frozen=True)
class EnergySample:
    """One row of the energy/dissipation time series."""

    t: float
    kinetic: float
    dirichlet: float
    penalty: float
    total: float
    diss_v: float
    diss_d: float
    l4_v: float
    max_d: float
    penalty_l2: float

    CSV_COLUMNS = (
        "t",
        "kinetic",
        "dirichlet",
        "penalty",
        "total",
        "diss_v",
        "diss_d",
        "l4_v",
        "max_d",
        "penalty_l2",
    )

    def as_row(self) -> tuple:
        return tuple(getattr(self, c) for c in self.CSV_COLUMNS)


def tension(d: Field, epsilon: float) -> np.ndarray:
    """Pointwise tension field Lap d + eps^-2 (1 - |d|^2) d, physical."""
    g = d.grid
    lap = to_physical(-g.ksq[:, :, None] * d.spectral)
    dp = d.physical
    mod_sq = np.sum(dp**2, axis=2, keepdims=True)
    return lap + (1.0 - mod_sq) * dp / epsilon**2


def energy(state: SimState, epsilon: float) -> EnergySample:
    """Evaluate all monitored energies on one snapshot.

    Gradient terms are summed spectrally (Parseval makes this identical to
    the rectangle rule on the corresponding node samples); the penalty and
    L4 terms integrate node samples directly.
    """
    g = state.grid
    h2 = g.h**2
    vh = state.v.spectral
    dh = state.d.spectral
    vp = state.v.physical
    dp = state.d.physical

    kinetic = 0.5 * TORUS_AREA * float(np.sum(np.abs(vh) ** 2))
    dirichlet = 0.5 * TORUS_AREA * float(np.sum(g.ksq_d[:, :, None] * np.abs(dh) ** 2))

    mod_sq = np.sum(dp**2, axis=2)
    deficit = 1.0 - mod_sq
    penalty_l2 = float(np.sqrt(h2 * np.sum(deficit**2)))
    penalty = penalty_l2**2 / (4.0 * epsilon**2)

    diss_v = TORUS_AREA * float(np.sum(g.ksq_d[:, :, None] * np.abs(vh) ** 2))
    tau = tension(state.d, epsilon)
    diss_d = h2 * float(np.sum(tau**2))

    speed_sq = np.sum(vp**2, axis=2)
    l4_v = float((h2 * np.sum(speed_sq**2)) ** 0.25)
    max_d = float(np.sqrt(np.max(mod_sq)))

    return EnergySample(
        t=state.t,
        kinetic=kinetic,
        dirichlet=dirichlet,
        penalty=penalty,
        total=kinetic + dirichlet + penalty,
        diss_v=diss_v,
        diss_d=diss_d,
        l4_v=l4_v,
        max_d=max_d,
        penalty_l2=penalty_l2,
    )


@dataclass(frozen=True)
class AuditReport:
    passed: bool
    monotone_passed: bool
    cumulative_passed: bool
    worst_increase: float
    increase_tolerance: float
    worst_cumulative_excess: float
    cumulative_tolerance: float
    samples: int

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "monotone_passed": self.monotone_passed,
            "cumulative_passed": self.cumulative_passed,
            "worst_increase": self.worst_increase,
            "increase_tolerance": self.increase_tolerance,
            "worst_cumulative_excess": self.worst_cumulative_excess,
            "cumulative_tolerance": self.cumulative_tolerance,
            "samples": self.samples,
        }


def energy_audit(trajectory: Sequence[EnergySample], dt: float) -> AuditReport:
    """Check per-sample monotonicity and the dissipation inequality.

    ``dt`` is the nominal sample spacing; the actual sample times carried
    by the trajectory drive the trapezoid accumulation, so irregular final
    intervals are handled correctly.
    """
    if len(trajectory) < 2:
        raise ValueError("energy_audit needs at least two samples")

    t = np.array([s.t for s in trajectory])
    total = np.array([s.total for s in trajectory])
    diss = np.array([s.diss_v + s.diss_d for s in trajectory])

    e0 = total[0]
    increase_tol = STEP_SLACK * e0
    increments = np.diff(total)
    worst_increase = float(np.max(increments)) if increments.size else 0.0
    monotone_ok = worst_increase <= increase_tol

    # trapezoid cumulative of the dissipation, from t[0]
    seg = 0.5 * np.diff(t) * (diss[1:] + diss[:-1])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    lhs = total + cum
    cum_tol = CUMULATIVE_SLACK * e0
    excess = lhs - e0 * (1.0 + CUMULATIVE_SLACK)
    worst_excess = float(np.max(excess))
    cumulative_ok = worst_excess <= 0.0

    return AuditReport(
        passed=monotone_ok and cumulative_ok,
        monotone_passed=monotone_ok,
        cumulative_passed=cumulative_ok,
        worst_increase=worst_increase,
        increase_tolerance=increase_tol,
        worst_cumulative_excess=worst_excess,
        cumulative_tolerance=cum_tol,
        samples=len(trajectory),
    )


def penalty_scaling_fit(runs: Sequence[tuple]) -> float:
    """Least-squares slope of log(sup_t penalty_l2) against log(epsilon)."""
    if len(runs) < 3:
        raise ValueError("need at least three distinct penalty samples")
    eps = np.array([r[0] for r in runs], dtype=np.float64)
    vals = np.array([r[1] for r in runs], dtype=np.float64)
    if np.any(eps <= 0.0) or np.any(vals <= 0.0):
        raise ValueError("penalty scaling fit needs positive data")
    if len(np.unique(eps)) < 3:
        raise ValueError("need at least three distinct epsilon values")
    slope, _ = np.polyfit(np.log(eps), np.log(vals), 1)
    return float(slope)


@dataclass(frozen=True)
class PolarSample:
    """Modulus/phase split diagnostics on the region |d| >= 1/2."""

    region_fraction: float
    grad_rho_l2sq: float
    grad_psi_l4: float


def polar_sample(d: Field) -> PolarSample:
    """Split d = rho * psi and measure grad(rho), grad(psi) on |d| >= 1/2.

    Both factor fields are only piecewise smooth, so their spectral
    gradients carry mild Gibbs error; the region-masked integrals are still
    monotone diagnostics of how fast the modulus locks to 1.  Empty-region
    integrals are 0 by convention.
    """
    g = d.grid
    dp = d.physical
    rho = np.sqrt(np.sum(dp**2, axis=2))
    region = rho >= 0.5
    frac = float(np.count_nonzero(region)) / region.size
    if not np.any(region):
        return PolarSample(region_fraction=0.0, grad_rho_l2sq=0.0, grad_psi_l4=0.0)

    rho_hat = np.fft.fft2(rho) / (g.n * g.n)
    grho1 = np.real(np.fft.ifft2(1j * g.kd1 * rho_hat)) * (g.n * g.n)
    grho2 = np.real(np.fft.ifft2(1j * g.kd2 * rho_hat)) * (g.n * g.n)
    grad_rho_sq = grho1**2 + grho2**2
    grad_rho_l2sq = float(g.h**2 * np.sum(grad_rho_sq[region]))

    psi = np.where(region[:, :, None], dp / np.where(region, rho, 1.0)[:, :, None], 0.0)
    psi_hat = np.fft.fft2(psi, axes=(0, 1)) / (g.n * g.n)
    gpsi1 = np.real(np.fft.ifft2(1j * g.kd1[:, :, None] * psi_hat, axes=(0, 1))) * (g.n * g.n)
    gpsi2 = np.real(np.fft.ifft2(1j * g.kd2[:, :, None] * psi_hat, axes=(0, 1))) * (g.n * g.n)
    gpsi_sq = np.sum(gpsi1**2 + gpsi2**2, axis=2)
    grad_psi_l4 = float((g.h**2 * np.sum(gpsi_sq[region] ** 2)) ** 0.25)

    return PolarSample(
        region_fraction=frac, grad_rho_l2sq=grad_rho_l2sq, grad_psi_l4=grad_psi_l4
    )


@dataclass(frozen=True)
class ResidualTable:
    """Weak-form pairings |R| per test function."""

    ks: tuple
    values: np.ndarray

    @property
    def max(self) -> float:
        return float(np.max(self.values)) if self.values.size else 0.0


def _mode_box(k_max: int, include_zero: bool):
    ks = []
    for a in range(-k_max, k_max + 1):
        for b in range(-k_max, k_max + 1):
            if not include_zero and a == 0 and b == 0:
                continue
            ks.append((a, b))
    return tuple(ks)


def momentum_weak_residual(
    pair: tuple, epsilon: float, k_max: int
) -> ResidualTable:
    """Momentum weak form tested against phi = perp-grad(e^{ik.x}).

    For each 1 <= |k|_inf <= k_max this evaluates

        R(k) = int dt_v . phi - v (x) v : grad phi + grad v : grad phi
               - (grad d (.) grad d) : grad phi

    with dt_v the backward difference of the state pair and all spatial
    fields taken from the newer state.  For a trajectory of the first-order
    scheme these residuals vanish at O(dt).
    """
    prev, curr = pair
    g = curr.grid
    dt = curr.t - prev.t
    if dt == 0.0:
        dtv_hat = np.zeros_like(curr.v.spectral)
    else:
        dtv_hat = (curr.v.spectral - prev.v.spectral) / dt

    vh = curr.v.spectral
    vp = curr.v.physical
    dp_grad = _director_gradient(curr.d)

    # v (x) v and grad d (.) grad d, spectrally (products formed pointwise)
    n = g.n
    vv = np.empty((n, n, 2, 2))
    for i in range(2):
        for j in range(2):
            vv[:, :, i, j] = vp[:, :, i] * vp[:, :, j]
    ss = np.einsum("xyaj,xyai->xyij", dp_grad, dp_grad)
    vv_hat = np.fft.fft2(vv, axes=(0, 1)) / (n * n)
    ss_hat = np.fft.fft2(ss, axes=(0, 1)) / (n * n)

    ks = _mode_box(k_max, include_zero=False)
    vals = np.empty(len(ks))
    for idx, (a, b) in enumerate(ks):
        ia, ib = (-a) % n, (-b) % n  # spectral index of -k for the e^{ik.x} pairing
        w = np.array([-1j * b, 1j * a])  # perp-grad multiplier
        ksq = float(a * a + b * b)
        r = 0.0 + 0.0j
        for i in range(2):
            r += w[i] * (dtv_hat[ia, ib, i] + ksq * vh[ia, ib, i])
            for j in range(2):
                kj = (a, b)[j]
                r -= w[i] * 1j * kj * (vv_hat[ia, ib, i, j] + ss_hat[ia, ib, i, j])
        vals[idx] = abs(TORUS_AREA * r)
    return ResidualTable(ks=ks, values=vals)


def _director_gradient(d: Field) -> np.ndarray:
    """Physical (n, n, m, 2) array of spectral partial derivatives of d."""
    g = d.grid
    dh = d.spectral
    n = g.n
    stack = np.empty((n, n, d.m, 2), dtype=np.complex128)
    stack[:, :, :, 0] = 1j * g.kd1[:, :, None] * dh
    stack[:, :, :, 1] = 1j * g.kd2[:, :, None] * dh
    return np.real(np.fft.ifft2(stack, axes=(0, 1))) * (n * n)
