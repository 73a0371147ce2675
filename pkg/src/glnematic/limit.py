"""Comparison solver for the sharp unit-constraint system

    dt_d + (v.grad)d = Lap d + |grad d|^2 d,   |d| == 1,

coupled to the same momentum equation as the penalized flow.  The constraint
is enforced by a projection scheme: an implicit-diffusion / explicit-advection
predictor without the |grad d|^2 d term, followed by pointwise renormalization
(which restores exactly that term to leading order while keeping |d| == 1 to
machine precision).
"""

from __future__ import annotations

import numpy as np

from .diagnostics import ResidualTable, _mode_box
from .dynamics import BlowUpError, advect
from .spectral import (
    TORUS_AREA,
    Field,
    project_solenoidal,
    to_physical,
    to_spectral,
)
from .state import SimParams, SimState

#: predictor modulus below which renormalization is treated as a blow-up
NORMALIZATION_FLOOR = 1e-8


def _limit_tension(g, dh):
    """tau = Lap d + |grad d|^2 d on the nodes, plus the gradient factors."""
    n = g.n
    m = dh.shape[2]
    stack = np.empty((n, n, 3 * m), dtype=np.complex128)
    stack[:, :, 0:m] = 1j * g.kd1[:, :, None] * dh
    stack[:, :, m : 2 * m] = 1j * g.kd2[:, :, None] * dh
    stack[:, :, 2 * m :] = -g.ksq[:, :, None] * dh
    phys = np.real(np.fft.ifft2(stack, axes=(0, 1))) * (n * n)
    d1d, d2d, lap = phys[:, :, 0:m], phys[:, :, m : 2 * m], phys[:, :, 2 * m :]
    grad_sq = np.sum(d1d**2 + d2d**2, axis=2, keepdims=True)
    dp = to_physical(dh)
    return lap + grad_sq * dp, d1d, d2d


def limit_stress_force(d: Field, dealias_on: bool = True) -> Field:
    """P[-(grad d)^T (Lap d + |grad d|^2 d)], the constrained elastic force."""
    g = d.grid
    tau, d1d, d2d = _limit_tension(g, d.spectral)
    f = np.empty((g.n, g.n, 2))
    f[:, :, 0] = -np.sum(d1d * tau, axis=2)
    f[:, :, 1] = -np.sum(d2d * tau, axis=2)
    f_hat = to_spectral(f)
    if dealias_on:
        f_hat *= g.dealias_mask[:, :, None]
    f_hat = project_solenoidal(g, f_hat)
    f_hat[0, 0, :] = 0.0
    return Field.from_spectral(g, f_hat)


def step_limit(state: SimState, params: SimParams) -> SimState:
    """One projection step of the constrained system.

    Uses ``dt_requested`` directly: there is no stiff penalty term, so the
    eps-based guard of the penalized scheme does not apply.
    """
    g = state.grid
    dt = params.dt_requested
    dp = state.d.physical
    mod = np.sqrt(np.sum(dp**2, axis=2))
    if np.max(np.abs(mod - 1.0)) > 1e-12:
        raise ValueError("step_limit requires |d| == 1 to 1e-12 on entry")

    dh = state.d.spectral
    vh = state.v.spectral
    adv_d = advect(state.v, state.d, params.dealias_on).spectral
    denom = (1.0 + dt * g.ksq)[:, :, None]

    d_star = to_physical((dh - dt * adv_d) / denom)
    star_mod = np.sqrt(np.sum(d_star**2, axis=2))
    if np.min(star_mod) < NORMALIZATION_FLOOR:
        raise BlowUpError(
            t=(state.step + 1) * dt,
            max_v=float(np.max(np.abs(vh))),
            max_d=float(np.min(star_mod)),
        )
    d_new = d_star / star_mod[:, :, None]

    stress = limit_stress_force(state.d, params.dealias_on).spectral
    adv_v = advect(state.v, state.v, params.dealias_on).spectral
    force_v = project_solenoidal(g, stress - adv_v)
    force_v[0, 0, :] = 0.0
    vh_new = project_solenoidal(g, (vh + dt * force_v) / denom)

    step = state.step + 1
    if not (np.all(np.isfinite(vh_new)) and np.all(np.isfinite(d_new))):
        raise BlowUpError(
            t=step * dt,
            max_v=float(np.max(np.abs(vh_new))),
            max_d=float(np.max(np.abs(d_new))),
        )
    return SimState(
        t=step * dt,
        v=Field.from_spectral(g, vh_new),
        d=Field.from_physical(g, d_new),
        step=step,
        params=state.params,
    )


def run_limit(params: SimParams, init: SimState, sample_every: int = 1, sink=None):
    """Advance the constrained solver to t_end; mirrors dynamics.run."""
    from . import diagnostics

    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    state = init if init.params is params else init.with_params(params)
    if params.t_end <= 0.0:
        return state, []

    trajectory = [diagnostics.energy(state, params.epsilon)]
    if sink is not None:
        sink(state, trajectory[0])
    horizon = params.t_end - 1e-12
    while state.t < horizon:
        state = step_limit(state, params)
        if state.step % sample_every == 0 or state.t >= horizon:
            sample = diagnostics.energy(state, params.epsilon)
            trajectory.append(sample)
            if sink is not None:
                sink(state, sample)
    return state, trajectory


def wedge_residual(state: SimState, dt_pair: tuple, k_max: int) -> ResidualTable:
    """Weak wedge-form residuals against e_a e^{ik.x}, |k|_inf <= k_max.

    Evaluates R(xi) = int (d ^ (dt_d + (v.grad)d)) . xi
                      + sum_j int (d ^ d_j d) . d_j xi
    with dt_d the backward difference quotient of ``dt_pair`` and the
    spatial fields taken from ``state``.  For exact solutions of the
    constrained flow the penalty/curvature terms are parallel to d and drop
    out, so these residuals vanish; along discrete trajectories they decay
    with the time step.
    """
    prev, curr = dt_pair
    g = state.grid
    n = g.n
    dt = curr.t - prev.t
    dp = state.d.physical

    if dt == 0.0:
        dtd = np.zeros_like(dp)
    else:
        dtd = (curr.d.physical - prev.d.physical) / dt
    transport = dtd + advect(state.v, state.d, dealias_on=False).physical

    w = np.cross(dp, transport)  # d ^ (dt_d + (v.grad)d)
    dh = state.d.spectral
    d1d = to_physical(1j * g.kd1[:, :, None] * dh)
    d2d = to_physical(1j * g.kd2[:, :, None] * dh)
    g1 = np.cross(dp, d1d)
    g2 = np.cross(dp, d2d)

    w_hat = to_spectral(w)
    g1_hat = to_spectral(g1)
    g2_hat = to_spectral(g2)

    ks = _mode_box(k_max, include_zero=True)
    vals = np.empty((len(ks), 3))
    for idx, (a, b) in enumerate(ks):
        ia, ib = (-a) % n, (-b) % n
        r = w_hat[ia, ib, :] + 1j * a * g1_hat[ia, ib, :] + 1j * b * g2_hat[ia, ib, :]
        vals[idx, :] = TORUS_AREA * np.abs(r)
    return ResidualTable(ks=ks, values=vals)
