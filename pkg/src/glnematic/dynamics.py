"""Time integration of the penalized (Ginzburg-Landau) director-flow system

    dt_v + (v.grad)v + grad p - Lap v = -div(grad d (.) grad d),   div v = 0,
    dt_d + (v.grad)d = Lap d + eps^-2 (1 - |d|^2) d.

The production scheme is a first-order IMEX Euler: diffusion is inverted
exactly mode-by-mode, transport / elastic stress / penalty are explicit,
optionally with a linear stabilization shift folded into the implicit
solve.  A fully explicit classical RK4 is kept as a small-grid reference
integrator only.

The projected elastic force is computed from the identity

    div(grad d (.) grad d) = grad(|grad d|^2 / 2) + (grad d)^T Lap d,

so the pure-gradient parts (including the penalty gradient) never need to
be formed: the Leray projection of -(grad d)^T tau, with tau the tension
field, is the whole force.  The divergence form is retained as a
cross-check.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable, Optional

import numpy as np

from . import diagnostics
from .spectral import Field, SpectralGrid, project_solenoidal, to_physical, to_spectral
from .state import SimParams, SimState


class BlowUpError(RuntimeError):
    """Raised when a step produces non-finite field values."""

    def __init__(self, t: float, max_v: float, max_d: float):
        self.t = t
        self.max_v = max_v
        self.max_d = max_d
        super().__init__(
            f"blow-up detected at t={t:.6g}: max|v|={max_v:.3e}, max|d|={max_d:.3e}"
        )


def gl_term(d: Field, epsilon: float, dealias_on: bool = True) -> Field:
    """Penalty forcing eps^-2 (1 - |d|^2) d, pointwise, optionally dealiased."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    g = d.grid
    dp = d.physical
    mod_sq = np.sum(dp**2, axis=2, keepdims=True)
    raw = (1.0 - mod_sq) * dp / epsilon**2
    if not dealias_on:
        return Field.from_physical(g, raw)
    return Field.from_spectral(g, to_spectral(raw) * g.dealias_mask[:, :, None])


def advect(v: Field, f: Field, dealias_on: bool = True) -> Field:
    """Convective derivative (v . grad) f, products pointwise."""
    g = f.grid
    vp = v.physical
    fh = f.spectral
    gx = to_physical(1j * g.kd1[:, :, None] * fh)
    gy = to_physical(1j * g.kd2[:, :, None] * fh)
    raw = vp[:, :, 0:1] * gx + vp[:, :, 1:2] * gy
    if not dealias_on:
        return Field.from_physical(g, raw)
    return Field.from_spectral(g, to_spectral(raw) * g.dealias_mask[:, :, None])


def stress_force(d: Field, epsilon: float, dealias_on: bool = True) -> Field:
    """Leray-projected elastic force, identity form.

    Computes P[-(grad d)^T (Lap d + eps^-2 (1-|d|^2) d)]; divergence-free
    and mean-free by construction.
    """
    g = d.grid
    tau = _tension_physical(g, d.spectral, d.physical, epsilon, dealias_on)
    return _project_stress(g, d.spectral, tau, dealias_on)


def stress_force_divergence_form(d: Field, dealias_on: bool = True) -> Field:
    """Cross-check: -P[div(grad d (.) grad d)] formed from the stress tensor."""
    g = d.grid
    grad = _gradient_stack(g, d.spectral)  # (n, n, m, 2) physical
    n = g.n
    s = np.einsum("xyai,xyaj->xyij", grad, grad)
    s_hat = np.fft.fft2(s, axes=(0, 1)) / (n * n)
    if dealias_on:
        s_hat *= g.dealias_mask[:, :, None, None]
    force = np.empty((n, n, 2), dtype=np.complex128)
    force[:, :, 0] = -1j * (g.kd1 * s_hat[:, :, 0, 0] + g.kd2 * s_hat[:, :, 0, 1])
    force[:, :, 1] = -1j * (g.kd1 * s_hat[:, :, 1, 0] + g.kd2 * s_hat[:, :, 1, 1])
    force = project_solenoidal(g, force)
    force[0, 0, :] = 0.0
    return Field.from_spectral(g, force)


def momentum_nonlinearity(state: SimState, epsilon: float, dealias_on: bool = True) -> Field:
    """(v.grad)v + div(grad d (.) grad d): the full momentum nonlinearity."""
    g = state.grid
    adv = advect(state.v, state.v, dealias_on).spectral
    grad = _gradient_stack(g, state.d.spectral)
    n = g.n
    s = np.einsum("xyai,xyaj->xyij", grad, grad)
    s_hat = np.fft.fft2(s, axes=(0, 1)) / (n * n)
    if dealias_on:
        s_hat *= g.dealias_mask[:, :, None, None]
    out = np.empty((n, n, 2), dtype=np.complex128)
    out[:, :, 0] = adv[:, :, 0] + 1j * (g.kd1 * s_hat[:, :, 0, 0] + g.kd2 * s_hat[:, :, 0, 1])
    out[:, :, 1] = adv[:, :, 1] + 1j * (g.kd1 * s_hat[:, :, 1, 0] + g.kd2 * s_hat[:, :, 1, 1])
    return Field.from_spectral(g, out)


def recover_pressure(state: SimState, epsilon: float) -> Field:
    """Pressure as the Lagrange multiplier of incompressibility.

    Solves -Lap p = div[(v.grad)v + div(grad d (.) grad d)] spectrally with
    mean-zero normalization.
    """
    g = state.grid
    nh = momentum_nonlinearity(state, epsilon, state.params.dealias_on if state.params else True)
    n_hat = nh.spectral
    div_hat = 1j * (g.kd1 * n_hat[:, :, 0] + g.kd2 * n_hat[:, :, 1])
    p_hat = div_hat * g.inv_ksq_d
    return Field.from_spectral(g, p_hat[:, :, None])


def _gradient_stack(g: SpectralGrid, fh: np.ndarray) -> np.ndarray:
    """Physical (n, n, m, 2) partial derivatives of an m-component field."""
    n = g.n
    stack = np.empty(fh.shape + (2,), dtype=np.complex128)
    stack[..., 0] = 1j * g.kd1[:, :, None] * fh
    stack[..., 1] = 1j * g.kd2[:, :, None] * fh
    return np.real(np.fft.ifft2(stack, axes=(0, 1))) * (n * n)


def _tension_physical(g, dh, dp, epsilon, dealias_on) -> np.ndarray:
    """tau = Lap d + penalty term, physical; penalty dealiased when asked."""
    mod_sq = np.sum(dp**2, axis=2, keepdims=True)
    gl = (1.0 - mod_sq) * dp / epsilon**2
    gl_hat = to_spectral(gl)
    if dealias_on:
        gl_hat *= g.dealias_mask[:, :, None]
    return to_physical(-g.ksq[:, :, None] * dh + gl_hat)


def _project_stress(g, dh, tau_phys, dealias_on) -> Field:
    grad = _gradient_stack(g, dh)
    raw = -np.einsum("xyai,xya->xyi", grad, tau_phys)
    f_hat = to_spectral(raw)
    if dealias_on:
        f_hat *= g.dealias_mask[:, :, None]
    f_hat = project_solenoidal(g, f_hat)
    f_hat[0, 0, :] = 0.0
    return Field.from_spectral(g, f_hat)


def _explicit_rhs(g, vh, dh, vp, dp, epsilon, dealias_on):
    """Explicit forcings (spectral): projected mean-free velocity force and
    the transport+penalty director force."""
    n = g.n
    m = dh.shape[2]

    # one batched inverse transform: [d1 v, d2 v, d1 d, d2 d, Lap d]
    stack = np.empty((n, n, 4 + 2 * m + m), dtype=np.complex128)
    stack[:, :, 0:2] = 1j * g.kd1[:, :, None] * vh
    stack[:, :, 2:4] = 1j * g.kd2[:, :, None] * vh
    stack[:, :, 4 : 4 + m] = 1j * g.kd1[:, :, None] * dh
    stack[:, :, 4 + m : 4 + 2 * m] = 1j * g.kd2[:, :, None] * dh
    stack[:, :, 4 + 2 * m :] = -g.ksq[:, :, None] * dh
    phys = np.real(np.fft.ifft2(stack, axes=(0, 1))) * (n * n)
    d1v, d2v = phys[:, :, 0:2], phys[:, :, 2:4]
    d1d, d2d = phys[:, :, 4 : 4 + m], phys[:, :, 4 + m : 4 + 2 * m]
    lap_d = phys[:, :, 4 + 2 * m :]

    v1 = vp[:, :, 0:1]
    v2 = vp[:, :, 1:2]
    adv_v = v1 * d1v + v2 * d2v
    adv_d = v1 * d1d + v2 * d2d
    mod_sq = np.sum(dp**2, axis=2, keepdims=True)
    gl = (1.0 - mod_sq) * dp / epsilon**2

    gl_hat = to_spectral(gl)
    if dealias_on:
        gl_hat *= g.dealias_mask[:, :, None]
    tau = lap_d + to_physical(gl_hat)

    # elastic force, identity form: -(grad d)^T tau
    f1 = -np.sum(d1d * tau, axis=2)
    f2 = -np.sum(d2d * tau, axis=2)

    bundle = np.empty((n, n, 4 + m))
    bundle[:, :, 0] = f1
    bundle[:, :, 1] = f2
    bundle[:, :, 2:4] = adv_v
    bundle[:, :, 4:] = adv_d
    bundle_hat = to_spectral(bundle)
    if dealias_on:
        bundle_hat *= g.dealias_mask[:, :, None]

    force_v = bundle_hat[:, :, 0:2] - bundle_hat[:, :, 2:4]
    force_v = project_solenoidal(g, force_v)
    force_v[0, 0, :] = 0.0
    force_d = gl_hat - bundle_hat[:, :, 4:]
    return force_v, force_d


def _check_finite(t, vh, dh):
    if np.all(np.isfinite(vh)) and np.all(np.isfinite(dh)):
        return
    with np.errstate(invalid="ignore"):
        max_v = float(np.max(np.abs(vh)))
        max_d = float(np.max(np.abs(dh)))
    raise BlowUpError(t=t, max_v=max_v, max_d=max_d)


def step_imex(state: SimState, params: SimParams) -> SimState:
    """One IMEX Euler step: implicit diffusion, explicit everything else."""
    g = state.grid
    dt = params.dt_effective
    eps = params.epsilon
    s = params.stabilization

    vh = state.v.spectral
    dh = state.d.spectral
    force_v, force_d = _explicit_rhs(
        g, vh, dh, state.v.physical, state.d.physical, eps, params.dealias_on
    )

    denom_v = 1.0 + dt * g.ksq
    vh_new = (vh + dt * force_v) / denom_v[:, :, None]
    vh_new = project_solenoidal(g, vh_new)

    if s > 0.0:
        shift = dt * s / eps**2
        dh_new = (dh * (1.0 + shift) + dt * force_d) / (denom_v + shift)[:, :, None]
    else:
        dh_new = (dh + dt * force_d) / denom_v[:, :, None]

    step = state.step + 1
    t_new = step * dt
    _check_finite(t_new, vh_new, dh_new)
    return SimState(
        t=t_new,
        v=Field.from_spectral(g, vh_new),
        d=Field.from_spectral(g, dh_new),
        step=step,
        params=state.params,
    )


def step_rk4_reference(state: SimState, params: SimParams) -> SimState:
    """Classical explicit RK4 on the full right-hand side (oracle scheme).

    Diffusion is explicit here too, so the usual dt restrictions apply;
    meant for small grids and convergence comparisons only.
    """
    g = state.grid
    dt = params.dt_effective
    eps = params.epsilon

    def rhs(vh, dh):
        vp = to_physical(vh)
        dp = to_physical(dh)
        force_v, force_d = _explicit_rhs(g, vh, dh, vp, dp, eps, params.dealias_on)
        dvh = -g.ksq[:, :, None] * vh + force_v
        ddh = -g.ksq[:, :, None] * dh + force_d
        return dvh, ddh

    vh0 = state.v.spectral
    dh0 = state.d.spectral
    kv1, kd1 = rhs(vh0, dh0)
    kv2, kd2 = rhs(vh0 + 0.5 * dt * kv1, dh0 + 0.5 * dt * kd1)
    kv3, kd3 = rhs(vh0 + 0.5 * dt * kv2, dh0 + 0.5 * dt * kd2)
    kv4, kd4 = rhs(vh0 + dt * kv3, dh0 + dt * kd3)

    vh_new = vh0 + dt / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
    dh_new = dh0 + dt / 6.0 * (kd1 + 2.0 * kd2 + 2.0 * kd3 + kd4)
    vh_new = project_solenoidal(g, vh_new)

    step = state.step + 1
    t_new = step * dt
    _check_finite(t_new, vh_new, dh_new)
    return SimState(
        t=t_new,
        v=Field.from_spectral(g, vh_new),
        d=Field.from_spectral(g, dh_new),
        step=step,
        params=state.params,
    )


def step(state: SimState, params: SimParams) -> SimState:
    if params.scheme == "rk4_reference":
        return step_rk4_reference(state, params)
    return step_imex(state, params)


def run(
    params: SimParams,
    init: SimState,
    sample_every: int = 1,
    sink: Optional[Callable] = None,
):
    """Advance until t >= t_end, sampling energies every ``sample_every`` steps.

    Returns (final_state, trajectory).  The sink, when given, is called as
    ``sink(state, sample)`` at every sample instant (including t=0 and the
    final step), which is where snapshot writing hooks in.  A zero horizon
    returns the initial state with an empty trajectory.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    state = init if init.params is params else init.with_params(params)
    if params.t_end <= 0.0:
        return state, []

    trajectory = [diagnostics.energy(state, params.epsilon)]
    if sink is not None:
        sink(state, trajectory[0])

    dt = params.dt_effective
    horizon = params.t_end - 1e-12
    while state.t < horizon:
        state = step(state, params)
        at_end = state.t >= horizon
        if state.step % sample_every == 0 or at_end:
            sample = diagnostics.energy(state, params.epsilon)
            trajectory.append(sample)
            if sink is not None:
                sink(state, sample)
    return state, trajectory
