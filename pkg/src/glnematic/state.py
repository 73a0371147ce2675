"""Problem parameters and the evolving (velocity, director) state.

The velocity is a 2-component :class:`~glnematic.spectral.Field` that must
stay divergence-free with zero mean; the director is a 3-component Field
whose modulus is controlled by the maximum principle (penalized dynamics)
or pinned to 1 exactly (constrained dynamics).  Both live inside the
immutable :class:`SimState` value; time stepping produces new states.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .spectral import Field, SpectralGrid

SCHEMES = ("imex1", "rk4_reference")

#: pointwise tolerance for the maximum principle |d| <= 1
MAX_PRINCIPLE_TOL = 1e-8


@dataclass(frozen=True)
class SimParams:
    """Run parameters.

    ``dt_effective`` enforces the stiffness guard dt <= eps^2/4 for the
    plain explicit penalty term (scheme ``imex1`` with ``stabilization``
    zero); with stabilization enabled, or for the reference integrator,
    the requested step is used as-is.
    """

    epsilon: float
    n: int
    dt_requested: float
    t_end: float
    scheme: str = "imex1"
    stabilization: float = 0.0
    eps0_sq: Optional[float] = None
    ball_radius: Optional[float] = None
    dealias_on: bool = True
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.n % 2 != 0 or self.n < 8:
            raise ValueError(f"grid size must be even and >= 8, got {self.n}")
        if self.dt_requested <= 0.0:
            raise ValueError("dt_requested must be positive")
        if self.t_end < 0.0:
            raise ValueError("t_end must be nonnegative")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if self.stabilization < 0.0:
            raise ValueError("stabilization must be nonnegative")
        if self.eps0_sq is not None and self.eps0_sq <= 0.0:
            raise ValueError("eps0_sq must be positive")
        if self.ball_radius is not None and not (0.0 < self.ball_radius < np.pi):
            raise ValueError("ball_radius must lie in (0, pi)")

    @property
    def dt_effective(self) -> float:
        if self.scheme == "imex1" and self.stabilization == 0.0:
            return min(self.dt_requested, 0.25 * self.epsilon**2)
        return self.dt_requested


@dataclass(frozen=True)
class SimState:
    """Snapshot of the coupled flow at one time level.

    Pressure is not part of the state; it is recoverable from (v, d) via
    ``dynamics.recover_pressure``.  ``params`` may be None for states read
    back from snapshot files; the t = step * dt consistency check is then
    skipped by :func:`validate`.
    """

    t: float
    v: Field
    d: Field
    step: int = 0
    params: Optional[SimParams] = None

    @property
    def grid(self) -> SpectralGrid:
        return self.v.grid

    def with_params(self, params: SimParams) -> "SimState":
        return replace(self, params=params)


@dataclass(frozen=True)
class InvariantCheck:
    name: str
    passed: bool
    value: float
    threshold: float


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> InvariantCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            c.name: {"passed": c.passed, "value": c.value, "threshold": c.threshold}
            for c in self.checks
        }


def velocity_divergence_max(v: Field) -> float:
    g = v.grid
    vh = v.spectral
    div = 1j * (g.kd1 * vh[:, :, 0] + g.kd2 * vh[:, :, 1])
    return float(np.max(np.abs(div)))


def validate(state: SimState) -> ValidationReport:
    """Check the standing state invariants; purely observational."""
    checks = []

    div_max = velocity_divergence_max(state.v)
    checks.append(InvariantCheck("velocity_divergence", div_max <= 1e-12, div_max, 1e-12))

    mean_v = float(np.max(np.abs(state.v.spectral[0, 0, :])))
    checks.append(InvariantCheck("velocity_zero_mean", mean_v <= 1e-13, mean_v, 1e-13))

    max_d = float(np.max(np.sqrt(np.sum(state.d.physical**2, axis=2))))
    checks.append(
        InvariantCheck(
            "director_max_principle",
            max_d <= 1.0 + MAX_PRINCIPLE_TOL,
            max_d,
            1.0 + MAX_PRINCIPLE_TOL,
        )
    )

    if state.params is not None:
        expected = state.step * state.params.dt_effective
        scale = max(abs(expected), state.params.dt_effective)
        err = abs(state.t - expected) / scale if scale > 0 else abs(state.t)
        checks.append(InvariantCheck("time_step_consistency", err <= 1e-12, err, 1e-12))

    for label, f in (("velocity", state.v), ("director", state.d)):
        if f.valid_repr == "both":
            from .spectral import to_physical

            err = float(np.max(np.abs(to_physical(f.spectral) - f.physical)))
            checks.append(
                InvariantCheck(f"{label}_representation_consistency", err <= 1e-12, err, 1e-12)
            )

    return ValidationReport(checks=tuple(checks))
