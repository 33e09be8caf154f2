"""Dirac PUQCA transition function in the one-particle sector.

One step applies the per-cell rotation W0 and then the edge swap W1. In the
one-particle sector this collapses to the two-term recurrence

    psi0(x, t+1) = cos(theta) psi0(x-1, t) - i sin(theta) psi1(x-1, t)
    psi1(x, t+1) = cos(theta) psi1(x+1, t) - i sin(theta) psi0(x+1, t)

so the transition operator is never materialized as a matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryError, DomainError, StateError
from .lattice import (
    AmplitudeField,
    LatticeConfig,
    density_support,
    require_normalized,
    validate_density,
)


@dataclass(frozen=True)
class StepSchedule:
    steps: int

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 0:
            raise DomainError(f"step count must be a nonnegative integer, got {self.steps!r}")


def theta_from_mass(mass: float, dt: float, c: float = 1.0, hbar: float = 1.0) -> float:
    """Mass angle ``theta = m c^2 dt / hbar``."""
    if mass < 0:
        raise DomainError(f"mass must be nonnegative, got {mass!r}")
    if dt <= 0 or hbar <= 0:
        raise DomainError("dt and hbar must be positive")
    return mass * c * c * dt / hbar


def _apply_transition(vecs: np.ndarray, theta: float) -> np.ndarray:
    """Apply one step along axis 0 of an array whose rows are flat site indices."""
    n = vecs.shape[0] // 2
    v = vecs.reshape((n, 2) + vecs.shape[1:])
    c, s = math.cos(theta), math.sin(theta)
    out = np.empty_like(v)
    out[:, 0] = np.roll(c * v[:, 0] - 1j * s * v[:, 1], 1, axis=0)
    out[:, 1] = np.roll(c * v[:, 1] - 1j * s * v[:, 0], -1, axis=0)
    return out.reshape(vecs.shape)


def _check_boundary(support: np.ndarray, config: LatticeConfig, step: int) -> None:
    if config.boundary != "strict" or support.size == 0:
        return
    if support[0] == 0 or support[-1] == config.num_cells - 1:
        raise BoundaryError(
            f"light cone reaches the lattice boundary at step {step} "
            f"(support spans cells {support[0]}..{support[-1]} of {config.num_cells})",
            step=step,
        )


def step_amplitudes(
    field: AmplitudeField, theta: float, config: LatticeConfig, *, _step: int = 1
) -> AmplitudeField:
    if field.num_cells != config.num_cells:
        raise StateError(f"field has {field.num_cells} cells, config has {config.num_cells}")
    if config.boundary == "strict":
        _check_boundary(field.support(), config, _step)
    return AmplitudeField.from_vector(_apply_transition(field.to_vector(), theta))


def _step_density(rho: np.ndarray, theta: float, config: LatticeConfig, step: int) -> np.ndarray:
    if config.boundary == "strict":
        _check_boundary(density_support(rho), config, step)
    # E rho E^dagger: E on the ket index, then on the bra index via (E A^dagger)^dagger
    half = _apply_transition(rho, theta)
    return _apply_transition(half.conj().T, theta).conj().T


def step_density(rho, theta: float, config: LatticeConfig) -> np.ndarray:
    rho = validate_density(rho)
    if rho.shape[0] != config.dim:
        raise StateError(f"density has dimension {rho.shape[0]}, config expects {config.dim}")
    return _step_density(rho, theta, config, 1)


def evolve(state, theta: float, schedule: StepSchedule | int, config: LatticeConfig):
    """Apply ``schedule.steps`` transition steps to an amplitude field or a density matrix."""
    steps = schedule.steps if isinstance(schedule, StepSchedule) else StepSchedule(schedule).steps
    if isinstance(state, AmplitudeField):
        require_normalized(state)
        for t in range(1, steps + 1):
            state = step_amplitudes(state, theta, config, _step=t)
        return state
    rho = validate_density(state)
    if rho.shape[0] != config.dim:
        raise StateError(f"density has dimension {rho.shape[0]}, config expects {config.dim}")
    for t in range(1, steps + 1):
        rho = _step_density(rho, theta, config, t)
    return rho
