"""Coarse-graining channel and level-L sampling schedules.

One application of the global map merges cells ``2j`` and ``2j + 1`` into the
coarse cell ``j``: level-L cell ``k`` becomes coarse site ``(k // 2, k % 2)``,
whose flat index is ``k`` itself. Populations of a cell are summed, same-cell
cross-subcell coherences are erased, and coherences between distinct cells are
damped by 1/3. Iterating ``L`` times is therefore a block sum over contiguous
windows of ``2^L`` flat level-0 indices, with off-diagonal blocks scaled by
``3^-L`` and diagonal blocks reduced to their trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .dynamics import _step_density, step_amplitudes
from .errors import DivisibilityError, DomainError, ScheduleError, StateError
from .lattice import AmplitudeField, LatticeConfig, require_normalized, validate_density

ScheduleMode = Literal["spatial_only", "spacetime", "custom"]


@dataclass(frozen=True)
class CGSchedule:
    level: int
    h_per_jump: int = 1
    mode: ScheduleMode = "custom"

    def __post_init__(self):
        if int(self.level) != self.level or self.level < 0:
            raise ScheduleError(f"CG level must be a nonnegative integer, got {self.level!r}")
        if self.mode not in ("spatial_only", "spacetime", "custom"):
            raise ScheduleError(f"unknown schedule mode {self.mode!r}")
        if int(self.h_per_jump) != self.h_per_jump or not 1 <= self.h_per_jump <= 2**self.level:
            raise ScheduleError(
                f"h={self.h_per_jump} outside 1..2^L={2**self.level} for a level-{self.level} jump"
            )

    @classmethod
    def spatial_only(cls, level: int) -> CGSchedule:
        return cls(level, 1, "spatial_only")

    @classmethod
    def spacetime(cls, level: int) -> CGSchedule:
        return cls(level, 2**level, "spacetime")

    @classmethod
    def from_mode(cls, level: int, mode: str, h: int | None = None) -> CGSchedule:
        if mode == "spatial_only":
            return cls.spatial_only(level)
        if mode == "spacetime":
            return cls.spacetime(level)
        return cls(level, 1 if h is None else h, "custom")


def _block_reduce(rho: np.ndarray, block: int) -> np.ndarray:
    m = rho.shape[0] // block
    sums = rho.reshape(m, block, m, block).sum(axis=(1, 3))
    return sums


def _coarse_from_blocks(block_sums: np.ndarray, diag: np.ndarray, level: int) -> np.ndarray:
    out = block_sums / 3.0**level
    np.fill_diagonal(out, diag)
    return out


def cg_once(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0] // 2
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] % 2:
        raise StateError(f"expected a square (2N, 2N) matrix, got {rho.shape}")
    if n % 2:
        raise DivisibilityError(f"cannot pair {n} cells: cell count must be even")
    diag = np.real(np.diagonal(rho)).reshape(n, 2).sum(axis=1)
    return _coarse_from_blocks(_block_reduce(rho, 2), diag, 1)


def cg_jump(state, level: int) -> np.ndarray:
    """Level-``level`` density matrix from a level-0 density matrix or amplitude field.

    For a pure state the block sums factor as an outer product, so the cost is
    linear in the lattice size plus the size of the coarse matrix.
    """
    if int(level) != level or level < 0:
        raise DomainError(f"CG level must be a nonnegative integer, got {level!r}")
    if isinstance(state, AmplitudeField):
        vec = state.to_vector()
        n = state.num_cells
    else:
        rho = np.asarray(state, dtype=complex)
        n = rho.shape[0] // 2
    if n % 2**level:
        raise DivisibilityError(f"num_cells={n} is not divisible by 2^{level}")
    if level == 0:
        return np.outer(vec, vec.conj()) if isinstance(state, AmplitudeField) else rho.copy()
    block = 2**level
    if isinstance(state, AmplitudeField):
        b = vec.reshape(-1, block).sum(axis=1)
        diag = (np.abs(vec) ** 2).reshape(-1, block).sum(axis=1)
        return _coarse_from_blocks(np.outer(b, b.conj()), diag, level)
    diag = np.real(np.diagonal(rho)).reshape(-1, block).sum(axis=1)
    return _coarse_from_blocks(_block_reduce(rho, block), diag, level)


def check_block_sorted(rho_0, level: int, tol: float = 0.0) -> bool:
    """True iff every level-L block keeps subcell-0 mass in its left half and subcell-1 mass in its right half."""
    rho = np.asarray(rho_0)
    offdiag = rho - np.diag(np.diagonal(rho))
    if np.any(np.abs(offdiag) > tol):
        raise DomainError("check_block_sorted requires a diagonal density matrix")
    if level < 1:
        raise DomainError("block sorting is defined for levels >= 1")
    n = rho.shape[0] // 2
    if n % 2**level:
        raise DivisibilityError(f"num_cells={n} is not divisible by 2^{level}")
    pops = np.real(np.diagonal(rho)).reshape(n // 2**level, 2**level, 2)
    half = 2 ** (level - 1)
    wrong = np.concatenate([pops[:, half:, 0].ravel(), pops[:, :half, 1].ravel()])
    return bool(np.all(np.abs(wrong) <= tol))


def centered_sorted_weights(config: LatticeConfig, level: int, alpha0, alpha1) -> dict:
    """Block-sorted centered population profile.

    Subcell-0 weights ``alpha0[l]`` sit ``l + 1`` cells left of the block
    midpoint and subcell-1 weights ``alpha1[l]`` sit ``l`` cells right of it,
    ``l = 0..L-1``; the block is the level-L block nearest the lattice center.
    """
    config.require_level(level)
    if level < 1 or len(alpha0) != level or len(alpha1) != level:
        raise DomainError("need level >= 1 and L weights per subcell")
    width = 2**level
    start = (config.center // width) * width
    if start + width > config.num_cells:
        start -= width
    mid = start + width // 2
    weights: dict = {}
    for l in range(level):
        weights[(mid - 1 - l, 0)] = weights.get((mid - 1 - l, 0), 0.0) + float(alpha0[l])
        weights[(mid + l, 1)] = weights.get((mid + l, 1), 0.0) + float(alpha1[l])
    return weights


@dataclass
class CoarseTrajectory:
    """Level-L samples taken every ``h`` level-0 steps."""

    level: int
    h: int
    level0_times: list[int] = field(default_factory=list)
    coarse_times: list[int] = field(default_factory=list)
    populations: list[np.ndarray] = field(default_factory=list)
    coherence_l1: list[float] = field(default_factory=list)
    max_cross_coherence: list[float] = field(default_factory=list)
    states: list[np.ndarray] | None = None

    def cell_populations(self) -> np.ndarray:
        """Coarse cell totals, one row per sample."""
        return np.array([p.reshape(-1, 2).sum(axis=1) for p in self.populations])

    def site_populations(self) -> np.ndarray:
        return np.array(self.populations)


def cross_cell_mask(dim: int) -> np.ndarray:
    cells = np.arange(dim) // 2
    return cells[:, None] != cells[None, :]


def _summarize(coarse: np.ndarray) -> tuple[np.ndarray, float, float]:
    mod = np.abs(coarse)
    cross = mod[cross_cell_mask(coarse.shape[0])]
    return (
        np.real(np.diagonal(coarse)).copy(),
        float(mod.sum() - np.trace(mod)),
        float(cross.max()) if cross.size else 0.0,
    )


def _summarize_pure(field_: AmplitudeField, level: int) -> tuple[np.ndarray, float, float]:
    # coarse entries are b_I conj(b_J) / 3^L off the diagonal
    vec = field_.to_vector()
    block = 2**level
    b = np.abs(vec.reshape(-1, block).sum(axis=1))
    pops = (np.abs(vec) ** 2).reshape(-1, block).sum(axis=1)
    scale = 3.0**-level
    l1 = scale * (b.sum() ** 2 - np.sum(b**2))
    cell_max = np.sort(b.reshape(-1, 2).max(axis=1))
    cross = scale * cell_max[-1] * cell_max[-2] if cell_max.size > 1 else 0.0
    return pops, float(l1), float(cross)


def _record(traj: CoarseTrajectory, state, t0: int, m: int, keep: bool) -> None:
    if isinstance(state, AmplitudeField) and not keep:
        pops, l1, cross = _summarize_pure(state, traj.level)
    else:
        coarse = cg_jump(state, traj.level)
        pops, l1, cross = _summarize(coarse)
        if keep:
            traj.states.append(coarse)
    traj.level0_times.append(t0)
    traj.coarse_times.append(m)
    traj.populations.append(pops)
    traj.coherence_l1.append(l1)
    traj.max_cross_coherence.append(cross)


def run_cg_trajectory(
    state_0,
    schedule: CGSchedule,
    theta: float,
    coarse_steps: int,
    config: LatticeConfig,
    *,
    keep_states: bool = False,
) -> CoarseTrajectory:
    """Evolve at level 0 and sample the level-L image after every ``h`` steps.

    The level-0 state is never replaced by its coarse image; each sample is
    ``cg_jump`` of the current fine state. ``coarse_steps + 1`` samples are
    recorded, the first one at time zero.
    """
    if not isinstance(schedule, CGSchedule):
        raise ScheduleError("schedule must be a CGSchedule")
    if int(coarse_steps) != coarse_steps or coarse_steps < 0:
        raise DomainError(f"coarse_steps must be a nonnegative integer, got {coarse_steps!r}")
    config.require_level(schedule.level)
    pure = isinstance(state_0, AmplitudeField)
    if pure:
        require_normalized(state_0)
        current = state_0
        dim = 2 * state_0.num_cells
    else:
        current = validate_density(state_0)
        dim = current.shape[0]
    if dim != config.dim:
        raise StateError(f"state has dimension {dim}, config expects {config.dim}")

    traj = CoarseTrajectory(schedule.level, schedule.h_per_jump, states=[] if keep_states else None)

    _record(traj, current, 0, 0, keep_states)
    t = 0
    for m in range(1, coarse_steps + 1):
        for _ in range(schedule.h_per_jump):
            t += 1
            if pure:
                current = step_amplitudes(current, theta, config, _step=t)
            else:
                current = _step_density(current, theta, config, t)
        _record(traj, current, t, m, keep_states)
    return traj
