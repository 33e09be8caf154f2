"""Brute-force ground truth on tiny lattices.

Everything here works in the full ``2^(2n)``-dimensional qubit space with
explicit 4x4 gates, independent of the sector recurrence in ``dynamics``.
Qubit ``2k + a`` holds subcell ``a`` of cell ``k``; qubit 0 is the most
significant bit of a basis index.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, SizeError
from .lattice import AmplitudeField, NORM_TOL, require_normalized

MAX_ORACLE_CELLS = 6
CG_FACTOR = 1.0 / math.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class FullHilbertState:
    num_cells: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if self.num_cells > MAX_ORACLE_CELLS:
            raise SizeError(f"oracle supports at most {MAX_ORACLE_CELLS} cells")
        if amps.shape != (4**self.num_cells,):
            raise SizeError(f"expected {4**self.num_cells} amplitudes, got {amps.shape}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def site_basis_index(num_cells: int, cell: int, subcell: int) -> int:
    """Basis index of the configuration with a single excitation at ``(cell, subcell)``."""
    return 1 << (2 * num_cells - 1 - (2 * cell + subcell))


def sector_indices(num_cells: int) -> np.ndarray:
    """Full-space basis indices of the one-particle sites, in flat site order."""
    return np.array([1 << (2 * num_cells - 1 - q) for q in range(2 * num_cells)])


def embed_one_particle(field: AmplitudeField) -> FullHilbertState:
    n = field.num_cells
    if n > MAX_ORACLE_CELLS:
        raise SizeError(f"cannot embed {n} cells; oracle limit is {MAX_ORACLE_CELLS}")
    require_normalized(field)
    amps = np.zeros(4**n, dtype=complex)
    amps[sector_indices(n)] = field.to_vector()
    return FullHilbertState(n, amps)


def project_one_particle(state: FullHilbertState) -> AmplitudeField:
    return AmplitudeField.from_vector(state.amplitudes[sector_indices(state.num_cells)])


def one_particle_weight(state: FullHilbertState) -> float:
    return float(np.sum(np.abs(state.amplitudes[sector_indices(state.num_cells)]) ** 2))


def w0_gate(theta: float) -> np.ndarray:
    """Per-cell rotation on ``|subcell0 subcell1>``, basis order 00, 01, 10, 11."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [
            [1, 0, 0, 0],
            [0, -1j * s, c, 0],
            [0, c, -1j * s, 0],
            [0, 0, 0, 1],
        ],
        dtype=complex,
    )


W1_GATE = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
    dtype=complex,
)


def _apply_two_qubit(psi: np.ndarray, gate: np.ndarray, q0: int, q1: int) -> np.ndarray:
    g = gate.reshape(2, 2, 2, 2)
    out = np.tensordot(g, psi, axes=([2, 3], [q0, q1]))
    return np.moveaxis(out, [0, 1], [q0, q1])


def oracle_step_full(state: FullHilbertState, theta: float) -> FullHilbertState:
    """W0 on every cell, then the swap W1 on every edge (periodic)."""
    n = state.num_cells
    psi = state.amplitudes.reshape((2,) * (2 * n))
    w0 = w0_gate(theta)
    for k in range(n):
        psi = _apply_two_qubit(psi, w0, 2 * k, 2 * k + 1)
    for k in range(n):
        psi = _apply_two_qubit(psi, W1_GATE, 2 * k + 1, (2 * k + 2) % (2 * n))
    return FullHilbertState(n, psi.reshape(-1))


# Local coarse-graining map on one cell: L(C^2 x C^2) -> L(C^2).
# Only the span of |00>, |01>, |10> is in the domain.

def local_cg_tensor(factor: float = CG_FACTOR) -> np.ndarray:
    """Superoperator ``T[o, o', i, i']`` with ``out[o, o'] = sum T * in[i, i']``."""
    t = np.zeros((2, 2, 4, 4), dtype=complex)
    t[0, 0, 0b00, 0b00] = 1.0
    t[1, 1, 0b01, 0b01] = 1.0
    t[1, 1, 0b10, 0b10] = 1.0
    t[1, 0, 0b01, 0b00] = factor
    t[1, 0, 0b10, 0b00] = factor
    t[0, 1, 0b00, 0b01] = factor
    t[0, 1, 0b00, 0b10] = factor
    return t


def local_cg(op, factor: float = CG_FACTOR) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.shape != (4, 4):
        raise DomainError("local map acts on 4x4 operators")
    if np.any(op[3, :] != 0) or np.any(op[:, 3] != 0):
        raise DomainError("local CG map is undefined on the doubly occupied state |11>")
    return np.einsum("abij,ij->ab", local_cg_tensor(factor), op)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Choi operator on input span{|00>,|01>,|10>} tensor output C^2 (input index major)."""

    entries: np.ndarray
    min_eigenvalue: float

    def partial_trace_output(self) -> np.ndarray:
        return np.einsum("iojo->ij", self.entries.reshape(3, 2, 3, 2))


def choi_of_local_cg(factor: float = CG_FACTOR) -> ChoiMatrix:
    domain = (0b00, 0b01, 0b10)
    choi = np.zeros((6, 6), dtype=complex)
    for i, bi in enumerate(domain):
        for j, bj in enumerate(domain):
            unit = np.zeros((4, 4), dtype=complex)
            unit[bi, bj] = 1.0
            choi[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = local_cg(unit, factor)
    return ChoiMatrix(choi, float(np.linalg.eigvalsh(choi).min()))


def full_density_from_sector(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0] // 2
    if n > MAX_ORACLE_CELLS:
        raise SizeError(f"oracle supports at most {MAX_ORACLE_CELLS} cells")
    full = np.zeros((4**n, 4**n), dtype=complex)
    idx = sector_indices(n)
    full[np.ix_(idx, idx)] = rho
    return full


def sector_density_from_full(full: np.ndarray, num_cells: int) -> np.ndarray:
    idx = sector_indices(num_cells)
    return full[np.ix_(idx, idx)]


def apply_local_cg_full(rho_full, num_cells: int, factor: float = CG_FACTOR) -> np.ndarray:
    """Apply the local map to every cell of a full-space density and relabel.

    Output is a density on ``num_cells`` coarse qubits, i.e. ``num_cells // 2``
    coarse cells, with coarse qubit ``k`` coming from input cell ``k``.
    """
    n = num_cells
    if n % 2:
        raise DomainError("full-space CG needs an even number of cells")
    if n > MAX_ORACLE_CELLS:
        raise SizeError(f"oracle supports at most {MAX_ORACLE_CELLS} cells")
    rho_full = np.asarray(rho_full, dtype=complex)
    if rho_full.shape != (4**n, 4**n):
        raise SizeError(f"expected a {4**n}x{4**n} density, got {rho_full.shape}")
    outside = np.ones(4**n, dtype=bool)
    outside[sector_indices(n)] = False
    if np.any(rho_full[outside, :] != 0) or np.any(rho_full[:, outside] != 0):
        raise DomainError("density has support outside the one-particle sector")
    t = local_cg_tensor(factor)
    r = rho_full.reshape((4,) * (2 * n))
    for k in range(n):
        # ket axis k and bra axis n + k are replaced by 2-dim output axes at the same slots
        r = np.tensordot(t, r, axes=([2, 3], [k, n + k]))
        r = np.moveaxis(r, [0, 1], [k, n + k])
    return r.reshape(2**n, 2**n)


def lemma1_bound(p) -> tuple[float, float]:
    """``(sum sqrt(p_i), sqrt(D))`` for a probability vector of length ``D >= 2``."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise DomainError("need a distribution over at least two outcomes")
    if np.any(p < 0) or abs(p.sum() - 1.0) > NORM_TOL:
        raise DomainError("not a probability distribution")
    return float(np.sum(np.sqrt(p))), math.sqrt(p.size)


def coherence_bound(level: int) -> float:
    if level < 0:
        raise DomainError("level must be nonnegative")
    return (2.0 * math.sqrt(2.0) / 3.0) ** level


def random_pure_field(num_cells: int, rng: np.random.Generator) -> AmplitudeField:
    v = rng.normal(size=2 * num_cells) + 1j * rng.normal(size=2 * num_cells)
    return AmplitudeField.from_vector(v / np.linalg.norm(v))


def random_density(num_cells: int, rng: np.random.Generator, max_terms: int = 8) -> np.ndarray:
    """Convex mixture of up to ``max_terms`` random one-particle pure states."""
    terms = int(rng.integers(1, max_terms + 1))
    weights = rng.random(terms)
    weights /= weights.sum()
    rho = np.zeros((2 * num_cells, 2 * num_cells), dtype=complex)
    for w in weights:
        v = random_pure_field(num_cells, rng).to_vector()
        rho += w * np.outer(v, v.conj())
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


@dataclass
class Check:
    name: str
    tolerance: float
    value: float
    passed: bool
    detail: str = ""


def verification_checks(seed: int = 0) -> list[Check]:
    """Run the oracle suite: sector equivalence, CPTP certification and the coherence bounds."""
    from .coarse import cg_jump, cg_once, cross_cell_mask
    from .dynamics import step_amplitudes
    from .lattice import LatticeConfig, density_from_amplitudes

    rng = np.random.default_rng(seed)
    checks: list[Check] = []

    def add(name, tol, value, passed, detail=""):
        checks.append(Check(name, tol, float(value), bool(passed), detail))

    n, theta, steps = 4, 0.7, 8
    config = LatticeConfig(n, theta)
    psi = random_pure_field(n, rng)
    full = embed_one_particle(psi)
    amp_err = norm_err = leak = 0.0
    for _ in range(steps):
        psi = step_amplitudes(psi, theta, config)
        full = oracle_step_full(full, theta)
        amp_err = max(amp_err, float(np.max(np.abs(project_one_particle(full).to_vector() - psi.to_vector()))))
        norm_err = max(norm_err, abs(full.norm() - 1.0))
        leak = max(leak, abs(one_particle_weight(full) - 1.0))
    add("sector_vs_full_amplitudes", 1e-12, amp_err, amp_err <= 1e-12, f"N={n}, theta={theta}, {steps} steps")
    add("full_evolution_unitary", 1e-12, norm_err, norm_err <= 1e-12)
    add("particle_number_conserved", 1e-12, leak, leak <= 1e-12)

    rho = density_from_amplitudes(psi)
    coarse_full = apply_local_cg_full(full_density_from_sector(rho), n)
    cg_err = float(np.max(np.abs(sector_density_from_full(coarse_full, n // 2) - cg_once(rho))))
    add("full_space_cg_vs_cg_once", 1e-12, cg_err, cg_err <= 1e-12)

    choi = choi_of_local_cg()
    add("choi_min_eigenvalue", 1e-12, choi.min_eigenvalue, choi.min_eigenvalue >= -1e-12)
    tp_err = float(np.max(np.abs(choi.partial_trace_output() - np.eye(3))))
    add("choi_trace_preserving", 1e-12, tp_err, tp_err <= 1e-12)
    herm_err = float(np.max(np.abs(choi.entries - choi.entries.conj().T)))
    add("choi_hermitian", 1e-12, herm_err, herm_err <= 1e-12)
    mutated = choi_of_local_cg(1.0)
    add("mutated_choi_fails_cp", 0.01, mutated.min_eigenvalue, mutated.min_eigenvalue < -0.01,
        "factor 1 instead of 1/sqrt(3)")

    worst = -math.inf
    for _ in range(1000):
        d = int(rng.integers(2, 65))
        p = rng.dirichlet(np.full(d, rng.uniform(0.05, 5.0)))
        p /= p.sum()
        s, b = lemma1_bound(p)
        worst = max(worst, s - b)
    add("lemma1_random", 1e-12, worst, worst <= 1e-12, "1000 distributions, D <= 64")
    s, b = lemma1_bound(np.full(16, 1.0 / 16))
    add("lemma1_uniform_saturates", 1e-12, abs(s - b), abs(s - b) <= 1e-12)

    worst_ratio = -math.inf
    for _ in range(100):
        rho0 = random_density(64, rng)
        for level in range(1, 7):
            coarse = cg_jump(rho0, level)
            cross = np.abs(coarse)[cross_cell_mask(coarse.shape[0])]
            if cross.size:
                worst_ratio = max(worst_ratio, float(cross.max() - coherence_bound(level)))
    add("coherence_bound_random", 1e-9, worst_ratio, worst_ratio <= 1e-9,
        "max(|offdiag| - (2 sqrt2/3)^L), 100 states, N=64, L=1..6")
    return checks


def write_verification_report(path, seed: int = 0) -> tuple[list[Check], Path]:
    start = time.perf_counter()
    checks = verification_checks(seed)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report = {
        "seed": seed,
        "wall_time_s": time.perf_counter() - start,
        "passed": all(c.passed for c in checks),
        "checks": [
            {"name": c.name, "tolerance": c.tolerance, "value": c.value, "pass": c.passed, "detail": c.detail}
            for c in checks
        ],
    }
    path.write_text(json.dumps(report, indent=2) + "\n")
    return checks, path
