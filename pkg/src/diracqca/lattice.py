"""Lattice geometry, one-particle state containers and initial conditions.

Sites are labelled ``(cell, subcell)`` and flattened as ``2 * cell + subcell``.
Subcell 0 carries the right-moving spinor component, subcell 1 the left-moving
one. Density matrices are plain ``(2N, 2N)`` complex numpy arrays indexed by
flat site labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Mapping, NamedTuple

import numpy as np

from .errors import DivisibilityError, DomainError, NormalizationError, StateError

NORM_TOL = 1e-12
PSD_TOL = 1e-10

Boundary = Literal["periodic", "strict"]


@dataclass(frozen=True)
class LatticeConfig:
    num_cells: int
    theta: float = 0.0
    boundary: Boundary = "periodic"
    dx: float = 1.0
    dt: float = 1.0

    def __post_init__(self):
        if int(self.num_cells) != self.num_cells or self.num_cells < 2:
            raise DomainError(f"num_cells must be an integer >= 2, got {self.num_cells!r}")
        if self.boundary not in ("periodic", "strict"):
            raise DomainError(f"unknown boundary mode {self.boundary!r}")
        if not (self.dx > 0 and self.dt > 0) or not math.isfinite(self.dx / self.dt):
            raise DomainError("dx and dt must be positive with finite ratio")

    @property
    def dim(self) -> int:
        return 2 * self.num_cells

    @property
    def c(self) -> float:
        return self.dx / self.dt

    @property
    def center(self) -> int:
        return self.num_cells // 2

    def require_level(self, level: int) -> None:
        if self.num_cells % (2**level):
            raise DivisibilityError(
                f"num_cells={self.num_cells} is not divisible by 2^{level}={2**level}"
            )


class SiteIndex(NamedTuple):
    cell: int
    subcell: int


def flatten(site: SiteIndex | tuple[int, int]) -> int:
    cell, subcell = site
    return 2 * cell + subcell


def unflatten(index: int) -> SiteIndex:
    return SiteIndex(index // 2, index % 2)


def _check_site(config: LatticeConfig, site) -> SiteIndex:
    cell, subcell = site
    if not (0 <= cell < config.num_cells) or subcell not in (0, 1):
        raise IndexError(f"site {tuple(site)} out of range for {config.num_cells} cells")
    return SiteIndex(int(cell), int(subcell))


@dataclass(frozen=True, eq=False)
class AmplitudeField:
    """Pure one-particle state: the two spinor components over the cells."""

    psi0: np.ndarray
    psi1: np.ndarray

    def __post_init__(self):
        p0 = np.array(self.psi0, dtype=complex)
        p1 = np.array(self.psi1, dtype=complex)
        if p0.ndim != 1 or p0.shape != p1.shape:
            raise StateError("psi0 and psi1 must be 1-d arrays of equal length")
        p0.flags.writeable = False
        p1.flags.writeable = False
        object.__setattr__(self, "psi0", p0)
        object.__setattr__(self, "psi1", p1)

    @property
    def num_cells(self) -> int:
        return self.psi0.shape[0]

    @classmethod
    def from_vector(cls, vec) -> AmplitudeField:
        vec = np.asarray(vec, dtype=complex)
        if vec.ndim != 1 or vec.shape[0] % 2:
            raise StateError("flat amplitude vector must have even length")
        return cls(vec[0::2], vec[1::2])

    def to_vector(self) -> np.ndarray:
        out = np.empty(2 * self.num_cells, dtype=complex)
        out[0::2] = self.psi0
        out[1::2] = self.psi1
        return out

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.psi0) ** 2) + np.sum(np.abs(self.psi1) ** 2)))

    def populations(self) -> np.ndarray:
        """Flat site populations ``|psi^a(k)|^2`` at index ``2k + a``."""
        return np.abs(self.to_vector()) ** 2

    def cell_populations(self) -> np.ndarray:
        return np.abs(self.psi0) ** 2 + np.abs(self.psi1) ** 2

    def support(self) -> np.ndarray:
        """Indices of cells carrying nonzero amplitude."""
        return np.flatnonzero((self.psi0 != 0) | (self.psi1 != 0))


def require_normalized(field: AmplitudeField, tol: float = NORM_TOL) -> None:
    n = field.norm()
    if abs(n - 1.0) > tol:
        raise NormalizationError(f"amplitude field has norm {n!r}, expected 1")


def validate_density(rho, *, psd: bool = True, tol: float = NORM_TOL) -> np.ndarray:
    """Return ``rho`` as a complex array after checking the density-matrix invariants."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] % 2:
        raise StateError(f"density matrix must be square with even dimension, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, rtol=0.0, atol=tol):
        raise StateError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise StateError(f"density matrix has trace {tr!r}, expected 1")
    if psd:
        lam = np.linalg.eigvalsh(rho).min()
        if lam < -PSD_TOL:
            raise StateError(f"density matrix has negative eigenvalue {lam!r}")
    return rho


def density_support(rho: np.ndarray) -> np.ndarray:
    """Cells whose rows or columns carry any nonzero entry."""
    n = rho.shape[0] // 2
    occupied = np.any(rho != 0, axis=1) | np.any(rho != 0, axis=0)
    return np.flatnonzero(occupied.reshape(n, 2).any(axis=1))


def init_single_excitation(config: LatticeConfig, site) -> AmplitudeField:
    cell, subcell = _check_site(config, site)
    psi = np.zeros((2, config.num_cells), dtype=complex)
    psi[subcell, cell] = 1.0
    return AmplitudeField(psi[0], psi[1])


def init_centered_superposition(config: LatticeConfig) -> AmplitudeField:
    """``(|c,0> + |c,1>)/sqrt(2)`` on the center cell ``c = N // 2``."""
    psi = np.zeros((2, config.num_cells), dtype=complex)
    psi[:, config.center] = 1.0 / math.sqrt(2.0)
    return AmplitudeField(psi[0], psi[1])


def init_population_profile(
    config: LatticeConfig, weights: Mapping[tuple[int, int], float]
) -> np.ndarray:
    """Diagonal density matrix with the given site populations and no coherences."""
    diag = np.zeros(config.dim)
    for site, w in weights.items():
        site = _check_site(config, site)
        if w < 0:
            raise DomainError(f"negative weight {w!r} at site {tuple(site)}")
        diag[flatten(site)] += w
    total = diag.sum()
    if abs(total - 1.0) > NORM_TOL:
        raise NormalizationError(f"weights sum to {total!r}, expected 1")
    return np.diag(diag).astype(complex)


def density_from_amplitudes(field: AmplitudeField) -> np.ndarray:
    require_normalized(field)
    v = field.to_vector()
    return np.outer(v, v.conj())
