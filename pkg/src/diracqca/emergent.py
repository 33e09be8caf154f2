"""Classical reference models and the metrics used to compare against them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .dynamics import evolve, theta_from_mass
from .errors import DomainError, FitError, ResolutionError
from .lattice import AmplitudeField, LatticeConfig

MASS_TOL = 1e-10


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    r_squared: float
    window: tuple[float, float]


def as_population(values, tol: float = MASS_TOL) -> np.ndarray:
    """Validate a population field: nonnegative entries, unit total mass."""
    p = np.asarray(values, dtype=float)
    if np.any(p < -tol):
        raise DomainError("population field has negative entries")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise DomainError(f"population field has total mass {total!r}, expected 1")
    return p


def transport_reference(profile, velocity: float, t: float, *, interpolate: bool = False) -> np.ndarray:
    """Exact transport along characteristics on a periodic lattice (shift by ``velocity * t`` cells)."""
    p = np.asarray(profile, dtype=float)
    shift = velocity * t
    whole = round(shift)
    if abs(shift - whole) <= 1e-9:
        return np.roll(p, int(whole), axis=0)
    if not interpolate:
        raise ResolutionError(f"shift {shift!r} is not an integer number of cells")
    lo = math.floor(shift)
    frac = shift - lo
    return (1.0 - frac) * np.roll(p, lo, axis=0) + frac * np.roll(p, lo + 1, axis=0)


def heat_kernel(n: int, variance: float) -> np.ndarray:
    """Sampled Gaussian kernel of the given variance over ``n`` periodic offsets, centered."""
    offsets = np.arange(n) - n // 2
    if variance < 1e-12:
        # narrower than any lattice spacing can resolve
        return (offsets == 0).astype(float)
    k = np.exp(-(offsets.astype(float) ** 2) / (2.0 * variance))
    return k / k.sum()


def diffusion_reference(profile, D: float, t: float) -> np.ndarray:
    """Solution of ``u_t = D u_xx`` on a periodic lattice by heat-kernel convolution."""
    if D < 0:
        raise DomainError(f"diffusion coefficient must be nonnegative, got {D!r}")
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t!r}")
    p = np.asarray(profile, dtype=float)
    if D == 0 or t == 0:
        return p.copy()
    kernel = heat_kernel(p.shape[0], 2.0 * D * t)
    # convolve1d centers odd kernels; pad to odd length so offset 0 lands at the origin
    if kernel.size % 2 == 0:
        kernel = np.append(kernel, 0.0)
    out = convolve1d(p, kernel, mode="wrap")
    total = p.sum()
    return out * (total / out.sum()) if out.sum() > 0 else out


def pca_step(field) -> np.ndarray:
    """One step of the classical partitioned automaton on an ``(N, 2)`` population array.

    Internal swap of the two subcells, then the edge swap between subcell 1
    of ``x`` and subcell 0 of ``x + 1``.
    """
    a = np.asarray(field, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2:
        raise DomainError(f"expected an (N, 2) field, got shape {a.shape}")
    swapped = a[:, ::-1]
    out = np.empty_like(a)
    out[:, 0] = np.roll(swapped[:, 1], 1)
    out[:, 1] = np.roll(swapped[:, 0], -1)
    return out


def coherence_l1(rho) -> float:
    mod = np.abs(np.asarray(rho))
    return float(mod.sum() - np.trace(mod))


def variance(field, positions=None) -> float:
    p = np.asarray(field, dtype=float)
    mass = p.sum()
    if mass <= 0:
        raise DomainError("variance of a field with zero mass")
    x = np.arange(p.shape[0], dtype=float) if positions is None else np.asarray(positions, float)
    p = p / mass
    mean = np.dot(p, x)
    return float(np.dot(p, (x - mean) ** 2))


def front_position(field, threshold: float = 1e-3, center: float | None = None) -> float:
    """Largest distance ``r`` from ``center`` such that the mass at distance ``>= r`` exceeds ``threshold``."""
    if not 0 < threshold < 1:
        raise DomainError(f"threshold must lie in (0, 1), got {threshold!r}")
    p = np.asarray(field, dtype=float)
    if center is None:
        center = p.shape[0] // 2
    dist = np.abs(np.arange(p.shape[0]) - center)
    order = np.argsort(dist, kind="stable")
    d_sorted = dist[order]
    # mass at distance >= d, evaluated at each distinct distance
    tail = np.cumsum(p[order][::-1])[::-1]
    first = np.searchsorted(d_sorted, np.unique(d_sorted))
    candidates = np.unique(d_sorted)[tail[first] > threshold]
    return float(candidates.max()) if candidates.size else 0.0


def fit_power_law(t, y, window: tuple[float, float] | None = None) -> ScalingFit:
    """Least-squares line through ``(log t, log y)`` restricted to ``window``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        window = (float(t.min()), float(t.max()))
    sel = (t >= window[0]) & (t <= window[1])
    t, y = t[sel], y[sel]
    if t.size < 5:
        raise FitError(f"need at least 5 points in window {window}, got {t.size}")
    if np.any(t <= 0) or np.any(y <= 0):
        raise FitError("power-law fit needs strictly positive t and y")
    lt, ly = np.log(t), np.log(y)
    slope, intercept = np.polyfit(lt, ly, 1)
    resid = ly - (slope * lt + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)), window)


def gaussian_packet(config: LatticeConfig, sigma: float) -> AmplitudeField:
    """Normalized packet ``psi1 = i psi0`` with ``|psi|^2`` of physical width ``sigma`` around the center."""
    x = (np.arange(config.num_cells) - config.center) * config.dx
    g = np.exp(-(x**2) / (4.0 * sigma**2)).astype(complex)
    v = np.stack([g, 1j * g], axis=1).ravel()
    return AmplitudeField.from_vector(v / np.linalg.norm(v))


def dirac_density(mass: float, final_time: float, length: float, delta: float, sigma: float = 1.0) -> np.ndarray:
    """Probability density per unit length after ``final_time`` at resolution ``dx = dt = delta``."""
    n = int(round(length / delta))
    steps = int(round(final_time / delta))
    if abs(n * delta - length) > 1e-9 * length or abs(steps * delta - final_time) > 1e-9 * final_time:
        raise ResolutionError(f"delta={delta!r} does not divide the box length and the final time")
    config = LatticeConfig(n, dx=delta, dt=delta)
    theta = theta_from_mass(mass, delta, c=config.c)
    field = evolve(gaussian_packet(config, sigma), theta, steps, config)
    return field.cell_populations() / delta


def convergence_errors(
    mass: float,
    final_time: float,
    length: float,
    deltas,
    *,
    sigma: float = 1.0,
    reference_refinement: int = 16,
) -> tuple[np.ndarray, np.ndarray]:
    """L2 density errors on the coarsest grid against a much finer reference run.

    Returns ``(errors, ratios)`` with ``ratios[i] = errors[i] / errors[i + 1]``.
    Every resolution must divide the coarsest one by an integer factor.
    """
    deltas = [float(d) for d in deltas]
    coarse = deltas[0]
    ref_delta = min(deltas) / reference_refinement
    ref = dirac_density(mass, final_time, length, ref_delta, sigma)
    ref_stride = int(round(coarse / ref_delta))
    ref_on_grid = ref[::ref_stride]
    errors = []
    for d in deltas:
        stride = int(round(coarse / d))
        if abs(stride * d - coarse) > 1e-9 * coarse:
            raise ResolutionError(f"resolution {d!r} does not refine {coarse!r} by an integer factor")
        rho = dirac_density(mass, final_time, length, d, sigma)[::stride]
        errors.append(math.sqrt(float(np.sum((rho - ref_on_grid) ** 2)) * coarse))
    errors = np.array(errors)
    return errors, errors[:-1] / errors[1:]
