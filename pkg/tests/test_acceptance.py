"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np

from diracqca.coarse import CGSchedule, cg_jump, cg_once, cross_cell_mask, run_cg_trajectory
from diracqca.dynamics import evolve, step_amplitudes
from diracqca.emergent import coherence_l1, convergence_errors, front_position, pca_step
from diracqca.harness import preset, validate_config
from diracqca.harness.experiments import crossover_analysis, random_sorted_weights
from diracqca.lattice import (
    LatticeConfig,
    density_from_amplitudes,
    init_centered_superposition,
    init_population_profile,
)
from diracqca.oracle import (
    apply_local_cg_full,
    choi_of_local_cg,
    coherence_bound,
    embed_one_particle,
    full_density_from_sector,
    lemma1_bound,
    one_particle_weight,
    oracle_step_full,
    project_one_particle,
    random_density,
    random_pure_field,
    sector_density_from_full,
)


def fig2_state():
    cfg = LatticeConfig(512, math.pi / 4, boundary="strict")
    return evolve(init_centered_superposition(cfg), cfg.theta, 200, cfg)


def max_cross(coarse):
    cross = np.abs(coarse)[cross_cell_mask(coarse.shape[0])]
    return float(cross.max()) if cross.size else 0.0


def test_criterion_01_coherence_decay(criterion):
    start = time.perf_counter()
    state = fig2_state()
    series = np.array([coherence_l1(cg_jump(state, level)) for level in range(7)])
    elapsed = time.perf_counter() - start
    decreasing = bool(np.all(np.diff(series) < 0))
    levels = np.arange(1, 7, dtype=float)
    logs = np.log(series[1:])
    slope, intercept = np.polyfit(levels, logs, 1)
    resid = logs - (slope * levels + intercept)
    r2 = 1.0 - np.sum(resid**2) / np.sum((logs - logs.mean()) ** 2)
    ok = decreasing and r2 >= 0.9 and elapsed <= 300
    criterion(1, ok, f"strictly decreasing={decreasing}, r2={r2:.4f} (>=0.9), {elapsed:.1f}s")
    assert ok


def test_criterion_02_coherence_bound(criterion):
    rng = np.random.default_rng(2)
    states = [fig2_state()] + [random_density(64, rng) for _ in range(100)]
    violations, worst = 0, -math.inf
    for state in states:
        for level in range(1, 7):
            excess = max_cross(cg_jump(state, level)) - coherence_bound(level)
            worst = max(worst, excess)
            violations += excess > 1e-9
    ok = violations == 0
    criterion(2, ok, f"{violations} violations over 101 states x 6 levels, worst excess {worst:.3g}")
    assert ok


def test_criterion_03_lemma1(criterion):
    rng = np.random.default_rng(3)
    worst = -math.inf
    for _ in range(1000):
        d = int(rng.integers(2, 65))
        p = rng.dirichlet(np.full(d, rng.uniform(0.05, 5.0)))
        p /= p.sum()
        s, b = lemma1_bound(p)
        worst = max(worst, s - b)
    s, b = lemma1_bound(np.full(64, 1 / 64))
    ok = worst <= 1e-12 and abs(s - b) <= 1e-12
    criterion(3, ok, f"max(sum sqrt p - sqrt D)={worst:.3g}, uniform gap {abs(s - b):.3g}")
    assert ok


def test_criterion_04_cptp(criterion):
    choi = choi_of_local_cg()
    tp = float(np.max(np.abs(choi.partial_trace_output() - np.eye(3))))
    mutated = choi_of_local_cg(1.0).min_eigenvalue
    ok = choi.min_eigenvalue >= -1e-12 and tp <= 1e-12 and mutated < -0.01
    criterion(4, ok, f"min eig {choi.min_eigenvalue:.3g}, TP error {tp:.3g}, mutated min eig {mutated:.6f}")
    assert ok


def test_criterion_05_oracle_equivalence(criterion):
    start = time.perf_counter()
    n, theta = 4, 0.7
    cfg = LatticeConfig(n, theta)
    psi = random_pure_field(n, np.random.default_rng(5))
    full = embed_one_particle(psi)
    amp_err = leak = 0.0
    for _ in range(8):
        psi = step_amplitudes(psi, theta, cfg)
        full = oracle_step_full(full, theta)
        amp_err = max(amp_err, float(np.max(np.abs(project_one_particle(full).to_vector() - psi.to_vector()))))
        leak = max(leak, abs(one_particle_weight(full) - 1.0))
    rho = density_from_amplitudes(psi)
    coarse = sector_density_from_full(apply_local_cg_full(full_density_from_sector(rho), n), n // 2)
    cg_err = float(np.max(np.abs(coarse - cg_once(rho))))
    elapsed = time.perf_counter() - start
    ok = amp_err <= 1e-12 and cg_err <= 1e-12 and leak <= 1e-12 and elapsed <= 10
    criterion(5, ok, f"amplitude error {amp_err:.3g}, CG error {cg_err:.3g}, {elapsed:.2f}s")
    assert ok


def test_criterion_06_exact_transport(criterion):
    cfg = LatticeConfig(256)
    rng = np.random.default_rng(6)
    worst = 0.0
    for level in (1, 2, 3):
        for subcell, direction in ((0, 1), (1, -1)):
            cells = cfg.center + np.arange(-2 * 2**level, 2 * 2**level)
            w = rng.random(cells.size)
            w /= w.sum()
            rho = init_population_profile(cfg, {(int(c), subcell): float(x) for c, x in zip(cells, w)})
            traj = run_cg_trajectory(rho, CGSchedule.spacetime(level), 0.0, 12, cfg)
            pops = traj.cell_populations()
            for m, p in enumerate(pops):
                worst = max(worst, float(np.max(np.abs(p - np.roll(pops[0], direction * m)))))
    ok = worst <= 1e-12
    criterion(6, ok, f"max shift error {worst:.3g} over 12 coarse steps, L=1,2,3, both modes")
    assert ok


def front_slope(level, schedule, steps):
    cfg = LatticeConfig(512, boundary="strict")
    traj = run_cg_trajectory(init_centered_superposition(cfg), schedule, 0.0, steps, cfg)
    center = cfg.center // 2**level
    fronts = np.array([front_position(p, 1e-3, center) for p in traj.cell_populations()])
    sel = np.array(traj.coarse_times) >= max(1, traj.coarse_times[-1] // 4)
    per_step = np.polyfit(np.array(traj.level0_times)[sel], fronts[sel], 1)[0]
    per_coarse = np.polyfit(np.array(traj.coarse_times)[sel], fronts[sel], 1)[0]
    return per_step, per_coarse


def test_criterion_07_speed_rescaling(criterion):
    base, _ = front_slope(0, CGSchedule(0), 200)
    spatial, _ = front_slope(2, CGSchedule.spatial_only(2), 200)
    _, spacetime = front_slope(2, CGSchedule.spacetime(2), 50)
    rel = abs(spatial / base * 4 - 1)
    diff = abs(spacetime - base)
    ok = rel <= 0.05 and diff <= 1e-12
    criterion(7, ok, f"spatial-only ratio {spatial / base:.5f} (rel err {rel:.2g}), spacetime slope diff {diff:.3g}")
    assert ok


def test_criterion_08_ballistic_to_diffusive(criterion):
    start = time.perf_counter()
    cfg = validate_config(preset("variance_crossover"))
    _, info, checks = crossover_analysis(cfg)
    elapsed = time.perf_counter() - start
    e0 = info[0]["variance_fit"]["exponent"]
    e3 = info[3]["variance_fit"]["exponent"]
    d = info[3]["diffusion_l1"]
    failed = [c.name for c in checks if not c.passed]
    ok = not failed and elapsed <= 600
    criterion(8, ok, f"L0 exponent {e0:.4f} in [1.8,2.2]; L3 exponent {e3:.4f} in [0.7,1.4]; "
                     f"drop {e0 - e3:.3f} >= 0.5; diffusion L1 {d:.3f} <= 0.15; failing: {failed or 'none'}")
    assert ok


def test_criterion_09_pca_equivalence(criterion):
    cfg = LatticeConfig(128)
    rng = np.random.default_rng(9)
    worst = 0.0
    for level in (1, 2):
        for _ in range(5):
            rho = init_population_profile(cfg, random_sorted_weights(cfg, level, rng, 6))
            traj = run_cg_trajectory(rho, CGSchedule.spacetime(level), 0.0, 20, cfg)
            field = traj.populations[0].reshape(-1, 2)
            for p in traj.populations[1:]:
                field = pca_step(field)
                worst = max(worst, float(np.max(np.abs(p.reshape(-1, 2) - field))))
    ok = worst <= 1e-12
    criterion(9, ok, f"max deviation {worst:.3g} over 20 coarse steps, L=1,2, block-sorted random data")
    assert ok


def test_criterion_10_continuum_convergence(criterion):
    errors, ratios = convergence_errors(1.0, 4.0, 40.0, [0.1, 0.05, 0.025])
    ok = bool(np.all((ratios >= 1.7) & (ratios <= 2.3)))
    criterion(10, ok, f"L2 errors {np.array2string(errors, precision=4)}, "
                      f"ratios {np.array2string(ratios, precision=3)} in [1.7, 2.3]")
    assert ok
