import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diracqca.coarse import (
    CGSchedule,
    centered_sorted_weights,
    cg_jump,
    cg_once,
    check_block_sorted,
    cross_cell_mask,
    run_cg_trajectory,
)
from diracqca.errors import DivisibilityError, DomainError, ScheduleError
from diracqca.lattice import (
    LatticeConfig,
    density_from_amplitudes,
    flatten,
    init_centered_superposition,
    init_population_profile,
    init_single_excitation,
)
from diracqca.oracle import coherence_bound, random_density, random_pure_field


def brute_cg_once(rho):
    """Element-by-element application of the single-level rules."""
    n = rho.shape[0] // 2
    out = np.zeros((n, n), dtype=complex)
    for k in range(n):
        for a in range(2):
            for kp in range(n):
                for ap in range(2):
                    v = rho[2 * k + a, 2 * kp + ap]
                    if k == kp:
                        if a == ap:
                            out[k, k] += v
                    else:
                        out[k, kp] += v / 3.0
    return out


def ketbra(n, left, right):
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    m[flatten(left), flatten(right)] = 1.0
    return m


def coarse_ketbra(n, left, right):
    return ketbra(n // 2, left, right)


@pytest.mark.parametrize(
    "left, right, expected, scale",
    [
        ((4, 0), (4, 0), ((2, 0), (2, 0)), 1.0),
        ((4, 0), (4, 1), None, 0.0),
        ((4, 0), (6, 1), ((2, 0), (3, 0)), 1.0 / 3.0),
        ((5, 1), (5, 1), ((2, 1), (2, 1)), 1.0),
    ],
)
def test_cg_once_elementary(left, right, expected, scale):
    n = 8
    out = cg_once(ketbra(n, left, right))
    if expected is None:
        assert np.count_nonzero(out) == 0
    else:
        np.testing.assert_allclose(out, scale * coarse_ketbra(n, *expected), atol=1e-15)


def test_cg_once_odd_cells():
    with pytest.raises(DivisibilityError):
        cg_once(np.eye(6) / 6)


def test_cg_jump_uniform():
    out = cg_jump(np.eye(8) / 8, 1)
    np.testing.assert_allclose(out, np.eye(4) / 4, atol=1e-15)


def test_cg_jump_divisibility():
    with pytest.raises(DivisibilityError):
        cg_jump(np.eye(12) / 12, 2)


def test_cg_jump_level_zero_is_identity():
    rho = random_density(4, np.random.default_rng(0))
    np.testing.assert_array_equal(cg_jump(rho, 0), rho)


def test_cg_jump_level2_factor_one_ninth():
    n = 16
    rho = random_density(n, np.random.default_rng(2))
    out = cg_jump(rho, 2)
    # coarse flat index I collects level-0 flat indices 4I..4I+3
    for i in range(out.shape[0]):
        for j in range(out.shape[0]):
            if i // 2 != j // 2:
                block = rho[4 * i : 4 * i + 4, 4 * j : 4 * j + 4].sum()
                assert out[i, j] == pytest.approx(block / 9.0, abs=1e-15)


@given(st.integers(1, 16).map(lambda k: 2 * k), st.integers(0, 2**31 - 1))
def test_cg_once_matches_brute_force(n, seed):
    rho = random_density(n, np.random.default_rng(seed))
    np.testing.assert_allclose(cg_once(rho), brute_cg_once(rho), atol=1e-14)


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_closed_form_matches_recursion(level):
    rng = np.random.default_rng(level)
    for _ in range(5):
        rho = random_density(64, rng)
        rec = rho
        for _ in range(level):
            rec = cg_once(rec)
        np.testing.assert_allclose(cg_jump(rho, level), rec, atol=1e-12)


@given(st.integers(0, 2**31 - 1), st.integers(1, 4))
def test_pure_fast_path_matches_matrix(seed, level):
    f = random_pure_field(32, np.random.default_rng(seed))
    np.testing.assert_allclose(cg_jump(f, level), cg_jump(density_from_amplitudes(f), level), atol=1e-14)


@given(st.integers(1, 16).map(lambda k: 2 * k), st.integers(0, 2**31 - 1))
def test_cg_once_channel_properties(n, seed):
    rho = random_density(n, np.random.default_rng(seed))
    out = cg_once(rho)
    assert abs(np.trace(out) - np.trace(rho)) < 1e-12
    np.testing.assert_allclose(out, out.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(out).min() >= -1e-10


@given(st.integers(1, 8).map(lambda k: 2 * k), st.integers(0, 2**31 - 1))
def test_same_cell_coherence_annihilated(n, seed):
    rng = np.random.default_rng(seed)
    rho = np.zeros((2 * n, 2 * n), dtype=complex)
    for k in range(n):
        z = rng.normal() + 1j * rng.normal()
        rho[2 * k, 2 * k + 1] = z
        rho[2 * k + 1, 2 * k] = np.conj(z)
    assert np.count_nonzero(cg_once(rho)) == 0


@given(st.integers(0, 2**31 - 1))
def test_coherence_bound_random(seed):
    rho = random_density(64, np.random.default_rng(seed))
    for level in range(1, 7):
        out = cg_jump(rho, level)
        cross = np.abs(out)[cross_cell_mask(out.shape[0])]
        if cross.size:
            assert cross.max() <= coherence_bound(level) + 1e-9


def test_coherence_bound_value_level6():
    assert coherence_bound(6) == pytest.approx(512 / 729, abs=1e-15)


def test_check_block_sorted_examples():
    cfg = LatticeConfig(4)
    assert check_block_sorted(init_population_profile(cfg, {(0, 0): 1.0}), 1)
    assert not check_block_sorted(init_population_profile(cfg, {(1, 0): 1.0}), 1)
    assert check_block_sorted(init_population_profile(cfg, {(1, 1): 1.0}), 1)
    assert not check_block_sorted(init_population_profile(cfg, {(0, 1): 1.0}), 1)


def test_check_block_sorted_rejects_coherent_input():
    rho = density_from_amplitudes(init_centered_superposition(LatticeConfig(4)))
    with pytest.raises(DomainError):
        check_block_sorted(rho, 1)


@pytest.mark.parametrize("level", [1, 2, 3])
def test_centered_profile_is_sorted(level):
    cfg = LatticeConfig(32)
    w = centered_sorted_weights(cfg, level, [1.0 / (2 * level)] * level, [1.0 / (2 * level)] * level)
    rho = init_population_profile(cfg, w)
    assert check_block_sorted(rho, level)


def test_schedule_validation():
    assert CGSchedule.spacetime(3).h_per_jump == 8
    assert CGSchedule.spatial_only(3).h_per_jump == 1
    with pytest.raises(ScheduleError):
        CGSchedule(2, 5)
    with pytest.raises(ScheduleError):
        CGSchedule(2, 0)
    with pytest.raises(ScheduleError):
        CGSchedule(-1)


def test_trajectory_zero_steps():
    cfg = LatticeConfig(16)
    rho = random_density(16, np.random.default_rng(7))
    traj = run_cg_trajectory(rho, CGSchedule.spacetime(2), 0.3, 0, cfg, keep_states=True)
    assert len(traj.states) == 1
    np.testing.assert_allclose(traj.states[0], cg_jump(rho, 2), atol=1e-15)


def test_trajectory_divisibility():
    with pytest.raises(DivisibilityError):
        run_cg_trajectory(np.eye(12) / 12, CGSchedule.spacetime(2), 0.0, 1, LatticeConfig(6))


@pytest.mark.parametrize("level", [1, 2, 3])
def test_spacetime_right_mover_shift(level):
    n = 64
    cfg = LatticeConfig(n)
    rho = init_population_profile(cfg, {(20, 0): 0.25, (21, 0): 0.5, (25, 0): 0.25})
    traj = run_cg_trajectory(rho, CGSchedule.spacetime(level), 0.0, 12, cfg)
    start = traj.cell_populations()[0]
    for m, cells in enumerate(traj.cell_populations()):
        np.testing.assert_allclose(cells, np.roll(start, m), atol=1e-12)


@pytest.mark.parametrize("level", [1, 2])
def test_spacetime_left_mover_shift(level):
    n = 32
    cfg = LatticeConfig(n)
    rho = init_population_profile(cfg, {(16, 1): 0.5, (18, 1): 0.5})
    traj = run_cg_trajectory(rho, CGSchedule.spacetime(level), 0.0, 10, cfg)
    start = traj.cell_populations()[0]
    for m, cells in enumerate(traj.cell_populations()):
        np.testing.assert_allclose(cells, np.roll(start, -m), atol=1e-12)


def test_spatial_only_quarter_speed():
    n = 64
    cfg = LatticeConfig(n)
    traj = run_cg_trajectory(init_single_excitation(cfg, (32, 0)), CGSchedule.spatial_only(2), 0.0, 16, cfg)
    pos = [float(np.argmax(c)) for c in traj.cell_populations()]
    # the coarse front moves one coarse cell every four level-0 steps
    assert pos[16] - pos[0] == 4
    assert traj.level0_times == list(range(17))


def test_trajectory_keeps_fine_state():
    # sampling twice at the same fine state must not alter later samples
    n = 16
    cfg = LatticeConfig(n)
    f = random_pure_field(n, np.random.default_rng(11))
    a = run_cg_trajectory(f, CGSchedule(2, 2), 0.4, 6, cfg)
    b = run_cg_trajectory(density_from_amplitudes(f), CGSchedule(2, 2), 0.4, 6, cfg)
    np.testing.assert_allclose(np.array(a.populations), np.array(b.populations), atol=1e-13)
    np.testing.assert_allclose(a.coherence_l1, b.coherence_l1, atol=1e-12)
    np.testing.assert_allclose(a.max_cross_coherence, b.max_cross_coherence, atol=1e-13)


def test_coarse_coherence_decreases_with_level():
    cfg = LatticeConfig(64)
    f = init_centered_superposition(cfg)
    values = [run_cg_trajectory(f, CGSchedule.spatial_only(level), math.pi / 4, 30, cfg).coherence_l1[-1]
              for level in range(0, 5)]
    assert all(a > b for a, b in zip(values, values[1:]))
