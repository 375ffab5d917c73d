"""Deterministic most-likely-trajectory moment dynamics."""

import numpy as np
import pytest

from mbchain import (ChainParams, ConfigError, GaussianState, MltConfig,
                     SineGordonParams, detect_steady_state, evolve_modes,
                     integrate, quadratic_energy, regulator, rhs_free, rhs_sg,
                     sigma_xp_steady, solve_self_consistent,
                     state_from_solution, symplectic_eigenvalues,
                     assemble_covariance, vacuum_state)

from conftest import random_physical_state, state_max_diff


def _single_site():
    # r^2 = 1 makes the vacuum the exact ground state of the local oscillator
    return ChainParams(1, 1.0, 1.0)


def test_vacuum_fixed_point_of_local_oscillator():
    d = rhs_free(vacuum_state(1), _single_site(), gamma=0.0)
    assert state_max_diff(d, GaussianState(
        np.zeros(1), np.zeros(1), np.zeros((1, 1)), np.zeros((1, 1)), np.zeros((1, 1)),
    )) < 1e-15


def test_measurement_terms_at_vacuum():
    gamma = 0.7
    d = rhs_free(vacuum_state(1), _single_site(), gamma=gamma)
    assert d.s_xx[0, 0] == pytest.approx(gamma, rel=1e-14)
    assert d.s_pp[0, 0] == pytest.approx(-gamma, rel=1e-14)
    assert d.s_xp[0, 0] == pytest.approx(0.0, abs=1e-15)


def test_sg_reduces_to_free_at_zero_coupling(rng):
    chain = ChainParams(16, 1.0)
    sg0 = SineGordonParams(0.0, 2.1)
    for _ in range(10):
        st = random_physical_state(16, rng)
        diff = state_max_diff(rhs_free(st, chain, 1.3), rhs_sg(st, chain, sg0, 1.3))
        assert diff < 1e-14


def test_mean_p_variant_changes_only_mean_force(rng):
    chain = ChainParams(6, 1.0, 0.6)  # r^2 = 0.1
    st = random_physical_state(6, rng)
    a = rhs_free(st, chain, 1.0, mean_p_variant="hamiltonian")
    b = rhs_free(st, chain, 1.0, mean_p_variant="as-printed")
    assert np.allclose(b.mean_p - a.mean_p, chain.omega * regulator(chain) * st.mean_x,
                       rtol=1e-12, atol=1e-15)
    assert np.array_equal(a.s_xx, b.s_xx)
    assert np.array_equal(a.s_pp, b.s_pp)
    assert np.array_equal(a.s_xp, b.s_xp)
    assert np.array_equal(a.mean_x, b.mean_x)


def test_means_rotate_under_local_oscillator():
    # d<x> = omega <p>, d<p> = -omega <x>: circular rotation, gamma-independent
    chain = _single_site()
    st = vacuum_state(1)
    st = GaussianState(np.array([0.8]), np.array([-0.3]), st.s_xx, st.s_pp, st.s_xp)
    for gamma in (0.0, 1.0):
        cfg = MltConfig(gamma=gamma, dt=1e-3, t_max=np.pi / 2.0, steady_tol=1e-300)
        res = integrate(st, cfg, chain)
        t = res.times[-1]
        x_exp = 0.8 * np.cos(t) - 0.3 * np.sin(t)
        p_exp = -0.3 * np.cos(t) - 0.8 * np.sin(t)
        assert res.final_state.mean_x[0] == pytest.approx(x_exp, abs=1e-8)
        assert res.final_state.mean_p[0] == pytest.approx(p_exp, abs=1e-8)


def test_energy_conserved_without_monitoring(rng):
    chain = ChainParams(8, 1.0)
    st = random_physical_state(8, rng, scale=0.2)
    cfg = MltConfig(gamma=0.0, dt=1e-3, t_max=10.0, steady_tol=1e-300)
    res = integrate(st, cfg, chain)
    e0 = quadratic_energy(st, chain)
    e1 = quadratic_energy(res.final_state, chain)
    assert abs(e1 - e0) / abs(e0) < 1e-8


def test_purity_preserved_under_monitoring():
    chain = ChainParams(4, 1.0)
    cfg = MltConfig(gamma=1.0, dt=1e-3, t_max=30.0, steady_tol=1e-300)
    res = integrate(vacuum_state(4), cfg, chain)
    nu = symplectic_eigenvalues(assemble_covariance(res.final_state))
    assert np.all(np.abs(nu - 0.5) < 1e-6)


def test_cross_correlation_reaches_closed_form():
    chain = ChainParams(8, 1.0)
    res = evolve_modes(chain, gamma=1.0, t_max=4000.0, steady_tol=1e-12)
    assert res.steady
    target = sigma_xp_steady(1.0, 1.0)
    assert target == pytest.approx((1.0 - np.sqrt(5.0)) / 4.0, rel=1e-15)
    assert np.all(np.abs(res.sigma_xp_q - target) < 1e-8)


def test_massless_phase_loses_its_mass():
    chain = ChainParams(16, 0.5)
    sg = SineGordonParams(1.0, 2.1)
    res = evolve_modes(chain, gamma=4.0, sg=sg, t_max=4000.0, steady_tol=1e-10)
    assert res.steady
    assert abs(res.h_uniform) < 1e-5


def test_modes_match_matrix_integration():
    chain = ChainParams(8, 0.5)
    sg = SineGordonParams(1.0, 2.1)
    gamma, dt, t_max = 1.0, 0.01, 5.0
    mode = evolve_modes(chain, gamma, sg=sg, dt=dt, t_max=t_max, steady_tol=1e-300)
    cfg = MltConfig(gamma=gamma, dt=dt, t_max=t_max, steady_tol=1e-300,
                    model="sine-gordon")
    mat = integrate(vacuum_state(8), cfg, chain, sg)
    fin = mat.final_state
    assert np.allclose(np.diag(fin.s_xx), mode.sigma_xx_q.mean(), rtol=1e-9)
    assert np.allclose(np.diag(fin.s_pp), mode.sigma_pp_q.mean(), rtol=1e-9)
    assert np.allclose(np.diag(fin.s_xp), mode.sigma_xp_q.mean(), rtol=1e-9)
    assert mat.h_coeff[-1] == pytest.approx(mode.h_uniform, rel=1e-9)


def test_translation_invariance_preserved():
    chain = ChainParams(12, 0.5)
    sg = SineGordonParams(1.0, 1.5)
    sol = solve_self_consistent(chain, SineGordonParams(1.0, 1.5), 2.0)
    st = state_from_solution(sol, chain)
    st = GaussianState(st.mean_x + 0.3, st.mean_p - 0.1, st.s_xx, st.s_pp, st.s_xp)
    d = rhs_sg(st, chain, sg, gamma=1.0)
    for block in (d.s_xx, d.s_pp, d.s_xp):
        for i in range(12):
            assert np.allclose(block[i], np.roll(block[0], i), atol=1e-12)
    assert np.allclose(d.mean_x, d.mean_x[0], atol=1e-12)
    assert np.allclose(d.mean_p, d.mean_p[0], atol=1e-12)


def test_huge_stiffness_turns_off_the_cosine(rng):
    chain = ChainParams(6, 1.0)
    st = random_physical_state(6, rng)
    sg = SineGordonParams(1.0, 30.0)
    diff = state_max_diff(rhs_sg(st, chain, sg, 0.8), rhs_free(st, chain, 0.8))
    assert diff < 1e-8


def test_detect_steady_state_basics():
    st = vacuum_state(2)
    states = [st, st, st]
    ok, t = detect_steady_state(states, [0.0, 1.0, 2.0], 1e-9, 1.0, 1.0)
    assert ok and t == 1.0
    with pytest.raises(ValueError):
        detect_steady_state([st], [0.0], 1e-9, 1.0, 1.0)
    with pytest.raises(ValueError):
        detect_steady_state(states, [0.0, 0.0, 1.0], 1e-9, 1.0, 1.0)


def test_free_chain_steady_time():
    # with big_omega = omega the slowest mode relaxes by t ~ 50
    chain = ChainParams(16, 1.0, 1.0)
    cfg = MltConfig(gamma=1.0, dt=0.01, t_max=80.0, steady_tol=1e-9,
                    snapshot_stride=100, store_full=True)
    res = integrate(vacuum_state(16), cfg, chain)
    assert res.steady
    assert 20.0 < res.steady_time < 80.0
    ok, t_snap = detect_steady_state(res.states, res.times, 1e-9, 1.0, 1.0)
    assert ok
    assert abs(t_snap - res.steady_time) < 10.0


def test_config_validation():
    with pytest.raises(ConfigError):
        MltConfig(gamma=-1.0)
    with pytest.raises(ConfigError):
        MltConfig(gamma=1.0, t_max=0.0)
    with pytest.raises(ConfigError):
        MltConfig(gamma=1.0, model="kitaev")
    with pytest.raises(ConfigError):
        MltConfig(gamma=1.0, mean_p_variant="other")
    with pytest.raises(ConfigError):
        MltConfig(gamma=1.0, snapshot_stride=0)
    # stability guard: dt * max(omega, gamma, J) <= 0.1
    with pytest.raises(ConfigError):
        MltConfig(gamma=4.0, dt=0.05).resolve_dt(1.0)
    assert MltConfig(gamma=4.0, dt=0.02).resolve_dt(1.0) == 0.02
