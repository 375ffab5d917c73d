import numpy as np
import pytest

from mbchain import (ChainParams, SineGordonParams, assemble_covariance,
                     log_negativity, momentum_correlation_profile,
                     solve_self_consistent, state_from_solution,
                     symplectic_eigenvalues, symplectic_form, vacuum_state)

from conftest import random_physical_state


def test_vacuum_blocks():
    st = vacuum_state(1)
    assert np.array_equal(st.s_xx, [[0.5]])
    assert np.array_equal(st.s_pp, [[0.5]])
    assert np.array_equal(st.s_xp, [[0.0]])
    assert np.array_equal(st.mean_x, [0.0])
    assert np.array_equal(st.mean_p, [0.0])


def test_vacuum_symplectic_spectrum_and_negativity():
    st = vacuum_state(4)
    nu = symplectic_eigenvalues(assemble_covariance(st))
    assert np.allclose(nu, 0.5, atol=1e-12)
    res = log_negativity(st, (0, 1))
    assert res.log_neg == pytest.approx(0.0, abs=1e-12)


def test_assemble_covariance_layout(rng):
    st = random_physical_state(3, rng)
    cov = assemble_covariance(st)
    assert cov.shape == (6, 6)
    assert np.array_equal(cov[:3, :3], st.s_xx)
    assert np.array_equal(cov[3:, 3:], st.s_pp)
    assert np.array_equal(cov[:3, 3:], st.s_xp)
    assert np.array_equal(cov[3:, :3], st.s_xp.T)
    assert np.allclose(cov, cov.T, atol=1e-14)


def test_assemble_vacuum_identity_over_two():
    cov = assemble_covariance(vacuum_state(2))
    assert np.allclose(cov, 0.5 * np.eye(4), atol=1e-15)


def test_symplectic_form():
    om = symplectic_form(2)
    x = np.zeros(4)
    # [x_i, p_j] pairing: upper-right block +I, lower-left -I
    assert np.array_equal(om[:2, 2:], np.eye(2))
    assert np.array_equal(om[2:, :2], -np.eye(2))
    assert np.array_equal(om[:2, :2], np.zeros((2, 2)))


def test_symplectic_eigenvalues_diagonal_cases():
    # diag(a, b) has nu = sqrt(a b)
    for a, b in [(0.5, 0.5), (2.5, 0.025), (1.0, 1.0)]:
        cov = np.diag([a, b])
        nu = symplectic_eigenvalues(cov)
        assert nu.shape == (1,)
        assert nu[0] == pytest.approx(np.sqrt(a * b), rel=1e-12)


def test_symplectic_congruence_invariance(rng):
    # squeezing S = diag(e^r, e^-r) per mode leaves nu invariant
    st = random_physical_state(2, rng)
    cov = assemble_covariance(st)
    r1, r2 = 0.7, -0.3
    s = np.diag([np.exp(r1), np.exp(r2), np.exp(-r1), np.exp(-r2)])
    nu0 = np.sort(symplectic_eigenvalues(cov))
    nu1 = np.sort(symplectic_eigenvalues(s @ cov @ s.T))
    assert np.allclose(nu0, nu1, rtol=1e-10)


def test_physical_states_satisfy_uncertainty(rng):
    for _ in range(20):
        st = random_physical_state(5, rng)
        nu = symplectic_eigenvalues(assemble_covariance(st))
        assert np.all(nu >= 0.5 - 1e-10)


def test_profile_vacuum():
    prof = momentum_correlation_profile(vacuum_state(8))
    assert prof.shape == (5,)  # distances 0 .. N/2
    assert prof[0] == pytest.approx(0.5, abs=1e-14)
    assert np.allclose(prof[1:], 0.0, atol=1e-14)


def test_profile_reads_circulant_rows():
    chain = ChainParams(16, 1.0)
    sol = solve_self_consistent(chain, SineGordonParams(0.0, 1.0), 1.0)
    st = state_from_solution(sol, chain)
    prof = momentum_correlation_profile(st)
    for d in range(len(prof)):
        assert prof[d] == pytest.approx(st.s_pp[0, d], rel=1e-12, abs=1e-15)


def test_profile_free_steady_magnitude_decays():
    chain = ChainParams(32, 1.0)
    sol = solve_self_consistent(chain, SineGordonParams(0.0, 1.0), 1.0)
    st = state_from_solution(sol, chain)
    prof = momentum_correlation_profile(st)
    mags = np.abs(prof[1:])
    assert np.all(np.diff(mags) < 0)
