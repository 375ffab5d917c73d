"""Self-consistent harmonic coefficients of the cosine interaction."""

import numpy as np
import pytest

from mbchain import GaussianState, SineGordonParams, coefficients, vacuum_state

from conftest import random_physical_state


def _state_with(mean_x, diag_xx):
    n = len(mean_x)
    st = vacuum_state(n)
    return GaussianState(
        mean_x=np.asarray(mean_x, dtype=float),
        mean_p=st.mean_p,
        s_xx=np.diag(np.asarray(diag_xx, dtype=float)),
        s_pp=st.s_pp,
        s_xp=st.s_xp,
    )


def test_zero_mean_gives_pure_mass_term():
    st = vacuum_state(4)
    sg = SineGordonParams(2.0, 1.5)
    co = coefficients(st, sg)
    assert np.allclose(co.g, 0.0, atol=1e-15)
    expected_h = 0.5 * sg.j_coupling * np.exp(-sg.alpha**2 * 0.5 / 2.0)
    assert np.allclose(co.h, expected_h, rtol=1e-14)


def test_zero_coupling_gives_zero():
    st = _state_with([0.3, -0.2, 1.0], [0.5, 0.7, 0.9])
    co = coefficients(st, SineGordonParams(0.0, 2.1))
    assert np.allclose(co.g, 0.0, atol=1e-15)
    assert np.allclose(co.h, 0.0, atol=1e-15)


def test_large_fluctuations_suppress_coefficients():
    # alpha^2 s > 60 pushes the Debye-Waller factor below 1e-12
    st = _state_with([0.4, 0.0], [70.0, 70.0])
    co = coefficients(st, SineGordonParams(1.0, 1.0))
    assert np.all(np.abs(co.h) < 1e-12)
    assert np.all(np.abs(co.g) < 1e-12)


def test_explicit_formula(rng):
    st = random_physical_state(5, rng)
    sg = SineGordonParams(0.8, 2.1)
    co = coefficients(st, sg)
    j, a = sg.j_coupling, sg.alpha
    dw = np.exp(-a * a * np.diag(st.s_xx) / 2.0)
    g_expected = (j / a) * dw * (np.sin(a * st.mean_x)
                                 - a * st.mean_x * np.cos(a * st.mean_x))
    h_expected = 0.5 * j * dw * np.cos(a * st.mean_x)
    assert np.allclose(co.g, g_expected, rtol=1e-14, atol=1e-16)
    assert np.allclose(co.h, h_expected, rtol=1e-14, atol=1e-16)


def test_depends_only_on_means_and_xx_diagonal(rng):
    sg = SineGordonParams(1.3, 1.7)
    st = random_physical_state(4, rng)
    # perturb everything the coefficients must ignore
    st2 = GaussianState(
        mean_x=st.mean_x.copy(),
        mean_p=st.mean_p + 5.0,
        s_xx=st.s_xx + np.diag(np.zeros(4)) + (np.ones((4, 4)) - np.eye(4)) * 0.1,
        s_pp=st.s_pp * 3.0,
        s_xp=st.s_xp + 0.2,
    )
    np.fill_diagonal(st2.s_xx, np.diag(st.s_xx))
    c1, c2 = coefficients(st, sg), coefficients(st2, sg)
    assert np.array_equal(c1.g, c2.g)
    assert np.array_equal(c1.h, c2.h)


def test_mass_bound(rng):
    sg = SineGordonParams(0.9, 1.2)
    for _ in range(10):
        st = random_physical_state(6, rng)
        co = coefficients(st, sg)
        bound = 0.5 * sg.j_coupling * np.exp(-sg.alpha**2 * np.diag(st.s_xx) / 2.0)
        assert np.all(np.abs(co.h) <= bound + 1e-16)
    # equality at cos = +-1
    st = _state_with([0.0, np.pi / 1.2], [0.5, 0.5])
    co = coefficients(st, sg)
    bound = 0.5 * sg.j_coupling * np.exp(-sg.alpha**2 * 0.5 / 2.0)
    assert abs(co.h[0]) == pytest.approx(bound, rel=1e-12)
    assert abs(co.h[1]) == pytest.approx(bound, rel=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        SineGordonParams(1.0, 0.0)
    with pytest.raises(ValueError):
        SineGordonParams(-1.0, 2.0)
