import numpy as np
import pytest

from mbchain import ChainParams, coupling_matrix, dispersion, mode_momenta, regulator


def test_regulator_values():
    assert regulator(ChainParams(100, 1.0, 1.0)) == pytest.approx(0.01, rel=1e-15)
    assert regulator(ChainParams(1, 2.0, 2.0)) == pytest.approx(1.0, rel=1e-15)
    assert regulator(ChainParams(500, 0.5, 0.5)) == pytest.approx(0.002, rel=1e-15)


def test_regulator_default_ratio():
    # when big_omega is omitted it resolves to 0.01 * omega
    chain = ChainParams(10, 2.0)
    assert chain.big_omega == pytest.approx(0.02, rel=1e-15)
    assert regulator(chain) == pytest.approx(0.001, rel=1e-15)


def test_chain_validation():
    with pytest.raises(ValueError):
        ChainParams(0, 1.0)
    with pytest.raises(ValueError):
        ChainParams(4, -1.0)
    with pytest.raises(ValueError):
        ChainParams(4, 1.0, -0.5)


def test_dispersion_values():
    chain = ChainParams(100, 1.0, 1.0)  # r^2 = 0.01
    assert dispersion(0.0, chain) == pytest.approx(0.01, abs=1e-15)
    assert dispersion(np.pi, chain) == pytest.approx(4.01, rel=1e-14)
    chain0 = ChainParams(100, 1.0, 1e-300)
    assert dispersion(2.0 * np.pi / 3.0, chain0) == pytest.approx(3.0, rel=1e-12)


def test_dispersion_vectorized_and_symmetric():
    chain = ChainParams(64, 1.0)
    q = mode_momenta(64)
    vals = dispersion(q, chain)
    assert vals.shape == (64,)
    assert np.all(vals > 0)
    # even in q
    assert dispersion(1.3, chain) == pytest.approx(dispersion(-1.3, chain), rel=1e-15)


def test_coupling_matrix_small_examples():
    rows = coupling_matrix(ChainParams(3, 1.0, 1e-300))
    expected = np.array([[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]])
    assert np.allclose(rows, expected, atol=1e-12)

    # N=2: the two neighbor hops land on the same entry
    with pytest.warns(UserWarning):
        m2 = coupling_matrix(ChainParams(2, 1.0, 0.2))  # r^2 = 0.1
    assert np.allclose(m2, [[2.1, -2.0], [-2.0, 2.1]], atol=1e-14)


def test_coupling_matrix_structure():
    chain = ChainParams(8, 1.0, 0.4)
    v = coupling_matrix(chain)
    assert np.array_equal(v, v.T)
    # circulant: every row is a shift of the first
    for i in range(8):
        assert np.array_equal(v[i], np.roll(v[0], i))
    assert np.all(np.linalg.eigvalsh(v) > 0)


def test_coupling_matrix_eigenvalues_match_dispersion():
    for n in (8, 64):
        chain = ChainParams(n, 1.0, 0.05 * n * 1.0)  # r^2 = 0.05
        v = coupling_matrix(chain)
        eig = np.sort(np.linalg.eigvalsh(v))
        disp = np.sort(dispersion(mode_momenta(n), chain))
        assert np.allclose(eig, disp, rtol=1e-12, atol=1e-12)


def test_mode_momenta_layout():
    q = mode_momenta(6)
    assert q.shape == (6,)
    assert q[0] == 0.0
    assert np.allclose(q, 2.0 * np.pi * np.arange(6) / 6.0)
