"""Shared helpers for the test suite."""

import numpy as np
import pytest

from mbchain import GaussianState


def random_physical_state(n_sites: int, rng: np.random.Generator,
                          scale: float = 0.3) -> GaussianState:
    """Random valid Gaussian state: vacuum plus a PSD covariance bump.

    cov = I/2 + W W^T stays physical for any real W because adding a PSD
    matrix preserves cov + i Omega/2 >= 0.
    """
    n2 = 2 * n_sites
    w = scale * rng.standard_normal((n2, n2))
    cov = 0.5 * np.eye(n2) + w @ w.T
    return GaussianState(
        mean_x=rng.standard_normal(n_sites),
        mean_p=rng.standard_normal(n_sites),
        s_xx=cov[:n_sites, :n_sites],
        s_pp=cov[n_sites:, n_sites:],
        s_xp=cov[:n_sites, n_sites:],
    )


def state_max_diff(a: GaussianState, b: GaussianState) -> float:
    return max(
        np.abs(a.mean_x - b.mean_x).max(),
        np.abs(a.mean_p - b.mean_p).max(),
        np.abs(a.s_xx - b.s_xx).max(),
        np.abs(a.s_pp - b.s_pp).max(),
        np.abs(a.s_xp - b.s_xp).max(),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
