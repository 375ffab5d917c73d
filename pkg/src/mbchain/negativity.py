"""Logarithmic negativity of Gaussian states and scaling-law fits.

Partial transposition of a covariance matrix flips the sign of the
momenta belonging to the chosen subset; the negativity is read off the
symplectic spectrum of the result:

    log_neg = sum_n ln max{1, 1/(2 nu_n)}

Natural logarithms throughout; scaling fits regress against ln(size).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .gaussian import GaussianState, assemble_covariance, symplectic_eigenvalues

__all__ = [
    "NegativityResult",
    "ScalingFit",
    "partial_transpose",
    "log_negativity",
    "fit_log_scaling",
    "half_chain_subset",
]


@dataclass
class NegativityResult:
    subset: tuple
    nu: np.ndarray
    log_neg: float


@dataclass
class ScalingFit:
    sizes: np.ndarray
    values: np.ndarray
    c: float
    intercept: float
    r_squared: float


def half_chain_subset(n_sites: int) -> tuple:
    """The default contiguous bipartition: sites 0 .. N/2 - 1 (N even)."""
    if n_sites % 2:
        raise ValueError(f"half-chain bipartition needs even n_sites, got {n_sites}")
    return tuple(range(n_sites // 2))


def partial_transpose(cov: np.ndarray, subset) -> np.ndarray:
    """Sign-flip the p rows/columns of the subset sites: T cov T."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    subset = np.asarray(sorted(set(int(s) for s in subset)), dtype=int)
    if subset.size and (subset.min() < 0 or subset.max() >= n):
        raise ValueError(f"subset sites must lie in [0, {n - 1}]")
    t = np.ones(2 * n)
    t[n + subset] = -1.0
    return cov * np.outer(t, t)


def log_negativity(state: GaussianState, subset) -> NegativityResult:
    """Negativity of the bipartition (subset | rest) of a Gaussian state."""
    cov = assemble_covariance(state)
    nu = symplectic_eigenvalues(partial_transpose(cov, subset))
    log_neg = float(np.sum(np.log(np.maximum(1.0, 1.0 / (2.0 * nu)))))
    return NegativityResult(subset=tuple(sorted(set(int(s) for s in subset))), nu=nu, log_neg=log_neg)


def fit_log_scaling(sizes, values) -> ScalingFit:
    """Ordinary least squares of values against ln(sizes).

    The slope c distinguishes area-law (c near 0) from logarithmic growth.
    A constant series fits exactly with c = 0 and R^2 = 1.
    """
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    if sizes.ndim != 1 or sizes.shape != values.shape:
        raise ValueError("sizes and values must be 1-d arrays of equal length")
    if sizes.size < 4:
        raise InsufficientDataError(f"need at least 4 sizes for a scaling fit, got {sizes.size}")
    if np.any(np.diff(sizes) <= 0):
        raise ValueError("sizes must be strictly increasing")
    x = np.log(sizes)
    slope, intercept = np.polyfit(x, values, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((values - pred) ** 2))
    ss_tot = float(np.sum((values - values.mean()) ** 2))
    r2 = 1.0 if ss_tot < 1e-300 else 1.0 - ss_res / ss_tot
    return ScalingFit(
        sizes=sizes, values=values, c=float(slope), intercept=float(intercept), r_squared=r2
    )
