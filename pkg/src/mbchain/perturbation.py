"""Strong-coupling perturbation theory around the monitored free chain.

The steady free theory assigns the cosine operator a power-law two-point
envelope with exponent set by the factor

    big_gamma = sqrt(-omega sigma_xp / (2 gamma)) (1 - 4 gamma sigma_xp / omega)

evaluated at the steady cross correlation.  The cosine is relevant when
alpha^2 big_gamma / (2 pi) > 1, giving the critical line
alpha_c = sqrt(2 pi / big_gamma).  Only the difference-operator branch
contributes to the correlator; the sum-operator variance diverges and its
branch is identically zero here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .lattice import ChainParams
from .qsd import EnsembleStats
from .sctdha import SineGordonParams
from .steady import big_gamma as _big_gamma
from .steady import solve_self_consistent

__all__ = [
    "PerturbationResult",
    "gamma_factor",
    "critical_alpha",
    "perturbation_result",
    "cosine_correlation",
    "ensemble_cosine_average",
    "sctdha_boundary",
]


@dataclass
class PerturbationResult:
    gamma_factor: float
    exponent: float
    alpha_critical: float
    relevant: bool


def gamma_factor(omega: float, gamma: float) -> float:
    """The steady-state factor controlling the cosine's scaling dimension."""
    return _big_gamma(omega, gamma)


def critical_alpha(omega: float, gamma: float) -> float:
    """Stiffness above which the cosine perturbation is relevant."""
    return math.sqrt(2.0 * math.pi / gamma_factor(omega, gamma))


def perturbation_result(alpha: float, omega: float, gamma: float) -> PerturbationResult:
    g = gamma_factor(omega, gamma)
    exponent = alpha * alpha * g / (2.0 * math.pi)
    return PerturbationResult(
        gamma_factor=g,
        exponent=exponent,
        alpha_critical=math.sqrt(2.0 * math.pi / g),
        relevant=exponent > 1.0,
    )


def cosine_correlation(y, alpha: float, omega: float, gamma: float,
                       cutoff: float = 1.0):
    """Distance envelope (1/2) (L^2/(L^2+y^2))^{alpha^2 big_gamma/(2 pi)}.

    The cosine prefactor is 1 on the most-likely trajectory (zero-mean
    initial data keeps the difference operator's mean at zero).  L is the
    short-distance cutoff, default one lattice spacing.
    """
    if cutoff <= 0:
        raise ValueError(f"cutoff must be > 0, got {cutoff}")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("distances must be >= 0")
    exponent = alpha * alpha * gamma_factor(omega, gamma) / (2.0 * math.pi)
    l2 = cutoff * cutoff
    return 0.5 * (l2 / (l2 + y * y)) ** exponent


def ensemble_cosine_average(stats: EnsembleStats, alpha: float,
                            pair: tuple[int, int] | None = None):
    """Trajectory average of cos(alpha(<x_i> - <x_j>)) over time.

    Requires an ensemble run with store_means=True.  Returns
    (times, series) with one entry per snapshot.
    """
    if stats.mean_x_store is None:
        raise InsufficientDataError(
            "ensemble was run without store_means=True; per-trajectory means unavailable"
        )
    n = stats.mean_x_store.shape[-1]
    if pair is None:
        pair = (0, n // 2)
    i, j = int(pair[0]) % n, int(pair[1]) % n
    diff = stats.mean_x_store[:, :, i] - stats.mean_x_store[:, :, j]
    return stats.times, np.cos(alpha * diff).mean(axis=1)


def sctdha_boundary(
    chain: ChainParams,
    j_coupling: float,
    gamma: float,
    threshold: float = 1e-5,
    alpha_lo: float = 0.3,
    alpha_hi: float = 12.0,
    tol: float = 1e-4,
) -> float:
    """Stiffness where the self-consistent mass crosses the threshold.

    h_eff decreases with alpha at fixed gamma; bisect on alpha between a
    massive bracket (h > threshold) and a massless one.  Returns NaN when
    the scanned interval contains no crossing (no massive phase there).
    """
    def h_of(alpha: float) -> float:
        sol = solve_self_consistent(chain, SineGordonParams(j_coupling, alpha), gamma)
        return sol.h_eff

    lo, hi = alpha_lo, alpha_hi
    f_lo = h_of(lo) - threshold
    f_hi = h_of(hi) - threshold
    if f_lo <= 0 or f_hi >= 0:
        return math.nan
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h_of(mid) - threshold > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
