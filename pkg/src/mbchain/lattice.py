"""Harmonic chain data: couplings, dispersion, and the infrared regulator.

The chain Hamiltonian is H = (omega/2) sum_j [p_j^2 + (x_{j+1}-x_j)^2
+ r^2 x_j^2] with periodic boundaries.  The small diagonal term r^2
= big_omega/(n_sites*omega) keeps the zero-momentum mode at a finite
frequency; every module that depends on it records the value it used.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ChainParams", "regulator", "dispersion", "coupling_matrix"]

# Default ratio big_omega/omega.  Calibrated so that the analytic
# effective-mass threshold of the interacting chain sits at the validated
# location (see steady.solve_self_consistent); recorded in every manifest.
DEFAULT_BIG_OMEGA_RATIO = 0.01


@dataclass(frozen=True)
class ChainParams:
    """Immutable chain parameters.

    big_omega defaults to ``DEFAULT_BIG_OMEGA_RATIO * omega``; pass an
    explicit value to override.  n_sites = 1 is accepted only for the
    single-site oracle comparisons; chain dynamics expects n_sites >= 2.
    """

    n_sites: int
    omega: float = 1.0
    big_omega: float | None = None
    boundary: str = field(default="periodic", init=False)

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise ValueError(f"n_sites must be a positive integer, got {self.n_sites}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.big_omega is None:
            object.__setattr__(self, "big_omega", DEFAULT_BIG_OMEGA_RATIO * self.omega)
        if self.big_omega <= 0:
            raise ValueError(f"big_omega must be positive, got {self.big_omega}")

    @property
    def r_sq(self) -> float:
        return regulator(self)


def regulator(params: ChainParams) -> float:
    """Infrared regulator r^2 = big_omega / (n_sites * omega)."""
    return params.big_omega / (params.n_sites * params.omega)


def dispersion(q, params: ChainParams):
    """Squared mode frequency 4 sin^2(q/2) + r^2 at lattice momentum q.

    Accepts scalars or arrays of momenta 2*pi*k/n_sites.
    """
    return 4.0 * np.sin(np.asarray(q) / 2.0) ** 2 + regulator(params)


def mode_momenta(n_sites: int) -> np.ndarray:
    """The n lattice momenta 2*pi*k/n in DFT ordering."""
    return 2.0 * np.pi * np.arange(n_sites) / n_sites


def coupling_matrix(params: ChainParams) -> np.ndarray:
    """Quadratic-form matrix V with x.V.x = sum_j [(x_{j+1}-x_j)^2 + r^2 x_j^2].

    Built by accumulating the bond and regulator terms, so the periodic
    wrap-around is handled uniformly: at n_sites = 2 both neighbors of a
    site are the same site and the off-diagonal doubles to -2 (the single
    bond is traversed twice); at n_sites = 1 everything cancels down to
    the bare regulator.  Eigenvalues equal dispersion(2*pi*k/n).
    """
    n = params.n_sites
    if n == 2:
        warnings.warn(
            "n_sites=2 periodic chain counts its single bond twice; "
            "off-diagonal couplings are -2",
            stacklevel=2,
        )
    v = (2.0 + regulator(params)) * np.eye(n)
    shift = np.roll(np.eye(n), 1, axis=1)  # maps site j -> j+1
    v -= shift + shift.T
    return v
