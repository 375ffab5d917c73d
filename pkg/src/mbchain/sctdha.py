"""Self-consistent time-dependent harmonic approximation of the cosine term.

The interaction -(J/alpha^2) sum_j cos(alpha x_j) is replaced by the
state-dependent quadratic surrogate f_j + g_j x_j + h_j x_j^2 whose
coefficients are Gaussian (Hartree) averages over the current state:

    g_j = (J/alpha) e^{-alpha^2 s_j / 2} (sin(a m_j) - a m_j cos(a m_j))
    h_j = (J/2)     e^{-alpha^2 s_j / 2} cos(a m_j)

with m_j = <x_j>, s_j = s_xx[j,j], a = alpha.  The constant f_j shifts
energies only and is never computed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import GaussianState

__all__ = ["SineGordonParams", "HarmonicCoefficients", "coefficients", "coefficients_from_moments"]


@dataclass(frozen=True)
class SineGordonParams:
    """Cosine interaction strength J >= 0 and stiffness alpha > 0."""

    j_coupling: float
    alpha: float

    def __post_init__(self):
        if self.j_coupling < 0:
            raise ValueError(f"j_coupling must be >= 0, got {self.j_coupling}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")


@dataclass
class HarmonicCoefficients:
    g: np.ndarray
    h: np.ndarray


def coefficients_from_moments(mean_x, sxx_diag, sg: SineGordonParams):
    """(g, h) arrays from the on-site means and variances.

    Broadcasts over any leading batch shape; a pure function of its inputs.
    """
    a = sg.alpha
    mean_x = np.asarray(mean_x)
    envelope = np.exp(-0.5 * a * a * np.asarray(sxx_diag))
    cos_am = np.cos(a * mean_x)
    g = (sg.j_coupling / a) * envelope * (np.sin(a * mean_x) - a * mean_x * cos_am)
    h = 0.5 * sg.j_coupling * envelope * cos_am
    return g, h


def coefficients(state: GaussianState, sg: SineGordonParams) -> HarmonicCoefficients:
    g, h = coefficients_from_moments(state.mean_x, np.diagonal(state.s_xx), sg)
    return HarmonicCoefficients(g=g, h=h)
