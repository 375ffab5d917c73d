"""Gaussian many-body states: first and second moments plus symplectic tools.

Conventions: [x_j, p_j'] = i delta_jj', vacuum variances 1/2.  The
covariance matrix is assembled on the basis (x_1..x_N, p_1..p_N) as
[[s_xx, s_xp], [s_xp^T, s_pp]] where s_xp^{ij} = <{x_i,p_j}>/2 - <x_i><p_j>.
The px block is always the transpose of s_xp and is never stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GaussianState",
    "vacuum_state",
    "assemble_covariance",
    "symplectic_form",
    "symplectic_eigenvalues",
    "momentum_correlation_profile",
    "check_state",
]


@dataclass
class GaussianState:
    """Moment container; also reused for moment time-derivatives.

    Physicality is not enforced on construction (derivatives share the
    container and hot loops build many instances); use check_state for
    explicit validation.
    """

    mean_x: np.ndarray
    mean_p: np.ndarray
    s_xx: np.ndarray
    s_pp: np.ndarray
    s_xp: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.mean_x.shape[-1]

    def copy(self) -> "GaussianState":
        return GaussianState(
            self.mean_x.copy(),
            self.mean_p.copy(),
            self.s_xx.copy(),
            self.s_pp.copy(),
            self.s_xp.copy(),
        )


def vacuum_state(n_sites: int) -> GaussianState:
    """Product vacuum: zero means, s_xx = s_pp = I/2, s_xp = 0."""
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    n = n_sites
    return GaussianState(
        mean_x=np.zeros(n),
        mean_p=np.zeros(n),
        s_xx=0.5 * np.eye(n),
        s_pp=0.5 * np.eye(n),
        s_xp=np.zeros((n, n)),
    )


def assemble_covariance(state: GaussianState) -> np.ndarray:
    """2N x 2N block covariance [[s_xx, s_xp], [s_xp^T, s_pp]]."""
    return np.block([[state.s_xx, state.s_xp], [state.s_xp.T, state.s_pp]])


def symplectic_form(n_modes: int) -> np.ndarray:
    """The form Omega = [[0, I], [-I, 0]] on the (x..., p...) basis."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Moduli of the eigenvalues of i*Omega*cov, one per +/- pair, ascending.

    The eigenvalues of the real matrix Omega.cov come in +/- i*nu pairs;
    after sorting the moduli, consecutive entries are averaged and checked
    to agree to 1e-8 relative (a mismatch means the eigensolver failed to
    resolve the pairing).  Works for partially transposed matrices too,
    where nu may drop below 1/2.
    """
    cov = np.asarray(cov, dtype=float)
    two_n = cov.shape[0]
    if cov.shape != (two_n, two_n) or two_n % 2:
        raise ValueError(f"covariance must be square of even dimension, got {cov.shape}")
    n = two_n // 2
    ev = np.linalg.eigvals(symplectic_form(n) @ cov)
    mods = np.sort(np.abs(ev))
    lo, hi = mods[0::2], mods[1::2]
    scale = np.maximum(np.abs(hi), 1e-300)
    if np.any((hi - lo) / scale > 1e-8):
        worst = float(np.max((hi - lo) / scale))
        raise np.linalg.LinAlgError(
            f"symplectic spectrum pairs disagree (rel {worst:.2e}); eigensolver failure"
        )
    return 0.5 * (lo + hi)


def momentum_correlation_profile(state: GaussianState) -> np.ndarray:
    """Distance-resolved momentum correlations of a translation-invariant state.

    Entry d (d = 0 .. N//2) is the average over sites i of
    s_pp[i, (i+d) mod N].
    """
    spp = state.s_pp
    n = spp.shape[0]
    idx = np.arange(n)
    out = np.empty(n // 2 + 1)
    for d in range(n // 2 + 1):
        out[d] = spp[idx, (idx + d) % n].mean()
    return out


def check_state(state: GaussianState, sym_tol: float = 1e-10, phys_tol: float = 1e-8) -> None:
    """Validate symmetry of s_xx/s_pp and physicality of the covariance.

    Raises ValueError listing the violated condition.
    """
    for name, block in (("s_xx", state.s_xx), ("s_pp", state.s_pp)):
        dev = float(np.max(np.abs(block - block.T))) if block.size else 0.0
        if dev > sym_tol:
            raise ValueError(f"{name} asymmetric by {dev:.3e} (tol {sym_tol:.1e})")
    nu = symplectic_eigenvalues(assemble_covariance(state))
    if nu.size and float(nu.min()) < 0.5 - phys_tol:
        raise ValueError(f"unphysical state: min symplectic eigenvalue {nu.min():.12f} < 1/2")
