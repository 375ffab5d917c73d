"""Deterministic most-likely-trajectory integration of the moment equations.

Continuous monitoring of every site momentum at strength gamma, conditioned
on the most likely readout record, gives closed nonlinear equations for the
Gaussian moments.  With A = omega*V + 2*diag(h) (V the coupling matrix,
h the surrogate mass from sctdha, h = 0 for the free chain):

    d<x>  =  omega <p>
    d<p>  = -omega V <x> - g - 2 h <x>
    ds_xx =  omega (s_xp + s_xp^T) - 4 gamma s_xp s_xp^T + gamma I
    ds_pp = -(A s_xp + (A s_xp)^T) - 4 gamma s_pp^2
    ds_xp =  omega s_pp - s_xx A - 2 gamma (s_xp + s_xp^T) s_pp

The total coefficient on the symmetrized s_xp in ds_pp is -omega(2 + r^2)
- 2h, the form consistent with the Hamiltonian; it is validated to machine
precision against the exact truncated-number-basis oracle (see fock).

The mean-momentum force admits two variants: "hamiltonian" (default) uses
the full V including the regulator diagonal; "as-printed" drops the r^2
piece from the mean force only (a published-equation variant kept for
comparison).  Covariance equations are identical in both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sctdha
from .errors import ConfigError, NonFiniteError
from .gaussian import GaussianState, vacuum_state
from .lattice import ChainParams, coupling_matrix, dispersion, mode_momenta, regulator

__all__ = [
    "MltConfig",
    "MltResult",
    "rhs_free",
    "rhs_sg",
    "integrate",
    "detect_steady_state",
    "quadratic_energy",
    "ModeResult",
    "evolve_modes",
]

MEAN_P_VARIANTS = ("hamiltonian", "as-printed")

# dt * max(omega, gamma, J) must stay below this for the fixed-step RK4.
DT_GUARD = 0.1


@dataclass
class MltConfig:
    gamma: float
    dt: float | None = None
    t_max: float = 100.0
    steady_tol: float = 1e-9
    model: str = "free"
    snapshot_stride: int = 100
    store_full: bool = False
    mean_p_variant: str = "hamiltonian"

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.t_max <= 0:
            raise ConfigError(f"t_max must be > 0, got {self.t_max}")
        if self.steady_tol <= 0:
            raise ConfigError(f"steady_tol must be > 0, got {self.steady_tol}")
        if self.model not in ("free", "sine-gordon"):
            raise ConfigError(f"model must be 'free' or 'sine-gordon', got {self.model!r}")
        if self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be >= 1")
        if self.mean_p_variant not in MEAN_P_VARIANTS:
            raise ConfigError(
                f"mean_p_variant must be one of {MEAN_P_VARIANTS}, got {self.mean_p_variant!r}"
            )

    def resolve_dt(self, omega: float, j_coupling: float = 0.0) -> float:
        """Default dt = 1e-3 / max(omega, gamma, J); reject dt beyond the guard."""
        rate = max(omega, self.gamma, j_coupling)
        dt = self.dt if self.dt is not None else 1e-3 / rate
        if dt <= 0:
            raise ConfigError(f"dt must be > 0, got {dt}")
        if dt * rate > DT_GUARD + 1e-12:
            raise ConfigError(
                f"dt={dt} violates the stability guard dt*max(omega,gamma,J) <= {DT_GUARD}"
            )
        return dt


@dataclass
class MltResult:
    times: np.ndarray
    diag_xx: np.ndarray
    diag_pp: np.ndarray
    diag_xp: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    rhs_norm: np.ndarray
    h_coeff: np.ndarray | None
    final_state: GaussianState
    steady: bool
    steady_time: float | None
    n_steps: int
    states: list[GaussianState] | None = field(default=None, repr=False)


def _drift(mx, mp, sxx, spp, sxp, v, v_mean, omega, gamma, g, h, eye):
    """Shared matrix-form drift; g/h are None for the free chain."""
    sym = sxp + sxp.T
    dmx = omega * mp
    dmp = -omega * (v_mean @ mx)
    d_sxx = omega * sym - 4.0 * gamma * (sxp @ sxp.T) + gamma * eye
    a_sxp = omega * (v @ sxp)
    sxx_a = omega * (sxx @ v)
    if h is not None:
        dmp = dmp - g - 2.0 * h * mx
        a_sxp = a_sxp + 2.0 * h[:, None] * sxp
        sxx_a = sxx_a + 2.0 * sxx * h[None, :]
    d_spp = -(a_sxp + a_sxp.T) - 4.0 * gamma * (spp @ spp)
    d_sxp = omega * spp - sxx_a - 2.0 * gamma * (sym @ spp)
    return dmx, dmp, d_sxx, d_spp, d_sxp


def _mean_force_matrix(v: np.ndarray, chain: ChainParams, variant: str) -> np.ndarray:
    if variant == "hamiltonian":
        return v
    if variant == "as-printed":
        return v - regulator(chain) * np.eye(chain.n_sites)
    raise ConfigError(f"unknown mean_p_variant {variant!r}")


def rhs_free(
    state: GaussianState,
    chain: ChainParams,
    gamma: float,
    mean_p_variant: str = "hamiltonian",
) -> GaussianState:
    """Time-derivative of all five moment blocks for the free chain."""
    v = coupling_matrix(chain)
    v_mean = _mean_force_matrix(v, chain, mean_p_variant)
    eye = np.eye(chain.n_sites)
    d = _drift(
        state.mean_x, state.mean_p, state.s_xx, state.s_pp, state.s_xp,
        v, v_mean, chain.omega, gamma, None, None, eye,
    )
    return GaussianState(*d)


def rhs_sg(
    state: GaussianState,
    chain: ChainParams,
    sg: sctdha.SineGordonParams,
    gamma: float,
    mean_p_variant: str = "hamiltonian",
) -> GaussianState:
    """Time-derivative with the self-consistent quadratic surrogate.

    Surrogate coefficients are evaluated on the input state, so calling
    this inside each RK4 stage keeps the stage-level self-consistency.
    """
    v = coupling_matrix(chain)
    v_mean = _mean_force_matrix(v, chain, mean_p_variant)
    eye = np.eye(chain.n_sites)
    g, h = sctdha.coefficients_from_moments(state.mean_x, np.diagonal(state.s_xx), sg)
    d = _drift(
        state.mean_x, state.mean_p, state.s_xx, state.s_pp, state.s_xp,
        v, v_mean, chain.omega, gamma, g, h, eye,
    )
    return GaussianState(*d)


def _max_norm(blocks) -> float:
    return max(float(np.max(np.abs(b))) if b.size else 0.0 for b in blocks)


def _all_finite(blocks) -> bool:
    return all(np.all(np.isfinite(b)) for b in blocks)


def integrate(
    state: GaussianState,
    cfg: MltConfig,
    chain: ChainParams,
    sg: sctdha.SineGordonParams | None = None,
) -> MltResult:
    """Fixed-step RK4 evolution with snapshots and steady-state stopping.

    Stops early once the max-norm over all five derivative blocks drops
    below steady_tol * max(omega, gamma), checked at snapshot times.  The
    fixed points of the RK4 map coincide with the zeros of the drift, so a
    coarse dt within the stability guard reaches the same steady state as
    a fine one (only the transient loses accuracy).
    """
    if cfg.model == "sine-gordon":
        if sg is None:
            raise ConfigError("model 'sine-gordon' requires SineGordonParams")
    else:
        sg = None
    j_coupling = sg.j_coupling if sg is not None else 0.0
    dt = cfg.resolve_dt(chain.omega, j_coupling)
    omega, gamma = chain.omega, cfg.gamma

    v = coupling_matrix(chain)
    v_mean = _mean_force_matrix(v, chain, cfg.mean_p_variant)
    eye = np.eye(chain.n_sites)

    def drift(y):
        mx, mp, sxx, spp, sxp = y
        if sg is not None:
            g, h = sctdha.coefficients_from_moments(mx, np.diagonal(sxx), sg)
        else:
            g = h = None
        return _drift(mx, mp, sxx, spp, sxp, v, v_mean, omega, gamma, g, h, eye)

    y = (state.mean_x.astype(float).copy(), state.mean_p.astype(float).copy(),
         state.s_xx.astype(float).copy(), state.s_pp.astype(float).copy(),
         state.s_xp.astype(float).copy())

    n_steps = max(1, math.ceil(cfg.t_max / dt - 1e-12))
    steady_level = cfg.steady_tol * max(omega, gamma)

    times, dxx, dpp, dxp, mxs, mps, norms, hs = [], [], [], [], [], [], [], []
    full_states = [] if cfg.store_full else None
    steady = False
    steady_time = None
    step = 0

    def take_snapshot(t, y):
        nonlocal steady, steady_time
        if not _all_finite(y):
            raise NonFiniteError(f"non-finite moments at t={t:.6g}; reduce dt")
        k = drift(y)
        norm = _max_norm(k)
        times.append(t)
        dxx.append(np.diagonal(y[2]).copy())
        dpp.append(np.diagonal(y[3]).copy())
        dxp.append(np.diagonal(y[4]).copy())
        mxs.append(y[0].copy())
        mps.append(y[1].copy())
        norms.append(norm)
        if sg is not None:
            _, h = sctdha.coefficients_from_moments(y[0], np.diagonal(y[2]), sg)
            hs.append(h.copy())
        if full_states is not None:
            full_states.append(GaussianState(*(b.copy() for b in y)))
        if norm < steady_level and not steady:
            steady = True
            steady_time = t
        return k

    while step < n_steps:
        if step % cfg.snapshot_stride == 0:
            take_snapshot(step * dt, y)
            if steady:
                break
        y = _rk4_step(drift, y, dt)
        step += 1
    else:
        take_snapshot(n_steps * dt, y)

    final = GaussianState(*y)
    return MltResult(
        times=np.asarray(times),
        diag_xx=np.asarray(dxx),
        diag_pp=np.asarray(dpp),
        diag_xp=np.asarray(dxp),
        mean_x=np.asarray(mxs),
        mean_p=np.asarray(mps),
        rhs_norm=np.asarray(norms),
        h_coeff=np.asarray(hs) if hs else None,
        final_state=final,
        steady=steady,
        steady_time=steady_time,
        n_steps=step,
        states=full_states,
    )


def _rk4_step(drift, y, dt):
    k1 = drift(y)
    k2 = drift(tuple(a + 0.5 * dt * b for a, b in zip(y, k1)))
    k3 = drift(tuple(a + 0.5 * dt * b for a, b in zip(y, k2)))
    k4 = drift(tuple(a + dt * b for a, b in zip(y, k3)))
    out = tuple(
        a + (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
    )
    mx, mp, sxx, spp, sxp = out
    # suppress floating-point symmetry drift in the symmetric blocks
    sxx = 0.5 * (sxx + sxx.T)
    spp = 0.5 * (spp + spp.T)
    return (mx, mp, sxx, spp, sxp)


def detect_steady_state(states, times, steady_tol, omega, gamma):
    """Finite-difference steadiness check on a series of state snapshots.

    Returns (True, t) at the first snapshot where the max-norm of the
    difference quotient over all five blocks falls below
    steady_tol * max(omega, gamma); (False, None) otherwise.
    """
    if len(states) < 2:
        raise ValueError("need at least two snapshots")
    level = steady_tol * max(omega, gamma)
    for i in range(1, len(states)):
        dt = times[i] - times[i - 1]
        if dt <= 0:
            raise ValueError("times must be strictly increasing")
        prev, cur = states[i - 1], states[i]
        rate = _max_norm((
            (cur.mean_x - prev.mean_x) / dt,
            (cur.mean_p - prev.mean_p) / dt,
            (cur.s_xx - prev.s_xx) / dt,
            (cur.s_pp - prev.s_pp) / dt,
            (cur.s_xp - prev.s_xp) / dt,
        ))
        if rate < level:
            return True, times[i]
    return False, None


def quadratic_energy(state: GaussianState, chain: ChainParams) -> float:
    """(2/omega) * <H> up to the constant zero-point offset of the free chain.

    Equals sum <p^2> + <x.V.x> = tr(s_pp) + |<p>|^2 + tr(V s_xx) + <x>.V.<x>;
    conserved under gamma = 0 evolution.
    """
    v = coupling_matrix(chain)
    return float(
        np.trace(state.s_pp)
        + state.mean_p @ state.mean_p
        + np.trace(v @ state.s_xx)
        + state.mean_x @ v @ state.mean_x
    )


# ---------------------------------------------------------------------------
# Fourier-mode fast path for translation-invariant runs
# ---------------------------------------------------------------------------

@dataclass
class ModeResult:
    momenta: np.ndarray
    sigma_xx_q: np.ndarray
    sigma_pp_q: np.ndarray
    sigma_xp_q: np.ndarray
    h_uniform: float
    s_x: float
    times: np.ndarray
    s_x_series: np.ndarray
    rhs_norm: np.ndarray
    steady: bool
    steady_time: float | None
    n_steps: int


def evolve_modes(
    chain: ChainParams,
    gamma: float,
    sg: sctdha.SineGordonParams | None = None,
    dt: float | None = None,
    t_max: float = 1000.0,
    steady_tol: float = 1e-9,
    snapshot_stride: int = 100,
) -> ModeResult:
    """Vacuum-start evolution in Fourier modes, O(N) per step.

    Valid for translation-invariant runs with zero means (the vacuum
    start keeps them zero): every covariance block stays circulant and
    the dynamics splits into independent mode triples coupled only
    through the uniform surrogate mass h(mean of sigma_xx_q).  Identical
    fixed points to integrate(); use that generic path for anything
    site-dependent.
    """
    omega = chain.omega
    j_coupling = sg.j_coupling if sg is not None else 0.0
    rate = max(omega, gamma, j_coupling)
    if dt is None:
        dt = 0.05 / rate
    if dt <= 0 or dt * rate > DT_GUARD + 1e-12:
        raise ConfigError(
            f"dt={dt} violates the stability guard dt*max(omega,gamma,J) <= {DT_GUARD}"
        )
    q = mode_momenta(chain.n_sites)
    base = omega * dispersion(q, chain)  # omega * (4 sin^2(q/2) + r^2)

    def drift(y):
        xx, pp, xp = y
        if sg is not None:
            s = float(xx.mean())
            h = 0.5 * sg.j_coupling * math.exp(-0.5 * sg.alpha ** 2 * s)
        else:
            h = 0.0
        aq = base + 2.0 * h
        dxx = 2.0 * omega * xp - 4.0 * gamma * xp * xp + gamma
        dpp = -2.0 * aq * xp - 4.0 * gamma * pp * pp
        dxp = omega * pp - aq * xx - 4.0 * gamma * xp * pp
        return dxx, dpp, dxp

    n = chain.n_sites
    y = (0.5 * np.ones(n), 0.5 * np.ones(n), np.zeros(n))
    n_steps = max(1, math.ceil(t_max / dt - 1e-12))
    steady_level = steady_tol * max(omega, gamma)

    times, sx_series, norms = [], [], []
    steady = False
    steady_time = None
    step = 0
    while True:
        at_snapshot = step % snapshot_stride == 0
        if at_snapshot or step >= n_steps:
            if not _all_finite(y):
                raise NonFiniteError(f"non-finite modes at step {step}; reduce dt")
            k = drift(y)
            norm = _max_norm(tuple(np.asarray(b) for b in k))
            times.append(step * dt)
            sx_series.append(float(y[0].mean()))
            norms.append(norm)
            if norm < steady_level:
                steady = True
                steady_time = step * dt
                break
        if step >= n_steps:
            break
        # RK4 on the mode triples
        k1 = drift(y)
        k2 = drift(tuple(a + 0.5 * dt * b for a, b in zip(y, k1)))
        k3 = drift(tuple(a + 0.5 * dt * b for a, b in zip(y, k2)))
        k4 = drift(tuple(a + dt * b for a, b in zip(y, k3)))
        y = tuple(
            a + (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
        )
        step += 1

    xx, pp, xp = y
    s_x = float(xx.mean())
    if sg is not None:
        h = 0.5 * sg.j_coupling * math.exp(-0.5 * sg.alpha ** 2 * s_x)
    else:
        h = 0.0
    return ModeResult(
        momenta=q,
        sigma_xx_q=xx,
        sigma_pp_q=pp,
        sigma_xp_q=xp,
        h_uniform=h,
        s_x=s_x,
        times=np.asarray(times),
        s_x_series=np.asarray(sx_series),
        rhs_norm=np.asarray(norms),
        steady=steady,
        steady_time=steady_time,
        n_steps=step,
    )
