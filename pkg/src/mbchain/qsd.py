"""Quantum-state-diffusion trajectories and ensemble statistics.

Monitoring every site momentum yields an Ito stochastic evolution for the
means while the covariances obey the same deterministic equations as the
most-likely trajectory (free chain) or state-dependent deterministic
equations through the surrogate coefficients (interacting chain):

    d<x_i> = omega <p_i> dt                      + 2 sqrt(gamma) sum_j dW_j s_xp^{ji}
    d<p_i> = -(force)_i dt - (g_i + 2 h_i <x_i>) dt + 2 sqrt(gamma) sum_j dW_j s_pp^{ji}

with independent Wiener increments dW_j of variance dt at every site (the
noise contraction runs over all sites).  The covariance drift here is an
independent, index-literal transcription (neighbor shifts via np.roll)
of the same equations that mlt implements in matrix form; the two are
compared term by term in the test suite.

Scheme: Euler-Maruyama.  Reproducibility: trajectory k draws from a
Philox stream spawned from SeedSequence(master_seed), so results are
bit-identical for a fixed (master_seed, n_trajectories, dt) regardless
of batching or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sctdha
from .errors import ConfigError, NonFiniteError
from .gaussian import GaussianState, vacuum_state
from .lattice import ChainParams, regulator

__all__ = [
    "QsdConfig",
    "EnsembleStats",
    "sample_wiener",
    "qsd_step_free",
    "qsd_step_sg",
    "qsd_cov_rhs",
    "run_ensemble",
]

DT_GUARD = 0.05  # Euler-Maruyama is order 1/2; tighter than the RK4 guard
_NOISE_BLOCK = 1024  # steps per pre-drawn noise block (fixed: determinism)


@dataclass
class QsdConfig:
    gamma: float
    n_trajectories: int
    master_seed: int
    dt: float | None = None
    t_max: float = 25.0
    model: str = "free"
    snapshot_stride: int = 100
    mean_p_variant: str = "hamiltonian"
    store_means: bool = False
    obs_alpha: float | None = None
    obs_pair: tuple[int, int] | None = None
    zero_noise: bool = False

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.n_trajectories < 1:
            raise ConfigError("n_trajectories must be >= 1")
        if self.t_max <= 0:
            raise ConfigError(f"t_max must be > 0, got {self.t_max}")
        if self.model not in ("free", "sine-gordon"):
            raise ConfigError(f"model must be 'free' or 'sine-gordon', got {self.model!r}")
        if self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be >= 1")
        if self.mean_p_variant not in ("hamiltonian", "as-printed"):
            raise ConfigError(f"unknown mean_p_variant {self.mean_p_variant!r}")

    def resolve_dt(self, omega: float, j_coupling: float = 0.0) -> float:
        rate = max(omega, self.gamma, j_coupling)
        dt = self.dt if self.dt is not None else 2.5e-3 / rate
        if dt <= 0:
            raise ConfigError(f"dt must be > 0, got {dt}")
        if dt * rate > DT_GUARD + 1e-12:
            raise ConfigError(
                f"dt={dt} violates the stability guard dt*max(omega,gamma,J) <= {DT_GUARD}"
            )
        return dt


@dataclass
class EnsembleStats:
    """Per-snapshot trajectory means and standard errors.

    Site-resolved observables have shape (T, N): sigma_xx_diag,
    sigma_pp_diag, sigma_xp_diag, mean_x, mean_p.  Scalar observables
    have shape (T,): avg_xx, avg_pp, avg_xp (site averages of the
    diagonals) and cosine (mean of cos(alpha(<x_i> - <x_j>))).
    Standard error = sample stddev / sqrt(n_trajectories).
    """

    times: np.ndarray
    n_trajectories: int
    means: dict
    stderrs: dict
    obs_alpha: float
    obs_pair: tuple[int, int]
    mean_x_store: np.ndarray | None = field(default=None, repr=False)


def sample_wiener(rng: np.random.Generator, dt: float, n: int) -> np.ndarray:
    """n independent Wiener increments: Gaussian, mean 0, variance dt."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    return rng.normal(0.0, math.sqrt(dt), size=n)


# ---------------------------------------------------------------------------
# Index-literal drift (batched over any leading shape)
# ---------------------------------------------------------------------------

def _coefficient_arrays(mx, sxx_diag, sg):
    if sg is None:
        return None, None
    return sctdha.coefficients_from_moments(mx, sxx_diag, sg)


def _cov_drift_literal(sxx, spp, sxp, omega, gamma, r_sq, h):
    """ds_xx, ds_pp, ds_xp with neighbor couplings written as index shifts."""
    n = sxx.shape[-1]
    eye = np.eye(n)
    sxp_t = np.swapaxes(sxp, -1, -2)

    dsxx = omega * (sxp + sxp_t) - 4.0 * gamma * (sxp @ sxp_t) + gamma * eye

    # (A s_xp)^{ij} with A = omega*V + 2*diag(h):
    #   omega[(2+r^2) s_xp^{ij} - s_xp^{i-1,j} - s_xp^{i+1,j}] + 2 h_i s_xp^{ij}
    a_sxp = omega * (
        (2.0 + r_sq) * sxp
        - np.roll(sxp, 1, axis=-2)
        - np.roll(sxp, -1, axis=-2)
    )
    # (s_xx A)^{ij}: omega[(2+r^2) s_xx^{ij} - s_xx^{i,j-1} - s_xx^{i,j+1}] + 2 s_xx^{ij} h_j
    sxx_a = omega * (
        (2.0 + r_sq) * sxx
        - np.roll(sxx, 1, axis=-1)
        - np.roll(sxx, -1, axis=-1)
    )
    if h is not None:
        a_sxp = a_sxp + 2.0 * h[..., :, None] * sxp
        sxx_a = sxx_a + 2.0 * sxx * h[..., None, :]

    dspp = -(a_sxp + np.swapaxes(a_sxp, -1, -2)) - 4.0 * gamma * (spp @ spp)
    dsxp = omega * spp - sxx_a - 2.0 * gamma * ((sxp + sxp_t) @ spp)
    return dsxx, dspp, dsxp


def _mean_drift_literal(mx, mp, omega, r_sq, g, h, variant):
    diag_coeff = 2.0 + r_sq if variant == "hamiltonian" else 2.0
    dmx = omega * mp
    dmp = -omega * (
        diag_coeff * mx - np.roll(mx, 1, axis=-1) - np.roll(mx, -1, axis=-1)
    )
    if g is not None:
        dmp = dmp - g - 2.0 * h * mx
    return dmx, dmp


def qsd_cov_rhs(state: GaussianState, chain: ChainParams, gamma: float,
                sg: sctdha.SineGordonParams | None = None):
    """Deterministic covariance drift (ds_xx, ds_pp, ds_xp) at this state."""
    _, h = _coefficient_arrays(state.mean_x, np.diagonal(state.s_xx), sg)
    return _cov_drift_literal(
        state.s_xx, state.s_pp, state.s_xp, chain.omega, gamma, regulator(chain), h
    )


def _euler_update(mx, mp, sxx, spp, sxp, chain, gamma, sg, dt, dW, variant):
    omega, r_sq = chain.omega, regulator(chain)
    sxx_diag = np.diagonal(sxx, axis1=-2, axis2=-1)
    g, h = _coefficient_arrays(mx, sxx_diag, sg)
    dmx, dmp = _mean_drift_literal(mx, mp, omega, r_sq, g, h, variant)
    dsxx, dspp, dsxp = _cov_drift_literal(sxx, spp, sxp, omega, gamma, r_sq, h)
    amp = 2.0 * math.sqrt(gamma)
    # noise enters the means through the correlations: sum_j dW_j s_xp^{ji}
    mx = mx + dt * dmx + amp * np.einsum("...ji,...j->...i", sxp, dW)
    mp = mp + dt * dmp + amp * np.einsum("...ji,...j->...i", spp, dW)
    sxx = sxx + dt * dsxx
    spp = spp + dt * dspp
    sxp = sxp + dt * dsxp
    sxx = 0.5 * (sxx + np.swapaxes(sxx, -1, -2))
    spp = 0.5 * (spp + np.swapaxes(spp, -1, -2))
    return mx, mp, sxx, spp, sxp


def qsd_step_free(state: GaussianState, chain: ChainParams, gamma: float,
                  dt: float, dW: np.ndarray,
                  mean_p_variant: str = "hamiltonian") -> GaussianState:
    """One Euler-Maruyama step of the monitored free chain."""
    dW = np.asarray(dW, dtype=float)
    if not np.all(np.isfinite(dW)):
        raise ValueError("dW must be finite")
    out = _euler_update(
        state.mean_x, state.mean_p, state.s_xx, state.s_pp, state.s_xp,
        chain, gamma, None, dt, dW, mean_p_variant,
    )
    if not all(np.all(np.isfinite(b)) for b in out):
        raise NonFiniteError("non-finite moments after step; reduce dt")
    return GaussianState(*out)


def qsd_step_sg(state: GaussianState, chain: ChainParams,
                sg: sctdha.SineGordonParams, gamma: float,
                dt: float, dW: np.ndarray,
                mean_p_variant: str = "hamiltonian") -> GaussianState:
    """One Euler-Maruyama step with the self-consistent quadratic surrogate.

    The surrogate coefficients are evaluated on the current stochastic
    state, so covariances become trajectory-dependent through the noisy
    means.  J = 0 reduces this exactly to qsd_step_free.
    """
    dW = np.asarray(dW, dtype=float)
    if not np.all(np.isfinite(dW)):
        raise ValueError("dW must be finite")
    out = _euler_update(
        state.mean_x, state.mean_p, state.s_xx, state.s_pp, state.s_xp,
        chain, gamma, sg, dt, dW, mean_p_variant,
    )
    if not all(np.all(np.isfinite(b)) for b in out):
        raise NonFiniteError("non-finite moments after step; reduce dt")
    return GaussianState(*out)


# ---------------------------------------------------------------------------
# Ensemble driver
# ---------------------------------------------------------------------------

class _StreamingStats:
    """One-pass accumulation of per-trajectory sums and squared sums."""

    def __init__(self, shapes: dict):
        self.s1 = {k: np.zeros(s) for k, s in shapes.items()}
        self.s2 = {k: np.zeros(s) for k, s in shapes.items()}
        self.n = 0

    def add(self, t_idx: int, values: dict):
        for k, v in values.items():
            self.s1[k][t_idx] += v.sum(axis=0)
            self.s2[k][t_idx] += (v * v).sum(axis=0)

    def finalize(self, n: int):
        means, ses = {}, {}
        for k in self.s1:
            m = self.s1[k] / n
            if n > 1:
                var = np.maximum(self.s2[k] - n * m * m, 0.0) / (n - 1)
                se = np.sqrt(var / n)
            else:
                se = np.zeros_like(m)
            means[k], ses[k] = m, se
        return means, ses


def run_ensemble(cfg: QsdConfig, chain: ChainParams,
                 sg: sctdha.SineGordonParams | None = None,
                 initial: GaussianState | None = None) -> EnsembleStats:
    """Integrate n_trajectories independent monitored trajectories.

    The free chain shares a single deterministic covariance across the
    batch (the noise never feeds back into it); the interacting chain
    carries one covariance set per trajectory.  Statistics are streamed,
    so memory stays bounded by the trajectory chunk size.
    """
    if cfg.model == "sine-gordon":
        if sg is None:
            raise ConfigError("model 'sine-gordon' requires SineGordonParams")
    else:
        sg = None
    j_coupling = sg.j_coupling if sg is not None else 0.0
    dt = cfg.resolve_dt(chain.omega, j_coupling)
    n = chain.n_sites
    n_traj = cfg.n_trajectories
    if initial is None:
        initial = vacuum_state(n)

    alpha_obs = cfg.obs_alpha if cfg.obs_alpha is not None else (sg.alpha if sg else 1.0)
    pair = cfg.obs_pair if cfg.obs_pair is not None else (0, n // 2)
    i_obs, j_obs = int(pair[0]) % n, int(pair[1]) % n

    n_steps = max(1, math.ceil(cfg.t_max / dt - 1e-12))
    snap_steps = list(range(0, n_steps, cfg.snapshot_stride))
    if snap_steps[-1] != n_steps:
        snap_steps.append(n_steps)
    snap_index = {s: i for i, s in enumerate(snap_steps)}
    times = np.asarray([s * dt for s in snap_steps])
    n_t = len(snap_steps)

    shapes = {
        "sigma_xx_diag": (n_t, n), "sigma_pp_diag": (n_t, n), "sigma_xp_diag": (n_t, n),
        "mean_x": (n_t, n), "mean_p": (n_t, n),
        "avg_xx": (n_t,), "avg_pp": (n_t,), "avg_xp": (n_t,),
        "cosine": (n_t,),
    }
    acc = _StreamingStats(shapes)
    store = np.empty((n_t, n_traj, n)) if cfg.store_means else None

    seeds = np.random.SeedSequence(cfg.master_seed).spawn(n_traj)
    # chunk so that per-trajectory covariances stay within ~a few hundred MB
    chunk = n_traj if sg is None else max(1, min(n_traj, 4_000_000 // max(1, n * n)))

    for lo in range(0, n_traj, chunk):
        hi = min(n_traj, lo + chunk)
        _run_chunk(
            cfg, chain, sg, initial, dt, n_steps, snap_index, acc, store,
            seeds[lo:hi], lo, alpha_obs, (i_obs, j_obs),
        )

    means, ses = acc.finalize(n_traj)
    return EnsembleStats(
        times=times,
        n_trajectories=n_traj,
        means=means,
        stderrs=ses,
        obs_alpha=alpha_obs,
        obs_pair=(i_obs, j_obs),
        mean_x_store=store,
    )


def _run_chunk(cfg, chain, sg, initial, dt, n_steps, snap_index, acc, store,
               seeds, traj_offset, alpha_obs, pair):
    n = chain.n_sites
    b = len(seeds)
    gens = [np.random.Generator(np.random.Philox(s)) for s in seeds]
    sqrt_dt = math.sqrt(dt)

    mx = np.broadcast_to(initial.mean_x, (b, n)).astype(float).copy()
    mp = np.broadcast_to(initial.mean_p, (b, n)).astype(float).copy()
    if sg is None:
        # covariances are noise-independent: one shared copy
        sxx = initial.s_xx.astype(float).copy()
        spp = initial.s_pp.astype(float).copy()
        sxp = initial.s_xp.astype(float).copy()
    else:
        sxx = np.broadcast_to(initial.s_xx, (b, n, n)).astype(float).copy()
        spp = np.broadcast_to(initial.s_pp, (b, n, n)).astype(float).copy()
        sxp = np.broadcast_to(initial.s_xp, (b, n, n)).astype(float).copy()

    omega, gamma, r_sq = chain.omega, cfg.gamma, regulator(chain)
    amp = 2.0 * math.sqrt(gamma)
    variant = cfg.mean_p_variant

    def snapshot(step):
        t_idx = snap_index[step]
        sxx_d = np.diagonal(sxx, axis1=-2, axis2=-1)
        spp_d = np.diagonal(spp, axis1=-2, axis2=-1)
        sxp_d = np.diagonal(sxp, axis1=-2, axis2=-1)
        if sg is None:
            sxx_d = np.broadcast_to(sxx_d, (b, n))
            spp_d = np.broadcast_to(spp_d, (b, n))
            sxp_d = np.broadcast_to(sxp_d, (b, n))
        bad = ~(
            np.isfinite(mx).all(axis=1)
            & np.isfinite(mp).all(axis=1)
            & np.isfinite(sxx_d).all(axis=1)
        )
        if bad.any():
            k = traj_offset + int(np.argmax(bad))
            raise NonFiniteError(
                f"trajectory {k} became non-finite by t={step * dt:.6g}; reduce dt"
            )
        values = {
            "sigma_xx_diag": sxx_d, "sigma_pp_diag": spp_d, "sigma_xp_diag": sxp_d,
            "mean_x": mx, "mean_p": mp,
            "avg_xx": sxx_d.mean(axis=1, keepdims=True),
            "avg_pp": spp_d.mean(axis=1, keepdims=True),
            "avg_xp": sxp_d.mean(axis=1, keepdims=True),
            "cosine": np.cos(alpha_obs * (mx[:, pair[0]] - mx[:, pair[1]]))[:, None],
        }
        # scalar observables were built with a trailing singleton: drop it
        for key in ("avg_xx", "avg_pp", "avg_xp", "cosine"):
            values[key] = values[key][:, 0]
        acc.add(t_idx, values)
        if store is not None:
            store[t_idx, traj_offset:traj_offset + b] = mx

    # pre-drawn noise blocks; length capped so a block stays ~16 MB
    block_cap = max(1, min(_NOISE_BLOCK, 2_000_000 // max(1, b * n)))

    step = 0
    snapshot(step)
    while step < n_steps:
        block = min(block_cap, n_steps - step)
        if cfg.zero_noise:
            noise = np.zeros((b, block, n))
        else:
            noise = np.empty((b, block, n))
            for k, gen in enumerate(gens):
                noise[k] = gen.standard_normal((block, n))
            noise *= sqrt_dt
        for s in range(block):
            dW = noise[:, s, :]
            sxx_diag = np.diagonal(sxx, axis1=-2, axis2=-1)
            if sg is not None:
                g, h = sctdha.coefficients_from_moments(mx, sxx_diag, sg)
            else:
                g = h = None
            dmx, dmp = _mean_drift_literal(mx, mp, omega, r_sq, g, h, variant)
            dsxx, dspp, dsxp = _cov_drift_literal(sxx, spp, sxp, omega, gamma, r_sq, h)
            mx = mx + dt * dmx + amp * np.einsum("...ji,...j->...i", sxp, dW)
            mp = mp + dt * dmp + amp * np.einsum("...ji,...j->...i", spp, dW)
            sxx = sxx + dt * dsxx
            spp = spp + dt * dspp
            sxp = sxp + dt * dsxp
            sxx = 0.5 * (sxx + np.swapaxes(sxx, -1, -2))
            spp = 0.5 * (spp + np.swapaxes(spp, -1, -2))
            step += 1
            if step in snap_index:
                snapshot(step)
