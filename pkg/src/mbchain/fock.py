"""Brute-force density-matrix evolution in a truncated number basis.

Single-site (optionally two-site) exact integration of the nonlinear
conditioned master equation

    drho/dt = -i[H, rho] - gamma ({p^2, rho} - 2<p^2> rho)
                        + 2 gamma <p> ({p, rho} - 2<p> rho)

used as an oracle for the Gaussian moment closure: for quadratic H the
closure is exact, so any disagreement beyond integrator error flags a
wrong moment equation.  The same machinery hosts the weak-measurement
Kraus family M_r = (2 gamma dt / pi)^{1/4} exp(-gamma dt (r - p)^2),
whose readout weight tr(M rho M) is a probability density in r.

Runs abort (rather than silently degrade) when population reaches the
top two truncation levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mlt
from .errors import ConfigError, NonFiniteError, TruncationLeakError
from .gaussian import GaussianState, vacuum_state
from .lattice import ChainParams
from .sctdha import SineGordonParams, coefficients_from_moments

__all__ = [
    "FockSpec",
    "FockOperators",
    "FockRun",
    "build_operators",
    "coherent_density_matrix",
    "moments",
    "truncation_leak",
    "mlt_master_step",
    "kraus_apply",
    "kraus_weight_scan",
    "sg_oracle_run",
    "gaussian_single_site_run",
    "closure_comparison",
    "bracket_report",
]

LEAK_LIMIT = 1e-8
TRACE_DRIFT_LIMIT = 1e-8
DT_GUARD = 0.05  # dt * (gamma*||p^2|| + ||H||) must stay below this


@dataclass(frozen=True)
class FockSpec:
    n_max: int = 40
    n_sites: int = 1
    dt: float | None = None

    def __post_init__(self):
        if self.n_max < 20:
            raise ConfigError(f"n_max must be >= 20, got {self.n_max}")
        if self.n_sites != 1:
            raise ConfigError("only the single-site oracle is implemented")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")


@dataclass
class FockOperators:
    x: np.ndarray
    p: np.ndarray
    x2: np.ndarray
    p2: np.ndarray
    cos_ax: np.ndarray
    xp_sym: np.ndarray = field(repr=False, default=None)


def build_operators(spec: FockSpec, alpha: float = 1.0) -> FockOperators:
    """Ladder-built x, p, x^2, p^2 and cos(alpha x) on the truncated basis.

    x = (a + a^dag)/sqrt(2), p = i(a^dag - a)/sqrt(2), so [x, p] = i on
    the lower block (truncation corrupts only the top corner).  cos is
    applied through the eigenbasis of the truncated x.
    """
    n = spec.n_max
    a = np.zeros((n, n))
    a[np.arange(n - 1), np.arange(1, n)] = np.sqrt(np.arange(1, n))
    x = (a + a.T) / math.sqrt(2.0)
    p = 1j * (a.T - a) / math.sqrt(2.0)
    w, u = np.linalg.eigh(x)
    cos_ax = (u * np.cos(alpha * w)) @ u.T
    xp = x @ p
    return FockOperators(
        x=x, p=p, x2=x @ x, p2=p @ p, cos_ax=cos_ax, xp_sym=0.5 * (xp + xp.conj().T)
    )


def coherent_density_matrix(spec: FockSpec, x0: float = 0.0, p0: float = 0.0) -> np.ndarray:
    """Pure coherent state displaced to (<x>, <p>) = (x0, p0)."""
    beta = complex(x0, p0) / math.sqrt(2.0)
    psi = np.zeros(spec.n_max, dtype=complex)
    if beta == 0:
        psi[0] = 1.0
    else:
        n = np.arange(spec.n_max)
        log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, spec.n_max)))))
        psi[:] = np.exp(-0.5 * abs(beta) ** 2 + n * np.log(beta) - 0.5 * log_fact)
    return np.outer(psi, psi.conj())


def moments(rho: np.ndarray, ops: FockOperators):
    """(mean_x, mean_p, s_xx, s_pp, s_xp) of a density matrix."""
    def ev(op):
        return float(np.real(np.trace(op @ rho)))

    mx, mp_ = ev(ops.x), ev(ops.p)
    return (
        mx,
        mp_,
        ev(ops.x2) - mx * mx,
        ev(ops.p2) - mp_ * mp_,
        ev(ops.xp_sym) - mx * mp_,
    )


def truncation_leak(rho: np.ndarray) -> float:
    """Population of the top two truncation levels."""
    return float(np.real(rho[-1, -1] + rho[-2, -2]))


def _master_rhs(rho: np.ndarray, h_mat: np.ndarray, p: np.ndarray, p2: np.ndarray,
                gamma: float) -> np.ndarray:
    ev_p = float(np.real(np.trace(p @ rho)))
    ev_p2 = float(np.real(np.trace(p2 @ rho)))
    out = -1j * (h_mat @ rho - rho @ h_mat)
    out -= gamma * (p2 @ rho + rho @ p2 - 2.0 * ev_p2 * rho)
    out += 2.0 * gamma * ev_p * (p @ rho + rho @ p - 2.0 * ev_p * rho)
    return out


def mlt_master_step(rho: np.ndarray, h_mat: np.ndarray, ops: FockOperators,
                    gamma: float, dt: float) -> np.ndarray:
    """One RK4 step of the nonlinear conditioned master equation.

    Re-Hermitized and trace-renormalized after the step; the trace drift
    before renormalization must stay below 1e-8 or the step is rejected.
    """
    p, p2 = ops.p, ops.p2
    k1 = _master_rhs(rho, h_mat, p, p2, gamma)
    k2 = _master_rhs(rho + 0.5 * dt * k1, h_mat, p, p2, gamma)
    k3 = _master_rhs(rho + 0.5 * dt * k2, h_mat, p, p2, gamma)
    k4 = _master_rhs(rho + dt * k3, h_mat, p, p2, gamma)
    rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.real(np.trace(rho)))
    if not math.isfinite(tr):
        raise NonFiniteError("density matrix became non-finite; reduce dt")
    if abs(tr - 1.0) > TRACE_DRIFT_LIMIT:
        raise NonFiniteError(
            f"trace drift {abs(tr - 1.0):.3e} exceeds {TRACE_DRIFT_LIMIT}; reduce dt"
        )
    return rho / tr


def kraus_apply(rho: np.ndarray, r: float, gamma: float, dt: float,
                p_op: np.ndarray):
    """Weak momentum measurement with readout r: (M rho M, tr(M rho M)).

    M = (2 gamma dt/pi)^{1/4} exp(-gamma dt (r - p)^2) is Hermitian; the
    returned weight is the probability density of the readout and the
    density matrix is left unnormalized.
    """
    w, u = np.linalg.eigh(p_op)
    f = (2.0 * gamma * dt / math.pi) ** 0.25 * np.exp(-gamma * dt * (r - w) ** 2)
    m = (u * f) @ u.conj().T
    out = m @ rho @ m
    return out, float(np.real(np.trace(out)))


def kraus_weight_scan(rho: np.ndarray, r_grid: np.ndarray, gamma: float, dt: float,
                      p_op: np.ndarray) -> np.ndarray:
    """Readout densities tr(M_r rho M_r) for a whole grid of r values."""
    w, u = np.linalg.eigh(p_op)
    pops = np.real(np.diag(u.conj().T @ rho @ u))
    r_grid = np.asarray(r_grid, dtype=float)
    # weight(r) = sqrt(2 gamma dt/pi) sum_a pops_a exp(-2 gamma dt (r - w_a)^2)
    gauss = np.exp(-2.0 * gamma * dt * (r_grid[:, None] - w[None, :]) ** 2)
    return math.sqrt(2.0 * gamma * dt / math.pi) * gauss @ pops


@dataclass
class FockRun:
    times: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    s_xx: np.ndarray
    s_pp: np.ndarray
    s_xp: np.ndarray
    leak_max: float
    dt: float


def _resolve_dt(spec: FockSpec, h_mat: np.ndarray, p2: np.ndarray, gamma: float) -> float:
    h_norm = float(np.max(np.abs(np.linalg.eigvalsh(h_mat))))
    p2_norm = float(np.max(np.abs(np.linalg.eigvalsh(p2))))
    scale = gamma * p2_norm + h_norm
    dt = spec.dt if spec.dt is not None else 0.8 * DT_GUARD / scale
    if dt * scale > DT_GUARD + 1e-12:
        raise ConfigError(
            f"dt={dt} violates the oracle guard dt*(gamma*||p^2|| + ||H||) <= {DT_GUARD}"
        )
    return dt


def sg_oracle_run(
    spec: FockSpec,
    omega: float,
    r_sq: float,
    sg: SineGordonParams | None,
    gamma: float,
    t_max: float,
    snap_dt: float = 0.05,
    x0: float = 0.0,
    p0: float = 0.0,
) -> FockRun:
    """Exact single-site evolution under H = omega/2 (p^2 + r^2 x^2) - (J/alpha^2) cos(alpha x).

    No quadratic surrogate anywhere: the cosine enters H exactly.  J = 0
    reduces to the monitored harmonic oscillator.  Snapshots are taken
    every snap_dt of time; dt is snapped to divide snap_dt exactly.
    """
    alpha = sg.alpha if sg is not None else 1.0
    ops = build_operators(spec, alpha=alpha)
    h_mat = 0.5 * omega * (ops.p2 + r_sq * ops.x2)
    if sg is not None and sg.j_coupling != 0.0:
        h_mat = h_mat - (sg.j_coupling / alpha ** 2) * ops.cos_ax
    h_mat = h_mat.astype(complex)

    dt = _resolve_dt(spec, h_mat, ops.p2, gamma)
    stride = max(1, math.ceil(snap_dt / dt - 1e-12))
    dt = snap_dt / stride
    n_steps = max(1, math.ceil(t_max / snap_dt - 1e-12)) * stride

    rho = coherent_density_matrix(spec, x0, p0)
    times, series = [], []
    leak_max = 0.0

    def snap(step):
        nonlocal leak_max
        leak = truncation_leak(rho)
        leak_max = max(leak_max, leak)
        if leak > LEAK_LIMIT:
            raise TruncationLeakError(
                f"truncation leak {leak:.3e} at t={step * dt:.4g} exceeds {LEAK_LIMIT}; "
                f"raise n_max"
            )
        times.append(step * dt)
        series.append(moments(rho, ops))

    for step in range(n_steps):
        if step % stride == 0:
            snap(step)
        rho = mlt_master_step(rho, h_mat, ops, gamma, dt)
    snap(n_steps)

    arr = np.asarray(series)
    return FockRun(
        times=np.asarray(times),
        mean_x=arr[:, 0],
        mean_p=arr[:, 1],
        s_xx=arr[:, 2],
        s_pp=arr[:, 3],
        s_xp=arr[:, 4],
        leak_max=leak_max,
        dt=dt,
    )


def gaussian_single_site_run(
    omega: float,
    r_sq: float,
    sg: SineGordonParams | None,
    gamma: float,
    t_max: float,
    snap_dt: float = 0.05,
    x0: float = 0.0,
    p0: float = 0.0,
    mean_p_variant: str = "hamiltonian",
) -> FockRun:
    """Gaussian moment closure on one site, sampled like sg_oracle_run.

    Uses the production integrator; the interaction (if any) enters
    through the self-consistent quadratic surrogate.
    """
    chain = ChainParams(1, omega, big_omega=r_sq * omega)
    rate = max(omega, gamma, sg.j_coupling if sg else 0.0)
    base_dt = 1e-3 / rate
    stride = max(1, math.ceil(snap_dt / base_dt - 1e-12))
    dt = snap_dt / stride
    state = vacuum_state(1)
    state.mean_x[0] = x0
    state.mean_p[0] = p0
    cfg = mlt.MltConfig(
        gamma=gamma,
        dt=dt,
        t_max=t_max,
        steady_tol=1e-300,
        model="sine-gordon" if (sg is not None and sg.j_coupling != 0.0) else "free",
        snapshot_stride=stride,
        mean_p_variant=mean_p_variant,
    )
    res = mlt.integrate(state, cfg, chain, sg if cfg.model == "sine-gordon" else None)
    return FockRun(
        times=res.times,
        mean_x=res.mean_x[:, 0],
        mean_p=res.mean_p[:, 0],
        s_xx=res.diag_xx[:, 0],
        s_pp=res.diag_pp[:, 0],
        s_xp=res.diag_xp[:, 0],
        leak_max=0.0,
        dt=dt,
    )


def _series_devs(a: FockRun, b: FockRun) -> dict:
    if len(a.times) != len(b.times):
        raise ValueError("snapshot grids differ; use matching snap_dt and t_max")
    return {
        "mean_x": float(np.max(np.abs(a.mean_x - b.mean_x))),
        "mean_p": float(np.max(np.abs(a.mean_p - b.mean_p))),
        "s_xx": float(np.max(np.abs(a.s_xx - b.s_xx))),
        "s_pp": float(np.max(np.abs(a.s_pp - b.s_pp))),
        "s_xp": float(np.max(np.abs(a.s_xp - b.s_xp))),
    }


def closure_comparison(
    n_max: int = 40,
    omega: float = 1.0,
    r_sq: float = 1.0,
    gamma: float = 0.5,
    t_max: float = 5.0,
    j_coupling: float = 0.0,
    alpha: float = 1.0,
    x0: float = 0.0,
    p0: float = 0.0,
    snap_dt: float = 0.05,
    mean_p_variant: str = "hamiltonian",
) -> dict:
    """Max deviation of the Gaussian closure from the exact oracle, per moment."""
    sg = SineGordonParams(j_coupling, alpha) if j_coupling else None
    spec = FockSpec(n_max=n_max)
    exact = sg_oracle_run(spec, omega, r_sq, sg, gamma, t_max, snap_dt, x0, p0)
    gauss = gaussian_single_site_run(
        omega, r_sq, sg, gamma, t_max, snap_dt, x0, p0, mean_p_variant
    )
    devs = _series_devs(exact, gauss)
    return {
        "per_moment": devs,
        "max_dev": max(devs.values()),
        "leak_max": exact.leak_max,
        "oracle": exact,
        "gaussian": gauss,
    }


def _single_site_printed_bracket_run(
    omega, r_sq, sg, gamma, t_max, snap_dt, x0, p0
) -> FockRun:
    """Alternative single-site closure with the published-form s_pp bracket.

    ds_pp = 2 omega (1 - r^2/2) s_xp - 4 h s_xp - 4 gamma s_pp^2 instead of
    the Hamiltonian-consistent -2 omega r^2 s_xp - 4 h s_xp - 4 gamma s_pp^2.
    Kept only for the discrepancy report; diverges in practice.
    """
    rate = max(omega, gamma, sg.j_coupling if sg else 0.0)
    base_dt = 1e-3 / rate
    stride = max(1, math.ceil(snap_dt / base_dt - 1e-12))
    dt = snap_dt / stride
    n_steps = max(1, math.ceil(t_max / snap_dt - 1e-12)) * stride

    def drift(y):
        mx, mp_, sxx, spp, sxp = y
        if sg is not None:
            g, h = coefficients_from_moments(np.asarray([mx]), np.asarray([sxx]), sg)
            g, h = float(g[0]), float(h[0])
        else:
            g = h = 0.0
        dmx = omega * mp_
        dmp = -omega * r_sq * mx - g - 2.0 * h * mx
        dsxx = 2.0 * omega * sxp - 4.0 * gamma * sxp * sxp + gamma
        dspp = 2.0 * omega * (1.0 - 0.5 * r_sq) * sxp - 4.0 * h * sxp - 4.0 * gamma * spp * spp
        dsxp = omega * spp - (omega * r_sq + 2.0 * h) * sxx - 4.0 * gamma * sxp * spp
        return (dmx, dmp, dsxx, dspp, dsxp)

    y = (x0, p0, 0.5, 0.5, 0.0)
    times, series = [], []
    step = 0
    blew_up = False
    while step < n_steps:
        if step % stride == 0:
            times.append(step * dt)
            series.append(y)
        k1 = drift(y)
        k2 = drift(tuple(a + 0.5 * dt * b for a, b in zip(y, k1)))
        k3 = drift(tuple(a + 0.5 * dt * b for a, b in zip(y, k2)))
        k4 = drift(tuple(a + dt * b for a, b in zip(y, k3)))
        y = tuple(
            a + (dt / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
            for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
        )
        if not all(math.isfinite(v) and abs(v) < 1e12 for v in y):
            blew_up = True
            break
        step += 1
    if not blew_up:
        times.append(n_steps * dt)
        series.append(y)
    arr = np.asarray(series)
    run = FockRun(
        times=np.asarray(times),
        mean_x=arr[:, 0], mean_p=arr[:, 1],
        s_xx=arr[:, 2], s_pp=arr[:, 3], s_xp=arr[:, 4],
        leak_max=0.0, dt=dt,
    )
    run.blew_up = blew_up
    return run


def bracket_report(
    n_max: int = 40,
    omega: float = 1.0,
    r_sq: float = 1.0,
    j_coupling: float = 0.0,
    alpha: float = 1.0,
    gamma: float = 0.5,
    t_max: float = 5.0,
    snap_dt: float = 0.05,
) -> dict:
    """Which s_pp bracket tracks the exact oracle: report both deviations.

    Run on a quadratic Hamiltonian (the default), the closure is exact,
    so the deviation isolates the bracket choice.  The production
    equations use the Hamiltonian-consistent bracket; the published-form
    alternative is integrated locally for comparison.  A divergent
    alternative is reported with deviation inf.
    """
    sg = SineGordonParams(j_coupling, alpha) if j_coupling else None
    spec = FockSpec(n_max=n_max)
    exact = sg_oracle_run(spec, omega, r_sq, sg, gamma, t_max, snap_dt)
    production = gaussian_single_site_run(omega, r_sq, sg, gamma, t_max, snap_dt)
    dev_prod = max(_series_devs(exact, production).values())

    alt = _single_site_printed_bracket_run(omega, r_sq, sg, gamma, t_max, snap_dt, 0.0, 0.0)
    if getattr(alt, "blew_up", False) or len(alt.times) != len(exact.times):
        dev_alt = math.inf
    else:
        dev_alt = max(_series_devs(exact, alt).values())

    selected = "hamiltonian-consistent" if dev_prod <= dev_alt else "as-printed"
    return {
        "selected": selected,
        "dev_hamiltonian_consistent": dev_prod,
        "dev_as_printed": dev_alt,
        "leak_max": exact.leak_max,
    }
