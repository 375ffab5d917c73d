#!/usr/bin/env python3
"""Half-chain entanglement of the monitored free chain across system sizes.

Runs the deterministic moment dynamics to its steady state in mode space
for a few chain lengths, then fits the half-chain logarithmic negativity
against ln(N).  A positive slope is the logarithmic growth regime; the
interacting chain in its massive phase would flatten this to an area law
(see sine_gordon_transition.py).
"""

import numpy as np

from mbchain import (ChainParams, GaussianState, evolve_modes, fit_log_scaling,
                     half_chain_subset, log_negativity)
from mbchain.steady import circulant_from_modes

GAMMA = 1.0
SIZES = [32, 64, 128, 256]


def main():
    values = []
    for n in SIZES:
        chain = ChainParams(n, omega=1.0)
        res = evolve_modes(chain, GAMMA, t_max=40000.0, steady_tol=1e-9)
        if not res.steady:
            raise SystemExit(f"N={n} did not reach a steady state")
        state = GaussianState(
            mean_x=np.zeros(n),
            mean_p=np.zeros(n),
            s_xx=circulant_from_modes(res.sigma_xx_q),
            s_pp=circulant_from_modes(res.sigma_pp_q),
            s_xp=circulant_from_modes(res.sigma_xp_q),
        )
        ln = log_negativity(state, half_chain_subset(n)).log_neg
        values.append(ln)
        print(f"N={n:4d}  steady by t={res.steady_time:8.1f}  log_neg={ln:.6f}")

    fit = fit_log_scaling(SIZES, values)
    print(f"\nlog_neg ~ c ln(N) + b with c={fit.c:.4f}, b={fit.intercept:.4f}, "
          f"R^2={fit.r_squared:.6f}")


if __name__ == "__main__":
    main()
