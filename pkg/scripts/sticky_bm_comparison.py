"""Compare the scalar sticky BM steppers with the time-change construction.

Prints terminal-value quantiles, the fraction of time at zero, and a KS test
of each stepper against the time-change sample.

    python3 scripts/sticky_bm_comparison.py --paths 4000 --dt 1e-4 --lam 1.0
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from stickyheat.diagnostics import ks_two_sample, occupation_time
from stickyheat.dynamics import SchemeParams, simulate_srbm, srbm_time_change_ensemble
from stickyheat.noise import SeedPolicy


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=4000)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--epsilon", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    paths = np.arange(args.paths)
    delta = 2 * math.sqrt(args.dt)
    samples = {
        "time change": srbm_time_change_ensemble(args.lam, args.sigma, 0.0, args.T, args.dt,
                                                 SeedPolicy(args.seed + 1), paths).states[..., 0],
        "hard, carried deficit": simulate_srbm(args.lam, args.sigma, 0.0, args.T, SchemeParams(args.dt),
                                               SeedPolicy(args.seed), paths).states[..., 0],
        "hard, memoryless clamp": simulate_srbm(args.lam, args.sigma, 0.0, args.T,
                                                SchemeParams(args.dt, carry_deficit=False),
                                                SeedPolicy(args.seed), paths).states[..., 0],
        f"regularized eps={args.epsilon}": simulate_srbm(args.lam, args.sigma, 0.0, args.T,
                                                         SchemeParams(args.dt, epsilon=args.epsilon),
                                                         SeedPolicy(args.seed), paths,
                                                         scheme="regularized").states[..., 0],
    }
    ref = samples["time change"][:, -1]
    print(f"{'scheme':28s} {'q25':>7s} {'q50':>7s} {'q75':>7s} {'occ':>7s} {'KS p':>8s}")
    for name, s in samples.items():
        q = np.quantile(s[:, -1], [0.25, 0.5, 0.75])
        occ = occupation_time(s, delta, args.dt).mean() / args.T
        p = ks_two_sample(s[:, -1], ref)[1] if name != "time change" else float("nan")
        print(f"{name:28s} {q[0]:7.4f} {q[1]:7.4f} {q[2]:7.4f} {occ:7.4f} {p:8.3g}")


if __name__ == "__main__":
    main()
