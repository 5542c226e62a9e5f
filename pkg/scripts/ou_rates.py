"""Decay rates of Hermite coefficients under the pure OU flow (delta = 0).

    python3 scripts/ou_rates.py --N 50000 --k 1 3
"""
import argparse

import numpy as np

from mfexcite import hermite as hm
from mfexcite.models import CouplingSpec, zero_model
from mfexcite.particles import InitLaw, SimConfig, run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=50_000)
    ap.add_argument("--k", type=float, nargs=2, default=[1.0, 3.0])
    ap.add_argument("--t-end", type=float, default=3.0)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    c = CouplingSpec(tuple(args.k), (1.0, 1.0), 0.0)
    Z = np.random.default_rng(args.seed).standard_normal((args.N, 2))
    x1 = 0.8 * (Z[:, 0] + 0.3 * (Z[:, 0] ** 2 - 1))
    x2 = (0.6 * Z[:, 0] + 0.8 * Z[:, 1] + 0.3 * (Z[:, 1] ** 2 - 1) + 0.2 * Z[:, 0] * Z[:, 1]) \
        / np.sqrt(3) * 0.8
    cfg = SimConfig(zero_model(2), c, args.N, 1e-3, args.t_end, record_every=20,
                    init=InitLaw("array", array=np.column_stack([x1, x2])),
                    hermite=(1.0, 3), record_cov=False, seed=args.seed)
    tr = run(cfg)
    print(f"{'l':8s} {'fitted':>8s} {'sum k l':>8s}")
    for l, r in hm.ou_decay_rates(tr.coeffs).items():
        fit = r if isinstance(r, str) else f"{r:8.3f}"
        print(f"{str(l):8s} {fit:>8s} {hm.ou_rate(l, c):8.1f}")


if __name__ == "__main__":
    main()
