"""Bifurcation values of the reduced FHN flow.

    python3 scripts/fhn_bifurcations.py [--no-snc]
"""
import argparse
import time

from mfexcite import bifurcation as bif
from mfexcite.models import CouplingSpec, make_model


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--no-snc", action="store_true", help="skip the simulated bisections")
    args = ap.parse_args()

    rows = [
        ("hopf, excitable, upper", bif.hopf_locus_fhn(1 / 3, 1.0, 10.0, (0.8, 0.95))),
        ("hopf, excitable, lower", bif.hopf_locus_fhn(1 / 3, 1.0, 10.0, (0.2, 0.4))),
        ("hopf, bistable, nontrivial", bif.hopf_locus_fhn(0.0, 1.45, 10.0, (0.9, 1.0),
                                                          branch="nontrivial")),
        ("hopf, bistable, trivial", bif.hopf_locus_fhn(0.0, 1.45, 10.0, (0.0, 0.5),
                                                       branch="trivial")),
        ("pitchfork, b = 1.45", bif.pitchfork_locus_fhn(1.45)),
    ]
    if not args.no_snc:
        c = CouplingSpec.noiseless((1, 1), 1.0)
        t = time.perf_counter()
        ex = bif.snc_bisection(make_model("fhn", dict(u=0.9, a=1 / 3, b=1.0, tau=10.0)), c,
                               (0.89, 0.93), (3.0, 0.0))
        bs = bif.snc_bisection(make_model("fhn", dict(u=0.98, a=0.0, b=1.45, tau=10.0)), c,
                               (0.97, 1.0), (3.0, 0.0), center=(0.0, 0.0))
        rows += [("cycle fold, excitable", ex), ("cycle fold, bistable", bs)]
        print(f"bisections: {time.perf_counter() - t:.1f} s")
    for name, pt in rows:
        print(f"{name:28s} u = {pt.value:.6f}  (+- {pt.tolerance:.1e}, {pt.method})")


if __name__ == "__main__":
    main()
