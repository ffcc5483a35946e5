#!/usr/bin/env python3
"""Quick tour of the constraint-set catalog.

Prints, for a selection of stock entries: the duality partner (when it is
itself a stock entry), the Riesz characteristic of the associated cone, and
a sampled axiom check.  Finishes with the hyperbolic-polynomial engine on
sigma_2, showing the branch eigenvalues at a signature (+,+,-) matrix.

Usage:  python3 scripts/catalog_tour.py [trials]
"""

import sys

import numpy as np

from subeq import parse_name
from subeq.catalog import dual_name
from subeq.core import axiom_check
from subeq.riesz import riesz_characteristic
from subeq.garding import named_polynomial, garding_eigenvalues

TRIALS = int(sys.argv[1]) if len(sys.argv) > 1 else 2000

NAMES = [
    "laplace:n=3",
    "branch:real:k=1:n=3",
    "branch:real:k=2:n=3",
    "branch:complex:k=1:n=2",
    "pucci:lam=1:Lam=2:n=3",
    "pcone:p=2.5:n=4",
    "delta:d=1:n=3",
    "slag:c=0:n=2",
    "klap:k=inf:n=2",
]

print(f"{'name':28s} {'dual':28s} {'riesz p':>10s} {'axioms P/N':>12s}")
print("-" * 82)
for name in NAMES:
    F = parse_name(name)
    dn = dual_name(name) or "(not stock)"
    if F.cone and F.reduced:
        res = riesz_characteristic(F)
        riesz = "inf" if res.unbounded else f"{res.p:.4f}"
    else:
        riesz = "-"
    verdicts = []
    for ax in ("P", "N"):
        rep = axiom_check(F, ax, trials=TRIALS, seed=1)
        verdicts.append("ok" if rep.violations == 0 else f"{rep.violations}!")
    print(f"{name:28s} {dn:28s} {riesz:>10s} {'/'.join(verdicts):>12s}")

print()
Q = named_polynomial("sigma:2", 3)
A = np.diag([1.0, 1.0, -1.0])
eigs = garding_eigenvalues(Q, A)
print(f"sigma_2 (n=3) at diag(1,1,-1): branch eigenvalues {eigs.round(12).tolist()}")
print("restriction: 3 Q(tI+A) = (3t - 1)(t + 1), so the exact values are -1/3 and 1")
