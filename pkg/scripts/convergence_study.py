#!/usr/bin/env python3
"""Refinement study for u = sin(pi x) sin(pi y) with K = I, beta = (1, 1), c = 1.

    python3 scripts/convergence_study.py --k 1 --family quad --levels 8 16 32 64 --out results/
"""
import argparse
import logging
from pathlib import Path

import numpy as np

from ncvem.forms import CoefficientField
from ncvem.meshgen import FAMILIES
from ncvem.postproc import ManufacturedProblem, convergence_study

PI = np.pi


def u(x, y):
    return np.sin(PI * x) * np.sin(PI * y)


def ux(x, y):
    return PI * np.cos(PI * x) * np.sin(PI * y)


def uy(x, y):
    return PI * np.sin(PI * x) * np.cos(PI * y)


def f(x, y):
    # -Delta u + beta . grad u + c u
    return 2 * PI ** 2 * u(x, y) + ux(x, y) + uy(x, y) + u(x, y)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--family", choices=FAMILIES, default="quad")
    p.add_argument("--levels", type=int, nargs="+", default=[8, 16, 32, 64])
    p.add_argument("--coercivity", action="store_true", help="also record the generalized min eigenvalue per level")
    p.add_argument("--out", default="results")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    problem = ManufacturedProblem(CoefficientField.constant(1.0, beta=(1.0, 1.0), c=1.0), f, 0.0, u, ux, uy)
    table = convergence_study(problem, args.family, args.levels, args.k, coercivity=args.coercivity)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"convergence_{args.family}_k{args.k}"
    (out / f"{stem}.csv").write_text(table.to_csv(), encoding="utf-8")
    (out / f"{stem}.json").write_text(table.to_json() + "\n", encoding="utf-8")
    print(table.to_csv(), end="")
    print(f"LS slope (last 3): H1 {table.slope('h1'):.3f}, L2 {table.slope('l2'):.3f}")


if __name__ == "__main__":
    main()
