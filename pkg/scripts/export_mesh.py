#!/usr/bin/env python3
"""Write a built-in mesh family to a poly2 file and print its regularity report.

    python3 scripts/export_mesh.py polygonal-dual 8 dual8.poly2
"""
import argparse

from ncvem.mesh import validate_mesh, write_poly2
from ncvem.meshgen import FAMILIES, builtin_mesh


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("n", type=int)
    p.add_argument("path")
    p.add_argument("--rho", type=float, default=0.1)
    args = p.parse_args()
    mesh = builtin_mesh(args.family, args.n)
    write_poly2(mesh, args.path)
    print(validate_mesh(mesh, args.rho).summary())


if __name__ == "__main__":
    main()
