"""Phase diagram of the Toda system: Lambda(rho) on a rho grid, regular and with one cone point.

Writes ``toda_phase.csv`` with columns alpha, rho_0, rho_1, lambda, classification.
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from liouville import SingularModel, SingularSource, TorusGrid, lambda_min, rho_critical


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--num", type=int, default=41)
    ap.add_argument("--rho-max", type=float, default=24.0)
    ap.add_argument("--out", type=Path, default=Path("out/scripts"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    grid = TorusGrid(32)
    A = [[2.0, -1.0], [-1.0, 2.0]]
    axis = np.linspace(0.5, args.rho_max, args.num)
    rows = []
    for alpha in (0.0, -0.5):
        sources = [SingularSource((0.5, 0.5), [alpha, 0.0])] if alpha else []
        model = SingularModel(A, grid, sources)
        rho0 = rho_critical(model)
        counts = {}
        for r0 in axis:
            for r1 in axis:
                rep = lambda_min(model, [r0, r1])
                rows.append([alpha, r0, r1, rep.value, rep.classification])
                counts[rep.classification] = counts.get(rep.classification, 0) + 1
        print(f"alpha_0 = {alpha:+.1f}: rho0 = ({rho0[0] / math.pi:.3f} pi, {rho0[1] / math.pi:.3f} pi); {counts}")
    with open(args.out / "toda_phase.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "rho_0", "rho_1", "lambda", "classification"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
