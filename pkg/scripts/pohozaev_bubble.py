"""Concentration mass and Pohozaev residual of a transplanted planar bubble versus lambda and n."""

import argparse
import math

from liouville import SingularModel, TorusGrid
from liouville.probes import estimate_sigma, synthetic_bubble

EIGHT_PI = 8 * math.pi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grids", type=int, nargs="+", default=[256, 512, 1024])
    args = ap.parse_args()
    for n in args.grids:
        grid = TorusGrid(n)
        model = SingularModel([[1.0]], grid)
        for lam in (16, 32, 64):
            if lam > n / 8:
                continue
            rep = estimate_sigma(model, [EIGHT_PI], synthetic_bubble(grid, (0.5, 0.5), lam), (0.5, 0.5))
            print(f"n={n:5d} lambda={lam:3d} sigma/8pi={rep.sigma[0] / EIGHT_PI:.4f} "
                  f"plateau={rep.converged[0]} residual/(8pi)^2={rep.pohozaev_residual / EIGHT_PI**2:+.4f}")


if __name__ == "__main__":
    main()
