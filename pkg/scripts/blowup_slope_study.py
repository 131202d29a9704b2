"""Energy of the concentrating family u^lambda against log lambda across rho.

The fitted slope is compared with Lambda_{1,x}(rho) / (4 pi) for the scalar equation,
both at a regular point and at a cone point.
"""

import argparse
import math

from liouville import SingularModel, SingularSource, TorusGrid
from liouville.probes import blowup_slope

EIGHT_PI = 8 * math.pi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=512)
    args = ap.parse_args()

    grid = TorusGrid(args.n)
    lambdas = [l for l in (8, 16, 32, 64) if l <= args.n / 8]
    cases = [
        ("regular point", SingularModel([[1.0]], grid), (0.5, 0.5), 1.0),
        ("cone alpha=-0.5", SingularModel([[1.0]], grid, [SingularSource((0.5, 0.5), [-0.5])]), (0.5, 0.5), 0.5),
    ]
    for label, model, x, scale in cases:
        print(label)
        for f in (0.5, 0.9, 1.1, 1.5, 2.0):
            rho = f * EIGHT_PI * scale
            fit, _, lam = blowup_slope(model, [rho], [0], x, lambdas)
            print(f"  rho = {f:.1f} rho0: slope {fit.slope:+9.4f}  Lambda/(4 pi) {fit.expected:+9.4f}  "
                  f"rel err {fit.relative_error:6.2%}")


if __name__ == "__main__":
    main()
