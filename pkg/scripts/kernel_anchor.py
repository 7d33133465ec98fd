"""Compare the computed kernel against the Gaussian-Poisson closed forms at sigma = 1/2."""

import argparse

import numpy as np

from mixedheat.grid import GridSpec
from mixedheat.kernel import fractional_factor, kernel_convolution_form, kernel_from_symbol


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2**16)
    ap.add_argument("--L", type=float, default=2000.0)
    ap.add_argument("--times", type=float, nargs="+", default=[0.1, 1.0, 10.0])
    args = ap.parse_args()

    # H alone is not band-limited: its gap stays large unless the spacing is well below t
    grid = GridSpec(1, args.n, args.L)
    x = grid.axis
    print(f"{'t':>6} {'|H - Poisson|':>14} {'|symbol - conv|':>16} {'peak':>20}")
    for t in args.times:
        poisson = t / (np.pi * (t**2 + x**2))
        e_h = np.max(np.abs(fractional_factor(grid, 0.5, t).values - poisson))
        a = kernel_from_symbol(grid, 0.5, t, wrap_tol=None).values.values
        b = kernel_convolution_form(grid, 0.5, t, wrap_tol=None).values.values
        print(f"{t:6g} {e_h:14.3e} {np.max(np.abs(a - b)):16.3e} {a.max():20.17g}")


if __name__ == "__main__":
    main()
