"""Fujita thresholds by bisection next to the closed forms where one exists."""

import argparse

from mixedheat.criterion import fujita_threshold
from mixedheat.nonlinearity import Constant, LogPower, Power, PowerT


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--sigma", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    args = ap.parse_args()

    cases = [("u^p", Power(2.0), Constant(1.0)), ("u^p, h=t", Power(2.0), PowerT(1.0)), ("log-power, h=t", LogPower(2.0), PowerT(1.0))]
    print(f"{'family':>16} {'d':>2} {'sigma':>6} {'closed':>9} {'bisection':>10}")
    for name, f, h in cases:
        for d in args.d:
            for sigma in args.sigma:
                r = fujita_threshold(f, h, d, sigma, bracket=(1.001, 12.0))
                closed = "-" if r.p_F_closed is None else f"{r.p_F_closed:.4f}"
                num = "-" if r.p_F_numeric is None else f"{r.p_F_numeric:.4f}"
                print(f"{name:>16} {d:2d} {sigma:6g} {closed:>9} {num:>10}")


if __name__ == "__main__":
    main()
