"""Evolve Gaussian data of increasing amplitude and report blow-up time or decay."""

import argparse

from mixedheat.grid import GridSpec
from mixedheat.nonlinearity import Constant, Power
from mixedheat.solver import EvolutionConfig, GaussianData, evolve


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--amplitudes", type=float, nargs="+", default=[0.01, 0.1, 1.0, 10.0, 40.0])
    ap.add_argument("--T", type=float, default=100.0)
    args = ap.parse_args()

    # wide box so the small-data runs stay clear of the periodic images
    grid = GridSpec(1, 2**15, 2.0**11)
    print(f"{'A':>8} {'status':>15} {'t_estimate':>14} {'final sup':>12} {'steps':>7}")
    for a in args.amplitudes:
        cfg = EvolutionConfig(grid, args.sigma, Power(args.p), Constant(1.0), GaussianData(a), T=args.T, dt_init=0.5)
        tr = evolve(cfg)
        t_est = "-" if tr.t_estimate is None else f"{tr.t_estimate:.6g}"
        print(f"{a:8g} {str(tr.status):>15} {t_est:>14} {tr.sup_norm[-1]:12.4e} {tr.times.size - 1:7d}")


if __name__ == "__main__":
    main()
