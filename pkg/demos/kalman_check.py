"""All three filters against the exact Kalman mean on a linear-Gaussian model.

Error is |filter mean - Kalman mean| in units of the trajectory's state std,
time-averaged (root mean square) and then averaged over seeds.

    python demos/kalman_check.py --runs 5
"""

import argparse

from nestedpf import load_config, oracle_check


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--steps", type=int, default=100)
    args = ap.parse_args()

    res = oracle_check(load_config(runs=args.runs, T=args.steps, oracle_totals=[100, 1000, 10000]))
    for a, by_n in res.errors.items():
        for n in by_n:
            x, z = res.mean_error(a, n)
            print(f"{a:6s} N={n:6d}  x {x:.4f}  z {z:.4f}")


if __name__ == "__main__":
    main()
