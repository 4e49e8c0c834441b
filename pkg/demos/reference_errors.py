"""Decentralized filter on the nonlinear benchmark, Monte Carlo vs Gaussian marginals.

Runs a handful of replicates at the reference particle counts and prints mean RMSE
per component for both ways of evaluating the outer marginal likelihood.

    python demos/reference_errors.py --runs 10
"""

import argparse

from nestedpf import load_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    for mode in ("monte_carlo", "gaussian"):
        cfg = load_config(model="model1", algorithm="dpf", n_x=100, n_z=19, T=250,
                          runs=args.runs, seed=args.seed, marginal_mode=mode)
        res = run_experiment(cfg)
        errs = res.rmse_matrix("dpf", 100, 19).mean(axis=0)
        secs = sum(r.wall_time for r in res.records) / len(res.records)
        print(f"{mode:12s} rmse x={errs[0]:.4f} z={errs[1]:.4f}  ({secs:.2f} s per run)")


if __name__ == "__main__":
    main()
