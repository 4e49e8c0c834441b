"""PF, DPF and LA-DPF side by side on a small particle grid.

Every algorithm sees the same trajectories and filter seeds, and the PF is given
N_x(N_z + 1) particles so its cost is comparable. Writes a long-format CSV.

    python demos/particle_sweep.py --runs 20 --out sweep.csv
"""

import argparse

from nestedpf import compare_suite, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--model", default="model1")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    cfg = load_config(model=args.model, T=250, runs=args.runs, lookahead_match=True, out=args.out)
    res = compare_suite(cfg, grid=[[10, 9], [20, 9], [20, 19]])
    for a in res.summary:
        print(f"{a.algorithm:6s} ({a.n_x:3d},{a.n_z:3d}) {a.component}: mean rmse {a.rmse_mean_all:.4f}, "
              f"diverged {a.diverged_runs}/{a.runs}")


if __name__ == "__main__":
    main()
