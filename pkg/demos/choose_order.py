"""Let Hedge or Exp3 pick which state group is sampled first.

Prints the probability of each ordering every 100 steps, the fixed-order RMSEs and
the RMSE of following the bandit. With --change-point the two transition equations
are exchanged mid-run and the RMSEs cover the post-change window.

    python demos/choose_order.py --mode exp3 --steps 600
    python demos/choose_order.py --mode exp3 --steps 1600 --change-point 600
"""

import argparse

import numpy as np

from nestedpf import bandit_demo, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mode", choices=["hedge", "exp3"], default="hedge")
    ap.add_argument("--steps", type=int, default=600)
    ap.add_argument("--change-point", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = load_config(model="model1", bandit_mode=args.mode, bandit_filter="dpf", n_x=20, n_z=10,
                      T=args.steps, change_point=args.change_point, runs=1, seed=args.seed)
    b = bandit_demo(cfg)[0]
    for t in range(0, len(b.p), 100):
        print(f"t={t:5d}  p(x first)={b.p[t, 0]:.3f}  p(z first)={b.p[t, 1]:.3f}")
    print("window", b.window)
    print("rmse x first", np.round(b.rmse_actions[0], 4), " z first", np.round(b.rmse_actions[1], 4),
          " bandit", np.round(b.rmse_bandit, 4))
    if args.change_point is not None:
        print("leading order lost its majority at t =", b.switch_step)


if __name__ == "__main__":
    main()
