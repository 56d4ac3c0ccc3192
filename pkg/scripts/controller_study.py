"""Train the default network, then rank every controller on both presets.

Also sweeps the hill-climber step size to show how P&O and IC efficiency
trade oscillation against tracking speed.
"""

import argparse

from helios.dataset import generate_grid, shuffle_split
from helios.pv_model import load_params
from helios.sim import ControllerConfig, Scenario, compare, run_simulation
from helios.trainer import TrainConfig, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--steps", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.5, 1.0])
    args = ap.parse_args()

    params = load_params()
    model, report = train(shuffle_split(generate_grid(params), args.seed), TrainConfig(seed=args.seed))
    print(f"trained: test MSE {report.mse_test:.3e} A^2 after {report.epochs_run} epochs\n")

    for scenario in (Scenario.constant(), Scenario.step()):
        print(compare(params, scenario, ["nn", "po", "ic", "focv", "perfect"], model).table(), "\n")

    print(f"{'step_v':>7} {'P&O':>9} {'IC':>9}   (step scenario)")
    for step in args.steps:
        eff = [
            run_simulation(params, Scenario.step(), ControllerConfig(kind, step_v=step)).efficiency
            for kind in ("po", "ic")
        ]
        print(f"{step:7.2f} {100 * eff[0]:8.3f}% {100 * eff[1]:8.3f}%")


if __name__ == "__main__":
    main()
