"""Batch command-line interface: ``helios <subcommand> ...``.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from helios import dataset as ds
from helios.errors import HeliosError
from helios.io_utils import atomic_write_text
from helios.mlp import forward, load_model, save_model
from helios.mpp import MppConfig, batch_mpp_csv, find_mpp
from helios.pv_model import EnvConditions, load_params, sweep_iv
from helios.sim import (
    CONTROLLER_KINDS,
    ControllerConfig,
    Scenario,
    compare,
    load_scenario,
    run_simulation,
    scenario_controllers,
)
from helios.trainer import TrainConfig, evaluate, train

log = logging.getLogger("helios")

FORMATS = """\
file formats:
  module params  JSON object with ModuleParams field names (see data/module_params.json)
  conditions     CSV  t_C,g_Wm2
  mpp batch out  CSV  t_C,g_Wm2,v_mp_V,i_mp_A,p_max_W
  I-V sweep      CSV  v_V,i_A,p_W
  dataset        CSV  T_degC,G_Wm2,Imp_A (17 significant digits)
  split          <stem>.train.csv, <stem>.val.csv, <stem>.test.csv, <stem>.manifest.json
  model          JSON {version, w_hidden, b_hidden, w_out, b_out, norm:{t,g,imp}}
  history        CSV  epoch,mse_train,mse_val,alpha,beta,gamma
  histogram      CSV  bin_lo,bin_hi,count
  scenario       JSON {control_period_s, duration_s?, samples:[{t_s,T_degC,G_Wm2}], controllers?}
                 or CSV t_s,T_degC,G_Wm2
  trace          CSV  t_s,v_V,i_A,p_W,p_mpp_W,v_ref_V
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(text: str, out: str | None):
    if out:
        atomic_write_text(out, text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def _params(args):
    return load_params(args.params or os.environ.get("HELIOS_PARAMS") or None)


def _require(*paths):
    for p in paths:
        if p is not None and not Path(p).exists():
            raise UsageError(f"input file not found: {p}")


def cmd_sweep(args):
    params = _params(args)
    env = EnvConditions.from_celsius(args.t, args.g)
    curve = sweep_iv(params, env, args.v_max or params.voc_ref, args.points)
    _emit(curve.to_csv(), args.out)
    if args.gnuplot and args.out:
        script = (
            "set datafile separator ','\nset key autotitle columnhead\n"
            f"set multiplot layout 1,2\nplot '{Path(args.out).name}' using 1:2 with lines\n"
            f"plot '{Path(args.out).name}' using 1:3 with lines\nunset multiplot\n"
        )
        atomic_write_text(Path(args.out).with_suffix(".gp"), script)
    mpp = curve.max_power_point()
    log.info("sweep max: V=%.4f V, I=%.4f A, P=%.4f W", mpp.v, mpp.i, mpp.p)


def cmd_mpp(args):
    params = _params(args)
    cfg = MppConfig(v_tol=args.v_tol)
    if args.batch:
        _require(args.batch)
        _emit(batch_mpp_csv(params, Path(args.batch).read_text(), cfg), args.out)
        return
    if args.t is None or args.g is None:
        raise UsageError("mpp needs --t and --g, or --batch FILE")
    r = find_mpp(params, EnvConditions.from_celsius(args.t, args.g), cfg)
    payload = {"t_C": args.t, "g_Wm2": args.g, "v_mp_V": r.v_mp, "i_mp_A": r.i_mp, "p_max_W": r.p_max}
    _emit(json.dumps(payload) + "\n", args.out)


def _grid_values(args):
    t_values = np.arange(args.t_min, args.t_max + 0.5 * args.t_step, args.t_step)
    g_values = np.linspace(args.g_min, args.g_max, args.g_count)
    return t_values, g_values


def cmd_dataset(args):
    params = _params(args)
    if args.dataset_cmd == "gen":
        t_values, g_values = _grid_values(args)
        data = ds.generate_grid(params, t_values, g_values)
        ds.export_dataset(data, args.out)
        print(f"{len(data)} rows -> {args.out}")
    elif args.dataset_cmd == "split":
        _require(args.data)
        split = ds.shuffle_split(ds.import_dataset(args.data), args.seed, tuple(args.fractions))
        manifest = ds.export_split(split, args.out_stem, params)
        print(f"sizes {split.sizes()} -> {manifest}")
    elif args.dataset_cmd == "noise":
        _require(args.data)
        noisy = ds.add_awgn(ds.import_dataset(args.data), args.sigma_t, args.sigma_g, args.seed)
        ds.export_dataset(noisy, args.out)
        print(f"{len(noisy)} noisy rows -> {args.out}")


def _load_split(args, params):
    if args.split:
        _require(args.split + ".manifest.json")
        return ds.import_split(args.split)
    if args.data:
        _require(args.data)
        data = ds.import_dataset(args.data)
    else:
        data = ds.generate_grid(params)
    return ds.shuffle_split(data, args.seed)


def cmd_train(args):
    params = _params(args)
    split = _load_split(args, params)
    cfg = TrainConfig(
        algorithm=args.algorithm,
        max_epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        hidden_width=args.hidden,
    )
    model, report = train(split, cfg)
    out = Path(args.out_dir)
    save_model(model, out / "model.json")
    atomic_write_text(out / "report.json", report.to_json())
    atomic_write_text(out / "history.csv", report.history_csv())
    print(
        f"{cfg.algorithm}: {report.epochs_run} epochs ({report.stop_reason}); "
        f"MSE train/val/test = {report.mse_train:.3e}/{report.mse_validation:.3e}/{report.mse_test:.3e} A^2"
    )


def cmd_eval(args):
    _require(args.model, args.data)
    model = load_model(args.model)
    ev = evaluate(model, ds.import_dataset(args.data))
    out = Path(args.out_dir)
    atomic_write_text(out / "histogram.csv", ev.histogram.to_csv())
    atomic_write_text(
        out / "metrics.json",
        json.dumps({"mse_A2": ev.mse, "r": ev.r, "bin_width": ev.histogram.bin_width}, indent=2) + "\n",
    )
    print(f"MSE={ev.mse:.4e} A^2  R={ev.r:.6f}  bin width={ev.histogram.bin_width:.5g}")


def cmd_predict(args):
    _require(args.model)
    print(f"{forward(load_model(args.model), args.t, args.g):.6f}")


def _scenario(args):
    if args.scenario:
        _require(args.scenario)
        return load_scenario(args.scenario)
    if args.preset == "step":
        return Scenario.step(duration=args.duration)
    return Scenario.constant(duration=args.duration)


def cmd_simulate(args):
    params = _params(args)
    _require(args.model)
    model = load_model(args.model) if args.model else None
    res = run_simulation(params, _scenario(args), ControllerConfig(args.controller, step_v=args.step_v), model)
    if args.out:
        atomic_write_text(args.out, res.trace_csv())
    print(f"{res.controller} on {res.scenario}: efficiency {100 * res.efficiency:.4f}%")


def cmd_compare(args):
    params = _params(args)
    _require(args.model)
    model = load_model(args.model) if args.model else None
    controllers = scenario_controllers(args.scenario) if args.scenario else []
    if not controllers:
        controllers = [ControllerConfig(k.strip(), step_v=args.step_v) for k in args.controllers.split(",")]
    report = compare(params, _scenario(args), controllers, model)
    if args.out:
        atomic_write_text(args.out, report.to_json())
    print(report.table())
    if report.errors:
        return 1


def cmd_reproduce(args):
    from helios.acceptance import run_all

    outcomes = run_all(_params(args), seed=args.seed)
    for o in outcomes:
        print(o.line())
    if args.out:
        rows = [o.__dict__ for o in outcomes]
        atomic_write_text(args.out, json.dumps(rows, indent=2) + "\n")
    return 0 if all(o.passed for o in outcomes) else 1


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--params", help="module params JSON (default: $HELIOS_PARAMS or bundled datasheet defaults)")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    def sub(name, help_):
        return subs.add_parser(
            name, parents=[common], help=help_, description=help_, epilog=FORMATS,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    parser = _Parser(prog="helios", description="PV model, MPP oracle and neural MPPT toolkit", epilog=FORMATS,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub("sweep", "I-V / P-V sweep as CSV")
    p.add_argument("--t", type=float, default=25.0, help="temperature (degC)")
    p.add_argument("--g", type=float, default=1000.0, help="irradiance (W/m2)")
    p.add_argument("--v-max", type=float, help="sweep end voltage (default voc_ref)")
    p.add_argument("--points", type=int, default=330)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--gnuplot", action="store_true", help="also write a .gp plot script next to --out")
    p.set_defaults(func=cmd_sweep)

    p = sub("mpp", "maximum power point for one condition or a CSV batch")
    p.add_argument("--t", type=float, help="temperature (degC)")
    p.add_argument("--g", type=float, help="irradiance (W/m2)")
    p.add_argument("--batch", help="CSV with header t_C,g_Wm2")
    p.add_argument("--v-tol", type=float, default=1e-4, help="golden-section voltage tolerance (V)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mpp)

    p = sub("dataset", "generate, split or perturb the training corpus")
    dsubs = p.add_subparsers(dest="dataset_cmd", required=True, parser_class=_Parser)
    g = dsubs.add_parser("gen", parents=[common], help="grid of MPP currents", epilog=FORMATS,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    g.add_argument("--t-min", type=float, default=15.0)
    g.add_argument("--t-max", type=float, default=40.0)
    g.add_argument("--t-step", type=float, default=1.0)
    g.add_argument("--g-min", type=float, default=200.0)
    g.add_argument("--g-max", type=float, default=1090.0)
    g.add_argument("--g-count", type=int, default=50)
    g.add_argument("--out", default="dataset.csv")
    g = dsubs.add_parser("split", parents=[common], help="seeded train/val/test split", epilog=FORMATS,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    g.add_argument("--data", required=True)
    g.add_argument("--fractions", type=float, nargs=3, default=list(ds.DEFAULT_FRACTIONS))
    g.add_argument("--out-stem", default="split")
    g = dsubs.add_parser("noise", parents=[common], help="Gaussian noise on T and G inputs", epilog=FORMATS,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    g.add_argument("--data", required=True)
    g.add_argument("--sigma-t", type=float, default=0.5)
    g.add_argument("--sigma-g", type=float, default=10.0)
    g.add_argument("--out", default="dataset.noisy.csv")
    p.set_defaults(func=cmd_dataset)

    p = sub("train", "train the I_mp network")
    p.add_argument("--split", help="split stem written by 'dataset split'")
    p.add_argument("--data", help="dataset CSV to split with --seed (default: regenerate the grid)")
    p.add_argument("--algorithm", choices=["bayesian_lm", "adam"], default="bayesian_lm")
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--lr", type=float, default=0.001, help="Adam learning rate")
    p.add_argument("--hidden", type=int, default=15, help="hidden width")
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_train)

    p = sub("eval", "MSE, error histogram and regression R on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_eval)

    p = sub("predict", "predict I_mp for one (T, G)")
    p.add_argument("--model", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--g", type=float, required=True)
    p.set_defaults(func=cmd_predict)

    for name, help_, func in (
        ("simulate", "closed-loop run of one controller", cmd_simulate),
        ("compare", "rank several controllers on one scenario", cmd_compare),
    ):
        p = sub(name, help_)
        p.add_argument("--scenario", help="scenario JSON or CSV")
        p.add_argument("--preset", choices=["constant", "step"], default="constant")
        p.add_argument("--duration", type=float, default=300.0, help="preset duration (s)")
        p.add_argument("--model", help="model JSON (required for the nn controller)")
        p.add_argument("--step-v", type=float, default=0.2, help="hill-climber step (V)")
        p.add_argument("--out")
        if name == "simulate":
            p.add_argument("--controller", choices=CONTROLLER_KINDS, default="nn")
        else:
            p.add_argument("--controllers", default="nn,po,ic,focv", help="comma-separated controller kinds")
        p.set_defaults(func=func)

    p = sub("reproduce", "run the acceptance criteria end-to-end")
    p.add_argument("--out", help="JSON file for the pass/fail table")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
        rc = args.func(args)
        return rc or 0
    except UsageError as exc:
        print(f"helios: usage error: {exc}", file=sys.stderr)
        return 2
    except (HeliosError, ValueError, OSError) as exc:
        print(f"helios: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
