"""Command-line interface: ``rffklms {run,theory,bench,approx,dump}``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from . import harness
from .analysis import predict_convergence
from .config import ConfigError, load_config, load_preset, preset_names
from .datagen import MODEL_KINDS, KernelExpansion, generate, write_stream_csv
from .exceptions import BoundViolationError, ConvergenceError
from .kernelcore import approximation_error, sample_feature_map


def _preset_help(prefix: str) -> str:
    return f"{prefix} (one of: {', '.join(preset_names())})"


def _add_config_source(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("config", nargs="?", help="path to a TOML experiment config")
    src.add_argument("--preset", metavar="NAME", choices=preset_names(),
                     help=_preset_help("use a bundled preset instead of a file"))


def _load(args) -> harness.ExperimentConfig:
    config = load_preset(args.preset) if args.preset else load_config(args.config)
    if getattr(args, "runs", None):
        config = dataclasses.replace(config, n_runs=args.runs)
    return config


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("feature dimensions must be positive integers")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rffklms",
        description="Random Fourier feature kernel LMS/RLS filters: experiments and theory.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("run", help="run a Monte Carlo experiment and write learning curves")
    _add_config_source(p)
    p.add_argument("--out", metavar="DIR", required=True, type=Path,
                   help="output directory for CSV curves and summary.json")
    p.add_argument("--runs", metavar="N", type=int, help="override the number of Monte Carlo runs")
    p.add_argument("--jobs", metavar="N", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--no-theory", action="store_true", help="skip the steady-state theory prediction")

    p = sub.add_parser("theory", help="steady-state theory for RFFKLMS on a kernel expansion")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH", help="TOML config with a kernel_expansion model")
    src.add_argument("--preset", metavar="NAME", choices=preset_names(),
                     help="bundled preset with a kernel_expansion model (example1_d*)")
    p.add_argument("--D", metavar="D", dest="feature_dim", type=int, default=100,
                   help="number of random features (default 100)")
    p.add_argument("--sigma", metavar="S", type=float, default=5.0, help="kernel bandwidth (default 5)")
    p.add_argument("--sigma-x", metavar="S", type=float, default=1.0, help="input standard deviation (default 1)")
    p.add_argument("--mu", metavar="MU", type=float, default=1.0, help="step size (default 1)")
    p.add_argument("--sigma-eta", metavar="S", type=float, default=0.1,
                   help="noise standard deviation (default 0.1)")
    p.add_argument("--input-dim", metavar="d", type=int, default=5, help="input dimension (default 5)")
    p.add_argument("--centers", metavar="M", type=int, default=10, help="number of expansion centers (default 10)")
    p.add_argument("--seed", metavar="SEED", type=int, default=1,
                   help="seed of the feature map and system (default 1)")
    p.add_argument("--out", metavar="PATH", type=Path, help="write the JSON report here instead of stdout")

    p = sub.add_parser("bench", help="time full training passes of every filter")
    _add_config_source(p)
    p.add_argument("--out", metavar="PATH", type=Path, help="write the JSON timings here instead of stdout")
    p.add_argument("--runs", metavar="N", type=int, help="override the number of timed runs")

    p = sub.add_parser("approx", help="kernel approximation error versus number of features")
    p.add_argument("--sigma", metavar="S", type=float, default=5.0, help="kernel bandwidth (default 5)")
    p.add_argument("--input-dim", metavar="d", type=int, default=5, help="input dimension (default 5)")
    p.add_argument("--D", metavar="LIST", dest="feature_dims", type=_int_list, default=[100, 400, 1600],
                   help="comma-separated feature counts (default 100,400,1600)")
    p.add_argument("--pairs", metavar="N", type=int, default=1000,
                   help="number of random input pairs (default 1000)")
    p.add_argument("--maps", metavar="N", type=int, default=20, help="independent maps averaged per D (default 20)")
    p.add_argument("--seed", metavar="SEED", type=int, default=0, help="seed (default 0)")
    p.add_argument("--out", metavar="PATH", type=Path, help="write CSV here instead of stdout")

    p = sub.add_parser("dump", help="write a synthetic data stream as CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", metavar="KIND", choices=sorted(MODEL_KINDS),
                     help=f"model family with default parameters (one of: {', '.join(sorted(MODEL_KINDS))})")
    src.add_argument("--preset", metavar="NAME", choices=preset_names(),
                     help=_preset_help("take the model from a bundled preset"))
    p.add_argument("--n", metavar="N", type=int, help="number of samples (default: the model's)")
    p.add_argument("--seed", metavar="SEED", type=int, default=0, help="seed (default 0)")
    p.add_argument("--out", metavar="PATH", type=Path, required=True, help="output CSV path")
    return parser


def cmd_run(args) -> int:
    config = _load(args)
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        curves = harness.monte_carlo(config, n_jobs=args.jobs)
    except harness.RunFailedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    theory = []
    if not args.no_theory:
        for fi in range(len(config.filters)):
            try:
                t = harness.theory_prediction(config, fi)
            except (BoundViolationError, ConvergenceError) as exc:
                print(f"warning: no theory line for {config.filters[fi].label}: {exc}", file=sys.stderr)
                t = None
            if t is not None:
                theory.append(t)
    for c in curves:
        harness.write_curve_csv(c, args.out / f"{c.label}.csv")
    summary = harness.summarize(config, curves, theory=theory)
    harness.write_summary_json(summary, args.out / "summary.json")
    for c in curves:
        line = f"{c.label}: steady-state MSE {c.steady_state:.6g} ({c.steady_state_db:.2f} dB)"
        if c.mean_dict_size is not None:
            line += f", mean dictionary size {c.mean_dict_size:.1f}"
        print(line)
    for t in theory:
        print(f"{t['label']}: predicted steady-state MSE {t['steady_state_mse']:.6g}")
    return 0


def cmd_theory(args) -> int:
    if args.config or args.preset:
        config = load_preset(args.preset) if args.preset else load_config(args.config)
        idx = [i for i, f in enumerate(config.filters) if f.algorithm == "rffklms"]
        if not isinstance(config.model, KernelExpansion) or not idx:
            print("error: theory needs a kernel_expansion model and an rffklms filter", file=sys.stderr)
            return 2
        try:
            report = harness.theory_prediction(config, idx[0])
        except (BoundViolationError, ConvergenceError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        report.pop("label")
    else:
        model = KernelExpansion(seed=args.seed, n_centers=args.centers, input_dim=args.input_dim,
                                sigma=args.sigma, sigma_x=args.sigma_x, sigma_eta=args.sigma_eta).resolve()
        fmap = sample_feature_map(args.input_dim, args.feature_dim, args.sigma, args.seed)
        try:
            pred = predict_convergence(fmap, args.sigma_x, args.mu, args.sigma_eta, model.centers, model.coeffs)
        except (BoundViolationError, ConvergenceError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        report = {
            "mu_max": pred.mu_max,
            "mu_max_variance": pred.mu_max_variance,
            "lambda_max": pred.lambda_max,
            "j_opt": pred.j_opt,
            "steady_state_mse": pred.steady_state_mse,
            "excess_mse": pred.excess_mse,
            "D": args.feature_dim,
            "sigma": args.sigma,
            "sigma_x": args.sigma_x,
            "seed": args.seed,
        }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_bench(args) -> int:
    config = _load(args)
    try:
        timings = harness.bench_timing(config)
    except harness.RunFailedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = {
        "config_hash": config.config_hash(),
        "n_runs": config.n_runs,
        "timings": {t.label: {"mean": t.mean, "min": t.min, "max": t.max} for t in timings},
    }
    if len(timings) == 2 and timings[0].mean > 0:
        report["ratio"] = timings[1].mean / timings[0].mean
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_approx(args) -> int:
    rows = approximation_error(args.sigma, args.input_dim, args.feature_dims, args.pairs, args.seed,
                               n_maps=args.maps)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["D", "rms_error", "max_error"])
        for D, rms, mx in rows:
            out.writerow([D, f"{rms:.17g}", f"{mx:.17g}"])
    finally:
        if args.out:
            fh.close()
    return 0


def cmd_dump(args) -> int:
    if args.preset:
        model = load_preset(args.preset).model
    else:
        model = MODEL_KINDS[args.model]()
    changes = {"seed": args.seed}
    if args.n is not None:
        changes["n_samples"] = args.n
    model = dataclasses.replace(model, **changes)
    X, y = generate(model)
    write_stream_csv(args.out, X, y)
    return 0


COMMANDS = {"run": cmd_run, "theory": cmd_theory, "bench": cmd_bench, "approx": cmd_approx, "dump": cmd_dump}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
