"""Command-line surface: simulate, analyze, train-toy, theta-star.

Every subcommand is deterministic for a given ``--seed``: the master seed is
fanned out by hashing it with the subcommand name (and further purpose tags)
through ``seeding.derive_seed``, so two subcommands never share a stream.

Exit codes: 0 success, 2 malformed input or config (the offending key, file,
or line is named), 3 numerical divergence during training.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import distmodel, scoreio
from .controller import write_decision_log
from .metrics import ScoreSet, auroc, radi_empirical, tvd_to_gaussian
from .pipeline import TrainConfig, make_synthetic_dataset, run_training, write_dataset_csv
from .seeding import derive_seed
from .toynet import DivergenceError

__all__ = [
    "main",
    "cmd_simulate",
    "cmd_analyze",
    "cmd_train_toy",
    "cmd_theta_star",
    "read_simulate_csv",
]

SIMULATE_CSV_HEADER = "theta,sigma_n,radi_closed,radi_mc"

_TRAIN_FIELDS = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


# ---------------------------------------------------------------------------
# Config file parsing
# ---------------------------------------------------------------------------


def _load_train_config_file(path: Path) -> dict:
    """Flat key=value file with exactly TrainConfig's field names."""
    values: dict[str, object] = {}
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in _TRAIN_FIELDS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            try:
                if key == "score_kind":
                    values[key] = text
                elif _TRAIN_FIELDS[key] in ("int", int):
                    values[key] = int(text)
                else:
                    values[key] = float(text)
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: bad value for {key!r}: {text!r}"
                ) from None
    return values


def _resolve_model(args) -> distmodel.DistributionModel:
    if args.config is not None:
        return distmodel.load_model_config(Path(args.config))
    return distmodel.demo_model()


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    """Sweep theta: closed-form curves plus a Monte Carlo check per row."""
    model = _resolve_model(args)
    seed = 0 if args.seed is None else args.seed
    if args.steps < 2:
        raise ValueError(f"--steps must be at least 2, got {args.steps}")
    if args.mc_samples < 1:
        raise ValueError(f"--mc-samples must be positive, got {args.mc_samples}")
    if not args.theta_max > args.theta_min >= 0:
        raise ValueError(
            f"need 0 <= --theta-min < --theta-max, got {args.theta_min} "
            f"and {args.theta_max}"
        )
    out = _out_dir(args)
    grid = np.linspace(args.theta_min, args.theta_max, args.steps)
    curve = distmodel.sweep(model, grid)
    rows = [SIMULATE_CSV_HEADER]
    worst_gap = 0.0
    for i, theta in enumerate(grid):
        scores = distmodel.sample_scores(
            model,
            theta,
            n_normal=args.mc_samples,
            n_anomaly=args.mc_samples,
            seed=derive_seed(seed, "simulate", "row", i),
        )
        mc = radi_empirical(scores)
        closed = curve.radi_values[i]
        worst_gap = max(worst_gap, abs(mc - closed))
        rows.append(
            f"{float(theta)!r},{float(curve.sigma_n_values[i])!r},"
            f"{float(closed)!r},{float(mc)!r}"
        )
    csv_path = out / "simulate.csv"
    csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    try:
        star = distmodel.theta_star(model)
        star_payload = dataclasses.asdict(star)
        star_error = None
    except ValueError as exc:
        star_payload = None
        star_error = str(exc)
    summary = {
        "model": {key: getattr(model, key) for key in distmodel.MODEL_CONFIG_KEYS},
        "theta_min": args.theta_min,
        "theta_max": args.theta_max,
        "steps": args.steps,
        "mc_samples": args.mc_samples,
        "seed": seed,
        "max_abs_mc_gap": worst_gap,
        "theta_star": star_payload,
        "theta_star_error": star_error,
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {csv_path} and {summary_path}")
    return 0


def read_simulate_csv(path) -> dict[str, np.ndarray]:
    """Parse a simulate CSV back into named columns."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != SIMULATE_CSV_HEADER:
        head = lines[0] if lines else "<empty>"
        raise ValueError(f"{path}:1: expected header {SIMULATE_CSV_HEADER!r}, got {head!r}")
    columns = {name: [] for name in SIMULATE_CSV_HEADER.split(",")}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {line!r}") from None
        for name, value in zip(columns, values):
            columns[name].append(value)
    return {name: np.asarray(vals) for name, vals in columns.items()}


def cmd_analyze(args) -> int:
    """Fit, compare, and rank two score samples from disk."""
    if args.labeled is not None:
        if args.normal is not None or args.anomaly is not None:
            raise ValueError("--labeled replaces --normal/--anomaly, not both")
        scores = scoreio.read_labeled_scores(Path(args.labeled))
        if scores.normal.size == 0:
            raise ValueError(f"{args.labeled}: no rows with label 0")
        if scores.anomaly.size == 0:
            raise ValueError(f"{args.labeled}: no rows with label 1")
    else:
        if args.normal is None or args.anomaly is None:
            raise ValueError("provide --normal and --anomaly files, or --labeled")
        scores = ScoreSet(
            anomaly=scoreio.read_scores(Path(args.anomaly)),
            normal=scoreio.read_scores(Path(args.normal)),
        )
    if args.bins < 1:
        raise ValueError(f"--bins must be at least 1, got {args.bins}")

    def describe(values: np.ndarray) -> dict:
        params, distance = tvd_to_gaussian(values, args.bins)
        return {
            "count": int(values.size),
            "mu": params.mu,
            "sigma": params.sigma,
            "tvd_to_gaussian": distance,
        }

    report = {
        "bins": args.bins,
        "normal": describe(scores.normal),
        "anomaly": describe(scores.anomaly),
        "radi": radi_empirical(scores),
        "auroc": auroc(scores),
    }
    out = _out_dir(args)
    report_path = out / "report.json"
    report_path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(report, indent=2))
    return 0


def cmd_train_toy(args) -> int:
    """Run the full two-stage training and emit its logs."""
    overrides: dict[str, object] = {}
    if args.config is not None:
        overrides.update(_load_train_config_file(Path(args.config)))
    for name in _TRAIN_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    master = int(overrides.pop("seed", 0))
    config = TrainConfig(**overrides, seed=derive_seed(master, "train-toy"))
    log = run_training(config)
    # Echo the user-facing master seed rather than the derived one.
    log.summary["seed"] = master
    log.summary["config"]["seed"] = master

    out = _out_dir(args)
    dataset = make_synthetic_dataset(
        derive_seed(config.seed, "dataset"),
        n_train=config.n_train,
        n_eval=config.n_eval,
        anomaly_shift=config.anomaly_shift,
    )
    paths = {
        "runlog": out / "runlog.jsonl",
        "decisions": out / "decisions.jsonl",
        "summary": out / "summary.json",
        "dataset": out / "dataset.csv",
    }
    log.write_jsonl(paths["runlog"])
    write_decision_log(paths["decisions"], log.decisions)
    log.write_summary(paths["summary"])
    write_dataset_csv(dataset, paths["dataset"])
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return 0


def cmd_theta_star(args) -> int:
    """Print the optimal overfitting level by all three routes."""
    model = _resolve_model(args)
    star = distmodel.theta_star(model)
    payload = {
        "paper_form": star.paper_form,
        "derived_form": star.derived_form,
        "numeric": star.numeric,
        "matches": star.matches,
    }
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out is not None:
        out = _out_dir(args)
        (out / "theta_star.json").write_text(text + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser, *, out_default) -> None:
    # None means "not given": a config-file seed may then fill in, falling
    # back to 0, so an explicit flag always wins without masking the file.
    parser.add_argument(
        "--seed", type=int, default=None, help="master random seed (default 0)"
    )
    parser.add_argument(
        "--config", type=str, default=None, help="flat key=value config file"
    )
    parser.add_argument(
        "--out", type=str, default=out_default, help="output directory"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="overfitkit",
        description="Controllable-overfitting anomaly detection toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "simulate", help="sweep theta and compare closed-form to Monte Carlo"
    )
    _add_common(p, out_default=".")
    p.add_argument("--theta-min", type=float, default=0.0)
    p.add_argument("--theta-max", type=float, default=3.0)
    p.add_argument("--steps", type=int, default=60)
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="fit and compare two score files")
    _add_common(p, out_default=".")
    p.add_argument("--normal", type=str, default=None, help="normal-class score file")
    p.add_argument("--anomaly", type=str, default=None, help="anomaly-class score file")
    p.add_argument(
        "--labeled", type=str, default=None, help="single score,label CSV instead"
    )
    p.add_argument("--bins", type=int, default=64)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train-toy", help="run two-stage training on synthetic data")
    _add_common(p, out_default=".")
    for name, ftype in _TRAIN_FIELDS.items():
        if name == "seed":
            continue  # shared --seed flag
        flags = ["--" + name.replace("_", "-")]
        if name == "freeze_threshold":
            flags.append("--c-thr")  # the counter threshold under its loop name
        if name == "score_kind":
            p.add_argument(*flags, type=str, default=None, choices=["l1", "squared"])
        elif ftype in ("int", int):
            p.add_argument(*flags, type=int, default=None)
        else:
            p.add_argument(*flags, type=float, default=None)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("theta-star", help="optimal overfitting level, three ways")
    _add_common(p, out_default=None)
    p.set_defaults(func=cmd_theta_star)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
