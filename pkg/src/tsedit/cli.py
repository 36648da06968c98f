"""Command-line entry point: train, sample, edit, sweep, metrics.

Every command is deterministic given (config, seed). Exit codes: 0 on
success, 1 for usage errors (bad flags, missing or malformed files,
invalid constraints), 2 for runtime numeric failures.
"""

import argparse
import copy
import csv
import json
import sys
from pathlib import Path

import numpy as np

from tsedit.constraints import ConstraintError, interpolate_trend, parse_constraints
from tsedit.data import DataError, gen_sines, load_csv
from tsedit.denoiser import Denoiser, DenoiserConfig
from tsedit.diffusion import NumericError, TrainConfig, eval_loss, load_checkpoint, make_schedule, save_checkpoint, train
from tsedit.metrics import MetricError, SweepSpec, achieved_stat, kde, mad, run_sweep
from tsedit.sampling import GuidanceConfig, sample_guided, sample_uncond

DEFAULT_CONFIG = {
    "dataset": {"kind": "sines", "csv": None, "n": 1000, "seq_len": 24, "channels": 5, "seed": 1},
    "model": {"hidden": [128, 128], "embed_dim": 32, "init_seed": 0},
    "schedule": {"steps": 200, "beta_min": 1e-4, "beta_max": 0.02},
    "train": {"learning_rate": 0.05, "steps": 3000, "batch_size": 64, "seed": 0},
    "guidance": {
        "gamma_decay": 5.0,
        "eta": 0.1,
        "kappa": 0.01,
        "grad_steps": 1,
        "rho": 0.05,
        "dynamic_mask": True,
        "use_time_weight": True,
        "grad_clip": 10.0,
    },
}


class UsageError(ValueError):
    pass


def load_config(path=None):
    """Defaults, deep-merged with an optional JSON config file."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is None:
        return cfg
    try:
        with open(path) as fh:
            user = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    for section, values in user.items():
        if section not in cfg:
            raise UsageError(f"config {path}: unknown section {section!r}")
        if not isinstance(values, dict):
            raise UsageError(f"config {path}: section {section!r} must be an object")
        for key, value in values.items():
            if key not in cfg[section]:
                raise UsageError(f"config {path}: unknown key {section}.{key}")
            cfg[section][key] = value
    return cfg


def guidance_from_config(section, args=None):
    kwargs = dict(section)
    if args is not None:
        for name in ("eta", "kappa", "rho", "grad_steps", "gamma_decay"):
            v = getattr(args, name.replace("-", "_"), None)
            if v is not None:
                kwargs[name] = v
        if getattr(args, "no_dynamic_mask", False):
            kwargs["dynamic_mask"] = False
        if getattr(args, "no_time_weight", False):
            kwargs["use_time_weight"] = False
        if getattr(args, "trace", False):
            kwargs["keep_trace"] = True
    return GuidanceConfig(**kwargs)


def write_series_csv(path, series):
    """Header "t,c0,...,c{D-1}", one row per timestep, full-precision floats."""
    series = np.asarray(series)
    n_channels = series.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(f"c{j}" for j in range(n_channels)) + "\n")
        for t in range(series.shape[0]):
            fh.write(str(t) + "," + ",".join(repr(float(v)) for v in series[t]) + "\n")


def read_series_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "t":
        raise UsageError(f"{path}: not a series CSV (expected header starting with 't')")
    data = [[float(v) for v in row[1:]] for row in rows[1:]]
    return np.asarray(data)


def _load_checkpoint(path):
    try:
        return load_checkpoint(path)
    except OSError as exc:
        raise UsageError(f"cannot read checkpoint {path}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise UsageError(f"checkpoint {path} is invalid: {exc}") from exc


def _load_constraints(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read constraints {path}: {exc}") from exc
    return parse_constraints(text)


def cmd_train(args):
    cfg = load_config(args.config)
    ds_cfg, m_cfg, s_cfg, t_cfg = cfg["dataset"], cfg["model"], cfg["schedule"], cfg["train"]
    if args.dataset:
        ds_cfg["kind"] = args.dataset
    if args.csv:
        ds_cfg["kind"], ds_cfg["csv"] = "csv", args.csv
    if args.steps:
        t_cfg["steps"] = args.steps
    if args.seed is not None:
        t_cfg["seed"] = args.seed
    if args.timesteps:
        s_cfg["steps"] = args.timesteps

    if ds_cfg["kind"] == "sines":
        dataset = gen_sines(ds_cfg["n"], ds_cfg["seq_len"], ds_cfg["channels"], seed=ds_cfg["seed"])
    elif ds_cfg["kind"] == "csv":
        if not ds_cfg["csv"]:
            raise UsageError("csv dataset requested but no --csv path given")
        dataset = load_csv(ds_cfg["csv"], ds_cfg["seq_len"])
    else:
        raise UsageError(f"unknown dataset kind {ds_cfg['kind']!r}")

    sched = make_schedule(s_cfg["steps"], s_cfg["beta_min"], s_cfg["beta_max"])
    model = Denoiser.init(
        DenoiserConfig(
            seq_len=dataset.seq_len,
            channels=dataset.channels,
            hidden=tuple(m_cfg["hidden"]),
            embed_dim=m_cfg["embed_dim"],
        ),
        total_steps=sched.steps,
        seed=m_cfg["init_seed"],
    )
    train_cfg = TrainConfig(
        learning_rate=t_cfg["learning_rate"],
        steps=t_cfg["steps"],
        batch_size=t_cfg["batch_size"],
        seed=t_cfg["seed"],
    )
    trained = train(model, dataset.series, sched, train_cfg)
    final = eval_loss(trained, dataset.series[: min(128, dataset.count)], sched, seed=t_cfg["seed"])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    meta = {"dataset": dataset.label, "norm": dataset.norm.tolist(), "train": t_cfg}
    save_checkpoint(out, trained, sched, meta=meta)
    print(f"wrote {out}  (final held-out loss {final:.6f})")
    return 0


def cmd_sample(args):
    model, sched, _ = _load_checkpoint(args.ckpt)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.n):
        series = sample_uncond(model, sched, seed=args.seed + i)
        write_series_csv(out / f"sample_{i:03d}.csv", series)
    print(f"wrote {args.n} series to {out}")
    return 0


def cmd_edit(args):
    model, sched, _ = _load_checkpoint(args.ckpt)
    constraints = _load_constraints(args.constraints)
    cfg = load_config(args.config)
    gcfg = guidance_from_config(cfg["guidance"], args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.n):
        seed = args.seed + i
        result = sample_guided(model, sched, constraints, gcfg, seed=seed)
        write_series_csv(out / f"edit_{i:03d}.csv", result.series)
        report = {"seed": seed, "trace": result.trace}
        if constraints.points:
            report["mad"] = mad(result.series, constraints.points)
        if constraints.segments:
            report["achieved_stats"] = [achieved_stat(result.series, s) for s in constraints.segments]
        with open(out / f"trace_{i:03d}.json", "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
    print(f"wrote {args.n} edited series to {out}")
    return 0


def cmd_sweep(args):
    model, sched, _ = _load_checkpoint(args.ckpt)
    cfg = load_config(args.config)
    kwargs = {"kind": args.kind, "guidance": guidance_from_config(cfg["guidance"])}
    if args.targets:
        kwargs["targets"] = tuple(float(v) for v in args.targets.split(","))
    if args.weights:
        kwargs["weights"] = tuple(float(v) for v in args.weights.split(","))
    if args.confidences:
        kwargs["confidences"] = tuple(float(v) for v in args.confidences.split(","))
    spec = SweepSpec(**kwargs)
    report = run_sweep(model, sched, spec, seeds=range(args.seeds), jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"sweep_{args.kind}.csv").write_text(report.to_csv())
    (out / f"sweep_{args.kind}.json").write_text(report.to_json() + "\n")
    print(report.to_csv(), end="")
    print(f"wrote sweep_{args.kind}.csv and .json to {out}")
    return 0


def cmd_metrics(args):
    series = [read_series_csv(p) for p in args.series]
    constraints = _load_constraints(args.constraints)
    report = {}
    anchors = list(constraints.points)
    for trend in constraints.trends:
        anchors.extend(interpolate_trend(trend))
    if anchors:
        report["mad"] = mad(series, anchors)
    if constraints.segments:
        report["achieved_stats"] = [
            {
                "s": s.start,
                "e": s.end,
                "c": s.channel,
                "stat": s.stat,
                "target": s.target,
                "achieved": [achieved_stat(x, s) for x in series],
            }
            for s in constraints.segments
        ]
    if args.kde_channel is not None:
        values = np.concatenate([x[:, args.kde_channel] for x in series])
        lo, hi = values.min() - 0.25, values.max() + 0.25
        grid = np.linspace(lo, hi, 201)
        report["kde"] = {"channel": args.kde_channel, "grid": grid.tolist(), "density": kde(values, grid).tolist()}
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="tsedit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a denoiser and write a checkpoint")
    p.add_argument("--config", help="JSON config file (defaults embedded)")
    p.add_argument("--dataset", choices=["sines", "csv"])
    p.add_argument("--csv", help="CSV file for --dataset csv")
    p.add_argument("--steps", type=int, help="override training steps")
    p.add_argument("--timesteps", type=int, help="override diffusion steps")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="checkpoint.json")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("sample", help="unconditional sampling from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="samples")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("edit", help="constrained sampling from a constraints JSON")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--constraints", required=True)
    p.add_argument("--config")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="edits")
    p.add_argument("--eta", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--gamma-decay", dest="gamma_decay", type=float)
    p.add_argument("--grad-steps", dest="grad_steps", type=int)
    p.add_argument("--no-dynamic-mask", action="store_true")
    p.add_argument("--no-time-weight", action="store_true")
    p.add_argument("--trace", action="store_true", help="keep per-step diagnostics")
    p.set_defaults(fn=cmd_edit)

    p = sub.add_parser("sweep", help="confidence / sum-target / sum-weight grids")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--kind", choices=["confidence", "sum_target", "sum_weight"], default="confidence")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--targets", help="comma-separated sum targets")
    p.add_argument("--weights", help="comma-separated sum weights")
    p.add_argument("--confidences", help="comma-separated confidences")
    p.add_argument("--config")
    p.add_argument("--out", default="sweeps")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("metrics", help="anchor MAD / achieved stats / KDE for saved series")
    p.add_argument("--series", nargs="+", required=True, help="series CSV file(s)")
    p.add_argument("--constraints", required=True)
    p.add_argument("--kde-channel", dest="kde_channel", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_metrics)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (UsageError, ConstraintError, DataError, MetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
