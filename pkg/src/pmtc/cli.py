"""Command-line front end.

Subcommands: ``simulate`` (preset experiment grids), ``fit`` (estimate
memberships and loadings on user data), ``eval`` (total R-squared under a
split or rolling scheme).  Each run writes a ``manifest.json`` that can be
fed back through ``--config`` to reproduce it bit-identically.

Exit codes: 2 invalid config, 3 infeasible design, 4 shape mismatch,
5 unreadable input file.  Summary tables go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, io
from .experiments import run_experiment, write_panels, write_results_csv
from .pipeline import evaluate_rolling, evaluate_split, fit_pmtc, rank_normalize
from .presets import PRESET_NAMES, build_preset
from .simulate import InfeasibleDesignError

_EXIT_CONFIG = 2
_EXIT_INFEASIBLE = 3
_EXIT_SHAPE = 4
_EXIT_UNREADABLE = 5

_RUN_KEYS = {"preset", "seed", "threads", "out", "replications"}
_META_KEYS = {"versions", "config_hash", "resolved_params"}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_config(path: str) -> dict:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(_EXIT_UNREADABLE, f"cannot read config: {exc}")
    if path.endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CliError(_EXIT_CONFIG, f"invalid JSON config: {exc}")
    else:
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise CliError(_EXIT_CONFIG, f"invalid config: {exc}")
        data = {s: dict(parser.items(s)) for s in parser.sections()}
    for section in data:
        if section not in {"run", "overrides"} | _META_KEYS:
            raise CliError(_EXIT_CONFIG, f"unknown config section {section!r}")
    for key in data.get("run", {}):
        if key not in _RUN_KEYS:
            raise CliError(_EXIT_CONFIG, f"unknown [run] key {key!r}")
    return data


def _parse_overrides(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise CliError(_EXIT_CONFIG, f"override {pair!r} is not of the form key=value")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _versions() -> dict:
    import scipy

    return {
        "pmtc": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": ".".join(map(str, sys.version_info[:3])),
    }


def _write_manifest(out_dir: str, run: dict, overrides: dict, resolved: dict) -> None:
    payload = {"run": run, "overrides": overrides}
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()
    ).hexdigest()
    manifest = dict(payload)
    manifest["resolved_params"] = {k: list(v) if isinstance(v, tuple) else v
                                   for k, v in resolved.items()}
    manifest["versions"] = _versions()
    manifest["config_hash"] = digest
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_simulate(args) -> int:
    config = _read_config(args.config) if args.config else {}
    run_cfg = dict(config.get("run", {}))
    overrides = dict(config.get("overrides", {}))
    overrides.update(_parse_overrides(args.override))

    preset = args.preset or run_cfg.get("preset")
    if not preset:
        raise CliError(_EXIT_CONFIG, "no preset given (use --preset or a config file)")
    if args.seed is not None:
        run_cfg["seed"] = args.seed
    if args.replications is not None:
        run_cfg["replications"] = args.replications
    for key in ("seed", "replications"):
        if key in run_cfg:
            overrides[key] = int(run_cfg[key])
    threads = args.threads or int(run_cfg.get("threads", 1))
    out_dir = args.out or run_cfg.get("out", "out")

    try:
        run = build_preset(preset, overrides)
    except KeyError as exc:
        raise CliError(_EXIT_CONFIG, str(exc.args[0]))
    except (ValueError, TypeError) as exc:
        raise CliError(_EXIT_CONFIG, f"invalid configuration: {exc}")

    os.makedirs(out_dir, exist_ok=True)
    print(f"preset {preset}: {len(run.tasks)} grid points x {run.replications} replications, "
          f"{len(run.methods)} methods, {threads} worker(s)", file=sys.stderr)
    try:
        rows = run_experiment(run.tasks, run.methods, run.replications,
                              threads=threads, progress=args.progress)
    except InfeasibleDesignError as exc:
        raise CliError(_EXIT_INFEASIBLE, f"infeasible design: {exc}")
    write_results_csv(rows, os.path.join(out_dir, "results.csv"))
    panel_files = write_panels(rows, run.tasks, run.panels, run.methods, out_dir)
    _write_manifest(out_dir, {"preset": preset, "seed": run.params["seed"],
                              "replications": run.replications},
                    overrides, run.params)

    print(f"preset: {preset}   replications: {run.replications}")
    print("panel,method,mean")
    by_pm: dict[tuple[str, str], list[float]] = {}
    for panel in run.panels:
        ids = {t.experiment_id for t in run.tasks if t.scenario == panel.scenario}
        for r in rows:
            if r.experiment_id in ids and r.metric == panel.metric and r.mode == panel.mode:
                by_pm.setdefault((panel.name, r.method), []).append(r.value)
    for (name, method), vals in sorted(by_pm.items()):
        print(f"{name},{method},{np.mean(vals):.6g}")
    print(f"results: {out_dir}/results.csv ({len(rows)} rows), "
          f"{len(panel_files)} panel files, manifest.json", file=sys.stderr)
    return 0


def _load(path, reader):
    try:
        return reader(path)
    except OSError as exc:
        raise CliError(_EXIT_UNREADABLE, f"cannot read {path}: {exc}")
    except ValueError as exc:
        raise CliError(_EXIT_UNREADABLE, f"cannot parse {path}: {exc}")


def _cmd_fit(args) -> int:
    x = _load(args.tensor, io.read_tensor)
    y = _load(args.returns, io.read_matrix_csv)
    factors = _load(args.factors, io.read_matrix_csv) if args.factors else None
    if args.factor_mode == "observed" and factors is None:
        if args.explicit_observed:
            raise CliError(_EXIT_CONFIG, "--factors-observed requires --factors FILE")
        args.factor_mode = "latent"
    ranks = tuple(int(v) for v in args.ranks.split(","))
    if args.rank_normalize:
        x = rank_normalize(x)
    try:
        est = fit_pmtc(
            x, y, ranks,
            factors=factors if args.factor_mode == "observed" else None,
            num_factors=args.num_factors,
            omega=args.omega, seed=args.seed, demean=args.demean == "on",
            lloyd_iters=args.lloyd_iters,
        )
    except ValueError as exc:
        raise CliError(_EXIT_SHAPE, f"inconsistent inputs: {exc}")

    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    for i, m in enumerate(est.memberships):
        io.write_membership_csv(os.path.join(out_dir, f"membership_mode{i + 1}.csv"), m)
    fe = est.factor_estimate
    io.write_loadings_csv(os.path.join(out_dir, "loadings.csv"), fe.loadings)
    io.write_loadings_csv(os.path.join(out_dir, "loadings_per_asset.csv"),
                          fe.loadings, est.memberships[0])
    summary = {
        "ranks": list(est.ranks),
        "omega": est.omega,
        "factor_mode": fe.mode,
        "num_factors": fe.num_factors,
        "cluster_sizes": [m.cluster_sizes.tolist() for m in est.memberships],
    }
    with open(os.path.join(out_dir, "fit_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(out_dir, {"seed": args.seed}, {
        "command": "fit", "tensor": args.tensor, "returns": args.returns,
        "factors": args.factors or "", "ranks": args.ranks,
        "omega": args.omega, "rank_normalize": bool(args.rank_normalize),
        "factor_mode": args.factor_mode, "demean": args.demean,
    }, summary)

    print("mode,clusters,sizes")
    for i, m in enumerate(est.memberships):
        print(f"{i + 1},{m.num_clusters},{'|'.join(map(str, m.cluster_sizes))}")
    print(f"wrote estimate bundle to {out_dir}", file=sys.stderr)
    return 0


def _cmd_eval(args) -> int:
    member = _load(os.path.join(args.estimate, "membership_mode1.csv"),
                   io.read_membership_csv)
    y = _load(args.returns, io.read_matrix_csv)
    factors = _load(args.factors, io.read_matrix_csv)
    market = _load(args.market, io.read_matrix_csv).ravel()
    demean = args.demean == "on"
    try:
        if args.split.startswith("rolling"):
            window = int(args.split.split(":", 1)[1]) if ":" in args.split else 12
            report = evaluate_rolling(y, factors, market, member, window=window,
                                      demean=demean)
        else:
            split = int(args.split.split(":", 1)[-1])
            report = evaluate_split(y, factors, market, member, split, demean=demean)
    except ValueError as exc:
        raise CliError(_EXIT_SHAPE, f"inconsistent inputs: {exc}")

    with open(os.path.join(args.estimate, "eval.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print("window,ins_r2_pct,oos_r2_pct")
    print(f"{args.split},{100 * report['ins_r2']:.4f},{100 * report['oos_r2']:.4f}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmtc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a preset experiment grid")
    sim.add_argument("--preset", choices=PRESET_NAMES)
    sim.add_argument("--config", help="INI or JSON config (or a previous manifest.json)")
    sim.add_argument("--out", help="output directory (default out)")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--replications", type=int)
    sim.add_argument("--threads", type=int)
    sim.add_argument("--override", action="append", metavar="KEY=VALUE")
    sim.add_argument("--progress", action="store_true")
    sim.set_defaults(func=_cmd_simulate)

    fit = sub.add_parser("fit", help="fit memberships and loadings to data files")
    fit.add_argument("--tensor", required=True, help="binary tensor container")
    fit.add_argument("--returns", required=True, help="p1 x T returns CSV")
    fit.add_argument("--factors", help="m1 x T factor CSV (observed factors)")
    fit.add_argument("--ranks", required=True, help="comma-separated cluster counts r1,r2[,..]")
    fit.add_argument("--num-factors", type=int)
    fit.add_argument("--factors-observed", dest="explicit_observed", action="store_true")
    fit.add_argument("--factors-latent", dest="factor_mode", action="store_const",
                     const="latent", default="observed")
    fit.add_argument("--omega", type=lambda v: v if v == "auto" else float(v),
                     default=1.0, help="coupling weight (number or 'auto')")
    fit.add_argument("--demean", choices=("on", "off"), default="on")
    fit.add_argument("--rank-normalize", action="store_true",
                     help="cross-sectional rank normalization of the tensor")
    fit.add_argument("--lloyd-iters", type=int)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", default="fit_out")
    fit.set_defaults(func=_cmd_fit)

    ev = sub.add_parser("eval", help="total R-squared of an estimate bundle")
    ev.add_argument("--estimate", required=True, help="directory written by fit")
    ev.add_argument("--returns", required=True)
    ev.add_argument("--factors", required=True)
    ev.add_argument("--market", required=True, help="length-T market-excess CSV")
    ev.add_argument("--split", required=True, help="index:K or rolling[:window]")
    ev.add_argument("--demean", choices=("on", "off"), default="on")
    ev.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except InfeasibleDesignError as exc:
        print(f"error: infeasible design: {exc}", file=sys.stderr)
        return _EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
