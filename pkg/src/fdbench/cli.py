"""Command-line orchestration.

Subcommands: convert | metric | diagnose | align | consistency | simulate.
Exit codes: 0 success, 1 validation/protocol error (including usage), 2
I/O or file-format error. Reports are deterministic: identical inputs and
configuration produce byte-identical artifacts.

The ``metric`` subcommand also accepts --config pointing at a JSON file
whose keys mirror the long flag names (snake_case); explicit flags win
over config values, config values win over built-in defaults. Independent
metric jobs inside one invocation run concurrently, capped by
FDBENCH_NUM_THREADS (default 1).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import backend
from .alignment import (P_METHOD_AUTO, SCORE_COLUMN, alignment_report,
                        consistency_matrix, read_ladder_csv,
                        write_ladder_csv)
from .diagnostics import DEFAULT_L0_THRESHOLD, diagnostics_report
from .errors import FormatError, ValidationError
from .kernels import (ESTIMATOR_UNBIASED, PRESET_NAMES, cmmd_score,
                      kid_score, mmd2, resolve_preset)
from .mixtures import FLD_MODE_EM_KL, fld_score
from .moments import fit_gaussian_summary, frechet_distance
from .reporting import dumps_report, markdown_table, write_report
from .store import (VALID_PREPROCESSING, VALID_ROLES, import_csv,
                    read_feature_set, write_feature_set)
from .testbench import EllipticalSpec, LadderSpec, make_quality_ladder

BUNDLED_LADDERS = ("ladder_sg.csv", "ladder_mf.csv", "ladder_dm.csv")


class _UsageError(Exception):
    def __init__(self, message: str, parser: argparse.ArgumentParser):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message, self)


def _build_parser() -> _Parser:
    parser = _Parser(prog="fdbench",
                     description="Feature-distance evaluation engine")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("convert", help="CSV feature matrix to FDBF1")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--extractor-id", required=True)
    p.add_argument("--preprocessing", default="none",
                   choices=VALID_PREPROCESSING)
    p.add_argument("--role", required=True, choices=VALID_ROLES)
    p.add_argument("--source-id", default="")

    p = sub.add_parser("metric", help="compute metrics between feature sets")
    p.add_argument("--config", default=None,
                   help="JSON file with defaults for the flags below")
    p.add_argument("--gen", default=None, help="FDBF1 file, first operand")
    p.add_argument("--test", default=None, help="FDBF1 file, second operand")
    p.add_argument("--train", default=None,
                   help="FDBF1 file, training reference (fld only)")
    p.add_argument("--out", default=None, help="JSON report path")
    p.add_argument("--fid", action="store_const", const=True, default=None,
                   help="Fréchet distance on fitted Gaussian summaries")
    p.add_argument("--kid", action="store_const", const=True, default=None,
                   help="block-averaged unbiased MMD")
    p.add_argument("--cmmd", action="store_const", const=True, default=None,
                   help="unbiased MMD under an RBF kernel")
    p.add_argument("--mmd", action="store_const", const=True, default=None,
                   help="plain squared MMD under --kernel")
    p.add_argument("--fld", action="store_const", const=True, default=None,
                   help="mixture-likelihood score (needs --train)")
    p.add_argument("--kernel", default=None, choices=PRESET_NAMES,
                   help="kernel preset for --kid/--mmd (default kid-poly3)")
    p.add_argument("--mmd-estimator", default=None,
                   choices=("biased", "unbiased"))
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--n-blocks", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--cmmd-sigma", default=None,
                   help='bandwidth, a number or "median"')
    p.add_argument("--fld-mode", default=None,
                   choices=("em_kl", "anchored_nll"))
    p.add_argument("--fld-k", type=int, default=None,
                   help="mixture components (default min(10, n/20))")
    p.add_argument("--fld-samples", type=int, default=None)

    p = sub.add_parser("diagnose", help="sparsity/entropy diagnostics")
    p.add_argument("--features", required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_L0_THRESHOLD)
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--csv", default=None, help="optional per-row CSV path")

    p = sub.add_parser("align",
                       help="correlate metrics with downstream scores")
    p.add_argument("--ladder", required=True, help="ladder CSV")
    p.add_argument("--score-key", default=SCORE_COLUMN)
    p.add_argument("--p-method", default=P_METHOD_AUTO,
                   choices=("exact", "normal_approx", "auto"))
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--plot-data", default=None,
                   help="CSV with reciprocal-metric plot columns")
    p.add_argument("--md", default=None, help="Markdown report path")

    p = sub.add_parser("consistency",
                       help="tau between metric pairs across ladders")
    p.add_argument("--ladder", action="append", default=[],
                   help="ladder CSV (repeatable)")
    p.add_argument("--bundled", action="store_true",
                   help="use the packaged reference ladders")
    p.add_argument("--out", required=True, help="JSON report path")

    p = sub.add_parser("simulate", help="synthetic ladder fixtures")
    p.add_argument("--spec", required=True, help="ladder spec JSON")
    p.add_argument("--out-dir", required=True)
    return parser


def _cmd_convert(args) -> int:
    fs = import_csv(args.csv, extractor_id=args.extractor_id,
                    preprocessing_tag=args.preprocessing, role=args.role,
                    source_id=args.source_id)
    write_feature_set(fs, args.out)
    print(f"wrote {args.out} ({fs.n} x {fs.d})")
    return 0


_METRIC_DEFAULTS = {
    "gen": None, "test": None, "train": None, "out": None,
    "fid": False, "kid": False, "cmmd": False, "mmd": False, "fld": False,
    "kernel": "kid-poly3", "mmd_estimator": ESTIMATOR_UNBIASED,
    "block_size": None, "n_blocks": 10, "seed": 0, "cmmd_sigma": "median",
    "fld_mode": FLD_MODE_EM_KL, "fld_k": None, "fld_samples": 100000,
}


def _merged_metric_options(args) -> dict:
    merged = dict(_METRIC_DEFAULTS)
    if args.config is not None:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.config}: invalid JSON: {exc}") from exc
        unknown = set(config) - set(_METRIC_DEFAULTS)
        if unknown:
            raise ValidationError(
                f"{args.config}: unknown config keys {sorted(unknown)}")
        merged.update(config)
    for key in _METRIC_DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    return merged


def _describe_input(path: str, fs) -> dict:
    return {"path": path, "n": fs.n, "d": fs.d,
            "extractor_id": fs.extractor_id,
            "preprocessing_tag": fs.preprocessing_tag, "role": fs.role,
            "source_id": fs.source_id}


def _cmd_metric(args) -> int:
    opts = _merged_metric_options(args)
    for required in ("gen", "test", "out"):
        if not opts[required]:
            raise ValidationError(f"metric: --{required} is required")
    selected = [name for name in ("fid", "kid", "cmmd", "mmd", "fld")
                if opts[name]]
    if not selected:
        raise ValidationError(
            "metric: select at least one of --fid/--kid/--cmmd/--mmd/--fld")
    gen = read_feature_set(opts["gen"])
    test = read_feature_set(opts["test"])
    train = None
    if opts["train"]:
        train = read_feature_set(opts["train"])
    if "fld" in selected and train is None:
        raise ValidationError("metric: --fld requires --train")

    def job(name: str) -> tuple[str, dict]:
        if name == "fid":
            a = fit_gaussian_summary(gen)
            b = fit_gaussian_summary(test)
            fd = frechet_distance(a, b)
            return name, {"value": fd, "squared": fd * fd,
                          "cov_denominator": "n-1"}
        if name == "kid":
            kernel = resolve_preset(opts["kernel"], gen, test)
            block = opts["block_size"]
            if block is None:
                block = min(1000, gen.n, test.n)
            est = kid_score(gen, test, kernel, block_size=block,
                            n_blocks=opts["n_blocks"], seed=opts["seed"])
            return name, {"value": est.value,
                          "kernel": est.kernel.to_dict(),
                          "estimator": est.estimator,
                          "block_size": est.block_stats.block_size,
                          "n_blocks": est.block_stats.n_blocks,
                          "block_values": list(est.block_stats.values),
                          "std_error": est.block_stats.std_error,
                          "seed": opts["seed"]}
        if name == "cmmd":
            sigma = opts["cmmd_sigma"]
            if sigma != "median":
                sigma = float(sigma)
            est = cmmd_score(gen, test, sigma=sigma)
            return name, {"value": est.value,
                          "kernel": est.kernel.to_dict(),
                          "estimator": est.estimator,
                          "sigma_request": str(opts["cmmd_sigma"])}
        if name == "mmd":
            kernel = resolve_preset(opts["kernel"], gen, test)
            est = mmd2(gen, test, kernel, estimator=opts["mmd_estimator"])
            return name, {"value": est.value,
                          "kernel": est.kernel.to_dict(),
                          "estimator": est.estimator}
        k = opts["fld_k"]
        value = fld_score(gen, train, test, mode=opts["fld_mode"], k=k,
                          seed=opts["seed"], n_samples=opts["fld_samples"])
        return name, {"value": value, "mode": opts["fld_mode"],
                      "k": "auto" if k is None else k,
                      "seed": opts["seed"],
                      "n_samples": opts["fld_samples"]}

    workers = max(1, int(os.environ.get("FDBENCH_NUM_THREADS", "1")))
    if workers > 1 and len(selected) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(job, selected))
    else:
        results = dict(job(name) for name in selected)

    report = {
        "command": "metric",
        "backend": backend.active_name(),
        "inputs": {"gen": _describe_input(opts["gen"], gen),
                   "test": _describe_input(opts["test"], test)},
        "metrics": results,
    }
    if train is not None:
        report["inputs"]["train"] = _describe_input(opts["train"], train)
    write_report(report, opts["out"])
    print(f"wrote {opts['out']}")
    return 0


def _cmd_diagnose(args) -> int:
    fs = read_feature_set(args.features)
    rep = diagnostics_report(fs, threshold=args.threshold)
    report = {"command": "diagnose",
              "input": _describe_input(args.features, fs),
              "diagnostics": rep.to_json_dict()}
    write_report(report, args.out)
    if args.csv:
        rep.write_csv(args.csv)
    print(f"wrote {args.out}")
    return 0


def _cmd_align(args) -> int:
    entries = read_ladder_csv(args.ladder, score_key=args.score_key)
    result, plot_rows = alignment_report(entries, score_key=args.score_key,
                                         p_method=args.p_method)
    report = {"command": "align", "ladder": args.ladder,
              "p_method": args.p_method,
              "alignment": result.to_json_dict()}
    write_report(report, args.out)
    if args.plot_data:
        _write_plot_csv(plot_rows, args.plot_data)
    if args.md:
        _write_align_md(entries, result, args.md)
    print(f"wrote {args.out}")
    return 0


def _write_plot_csv(plot_rows: list[dict], path: str) -> None:
    import csv as _csv
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        header = list(plot_rows[0].keys())
        writer.writerow(header)
        for row in plot_rows:
            writer.writerow([row[h] if isinstance(row[h], str)
                             else repr(float(row[h])) for h in header])


def _write_align_md(entries, result, path: str) -> None:
    metrics = list(result.per_metric.keys())
    header = ["model"] + metrics + [result.score_key]
    rows = []
    for e in entries:
        rows.append([e.model_id]
                    + [f"{e.metric_values[m]:.4g}" for m in metrics]
                    + [f"{e.downstream_score:.4g}"])
    rows.append(["tau"] + [f"{result.per_metric[m].tau:.2f}"
                           for m in metrics] + [""])
    rows.append(["p"] + [result.per_metric[m].band for m in metrics] + [""])
    with open(path, "w") as fh:
        fh.write(markdown_table(header, rows))


def _bundled_ladder_paths() -> list:
    root = resources.files("fdbench") / "fixtures"
    return [root / name for name in BUNDLED_LADDERS]


def _cmd_consistency(args) -> int:
    paths = list(args.ladder)
    if args.bundled:
        paths += [str(p) for p in _bundled_ladder_paths()]
    if not paths:
        raise ValidationError(
            "consistency: give --ladder files and/or --bundled")
    entries = []
    for path in paths:
        entries.extend(read_ladder_csv(path))
    matrix = consistency_matrix(entries)
    report = {"command": "consistency",
              "ladder_files": [Path(p).name for p in paths],
              "consistency": matrix.to_json_dict()}
    write_report(report, args.out)
    print(f"wrote {args.out}")
    return 0


def _parse_sim_spec(raw: dict) -> LadderSpec:
    if "mu" in raw:
        mu = np.asarray(raw["mu"], dtype=np.float64)
    elif "d" in raw:
        mu = np.zeros(int(raw["d"]))
    else:
        raise ValidationError('simulate spec needs "mu" or "d"')
    scale = raw.get("scale", "identity")
    if isinstance(scale, str):
        if scale != "identity":
            raise ValidationError(f'unknown scale shorthand {scale!r}')
        scale_m = np.eye(mu.size)
    elif np.isscalar(scale):
        scale_m = float(scale) * np.eye(mu.size)
    else:
        scale_m = np.asarray(scale, dtype=np.float64)
    reference = EllipticalSpec(mu=mu, scale=scale_m,
                               generator=raw.get("generator", "gaussian"),
                               dof=raw.get("dof"))
    try:
        return LadderSpec(
            reference=reference, steps=int(raw["steps"]),
            mean_drifts=tuple(float(v) for v in raw["mean_drifts"]),
            cov_factors=tuple(float(v) for v in raw["cov_factors"]),
            n_per_step=int(raw["n_per_step"]), seed=int(raw["seed"]),
            ladder_id=str(raw.get("ladder_id", "sim")))
    except KeyError as exc:
        raise ValidationError(f"simulate spec missing key {exc}") from exc


def _cmd_simulate(args) -> int:
    try:
        with open(args.spec) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{args.spec}: invalid JSON: {exc}") from exc
    spec = _parse_sim_spec(raw)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries, features = make_quality_ladder(spec)
    file_map = {}
    for name, fs in sorted(features.items()):
        fname = f"{name}.fdbf"
        write_feature_set(fs, out_dir / fname)
        file_map[name] = fname
    ladder_csv = f"{spec.ladder_id}_ladder.csv"
    write_ladder_csv(entries, out_dir / ladder_csv)
    manifest = {
        "command": "simulate",
        "ladder_id": spec.ladder_id,
        "steps": spec.steps,
        "n_per_step": spec.n_per_step,
        "seed": spec.seed,
        "generator": spec.reference.generator,
        "mean_drifts": list(spec.mean_drifts),
        "cov_factors": list(spec.cov_factors),
        "ladder_csv": ladder_csv,
        "feature_files": file_map,
    }
    write_report(manifest, out_dir / "manifest.json")
    print(f"wrote {out_dir}/manifest.json")
    return 0


_COMMANDS = {
    "convert": _cmd_convert,
    "metric": _cmd_metric,
    "diagnose": _cmd_diagnose,
    "align": _cmd_align,
    "consistency": _cmd_consistency,
    "simulate": _cmd_simulate,
}


def run_command(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        exc.parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
