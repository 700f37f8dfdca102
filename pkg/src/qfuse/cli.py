"""Command-line interface: ``qfuse {test,power,sweep,gen,report}``.

Settings are resolved as command-line flags > ``--config`` file > built-in
defaults.  A config file is a JSON object keyed by option name (``hybrid_p``,
``permutations`` ...) or a manifest written by a previous run, whose
resolved configuration is then replayed.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import sys
from typing import Any

import numpy as np

from . import __version__
from .data import GeneratorSpec, generate, subsample, write_csv
from .errors import ConfigError, DataError
from .experiments import (
    CsvPairSource,
    CsvSource,
    PoolSpec,
    PowerConfig,
    build_pool,
    default_workers,
    estimate_power,
    estimate_type1,
    hybrid_sweep,
    lambda_sweep,
    load_groups,
)
from .report import read_series, render_svg
from .statistics import PooledGrams
from .testing import TestConfig, permutation_test

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

SOURCE_DEFAULTS = {
    "gen": None,
    "d": 0.5,
    "dims": 2,
    "m": 500,
    "x": None,
    "y": None,
    "data": None,
    "features": None,
    "label": None,
    "positive_label": None,
    "delimiter": ",",
    "standardize": None,
}
POOL_DEFAULTS = {
    "pool": "hybrid",
    "families": "gaussian,laplace",
    "bandwidths": 10,
    "quantiles": "0.05,0.95",
    "quantum_family": "product",
    "scalings": "0.001:1:5",
    "depth": 2,
    "hybrid_p": None,
}
TEST_DEFAULTS = {
    "lambda": 1.0,
    "alpha": 0.05,
    "permutations": 2000,
    "seed": 0,
    "form": "logsumexp",
}
RUN_DEFAULTS = {
    "sizes": "10,20,30,40,50,60,70,80,90",
    "reps": 50,
    "workers": None,
    "out": "qfuse-out",
    "format": "csv",
    "plot": None,
}
DEFAULTS = {
    "test": {**SOURCE_DEFAULTS, **POOL_DEFAULTS, **TEST_DEFAULTS, "n": None, "out": None, "keep_null": False},
    "power": {**SOURCE_DEFAULTS, **POOL_DEFAULTS, **TEST_DEFAULTS, **RUN_DEFAULTS},
    "sweep": {**SOURCE_DEFAULTS, **POOL_DEFAULTS, **TEST_DEFAULTS, **RUN_DEFAULTS, "sweep": "p", "grid": None},
    "gen": {"family": "gaussian", "d": 0.5, "dims": 2, "m": 500, "seed": 0, "out": "qfuse-data", "format": "csv"},
    "report": {"tables": None, "out": "report.svg", "metric": "power", "title": ""},
}
QUANTUM_FAMILIES = {"product": "quantum_product", "entangled": "quantum_entangled"}


# -- argument parsing --------------------------------------------------------


def _help(cmd: str, key: str, text: str) -> str:
    default = DEFAULTS[cmd].get(key)
    if default is None:
        return f"{text} (default: unset)"
    return f"{text} (default: {default})"


def _add_source(p: argparse.ArgumentParser, cmd: str) -> None:
    g = p.add_argument_group("data source (pick one of --gen, --x/--y, --data)")
    g.add_argument("--gen", choices=["gaussian", "lognormal"], help=_help(cmd, "gen", "synthetic mean-shift generator"))
    g.add_argument("--d", type=float, help=_help(cmd, "d", "mean shift of Y (log-mean for lognormal)"))
    g.add_argument("--dims", type=int, help=_help(cmd, "dims", "generated dimension D"))
    g.add_argument("--m", type=int, help=_help(cmd, "m", "rows generated per group"))
    g.add_argument("--x", help=_help(cmd, "x", "CSV file with the first sample"))
    g.add_argument("--y", help=_help(cmd, "y", "CSV file with the second sample"))
    g.add_argument("--data", help=_help(cmd, "data", "labelled CSV file split into two groups"))
    g.add_argument("--features", help=_help(cmd, "features", "comma-separated feature columns (names or 0-based indices)"))
    g.add_argument("--label", help=_help(cmd, "label", "label column for --data"))
    g.add_argument("--positive-label", dest="positive_label",
                   help=_help(cmd, "positive_label", "label value forming the second group (Y)"))
    g.add_argument("--delimiter", help=_help(cmd, "delimiter", "field delimiter of input files"))
    g.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=None,
                   help="z-score real-data features (default: on for files, off for generators)")


def _add_pool(p: argparse.ArgumentParser, cmd: str) -> None:
    g = p.add_argument_group("kernel pool")
    g.add_argument("--pool", choices=["hybrid", "classical", "quantum"], help=_help(cmd, "pool", "pool kind"))
    g.add_argument("--families", help=_help(cmd, "families", "classical families, comma-separated"))
    g.add_argument("--bandwidths", type=int, help=_help(cmd, "bandwidths", "bandwidths per classical family"))
    g.add_argument("--quantiles", help=_help(cmd, "quantiles", "distance quantile range lo,hi for bandwidths"))
    g.add_argument("--quantum-family", dest="quantum_family", choices=sorted(QUANTUM_FAMILIES),
                   help=_help(cmd, "quantum_family", "quantum feature map"))
    g.add_argument("--scalings", help=_help(cmd, "scalings", "quantum scalings as lo:hi:count or a comma list"))
    g.add_argument("--depth", type=int, help=_help(cmd, "depth", "layers of the entangled feature map"))
    g.add_argument("--hybrid-p", dest="hybrid_p", type=float,
                   help="prior mass on quantum kernels (default: 0.5 hybrid, 0 classical, 1 quantum)")


def _add_test(p: argparse.ArgumentParser, cmd: str) -> None:
    g = p.add_argument_group("test")
    g.add_argument("--lambda", dest="lambda", type=float, help=_help(cmd, "lambda", "FUSE temperature"))
    g.add_argument("--alpha", type=float, help=_help(cmd, "alpha", "significance level"))
    g.add_argument("--permutations", type=int, help=_help(cmd, "permutations", "number of random permutations B"))
    g.add_argument("--seed", type=int, help=_help(cmd, "seed", "master seed"))
    g.add_argument("--form", choices=["logsumexp", "literal"], help=_help(cmd, "form", "FUSE aggregation form"))


def _add_run(p: argparse.ArgumentParser, cmd: str) -> None:
    g = p.add_argument_group("experiment")
    g.add_argument("--sizes", help=_help(cmd, "sizes", "per-group sample sizes, comma-separated"))
    g.add_argument("--reps", type=int, help=_help(cmd, "reps", "repetitions per sample size"))
    g.add_argument("--workers", type=int, help="worker processes (default: $QFUSE_WORKERS or CPU count)")
    g.add_argument("--out", help=_help(cmd, "out", "output directory"))
    g.add_argument("--format", choices=["csv", "tsv"], help=_help(cmd, "format", "table format"))
    g.add_argument("--plot", help=_help(cmd, "plot", "also write an SVG chart to this path"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfuse", description="MMD-FUSE two-sample tests with classical, quantum and hybrid kernel pools.")
    parser.add_argument("--version", action="version", version=f"qfuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run one permutation test")
    _add_source(p, "test")
    _add_pool(p, "test")
    _add_test(p, "test")
    p.add_argument("--n", type=int, help="per-group size: rows generated with --gen, else a random subsample (default: unset)")
    p.add_argument("--out", help="directory for result.json and manifest.json (default: unset)")
    p.add_argument("--keep-null", dest="keep_null", action="store_true", default=None,
                   help="store the permutation statistics in result.json (default: False)")
    p.add_argument("--config", help="JSON config or manifest (default: unset)")

    for name, text in (("power", "estimate power and true-negative-rate curves"),
                       ("sweep", "power curves over a grid of hybrid_p or lambda")):
        p = sub.add_parser(name, help=text)
        _add_source(p, name)
        _add_pool(p, name)
        _add_test(p, name)
        _add_run(p, name)
        if name == "sweep":
            p.add_argument("--sweep", choices=["p", "lambda"], help=_help(name, "sweep", "swept parameter"))
            p.add_argument("--grid", help="comma-separated grid values (required; default: none)")
        p.add_argument("--config", help="JSON config or manifest (default: unset)")

    p = sub.add_parser("gen", help="write synthetic X/Y samples as CSV")
    p.add_argument("--family", choices=["gaussian", "lognormal"], help=_help("gen", "family", "generator"))
    p.add_argument("--d", type=float, help=_help("gen", "d", "mean shift"))
    p.add_argument("--dims", type=int, help=_help("gen", "dims", "dimension D"))
    p.add_argument("--m", type=int, help=_help("gen", "m", "rows per group"))
    p.add_argument("--seed", type=int, help=_help("gen", "seed", "seed"))
    p.add_argument("--out", help=_help("gen", "out", "output directory"))
    p.add_argument("--format", choices=["csv", "tsv"], help=_help("gen", "format", "file format"))
    p.add_argument("--config", help="JSON config or manifest (default: unset)")

    p = sub.add_parser("report", help="plot curve tables as SVG")
    p.add_argument("tables", nargs="*", default=None, help="curve tables written by power or sweep (default: from --config)")
    p.add_argument("--out", help=_help("report", "out", "SVG output path"))
    p.add_argument("--metric", choices=["power", "tnr"], help=_help("report", "metric", "column to plot"))
    p.add_argument("--title", help="chart title (default: empty)")
    p.add_argument("--config", help="JSON config or manifest (default: unset)")
    return parser


def load_config(path: str, command: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--config: {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("--config: expected a JSON object")
    if "config" in raw and "tool" in raw:
        if raw.get("command") != command:
            raise ConfigError(f"--config: manifest was written by {raw.get('command')!r}, not {command!r}")
        raw = raw["config"]
    unknown = sorted(set(raw) - set(DEFAULTS[command]))
    if unknown:
        raise ConfigError(f"--config: unknown keys for {command}: {', '.join(unknown)}")
    return raw


def resolve(args: argparse.Namespace) -> dict:
    cmd = args.command
    cfg = dict(DEFAULTS[cmd])
    if getattr(args, "config", None):
        cfg.update(load_config(args.config, cmd))
    for key in DEFAULTS[cmd]:
        value = getattr(args, key, None)
        if value is not None and value != []:
            cfg[key] = value
    return cfg


# -- value parsing -----------------------------------------------------------


def _list(value, cast, flag: str) -> list:
    if value is None:
        return []
    items = value if isinstance(value, (list, tuple)) else [v for v in str(value).split(",") if v.strip()]
    try:
        return [cast(str(v).strip()) if isinstance(v, str) else cast(v) for v in items]
    except ValueError:
        raise ConfigError(f"--{flag}: cannot parse {value!r}") from None


def _pool_spec(cfg: dict) -> PoolSpec:
    families = tuple(_list(cfg["families"], str, "families"))
    quantiles = _list(cfg["quantiles"], float, "quantiles")
    if len(quantiles) != 2:
        raise ConfigError("--quantiles: expected two values lo,hi")
    qfam = QUANTUM_FAMILIES.get(cfg["quantum_family"])
    if qfam is None:
        raise ConfigError(f"--quantum-family: unknown value {cfg['quantum_family']!r}")
    scalings = cfg["scalings"]
    common: dict[str, Any] = {"depth": int(cfg["depth"])}
    if isinstance(scalings, str) and ":" in scalings:
        parts = scalings.split(":")
        try:
            common["scaling_range"] = (float(parts[0]), float(parts[1]), int(parts[2]))
        except (ValueError, IndexError):
            raise ConfigError(f"--scalings: expected lo:hi:count, got {scalings!r}") from None
        if len(parts) != 3:
            raise ConfigError(f"--scalings: expected lo:hi:count, got {scalings!r}")
    else:
        common["scalings"] = tuple(_list(scalings, float, "scalings"))
        if not common["scalings"]:
            raise ConfigError("--scalings: empty list")
    classical = dict(classical_families=families, bandwidth_count=int(cfg["bandwidths"]),
                     quantile_range=tuple(quantiles))
    kind = cfg["pool"]
    p = cfg["hybrid_p"]
    try:
        if kind == "classical":
            return PoolSpec(**classical, quantum_family=None, hybrid_p=0.0 if p is None else p, **common)
        if kind == "quantum":
            return PoolSpec(classical_families=(), quantum_family=qfam, hybrid_p=1.0 if p is None else p, **common)
        if kind == "hybrid":
            return PoolSpec(**classical, quantum_family=qfam, hybrid_p=0.5 if p is None else p, **common)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"--pool: unknown kind {kind!r}")


def _source(cfg: dict, size: int | None = None):
    chosen = [k for k in ("gen", "data") if cfg.get(k)] + (["x/y"] if cfg.get("x") or cfg.get("y") else [])
    if len(chosen) > 1:
        raise ConfigError(f"choose one data source, got {', '.join('--' + c for c in chosen)}")
    features = tuple(_list(cfg["features"], str, "features")) or None
    if cfg.get("data"):
        if cfg.get("label") is None:
            raise ConfigError("--data needs --label")
        std = True if cfg["standardize"] is None else bool(cfg["standardize"])
        return CsvSource(cfg["data"], features, cfg["label"], cfg["positive_label"], std, cfg["delimiter"])
    if cfg.get("x") or cfg.get("y"):
        if not (cfg.get("x") and cfg.get("y")):
            raise ConfigError("--x and --y must be given together")
        std = True if cfg["standardize"] is None else bool(cfg["standardize"])
        return CsvPairSource(cfg["x"], cfg["y"], features, std, cfg["delimiter"])
    if cfg["standardize"]:
        raise ConfigError("--standardize applies to file inputs only")
    return GeneratorSpec(family=cfg["gen"] or "gaussian", dims=int(cfg["dims"]), shift=float(cfg["d"]),
                         size=int(size or cfg["m"]), seed=int(cfg["seed"]))


def _input_files(cfg: dict) -> list[str]:
    return [cfg[k] for k in ("data", "x", "y") if cfg.get(k)]


# -- output helpers ----------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_table(path: str, header: list[str], rows: list, fmt: str = "csv") -> None:
    sep = "\t" if fmt == "tsv" else ","
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(sep.join(header) + "\n")
        for row in rows:
            fh.write(sep.join(_fmt(v) for v in row) + "\n")


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path: str, command: str, cfg: dict, outputs: list[str], inputs: list[str], extra=None) -> None:
    manifest = {
        "tool": "qfuse",
        "version": __version__,
        "command": command,
        "seed": cfg.get("seed"),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": cfg,
        "inputs": {p: _digest(p) for p in inputs},
        "outputs": [os.path.basename(o) for o in outputs],
    }
    if extra:
        manifest.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _ext(fmt: str) -> str:
    return "tsv" if fmt == "tsv" else "csv"


def _power_config(cfg: dict) -> PowerConfig:
    sizes = _list(cfg["sizes"], int, "sizes")
    try:
        return PowerConfig(
            source=_source(cfg),
            pool=_pool_spec(cfg),
            sample_sizes=tuple(sizes),
            repetitions=int(cfg["reps"]),
            alpha=float(cfg["alpha"]),
            B=int(cfg["permutations"]),
            lam=float(cfg["lambda"]),
            form=cfg["form"],
            seed=int(cfg["seed"]),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _workers(cfg: dict) -> int:
    return int(cfg["workers"]) if cfg.get("workers") else default_workers()


def _maybe_plot(cfg: dict, tables: list[str], title: str) -> list[str]:
    if not cfg.get("plot"):
        return []
    series = [s for t in tables for s in read_series(t, "power")]
    with open(cfg["plot"], "w", encoding="utf-8") as fh:
        fh.write(render_svg(series, title=title))
    return [cfg["plot"]]


# -- commands ----------------------------------------------------------------


def cmd_test(cfg: dict) -> int:
    source = _source(cfg, size=cfg["n"])
    X, Y = load_groups(source)
    groups = [len(X), len(Y)]
    if cfg["n"] is not None and not isinstance(source, GeneratorSpec):
        X, Y = subsample(X, Y, int(cfg["n"]), int(cfg["seed"]))
    if X.dims != Y.dims:
        raise DataError(f"samples have different dimensions ({X.dims} vs {Y.dims})")
    Z = np.vstack([X.features, Y.features])
    pool = build_pool(_pool_spec(cfg), Z)
    pooled = PooledGrams.build(pool, X.features, Y.features, skip_zero_weight=True)
    tcfg = TestConfig(alpha=float(cfg["alpha"]), B=int(cfg["permutations"]), lam=float(cfg["lambda"]),
                      seed=int(cfg["seed"]), form=cfg["form"])
    result = permutation_test(pooled, tcfg, keep_null=bool(cfg["keep_null"]))
    verdict = "reject H0 (distributions differ)" if result.reject else "fail to reject H0"
    print(f"groups: {groups[0]} vs {groups[1]} rows; tested {len(X)} vs {len(Y)}, D={X.dims}, {pool.size} kernels")
    print(f"statistic = {result.statistic:.6g}, threshold = {result.threshold:.6g}, "
          f"p-value = {result.p_value:.6g} (B={tcfg.B}, alpha={tcfg.alpha})")
    print(f"verdict: {verdict}")
    if cfg.get("out"):
        os.makedirs(cfg["out"], exist_ok=True)
        record = {
            "groups": groups,
            "tested": [len(X), len(Y)],
            "pool": pool.to_dict(),
            **result.to_dict(),
        }
        out = os.path.join(cfg["out"], "result.json")
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
        write_manifest(os.path.join(cfg["out"], "manifest.json"), "test", cfg, [out], _input_files(cfg),
                       {"groups": groups})
    return EXIT_OK


def cmd_power(cfg: dict) -> int:
    pcfg = _power_config(cfg)
    workers = _workers(cfg)
    power = estimate_power(pcfg, workers)
    tnr = estimate_type1(pcfg, workers)
    os.makedirs(cfg["out"], exist_ok=True)
    table = os.path.join(cfg["out"], f"power.{_ext(cfg['format'])}")
    rows = [(n, p, s, t, ts) for (n, p, s), (_, t, ts) in zip(power.rows(), tnr.rows())]
    write_table(table, ["sample_size", "power", "stderr", "tnr", "tnr_stderr"], rows, cfg["format"])
    outputs = [table] + _maybe_plot(cfg, [table], "power")
    write_manifest(os.path.join(cfg["out"], "manifest.json"), "power", cfg, outputs, _input_files(cfg))
    for n, p, s, t, ts in rows:
        print(f"n={n:4d}  power={p:.3f} ± {s:.3f}  tnr={t:.3f} ± {ts:.3f}")
    return EXIT_OK


def cmd_sweep(cfg: dict) -> int:
    grid = _list(cfg["grid"], float, "grid")
    if not grid:
        raise ConfigError("--grid: at least one value is required")
    pcfg = _power_config(cfg)
    workers = _workers(cfg)
    param = cfg["sweep"]
    if param == "p":
        curves = hybrid_sweep(pcfg, grid, workers)
    elif param == "lambda":
        curves = lambda_sweep(pcfg, grid, workers)
    else:
        raise ConfigError(f"--sweep: unknown parameter {param!r}")
    os.makedirs(cfg["out"], exist_ok=True)
    ext = _ext(cfg["format"])
    outputs, long_rows = [], []
    for value, curve in curves:
        path = os.path.join(cfg["out"], f"sweep_{param}_{_fmt(value)}.{ext}")
        write_table(path, ["sample_size", "power", "stderr"], curve.rows(), cfg["format"])
        outputs.append(path)
        long_rows.extend((param, value, n, r, s) for n, r, s in curve.rows())
    combined = os.path.join(cfg["out"], f"sweep_{param}.{ext}")
    write_table(combined, ["parameter", "value", "sample_size", "power", "stderr"], long_rows, cfg["format"])
    outputs.append(combined)
    outputs += _maybe_plot(cfg, [combined], f"power vs sample size, sweep over {param}")
    write_manifest(os.path.join(cfg["out"], "manifest.json"), "sweep", cfg, outputs, _input_files(cfg))
    for param_, value, n, r, s in long_rows:
        print(f"{param_}={_fmt(value)}  n={n:4d}  power={r:.3f} ± {s:.3f}")
    return EXIT_OK


def cmd_gen(cfg: dict) -> int:
    spec = GeneratorSpec(family=cfg["family"], dims=int(cfg["dims"]), shift=float(cfg["d"]),
                         size=int(cfg["m"]), seed=int(cfg["seed"]))
    X, Y = generate(spec)
    os.makedirs(cfg["out"], exist_ok=True)
    ext = _ext(cfg["format"])
    paths = [os.path.join(cfg["out"], f"X.{ext}"), os.path.join(cfg["out"], f"Y.{ext}")]
    for ds, path in zip((X, Y), paths):
        write_csv(ds, path, delimiter="\t" if ext == "tsv" else ",")
    write_manifest(os.path.join(cfg["out"], "manifest.json"), "gen", cfg, paths, [])
    print(f"wrote {paths[0]} and {paths[1]} ({spec.size} x {spec.dims} each)")
    return EXIT_OK


def cmd_report(cfg: dict) -> int:
    tables = cfg["tables"]
    if not tables:
        raise ConfigError("report: at least one table is required")
    series = [s for t in tables for s in read_series(t, cfg["metric"])]
    svg = render_svg(series, title=cfg["title"] or "", ylabel=cfg["metric"])
    out = cfg["out"]
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    stem = os.path.splitext(out)[0]
    write_manifest(f"{stem}.manifest.json", "report", cfg, [out], list(tables))
    print(f"wrote {out} ({len(series)} series)")
    return EXIT_OK


COMMANDS = {"test": cmd_test, "power": cmd_power, "sweep": cmd_sweep, "gen": cmd_gen, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"qfuse: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError, IsADirectoryError, UnicodeDecodeError) as exc:
        print(f"qfuse: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
