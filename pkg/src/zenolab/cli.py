"""Command line entry point: ``zenolab run|sweep|report``.

Exit status is 0 on success, 2 when the configuration or an input CSV is
invalid, and 3 when a numerical check or golden comparison fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import platform
import sys
import tempfile
from collections import defaultdict
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import SWEEP_SCENARIOS, ExperimentConfig, load_config
from .errors import ConfigInvalidError, MalformedCSVError, NumericalFailureError, ZenoLabError
from .scenarios import CSV_COLUMNS, ResultRecord, check_battery, format_float, run_scenario, sweep_rows

log = logging.getLogger("zenolab")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def atomic_write(path: Path, write) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rows(path: Path, rows) -> None:
    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow(r.as_csv())

    atomic_write(path, write)


def read_rows(path: Path) -> list:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                return []
            if tuple(header) != CSV_COLUMNS:
                raise MalformedCSVError(f"{path}: unexpected header {header}")
            rows = []
            for lineno, rec in enumerate(reader, 2):
                if len(rec) != len(CSV_COLUMNS):
                    raise MalformedCSVError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields")
                try:
                    value = float(rec[8])
                except ValueError as exc:
                    raise MalformedCSVError(f"{path}:{lineno}: bad value {rec[8]!r}") from exc
                rows.append(ResultRecord(*rec[:8], value, rec[9]))
            return rows
    except OSError as exc:
        raise MalformedCSVError(f"cannot read {path}: {exc}") from exc


def environment() -> dict:
    return {"zenolab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "threads": os.environ.get("ZENOLAB_THREADS", "1")}


def compare_golden(rows, golden_path: str | None) -> dict | None:
    """Each golden entry is an upper bound on the matching row's value."""
    if not golden_path:
        return None
    try:
        entries = json.loads(Path(golden_path).read_text())["entries"]
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigInvalidError(f"cannot read golden file {golden_path}: {exc}") from exc
    by_key = {r.golden_key(): r.value for r in rows}
    out = {}
    for key, bound in sorted(entries.items()):
        value = by_key.get(key)
        out[key] = {"value": value, "golden": bound, "pass": value is not None and value <= bound}
    return out


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if args.seed is not None:
        if cfg.scenario == "identity-battery":
            updates["battery.seed"] = str(args.seed)
        else:
            updates["operator.seed"] = str(args.seed)
    if args.tol is not None:
        updates["tol.identity"] = repr(args.tol)
    if args.out is not None:
        updates["output.dir"] = args.out
    return cfg.with_overrides(**updates)


def _summary(cfg: ExperimentConfig, rows, extras: dict, golden) -> dict:
    summary = {
        "scenario": cfg.scenario,
        "config": cfg.raw,
        "canonical_config": cfg.canonical(),
        "config_hash": cfg.config_hash,
        "environment": environment(),
        "rows": len(rows),
    }
    for key in ("rng", "monotonicity", "probe_decreasing", "battery_worst", "battery_limits", "battery_failed"):
        if key in extras:
            summary[key] = extras[key]
    if "metadata" in extras:
        summary["metadata"] = {k: v for k, v in extras["metadata"].items()}
    if golden is not None:
        summary["golden"] = golden
    return summary


def _write_summary(path: Path, summary: dict) -> None:
    atomic_write(path, lambda fh: json.dump(summary, fh, indent=2, sort_keys=True, default=str))


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = Path(cfg["output.dir"])
    rows, extras = run_scenario(cfg)
    write_rows(out / f"{cfg.scenario}.csv", rows)
    if "trajectory" in extras:
        traj = extras.pop("trajectory")

        def write(fh):
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("nu", "re", "im", "modulus", "unwrapped_phase"))
            for nu, val, ph in zip(traj.nu, traj.values, traj.unwrapped_phase):
                w.writerow([format_float(nu), format_float(val.real), format_float(val.imag),
                            format_float(abs(val)), format_float(ph)])

        atomic_write(out / f"{cfg.scenario}_trajectory.csv", write)
    golden = compare_golden(rows, args.golden)
    _write_summary(out / f"{cfg.scenario}_summary.json", _summary(cfg, rows, extras, golden))
    check_battery(extras)
    if golden is not None and not all(g["pass"] for g in golden.values()):
        failed = [k for k, g in golden.items() if not g["pass"]]
        raise NumericalFailureError(f"golden comparison failed for {failed}")
    print(f"wrote {len(rows)} rows to {out / (cfg.scenario + '.csv')}")
    return EXIT_OK


def parse_n_list(text: str) -> list:
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            n = int(tok.split("^")[0]) ** int(tok.split("^")[1]) if "^" in tok else int(tok)
        except ValueError as exc:
            raise ConfigInvalidError(f"bad n value {tok!r}") from exc
        if n < 1:
            raise ConfigInvalidError(f"n must be positive, got {n}")
        vals.append(n)
    unique = sorted(set(vals))
    if len(unique) != len(vals):
        log.warning("duplicate n values in override removed: %s", text)
    return unique


def cmd_sweep(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    if cfg.scenario not in SWEEP_SCENARIOS:
        raise ConfigInvalidError(f"scenario {cfg.scenario!r} has no n-sweep")
    n_values = parse_n_list(args.n) if args.n else cfg["sweep.n"]
    path = Path(cfg["output.dir"]) / f"{cfg.scenario}_sweep.csv"
    existing = read_rows(path) if path.exists() else []
    done = {(r.config_hash, r.n) for r in existing}
    rows = list(existing)
    for n in n_values:
        if (cfg.config_hash, str(n)) in done:
            log.info("n=%d already present for %s, skipping", n, cfg.config_hash)
            continue
        new, _ = sweep_rows(cfg, [n])
        keys = {r.key() for r in rows}
        rows.extend(r for r in new if r.key() not in keys)
        write_rows(path, rows)
    print(f"{len(rows)} rows in {path}")
    return EXIT_OK


def _base_metric(metric: str) -> str:
    return metric.split("[", 1)[0]


def render_report(rows) -> str:
    """Per-scenario tables: error ranges per n, monotonicity, residual maxima."""
    by_scenario = defaultdict(list)
    for r in rows:
        by_scenario[r.scenario].append(r)
    lines = []
    for scenario in sorted(by_scenario):
        group = by_scenario[scenario]
        lines.append(f"== {scenario} ==")
        sweep = [r for r in group if r.scheme_shape]
        if sweep:
            metrics = sorted({r.metric for r in sweep})
            lines.append("n".ljust(8) + "".join(f" {m + ' min':>23} {m + ' max':>23}" for m in metrics))
            for n in sorted({int(r.n) for r in sweep}):
                cells = []
                for m in metrics:
                    vals = [r.value for r in sweep if int(r.n) == n and r.metric == m]
                    cells.append(f" {min(vals):>23.6e} {max(vals):>23.6e}")
                lines.append(f"{n:<8d}" + "".join(cells))
            schemes = sorted({(r.scheme_shape, r.sampling, r.epsilon) for r in sweep})
            for s in schemes:
                flags = []
                for m in metrics:
                    seq = sorted((int(r.n), r.value) for r in sweep if (r.scheme_shape, r.sampling, r.epsilon) == s
                                 and r.metric == m)
                    dec = all(b[1] < a[1] for a, b in zip(seq, seq[1:]))
                    flags.append(f"{m}={'decreasing' if dec else 'NON-MONOTONE'}")
                lines.append(f"monotonicity {'/'.join(s)}: " + ", ".join(flags))
        other = [r for r in group if not r.scheme_shape]
        maxima = defaultdict(lambda: -np.inf)
        for r in other:
            maxima[_base_metric(r.metric)] = max(maxima[_base_metric(r.metric)], r.value)
        for m in sorted(maxima):
            lines.append(f"max {m}: {maxima[m]:.6e}")
    return "\n".join(lines)


def cmd_report(args) -> int:
    rows = []
    for p in args.csv:
        rows.extend(read_rows(Path(p)))
    text = render_report(rows)
    if text:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--golden", help="JSON file of golden upper bounds")
    common.add_argument("--seed", type=int, help="override the operator (or battery) seed")
    common.add_argument("--tol", type=float, help="override the exact-identity tolerance")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="zenolab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run a scenario from a config file or preset name")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", parents=[common], help="run a convergence sweep with an overridden n list")
    p.add_argument("config")
    p.add_argument("--n", help="comma-separated n values, e.g. 64,128 or 2^6,2^7")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("report", parents=[common], help="summarize result CSV files")
    p.add_argument("csv", nargs="*")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigInvalidError, MalformedCSVError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailureError, ZenoLabError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
