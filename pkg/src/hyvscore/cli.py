"""Command-line interface: ``hyvscore run``, ``hyvscore score``, ``hyvscore version``."""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import TABLES, ScenarioFileError, parse_scenario
from .exceptions import HyvScoreError
from .linear_model import LinearModelSpec
from .selection import AlignmentPolicy, run_multivariate, run_prequential
from .simlab import Regressor, ScenarioResult, estimate_rate, run_scenario, MIN_RATE_N

OUT_DIR_ENV = "HYVSCORE_OUT_DIR"
DEFAULT_OUT_DIR = "hyvscore-out"

TRACE_HEADER = ("rep", "n", "model_id", "cumulative_score")
GAPS_HEADER = ("rep", "n", "gap")
SUMMARY_HEADER = ("n", "mean_gap", "stderr", "frac_correct")
RATES_HEADER = ("regressor", "slope", "intercept", "r_squared")


def fmt(x) -> str:
    """Decimal rendering with 17 significant digits (exact round trip)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.16e}"


def table_rows(result: ScenarioResult, table: str):
    """Header and rows of one output table."""
    grid = result.scenario.n_grid
    ids = result.model_ids
    if table == "trace":
        rows = [
            (r, n, mid, result.scores[r, c, j])
            for r in range(result.scores.shape[0])
            for c, n in enumerate(grid)
            for j, mid in enumerate(ids)
        ]
        return TRACE_HEADER, rows
    if table == "gaps":
        rows = [(r, n, result.gaps[r, c]) for r in range(result.gaps.shape[0]) for c, n in enumerate(grid)]
        return GAPS_HEADER, rows
    if table == "summary":
        mean, se, frac = result.mean_gap(), result.stderr_gap(), result.frac_correct()
        return SUMMARY_HEADER, [(n, mean[c], se[c], frac[c]) for c, n in enumerate(grid)]
    if table == "rates":
        rows = []
        for reg in Regressor:
            try:
                est = estimate_rate(grid, result.mean_gap(), reg, min_n=MIN_RATE_N)
                rows.append((reg.value, est.slope, est.intercept, est.r_squared))
            except HyvScoreError:
                rows.append((reg.value, math.nan, math.nan, math.nan))
        return RATES_HEADER, rows
    raise ValueError(f"unknown table {table!r}")


def write_tables(result: ScenarioResult, out_dir: Path, tables=TABLES) -> list:
    """Write the requested CSV tables; on any failure remove what was written."""
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for table in tables:
            header, rows = table_rows(result, table)
            final = out_dir / f"{table}.csv"
            tmp = out_dir / f".{table}.csv.tmp"
            written.append(tmp)
            with open(tmp, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for row in rows:
                    w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
            os.replace(tmp, final)
            written[-1] = final
    except BaseException:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise
    return written


def cmd_run(scenario_path, out_dir=None) -> int:
    try:
        sf = parse_scenario(scenario_path)
    except (OSError, ScenarioFileError) as exc:
        print(f"error: {scenario_path}: {exc}", file=sys.stderr)
        return 2
    target = out_dir or sf.output.directory or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR
    try:
        result = run_scenario(sf.scenario)
        paths = write_tables(result, Path(target), sf.output.tables)
    except (OSError, HyvScoreError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    frac = result.frac_correct()
    for n, f in zip(sf.scenario.n_grid, frac):
        print(f"n={n}: frac_correct={f:.4f}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _parse_model_flag(flag: str, default_sigma_sq, columns):
    """``NAME[:TERMS[:VARIANCE]]``; TERMS is a comma list of column names or 1."""
    parts = flag.split(":")
    if len(parts) > 3 or not parts[0]:
        raise ValueError(f"bad model flag {flag!r}; expected NAME[:TERMS[:VARIANCE]]")
    name = parts[0]
    terms = [t.strip() for t in parts[1].split(",") if t.strip()] if len(parts) > 1 else []
    sigma_sq = default_sigma_sq
    if len(parts) == 3 and parts[2]:
        sigma_sq = None if parts[2].lower() == "unknown" else float(parts[2])
    for t in terms:
        if t != "1" and t not in columns:
            raise ValueError(f"model {name}: unknown column {t!r}")
    return name, terms, sigma_sq


def read_data_csv(path):
    """Return (column dict, n). Column ``y`` is required."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError("data file is empty")
        header = [h.strip() for h in header]
        if "y" not in header:
            raise ValueError("data file has no 'y' column")
        values = [[] for _ in header]
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
            for j, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(f"row {lineno}: non-numeric value {cell!r}") from None
                if not math.isfinite(v):
                    raise ValueError(f"row {lineno}: non-finite value {cell!r}")
                values[j].append(v)
    n = len(values[0])
    if n == 0:
        raise ValueError("data file has no rows")
    return {h: np.array(v) for h, v in zip(header, values)}, n


def cmd_score(data_csv, model_flags, sigma_sq=None, alignment="skip_head", out=sys.stdout) -> int:
    try:
        cols, n = read_data_csv(data_csv)
        y = cols["y"]
        flags = model_flags or ["M1", "M2:1"]
        models = []
        for flag in flags:
            name, terms, s2 = _parse_model_flag(flag, sigma_sq, cols)
            X = np.column_stack([np.ones(n) if t == "1" else cols[t] for t in terms]) if terms else np.zeros((n, 0))
            models.append(LinearModelSpec(X, s2, name))
    except (OSError, ValueError) as exc:
        print(f"error: {data_csv}: {exc}", file=sys.stderr)
        return 2
    try:
        multi = run_multivariate(y, models)
        preq = run_prequential(y, models, AlignmentPolicy(alignment))
    except HyvScoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{'model':<12}{'p':>4}{'variance':>12}{'multivariate':>22}{'prequential':>22}", file=out)
    for m in models:
        var = "unknown" if m.sigma_sq is None else f"{m.sigma_sq:g}"
        mv = multi.final_scores.get(m.name, math.nan)
        pq = preq.final_scores.get(m.name, math.nan)
        print(f"{m.name:<12}{m.p:>4}{var:>12}{mv:>22.12g}{pq:>22.12g}", file=out)
    for label, res in (("multivariate", multi), ("prequential", preq)):
        for mid, why in res.infeasible.items():
            print(f"note: {label} score for {mid} unavailable: {why}", file=out)
    print(f"selected (multivariate): {multi.chosen}", file=out)
    print(f"selected (prequential): {preq.chosen}", file=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyvscore", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo scenario and write CSV tables")
    run.add_argument("scenario", help="scenario YAML file")
    run.add_argument("--out", default=None,
                     help=f"output directory (default: file's output.directory, ${OUT_DIR_ENV}, or ./{DEFAULT_OUT_DIR})")

    score = sub.add_parser("score", help="score candidate models on a data CSV")
    score.add_argument("data", help="CSV with a 'y' column and optional regressor columns")
    score.add_argument("--model", action="append", dest="models", metavar="NAME[:TERMS[:VARIANCE]]",
                       help="candidate model, e.g. M1, M2:1, M3:1,x1:unknown (repeatable)")
    score.add_argument("--sigma-sq", type=float, default=None,
                       help="known variance for models that do not set one (default: unknown)")
    score.add_argument("--alignment", choices=[a.value for a in AlignmentPolicy], default="skip_head")

    sub.add_parser("version", help="print the version")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.scenario, args.out)
    if args.command == "score":
        return cmd_score(args.data, args.models, args.sigma_sq, args.alignment)
    print(__version__)
    return 0


if __name__ == "__main__":
    sys.exit(main())
