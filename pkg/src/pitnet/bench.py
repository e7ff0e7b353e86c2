"""Benchmark sweep over mine sizes and engines: one CSV plus three SVG charts."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

from .contraction import Engine
from .ite import SolverConfig, solve
from .mining import ORACLE_MAX_BLOCKS, MineInstance, brute_force_oracle, default_depth, generate_instance

PROFIT_TOL = 1e-9


@dataclass
class BenchRecord:
    width: int
    depth: int
    seed: int
    engine: str
    chi: Optional[int]
    tau: float
    wall_time_seconds: Optional[float]
    profit: Optional[float]
    normalized_profit: Optional[float]
    violations: Optional[int]
    matched_oracle: Optional[bool]
    reference_source: str
    error: str = ""


CSV_COLUMNS = [f.name for f in fields(BenchRecord)]


@dataclass
class Reference:
    profit: Optional[float]
    source: str  # "oracle", "bmps" or "none"


def reference_profit(inst: MineInstance, tau: float) -> Reference:
    """Oracle optimum when enumeration is affordable, else the unbounded BMPS solve."""
    if inst.n_blocks <= ORACLE_MAX_BLOCKS:
        return Reference(brute_force_oracle(inst).profit, "oracle")
    try:
        rep = solve(inst, SolverConfig(tau=tau, engine=Engine("bmps")))
    except Exception:
        return Reference(None, "none")
    if rep.solution.violations:
        return Reference(None, "none")
    return Reference(rep.solution.profit, "bmps")


def normalize_profit(profit: float, ref: float) -> float:
    # an empty pit can be optimal; then only another zero-profit pit scores 1
    if abs(ref) <= PROFIT_TOL:
        return 1.0 if abs(profit) <= PROFIT_TOL else float("nan")
    return profit / ref


def run_cell(inst: MineInstance, seed: int, engine: Engine, tau: float, ref: Reference) -> BenchRecord:
    base = dict(width=inst.width, depth=inst.depth, seed=seed, engine=engine.name,
                chi=engine.chi, tau=tau, reference_source=ref.source)
    t0 = time.perf_counter()
    try:
        rep = solve(inst, SolverConfig(tau=tau, engine=engine))
    except Exception as exc:  # recorded, the sweep goes on
        return BenchRecord(**base, wall_time_seconds=time.perf_counter() - t0, profit=None,
                           normalized_profit=None, violations=None, matched_oracle=None,
                           error=f"{type(exc).__name__}: {exc}")
    sol = rep.solution
    norm = normalize_profit(sol.profit, ref.profit) if ref.profit is not None else None
    matched = None
    if ref.source == "oracle":
        matched = sol.violations == 0 and abs(sol.profit - ref.profit) <= PROFIT_TOL
    return BenchRecord(**base, wall_time_seconds=rep.wall_time, profit=sol.profit,
                       normalized_profit=norm, violations=sol.violations, matched_oracle=matched)


def run_bench(sizes, seeds_per_size: int, engines, tau: float, progress=None) -> list:
    """Records ordered by (size, seed, engine) with engines in the order given."""
    records = []
    for w in sizes:
        for seed in range(seeds_per_size):
            inst = generate_instance(w, default_depth(w), seed)
            ref = reference_profit(inst, tau)
            for eng in engines:
                rec = run_cell(inst, seed, eng, tau, ref)
                records.append(rec)
                if progress is not None:
                    progress(rec)
    return records


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_cell(v) for v in astuple(r)])


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# charts

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def series(rows: list, column: str) -> dict:
    """``{engine: [(width, mean value)]}`` over rows where ``column`` parsed."""
    acc = {}
    for row in rows:
        try:
            v = float(row[column])
        except (TypeError, ValueError):
            continue
        if math.isnan(v):
            continue
        acc.setdefault(row["engine"], {}).setdefault(int(row["width"]), []).append(v)
    return {e: sorted((w, float(np.mean(vs))) for w, vs in by_w.items()) for e, by_w in acc.items()}


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + k * step for k in range(n)]


def line_chart(data: dict, title: str, ylabel: str, log_y: bool = False,
               width: int = 640, height: int = 400) -> str:
    """Self-contained SVG line chart, one polyline per series."""
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    pts = [(x, y) for s in data.values() for x, y in s if not (log_y and y <= 0)]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>']
    if not pts:
        out.append(f'<text x="{width / 2}" y="{height / 2}" text-anchor="middle">no data</text>')
        out.append("</svg>")
        return "\n".join(out)
    fy = (lambda y: math.log10(y)) if log_y else (lambda y: y)
    xs = [x for x, _ in pts]
    ys = [fy(y) for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + ph - (fy(y) - y0) / (y1 - y0) * ph

    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for x in sorted(set(xs)):
        out.append(f'<line x1="{px(x):.1f}" y1="{top + ph}" x2="{px(x):.1f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(x):.1f}" y="{top + ph + 18}" text-anchor="middle">{x:g}</text>')
    for t in _ticks(y0, y1):
        yy = top + ph - (t - y0) / (y1 - y0) * ph
        label = f"{10 ** t:.3g}" if log_y else f"{t:.3g}"
        out.append(f'<line x1="{left - 5}" y1="{yy:.1f}" x2="{left}" y2="{yy:.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{yy + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">mine width</text>')
    out.append(f'<text x="18" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2})">{escape(ylabel)}</text>')
    for k, (name, s) in enumerate(sorted(data.items())):
        color = PALETTE[k % len(PALETTE)]
        s = [(x, y) for x, y in s if not (log_y and y <= 0)]
        coords = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in s)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in s:
            out.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{color}"/>')
        ly = top + 10 + 18 * k
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out)


CHARTS = [
    ("time.svg", "wall_time_seconds", "Wall time per solve", "seconds (log scale)", True),
    ("profit.svg", "normalized_profit", "Normalized profit", "profit / reference", False),
    ("violations.svg", "violations", "Slope violations", "violated parent edges", False),
]


def write_charts(rows: list, out_dir) -> list:
    paths = []
    for name, col, title, ylabel, log_y in CHARTS:
        p = Path(out_dir) / name
        p.write_text(line_chart(series(rows, col), title, ylabel, log_y))
        paths.append(p)
    return paths


def write_outputs(records, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(records, out_dir / "bench.csv")
    write_charts(read_csv(out_dir / "bench.csv"), out_dir)
