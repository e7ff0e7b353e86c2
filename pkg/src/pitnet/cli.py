"""``pitnet`` command line: gen, solve, oracle, bench.

Exit codes: 0 success, 1 usage error, 2 runtime or solver error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .bench import run_bench, write_outputs
from .contraction import ContractionError, Engine
from .ite import DEFAULT_TAU, ConfigError, ITEOverflowError, SolverConfig, solve
from .mining import InstanceError, MineInstance, brute_force_oracle, default_depth, generate_instance
from .network import NetworkError
from .tensor import SVDFailure, TensorError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

RUNTIME_ERRORS = (OSError, InstanceError, ContractionError, ConfigError, ITEOverflowError,
                  NetworkError, SVDFailure, TensorError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{v} must be at least 1")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text) if text.lstrip("-").isdigit() else None
    if v is None or v < 0:
        raise argparse.ArgumentTypeError(f"{text!r} is not a nonnegative integer")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text} must be positive")
    return v


def parse_sizes(text: str) -> list:
    """``"3,5,7"``, ``"3-13"`` or ``"3-13:2"`` (step), possibly mixed; ``""`` is empty."""
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        try:
            if "-" in part:
                span, _, step = part.partition(":")
                lo, hi = (int(x) for x in span.split("-"))
                out.extend(range(lo, hi + 1, int(step) if step else 1))
            else:
                out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None
    if any(s < 1 for s in out):
        raise argparse.ArgumentTypeError("sizes must be positive")
    return out


def parse_engines(text: str) -> list:
    try:
        engines = [Engine.parse(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not engines:
        raise argparse.ArgumentTypeError("no engine given")
    return engines


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pitnet", description="Tensor-network open-pit mining solver.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--width", type=_positive_int, required=True)
    g.add_argument("--depth", type=_positive_int, help="default: ceil(width / 2)")
    g.add_argument("--seed", type=_nonneg_int, default=0)
    g.add_argument("--out", type=Path, help="instance JSON path (default: stdout)")

    def solver_flags(sp):
        sp.add_argument("--engine", choices=["exact", "bmps"], default="exact")
        sp.add_argument("--chi", type=_positive_int, help="BMPS bond cap (default: none)")
        sp.add_argument("--prune", action="store_true",
                        help="exact engine: drop bond states that are zero on one side first")
        sp.add_argument("--tau", type=_positive_float, default=DEFAULT_TAU)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("instance", type=Path)
    solver_flags(s)
    s.add_argument("--deg-a", type=float, default=1.0, help="measurement diag(a, -1); a > 1 breaks ties")
    s.add_argument("--deg-b", type=float, help="decoding threshold (default (a - 1) / 4 when a > 1)")
    s.add_argument("--check-oracle", action="store_true", help="compare with exhaustive search")
    s.add_argument("--out", type=Path, help="solution JSON path")

    o = sub.add_parser("oracle", help="exhaustive optimum of a small instance")
    o.add_argument("instance", type=Path)
    o.add_argument("--out", type=Path)

    b = sub.add_parser("bench", help="sweep sizes and engines; write bench.csv and SVG charts")
    b.add_argument("--sizes", type=parse_sizes, default=parse_sizes("3-9"),
                   help='e.g. "3,5,7" or "3-13" or "3-13:2"')
    b.add_argument("--seeds-per-size", type=_nonneg_int, default=3)
    b.add_argument("--engines", type=parse_engines, default=parse_engines("exact,bmps:2"),
                   help='comma list of exact, exact+prune, bmps, bmps:K')
    b.add_argument("--tau", type=_positive_float, default=DEFAULT_TAU)
    b.add_argument("--out", type=Path, default=Path("bench-out"), help="output directory")
    b.add_argument("--quiet", action="store_true")
    return p


def _engine(args) -> Engine:
    if args.chi is not None and args.engine != "bmps":
        raise UsageError("--chi only applies to --engine bmps")
    if args.prune and args.engine != "exact":
        raise UsageError("--prune only applies to --engine exact")
    return Engine(args.engine, args.chi, prune=args.prune)


def _write_json(doc: dict, path) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_gen(args) -> int:
    depth = args.depth if args.depth is not None else default_depth(args.width)
    inst = generate_instance(args.width, depth, args.seed)
    _write_json(inst.to_json(), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    engine = _engine(args)
    a = args.deg_a
    b = args.deg_b if args.deg_b is not None else ((a - 1) / 4 if a > 1 else 0.0)
    try:
        cfg = SolverConfig(tau=args.tau, engine=engine, a=a, b=b)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    inst = MineInstance.load(args.instance)
    rep = solve(inst, cfg)
    sol = rep.solution
    doc = sol.to_json()
    print(f"engine {engine.name}  tau {cfg.tau:g}  blocks {inst.n_blocks}")
    print(f"profit {sol.profit:.6f}  violations {sol.violations}  wall time {rep.wall_time:.3f}s")
    if args.check_oracle:
        best = brute_force_oracle(inst)
        matched = sol.violations == 0 and abs(sol.profit - best.profit) <= 1e-9
        print(f"oracle profit {best.profit:.6f}  matched_oracle {str(matched).lower()}")
        doc["matched_oracle"] = matched
    if args.out is not None:
        _write_json(doc, args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = MineInstance.load(args.instance)
    best = brute_force_oracle(inst)
    print(f"profit {best.profit:.6f}  blocks mined {sum(best.assignment)}  of {inst.n_blocks}")
    print(best.bitstring)
    if args.out is not None:
        _write_json(best.to_json(), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    def progress(rec):
        if not args.quiet:
            status = rec.error or f"profit {rec.profit:.4f} violations {rec.violations}"
            print(f"W={rec.width} seed={rec.seed} {rec.engine:>10}  "
                  f"{rec.wall_time_seconds:8.3f}s  {status}", file=sys.stderr)

    records = run_bench(args.sizes, args.seeds_per_size, args.engines, args.tau, progress)
    write_outputs(records, args.out)
    failed = sum(1 for r in records if r.error)
    print(f"{len(records)} runs ({failed} failed) -> {args.out}/bench.csv")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "oracle": cmd_oracle, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pitnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RUNTIME_ERRORS as exc:
        print(f"pitnet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
