"""Compiled vs numpy exhaustive-search kernels on mining instances.

    python3 benchmarks/bench_kernels.py [--widths 5,7] [--repeat 3]

Both implementations must return the same optimum; the script exits
nonzero if they disagree or if the compiled module is not built.
"""

import argparse
import sys
import time

import numpy as np

from pitnet import _kernels_py
from pitnet.mining import _parent_masks, default_depth, generate_instance

try:
    from pitnet import _kernels
except ImportError:
    _kernels = None


def timed(fn, *args, repeat=3):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--widths", default="5,7")
    ap.add_argument("--depth", type=int, help="default: ceil(width / 2)")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        return 1
    print(f"{'width':>5} {'blocks':>6} {'compiled s':>11} {'numpy s':>9} {'speedup':>8}  optimum")
    for w in (int(x) for x in args.widths.split(",")):
        inst = generate_instance(w, args.depth or default_depth(w), 0)
        weights = np.ascontiguousarray(inst.block_weights)
        masks = _parent_masks(inst)
        tc, rc = timed(_kernels.best_feasible, weights, masks, repeat=args.repeat)
        tp, rp = timed(_kernels_py.best_feasible, weights, masks, repeat=args.repeat)
        if rc[0] != rp[0]:
            print(f"width {w}: implementations disagree ({rc} vs {rp})")
            return 1
        print(f"{w:>5} {inst.n_blocks:>6} {tc:>11.4f} {tp:>9.4f} {tp / tc:>7.1f}x  {rc[1]:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
