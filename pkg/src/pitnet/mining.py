"""2D open-pit mining: instances, 45-degree slope constraints, evaluation and oracle.

Grid convention: ``weights[i_x, i_y]`` is the block at depth ``i_x`` (row 0
is the surface) and column ``i_y``. Block ``(i_x, i_y)`` can only be mined
if its three upper neighbours ``(i_x - 1, i_y - 1 .. i_y + 1)`` are, so the
reachable region is the inverted triangle ``i_x <= i_y <= W - 1 - i_x``.
Assignments are bit vectors over the excavatable blocks in row-major order.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from . import kernels
from .network import LocalConstraint, TensorNetwork, build_network

ORACLE_MAX_BLOCKS = 24


class InstanceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MineInstance:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.size == 0:
            raise InstanceError("weights must be a nonempty depth x width grid")
        if not np.all(np.isfinite(w)):
            raise InstanceError("weights must be finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def depth(self) -> int:
        return self.weights.shape[0]

    @property
    def width(self) -> int:
        return self.weights.shape[1]

    @cached_property
    def mask(self) -> np.ndarray:
        return excavatable_mask(self.width, self.depth)

    @cached_property
    def blocks(self) -> list:
        """Excavatable ``(i_x, i_y)`` in row-major order."""
        return [tuple(map(int, b)) for b in np.argwhere(self.mask)]

    @cached_property
    def index(self) -> dict:
        return {b: i for i, b in enumerate(self.blocks)}

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @cached_property
    def block_weights(self) -> np.ndarray:
        return np.array([self.weights[b] for b in self.blocks])

    @cached_property
    def parents(self) -> list:
        """Parent variable indices of every excavatable block."""
        out = []
        for r, c in self.blocks:
            ps = []
            if r > 0:
                for dc in (-1, 0, 1):
                    p = (r - 1, c + dc)
                    # the triangle guarantees parents of reachable blocks are reachable
                    assert p in self.index, f"parent {p} of {(r, c)} outside the excavatable region"
                    ps.append(self.index[p])
            out.append(ps)
        return out

    def to_json(self) -> dict:
        return {"width": self.width, "depth": self.depth, "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "MineInstance":
        try:
            width, depth = int(doc["width"]), int(doc["depth"])
            w = np.array(doc["weights"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceError(f"malformed instance: {exc}") from exc
        if w.shape != (depth, width):
            raise InstanceError(f"weights have shape {w.shape}, expected ({depth}, {width})")
        return cls(w)

    @classmethod
    def load(cls, path) -> "MineInstance":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InstanceError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_json(doc)


def excavatable_mask(width: int, depth: int) -> np.ndarray:
    ix, iy = np.indices((depth, width))
    return (iy >= ix) & (iy <= width - 1 - ix)


def default_depth(width: int) -> int:
    return (width + 1) // 2


def generate_instance(width: int, depth: int, seed: int) -> MineInstance:
    """Weights i.i.d. Normal(0.1, 1) from ``numpy.random.default_rng(seed)``."""
    if width < 1 or depth < 1:
        raise InstanceError("width and depth must be at least 1")
    rng = np.random.default_rng(seed)
    return MineInstance(rng.normal(0.1, 1.0, size=(depth, width)))


@dataclass(frozen=True)
class Solution:
    assignment: tuple
    profit: float
    violations: int

    @property
    def bitstring(self) -> str:
        return "".join(str(int(b)) for b in self.assignment)

    def to_json(self) -> dict:
        return {"assignment": self.bitstring, "profit": self.profit, "violations": self.violations}

    @classmethod
    def from_json(cls, doc: dict) -> "Solution":
        return cls(tuple(int(b) for b in doc["assignment"]), float(doc["profit"]), int(doc["violations"]))


def _bits(inst: MineInstance, assignment) -> np.ndarray:
    x = np.asarray([int(b) for b in assignment], dtype=np.int64)
    if x.shape != (inst.n_blocks,):
        raise InstanceError(f"assignment covers {len(x)} blocks, instance has {inst.n_blocks}")
    if np.any((x != 0) & (x != 1)):
        raise InstanceError("assignment must be binary")
    return x


def evaluate_solution(inst: MineInstance, assignment):
    """``(profit, violations)``; each unmined parent of a mined block counts once."""
    x = _bits(inst, assignment)
    profit = 0.0
    for i in range(inst.n_blocks):
        if x[i]:
            profit += inst.block_weights[i]
    violations = sum(int(x[i] and not x[p]) for i in range(inst.n_blocks) for p in inst.parents[i])
    return float(profit), violations


def make_solution(inst: MineInstance, assignment) -> Solution:
    x = _bits(inst, assignment)
    profit, violations = evaluate_solution(inst, x)
    return Solution(tuple(int(b) for b in x), profit, violations)


def slope_constraints(inst: MineInstance) -> list:
    """One implication constraint ``child -> all parents`` per non-surface block.

    Scope order is ``(parents left to right..., child)``.
    """
    out = []
    for i, ps in enumerate(inst.parents):
        if not ps:
            continue
        k = len(ps)
        allowed = [bits + (0,) for bits in itertools.product((0, 1), repeat=k)]
        allowed.append((1,) * (k + 1))
        out.append(LocalConstraint(tuple(ps) + (i,), allowed))
    return out


def build_mining_network(inst: MineInstance) -> TensorNetwork:
    """Constraint network over the excavatable blocks, laid out in rows.

    Row ``r`` of the layout holds the copy tensors of depth ``r`` followed,
    column by column, by the constraint tensors of the children at depth
    ``r + 1``: the constraint of child ``(r + 1, c)`` sits right after the
    copy tensor of ``(r, c + 1)``, its rightmost parent. Boundaries between
    rows then carry exactly one leg per block.
    """
    if inst.n_blocks == 0:
        raise InstanceError("instance has no excavatable block")
    cons = slope_constraints(inst)
    net = build_network(inst.n_blocks, cons)
    layout = [(r, (c, 0)) for r, c in inst.blocks]
    for con in cons:
        r, c = inst.blocks[con.scope[-1]]
        layout.append((r - 1, (c + 1, 1)))
    return replace(net, layout=tuple(layout), meta={"width": inst.width, "depth": inst.depth})


def _parent_masks(inst: MineInstance) -> np.ndarray:
    n = inst.n_blocks
    out = np.zeros(n, dtype=np.uint64)
    for i, ps in enumerate(inst.parents):
        m = 0
        for p in ps:
            m |= 1 << (n - 1 - p)
        out[i] = m
    return out


def _unpack(mask: int, n: int) -> tuple:
    return tuple((mask >> (n - 1 - i)) & 1 for i in range(n))


def brute_force_oracle(inst: MineInstance) -> Solution:
    """Best feasible pit by exhaustive enumeration.

    Ties: fewer mined blocks first, then the lexicographically smallest
    assignment.
    """
    n = inst.n_blocks
    if n > ORACLE_MAX_BLOCKS:
        raise InstanceError(f"{n} excavatable blocks exceed the oracle limit of {ORACLE_MAX_BLOCKS}")
    mask, _ = kernels.best_feasible(np.ascontiguousarray(inst.block_weights), _parent_masks(inst))
    return make_solution(inst, _unpack(mask, n))


def count_feasible_pits(inst: MineInstance) -> int:
    if inst.n_blocks > ORACLE_MAX_BLOCKS:
        raise InstanceError("too many blocks for exhaustive counting")
    return kernels.count_feasible(_parent_masks(inst))


def optimal_solutions(inst: MineInstance, tol: float = 1e-9) -> list:
    """Every feasible pit whose profit is within ``tol`` of the optimum.

    Plain enumeration over all assignments, independent of the search
    kernels; meant for checking tie handling on small instances.
    """
    n = inst.n_blocks
    if n > 20:
        raise InstanceError("too many blocks to enumerate every optimum")
    bits = (np.arange(1 << n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    ok = np.ones(len(bits), dtype=bool)
    for i, ps in enumerate(inst.parents):
        for p in ps:
            ok &= ~((bits[:, i] == 1) & (bits[:, p] == 0))
    feasible = bits[ok]
    profit = feasible @ inst.block_weights
    best = profit.max()
    return [make_solution(inst, x) for x in feasible[profit >= best - tol]]
