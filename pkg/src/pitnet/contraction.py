"""Contraction engines for closed (double-layer) networks.

Two routes are provided:

* :func:`contract_closed` -- greedy pairwise contraction, exact.
* :func:`bmps_contract` -- row-by-row boundary MPS sweep over a
  :class:`LayeredNetwork`, with bond truncation after every row.

Scalars are returned as ``(mantissa, log_scale)`` so that the value is
``mantissa * exp(log_scale)``; intermediates are rescaled as they go.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .tensor import (
    EXACT,
    Tensor,
    TensorError,
    TruncationPolicy,
    contract,
    contract_many,
    split_truncated,
)

DEFAULT_MEM_LIMIT = 2 * 1024 ** 3
LOSSLESS = TruncationPolicy(rel_threshold=0.0)


class ContractionError(RuntimeError):
    pass


class ContractionMemoryError(ContractionError):
    pass


class ZeroNormError(ContractionError):
    """The state has zero norm: no assignment satisfies every constraint."""


def mem_limit_bytes() -> int:
    """Memory ceiling per contraction; ``PITNET_MEM_LIMIT_BYTES`` overrides the default."""
    env = os.environ.get("PITNET_MEM_LIMIT_BYTES")
    if not env:
        return DEFAULT_MEM_LIMIT
    try:
        limit = int(env)
    except ValueError:
        raise ContractionError(f"PITNET_MEM_LIMIT_BYTES={env!r} is not an integer") from None
    if limit <= 0:
        raise ContractionError("PITNET_MEM_LIMIT_BYTES must be positive")
    return limit


def _normalize(t: Tensor):
    m = float(np.max(np.abs(t.data))) if t.size else 0.0
    if m == 0.0 or m == 1.0:
        return t, 0.0
    return Tensor._fresh(t.labels, t.data / m), float(np.log(m))


# ---------------------------------------------------------------------------
# greedy exact contraction

@dataclass(frozen=True)
class ContractionPlan:
    """Pairwise steps over node ids; new nodes get ids ``n, n+1, ...``."""

    n_inputs: int
    steps: tuple
    peak_size: int

    def final_ids(self) -> list:
        alive = set(range(self.n_inputs))
        nxt = self.n_inputs
        for a, b in self.steps:
            alive -= {a, b}
            alive.add(nxt)
            nxt += 1
        return sorted(alive)


def greedy_plan(shapes: Sequence[dict]) -> ContractionPlan:
    """Repeatedly contract the connected pair with the smallest result.

    ``shapes`` holds one ``{label: extent}`` dict per tensor. Ties go to the
    pair with the smallest node ids. Disconnected components are finished
    independently and multiplied together afterwards.
    """
    nodes = {i: dict(s) for i, s in enumerate(shapes)}
    owners = {}
    for i, s in nodes.items():
        for l in s:
            owners.setdefault(l, set()).add(i)
    steps = []
    peak = max((int(np.prod(list(s.values()))) for s in nodes.values()), default=1)
    nxt = len(nodes)
    while True:
        best = None
        for l, own in owners.items():
            if len(own) != 2:
                continue
            a, b = sorted(own)
            sa, sb = nodes[a], nodes[b]
            res = 1
            for lab, d in sa.items():
                if lab not in sb:
                    res *= d
            for lab, d in sb.items():
                if lab not in sa:
                    res *= d
            key = (res, a, b)
            if best is None or key < best:
                best = key
        if best is None:
            break
        res, a, b = best
        sa, sb = nodes.pop(a), nodes.pop(b)
        merged = {l: d for l, d in sa.items() if l not in sb}
        merged.update({l: d for l, d in sb.items() if l not in sa})
        for l in sa:
            owners[l].discard(a)
        for l in sb:
            owners[l].discard(b)
        for l in list(owners):
            if l in sa and l in sb:
                del owners[l]
        for l in merged:
            owners[l].add(nxt)
        nodes[nxt] = merged
        steps.append((a, b))
        peak = max(peak, res)
        nxt += 1
    return ContractionPlan(len(shapes), tuple(steps), peak)


def _execute(tensors: Sequence[Tensor], plan: ContractionPlan):
    nodes = dict(enumerate(tensors))
    log_scale = 0.0
    nxt = len(tensors)
    for a, b in plan.steps:
        t = contract(nodes.pop(a), nodes.pop(b))
        t, ls = _normalize(t)
        log_scale += ls
        nodes[nxt] = t
        nxt += 1
    rest = [nodes[i] for i in sorted(nodes)]
    out = rest[0]
    for t in rest[1:]:
        out = contract(out, t)
    out, ls = _normalize(out)
    return out, log_scale + ls


def _check_memory(plan: ContractionPlan, limit: Optional[int]):
    limit = mem_limit_bytes() if limit is None else limit
    need = plan.peak_size * 8
    if need > limit:
        raise ContractionMemoryError(
            f"exact contraction needs a {need / 2**20:.1f} MiB intermediate, above the "
            f"{limit / 2**20:.1f} MiB ceiling; use the bmps engine with a bond cap")


def _shapes(tensors):
    return [dict(zip(t.labels, t.dims)) for t in tensors]


def contract_closed(tensors, plan: Optional[ContractionPlan] = None, mem_limit: Optional[int] = None):
    """Contract a closed network to ``(mantissa, log_scale)``."""
    tensors = list(getattr(tensors, "tensors", tensors))
    if not tensors:
        return 1.0, 0.0
    if plan is None:
        plan = greedy_plan(_shapes(tensors))
    _check_memory(plan, mem_limit)
    out, log_scale = _execute(tensors, plan)
    if out.labels:
        raise ContractionError(f"network is not closed: open labels {out.labels}")
    value = out.item()
    return value, (log_scale if value else 0.0)


def contract_closed_tensor(tensors, mem_limit: Optional[int] = None) -> Tensor:
    """Contract a possibly open network down to one tensor (scale applied)."""
    tensors = list(tensors)
    plan = greedy_plan(_shapes(tensors))
    _check_memory(plan, mem_limit)
    out, log_scale = _execute(tensors, plan)
    return Tensor._fresh(out.labels, out.data * np.exp(log_scale))


# ---------------------------------------------------------------------------
# double layer

def _fuse_pairs(data: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    # data axes: ket legs then bra legs, same order; interleave and fuse
    k = len(dims)
    perm = [x for i in range(k) for x in (i, k + i)]
    return data.transpose(perm).reshape([d * d for d in dims])


def sandwich(t: Tensor, ops: Optional[dict] = None) -> Tensor:
    """``<t| O |t>`` over the physical legs listed in ``ops``.

    ``ops`` maps physical label to a diagonal ``(o0, o1)`` (or ``None`` for
    identity). Every other leg becomes a fused ket/bra leg of extent ``d**2``.
    """
    ops = ops or {}
    ket = t.data
    phys = [l for l in t.labels if l in ops]
    for l in phys:
        diag = ops[l]
        if diag is None:
            continue
        shape = [1] * ket.ndim
        ax = t.labels.index(l)
        shape[ax] = len(diag)
        ket = ket * np.asarray(diag, dtype=np.float64).reshape(shape)
    axes = [t.labels.index(l) for l in phys]
    virt = [l for l in t.labels if l not in ops]
    data = np.tensordot(ket, t.data, axes=(axes, axes))
    dims = [t.dim(l) for l in virt]
    return Tensor._fresh(tuple(virt), _fuse_pairs(data, dims) if virt else data)


def _phys_by_tensor(net) -> dict:
    out = {}
    for var, (k, lab) in enumerate(net.physical):
        out.setdefault(k, {})[lab] = var
    return out


def double_layer(net, ops: Optional[dict] = None, prune: bool = False) -> list:
    """Closed norm network of ``net``; ``ops`` maps variable -> ``(o0, o1)``.

    With ``prune`` every fused bond is cut down to its joint support.
    """
    ops = ops or {}
    phys = _phys_by_tensor(net)
    nodes = [sandwich(t, {l: ops.get(v) for l, v in phys.get(k, {}).items()})
             for k, t in enumerate(net.tensors)]
    if prune:
        support = BondSupport.from_nodes(
            [_abs_sandwich(t, list(phys.get(k, {}))) for k, t in enumerate(net.tensors)])
        nodes = [support.apply(t) for t in nodes]
    return nodes


# ---------------------------------------------------------------------------
# layered networks and boundary sweeps

@dataclass
class LayeredNetwork:
    """Closed network arranged in rows.

    A bond joins two tensors of the same row or of adjacent rows. Row order
    is the left-to-right order used when zipping a boundary into the row.
    """

    rows: list

    def __post_init__(self):
        rows = [list(r) for r in self.rows]
        if not rows or any(not r for r in rows):
            raise ContractionError("layered network needs nonempty rows")
        where = {}
        for r, row in enumerate(rows):
            for t in row:
                for l in t.labels:
                    where.setdefault(l, []).append(r)
        for l, rs in where.items():
            if len(rs) != 2:
                raise ContractionError(f"label {l!r} appears {len(rs)} times; network not closed")
            if abs(rs[0] - rs[1]) > 1:
                raise ContractionError(f"bond {l!r} skips a row")
        self.rows = rows

    @property
    def tensors(self) -> list:
        return [t for row in self.rows for t in row]


@dataclass
class BoundaryState:
    """MPS whose tensors attach to ``sites`` of the next row.

    ``scalar`` holds the mantissa of components that already closed off.
    """

    tensors: list
    sites: list
    log_scale: float = 0.0
    scalar: float = 1.0

    @property
    def bond_dims(self) -> list:
        out = []
        for a, b in zip(self.tensors, self.tensors[1:]):
            shared = [l for l in a.labels if l in b.labels]
            out.append(a.dim(shared[0]) if shared else 1)
        return out


@dataclass
class SweepStats:
    max_bond: int = 1
    max_truncation_error: float = 0.0
    bond_history: list = field(default_factory=list)


class _ZeroBoundary(Exception):
    pass


def _ones(label) -> Tensor:
    return Tensor._fresh((label,), np.ones(1))


def _guard(a: Tensor, b: Tensor, limit: int) -> Tensor:
    size = 1
    for l, d in zip(a.labels, a.dims):
        if l not in b.labels:
            size *= d
    for l, d in zip(b.labels, b.dims):
        if l not in a.labels:
            size *= d
    if size * 8 > limit:
        raise ContractionMemoryError(
            f"boundary intermediate of {size * 8 / 2**20:.1f} MiB exceeds the memory ceiling")
    return contract(a, b)


def _compress(chain: list, bonds: list, policy: TruncationPolicy, stats: SweepStats) -> list:
    """Right-orthonormalize, then truncate left to right under ``policy``."""
    # a dim-1 pad leg keeps every split a proper bipartition
    chain = [contract(t, _ones("#")) for t in chain]
    for k in range(len(chain) - 1, 0, -1):
        b = bonds[k - 1]
        left, right, _ = split_truncated(chain[k], (b,), LOSSLESS, bond="~", absorb="left")
        chain[k] = right.relabel({"~": b})
        chain[k - 1] = contract(chain[k - 1], left).relabel({"~": b})
    for k in range(len(chain) - 1):
        b = bonds[k]
        keep = tuple(l for l in chain[k].labels if l != b)
        left, right, err = split_truncated(chain[k], keep, policy, bond="~", absorb="right")
        chain[k] = left.relabel({"~": b})
        chain[k + 1] = contract(right, chain[k + 1]).relabel({"~": b})
        stats.max_truncation_error = max(stats.max_truncation_error, err)
    return [t.fix("#", 0) for t in chain]


def _row_items(boundary: Optional[BoundaryState], row: list) -> list:
    attached = dict(zip(boundary.sites, boundary.tensors)) if boundary is not None else {}
    items = []
    for j, site in enumerate(row):
        if j in attached:
            items.append(attached[j])
        items.append(site)
    return items


def _absorb_row(boundary: Optional[BoundaryState], row: list, targets: list,
                policy: TruncationPolicy, tag: str, stats: SweepStats, limit: int) -> BoundaryState:
    """Zip ``row`` into ``boundary`` and regroup the open legs by ``targets``.

    ``targets`` lists ``(site, legs)`` for every next-row site that has legs
    into this row, in row order. Tensors are absorbed left to right into a
    running carry; as soon as a target's legs are all present they are split
    off as the next MPS tensor. The new MPS is then compressed.
    """
    log_scale = boundary.log_scale if boundary is not None else 0.0
    scalar = boundary.scalar if boundary is not None else 1.0
    out, bonds = [], []
    carry, left = None, None
    k, p = 0, len(targets)

    def emit(carry, left, k):
        bond = f"{tag}.{k}"
        want = set(targets[k][1])
        lefts = tuple(l for l in carry.labels if l == left or l in want)
        if len(lefts) == len(carry.labels):
            return contract(carry, _ones(bond)), _ones(bond), bond
        d, carry, _ = split_truncated(carry, lefts, LOSSLESS, bond=bond, absorb="right")
        return d, carry, bond

    for item in _row_items(boundary, row):
        carry = item if carry is None else _guard(carry, item, limit)
        carry, ls = _normalize(carry)
        log_scale += ls
        while k < p - 1 and set(targets[k][1]) <= set(carry.labels):
            d, carry, left = emit(carry, left, k)
            out.append(d)
            bonds.append(left)
            k += 1
    if np.max(np.abs(carry.data)) == 0.0:
        raise _ZeroBoundary()
    if p == 0:
        if carry.labels:
            raise ContractionError(f"open labels {carry.labels} left after the row")
        return BoundaryState([], [], log_scale, scalar * carry.item())
    while k < p - 1:
        missing = set(targets[k][1]) - set(carry.labels)
        if missing:
            raise ContractionError(f"legs {missing} never reached the boundary")
        d, carry, left = emit(carry, left, k)
        out.append(d)
        bonds.append(left)
        k += 1
    stray = set(carry.labels) - set(targets[p - 1][1]) - {left}
    if stray:
        raise ContractionError(f"labels {stray} skip a row")
    out.append(carry)
    out = _compress(out, bonds, policy, stats)
    normed = []
    for t in out:
        t, ls = _normalize(t)
        log_scale += ls
        normed.append(t)
    state = BoundaryState(normed, [j for j, _ in targets], log_scale, scalar)
    dims = state.bond_dims
    stats.bond_history.append(dims)
    stats.max_bond = max([stats.max_bond] + dims)
    return state


def _targets(row: list, prev_labels: set) -> list:
    out = []
    for j, t in enumerate(row):
        legs = [l for l in t.labels if l in prev_labels]
        if legs:
            out.append((j, legs))
    return out


def _sweep(rows: list, policy: TruncationPolicy, tag: str, stats: SweepStats, limit: int):
    """Boundaries in front of every row, and the closing ``(value, log)``."""
    envs = [None]
    boundary = None
    for r, row in enumerate(rows):
        labels = {l for t in row for l in t.labels}
        targets = _targets(rows[r + 1], labels) if r + 1 < len(rows) else []
        try:
            boundary = _absorb_row(boundary, row, targets, policy, f"{tag}{r}", stats, limit)
        except _ZeroBoundary:
            return envs + [None] * (len(rows) - len(envs)), (0.0, 0.0)
        envs.append(boundary)
    last = envs.pop()
    return envs, (last.scalar, last.log_scale if last.scalar else 0.0)


def bmps_contract(layered: LayeredNetwork, policy: TruncationPolicy = EXACT,
                  stats: Optional[SweepStats] = None, mem_limit: Optional[int] = None):
    """Top-down boundary-MPS contraction to ``(mantissa, log_scale)``."""
    stats = stats if stats is not None else SweepStats()
    limit = mem_limit_bytes() if mem_limit is None else mem_limit
    _, (value, log_scale) = _sweep(layered.rows, policy, "t", stats, limit)
    return value, log_scale

# ---------------------------------------------------------------------------
# bond support pruning

class BondSupport:
    """Per-bond index sets outside of which one endpoint is identically zero.

    Dropping those indices changes no closed contraction. On a double layer
    this removes the ket/bra mismatched states of every copied variable.
    """

    def __init__(self, keep: dict):
        self.keep = keep  # label -> index array

    @classmethod
    def from_nodes(cls, nodes: list) -> "BondSupport":
        masks = {}
        for t in nodes:
            a = np.abs(t.data)
            for ax, l in enumerate(t.labels):
                nz = np.moveaxis(a, ax, 0).reshape(a.shape[ax], -1).any(axis=1)
                masks[l] = masks[l] & nz if l in masks else nz
        keep = {l: np.flatnonzero(m) for l, m in masks.items() if not m.all()}
        for l, idx in keep.items():
            if not len(idx):
                keep[l] = np.array([0])
        return cls(keep)

    def apply(self, node: Tensor) -> Tensor:
        data = node.data
        for ax, l in enumerate(node.labels):
            if l in self.keep:
                data = np.take(data, self.keep[l], axis=ax)
        return Tensor._fresh(node.labels, data)


def _abs_sandwich(t: Tensor, phys: list) -> Tensor:
    return sandwich(Tensor._fresh(t.labels, np.abs(t.data)), {l: None for l in phys})


# ---------------------------------------------------------------------------
# per-site environments

def site_groups(net) -> list:
    """Rows of ``(ket site tensor, variables)`` from the network layout.

    Tensors that share a layout slot are merged; rows and positions are
    sorted. Requires ``net.layout``.
    """
    if net.layout is None:
        raise ContractionError("network carries no row layout; use the exact engine")
    slots = {}
    for k, slot in enumerate(net.layout):
        slots.setdefault(tuple(slot), []).append(k)
    var_of = {}
    for var, (k, _) in enumerate(net.physical):
        var_of.setdefault(k, []).append(var)
    rows = {}
    for (r, pos), ks in sorted(slots.items()):
        t = contract_many(net.tensors[k] for k in ks)
        vars_ = [v for k in ks for v in var_of.get(k, [])]
        rows.setdefault(r, []).append((t, vars_))
    return [rows[r] for r in sorted(rows)]


def layered_double(net, ops: Optional[dict] = None, prune: bool = True) -> LayeredNetwork:
    """Double-layer :class:`LayeredNetwork` of a laid-out ket network."""
    ops = ops or {}
    groups = site_groups(net)
    rows = [[sandwich(t, {net.physical_label(v): ops.get(v) for v in vs}) for t, vs in row]
            for row in groups]
    if prune:
        support = BondSupport.from_nodes(
            [_abs_sandwich(t, [net.physical_label(v) for v in vs]) for row in groups for t, vs in row])
        rows = [[support.apply(t) for t in row] for row in rows]
    return LayeredNetwork(rows)


class EnvironmentCache:
    """Top and bottom boundaries for every row of a laid-out network.

    Built from one downward and one upward sweep; every single-site
    expectation afterwards costs one pass along its own row.
    """

    def __init__(self, net, policy: TruncationPolicy = EXACT, mem_limit: Optional[int] = None,
                 stats: Optional[SweepStats] = None):
        self.net = net
        self.policy = policy
        self.stats = stats if stats is not None else SweepStats()
        limit = mem_limit_bytes() if mem_limit is None else mem_limit
        self.groups = site_groups(net)
        self.support = BondSupport.from_nodes(
            [_abs_sandwich(t, [net.physical_label(v) for v in vs]) for row in self.groups for t, vs in row])
        self.rows = [[self.support.apply(sandwich(t, {net.physical_label(v): None for v in vs}))
                      for t, vs in row] for row in self.groups]
        LayeredNetwork(self.rows)
        self.top, (nv, nl) = _sweep(self.rows, policy, "t", self.stats, limit)
        bottom, _ = _sweep(self.rows[::-1], policy, "b", self.stats, limit)
        self.bottom = bottom[::-1]
        self.norm = (nv, nl)
        if nv == 0.0:
            raise ZeroNormError("state has zero norm; the constraints admit no assignment")
        self.where = {}
        for r, row in enumerate(self.groups):
            for j, (_, vs) in enumerate(row):
                for v in vs:
                    self.where[v] = (r, j)
        self._ladders = {}

    def _column(self, r: int, j: int, node: Tensor) -> Tensor:
        parts = []
        for env in (self.top[r], self.bottom[r]):
            if env is not None and j in env.sites:
                parts.append(env.tensors[env.sites.index(j)])
        return contract_many(parts + [node])

    def _ladder(self, r: int):
        """Left and right partial products along row ``r`` with their log-scales."""
        if r not in self._ladders:
            cols = [self._column(r, j, node) for j, node in enumerate(self.rows[r])]
            lefts, rights = [(None, 0.0)], [(None, 0.0)]
            acc, log = None, 0.0
            for c in cols[:-1]:
                acc, ls = _normalize(c if acc is None else contract(acc, c))
                log += ls
                lefts.append((acc, log))
            acc, log = None, 0.0
            for c in cols[:0:-1]:
                acc, ls = _normalize(c if acc is None else contract(c, acc))
                log += ls
                rights.append((acc, log))
            self._ladders[r] = (lefts, rights[::-1])
        return self._ladders[r]

    def _value(self, r: int, j: int, node: Tensor):
        """``(mantissa, log_scale)`` of the closed network with ``node`` at ``(r, j)``."""
        lefts, rights = self._ladder(r)
        t = self._column(r, j, node)
        (lt, ll), (rt, rl) = lefts[j], rights[j]
        if lt is not None:
            t = contract(lt, t)
        if rt is not None:
            t = contract(t, rt)
        value, log = t.item(), ll + rl
        for env in (self.top[r], self.bottom[r]):
            if env is not None:
                value *= env.scalar
                log += env.log_scale
        return value, log

    def site_node(self, var: int, op=None) -> Tensor:
        r, j = self.where[var]
        t, vs = self.groups[r][j]
        node = self.support.apply(sandwich(t, {self.net.physical_label(v): (op if v == var else None) for v in vs}))
        return node

    def expectation(self, var: int, op) -> float:
        """``<O_var>`` for diagonal ``op = (o0, o1)``."""
        r, j = self.where[var]
        den, _ = self._value(r, j, self.rows[r][j])
        if den == 0.0:
            raise ZeroNormError(f"zero norm in the environment of variable {var}")
        num, _ = self._value(r, j, self.site_node(var, op))
        return num / den

    def norm_at(self, var: int):
        """Norm ``(mantissa, log_scale)`` assembled around ``var``'s site."""
        r, j = self.where[var]
        return self._value(r, j, self.rows[r][j])


def site_environments(net, policy: TruncationPolicy = EXACT, mem_limit: Optional[int] = None,
                      stats: Optional[SweepStats] = None) -> EnvironmentCache:
    return EnvironmentCache(net, policy, mem_limit, stats)


# ---------------------------------------------------------------------------
# engine front end

@dataclass(frozen=True)
class Engine:
    """How expectations are contracted.

    ``kind="exact"`` contracts the whole double layer pairwise (greedy
    order) once per site; ``prune=True`` first drops bond states that are
    identically zero on one endpoint, which is exact and much cheaper on
    copy-tensor networks. ``kind="bmps"`` runs one downward and one upward
    boundary sweep; ``chi=None`` keeps every nonzero singular value.
    ``rel_threshold`` additionally drops singular values below that
    fraction of the largest one; the default keeps them all, since states
    that look negligible on one side of a cut can dominate once the other
    side is included.
    """

    kind: str = "exact"
    chi: Optional[int] = None
    rel_threshold: float = 0.0
    mem_limit: Optional[int] = None
    prune: bool = False

    def __post_init__(self):
        if self.kind not in ("exact", "bmps"):
            raise ValueError(f"unknown engine {self.kind!r}")
        if self.chi is not None and self.chi < 1:
            raise ValueError("chi must be >= 1")
        if self.rel_threshold < 0:
            raise ValueError("rel_threshold must be nonnegative")

    @property
    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(max_bond=self.chi, rel_threshold=self.rel_threshold)

    @property
    def name(self) -> str:
        if self.kind == "exact":
            return "exact+prune" if self.prune else "exact"
        return "bmps" if self.chi is None else f"bmps:{self.chi}"

    @classmethod
    def parse(cls, text: str) -> "Engine":
        """Inverse of :attr:`name`: ``exact``, ``exact+prune``, ``bmps``, ``bmps:K``."""
        text = text.strip()
        if text in ("exact", "exact+prune"):
            return cls("exact", prune=text.endswith("prune"))
        kind, _, chi = text.partition(":")
        if kind != "bmps":
            raise ValueError(f"unknown engine {text!r}")
        try:
            return cls("bmps", int(chi) if chi else None)
        except ValueError as exc:
            raise ValueError(f"bad bond cap in engine {text!r}") from exc


def expectations(net, engine: Engine, op, variables=None,
                 stats: Optional[SweepStats] = None) -> np.ndarray:
    """``<O_i> = <psi|O_i|psi> / <psi|psi>`` for each requested variable.

    ``stats`` collects bond dimensions and truncation errors of BMPS sweeps.
    """
    variables = range(net.n_vars) if variables is None else list(variables)
    if engine.kind == "bmps":
        cache = site_environments(net, engine.policy, engine.mem_limit, stats)
        return np.array([cache.expectation(v, op) for v in variables])
    phys = _phys_by_tensor(net)
    base = double_layer(net)
    support = None
    if engine.prune:
        support = BondSupport.from_nodes(
            [_abs_sandwich(t, list(phys.get(k, {}))) for k, t in enumerate(net.tensors)])
        base = [support.apply(t) for t in base]
    plan = greedy_plan(_shapes(base))
    nv, nl = contract_closed(base, plan, engine.mem_limit)
    if nv == 0.0:
        raise ZeroNormError("state has zero norm; the constraints admit no assignment")
    out = []
    for v in variables:
        k, _ = net.physical[v]
        tensors = list(base)
        node = sandwich(net.tensors[k], {l: (op if vv == v else None) for l, vv in phys[k].items()})
        tensors[k] = support.apply(node) if support is not None else node
        ov, ol = contract_closed(tensors, plan, engine.mem_limit)
        out.append(ov / nv * np.exp(ol - nl) if ov else 0.0)
    return np.array(out)
