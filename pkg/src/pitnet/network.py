"""Constraint networks: one copy tensor per binary variable, one indicator per constraint.

Contracting the network with every physical index fixed gives 1 for an
assignment that satisfies all constraints and 0 otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .tensor import Tensor, TensorError, contract, delta_tensor, indicator_tensor

MAX_SCOPE = 20


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class LocalConstraint:
    scope: tuple
    allowed: frozenset

    def __init__(self, scope: Sequence[int], allowed):
        scope = tuple(int(v) for v in scope)
        bits = frozenset(tuple(int(b) for b in a) for a in allowed)
        if len(set(scope)) != len(scope):
            raise NetworkError(f"duplicate variable in scope {scope}")
        if len(scope) > MAX_SCOPE:
            raise NetworkError(f"scope of size {len(scope)} exceeds the locality limit {MAX_SCOPE}")
        for a in bits:
            if len(a) != len(scope):
                raise NetworkError(f"allowed tuple {a} does not match scope {scope}")
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "allowed", bits)

    def satisfied(self, assignment) -> bool:
        return tuple(int(assignment[v]) for v in self.scope) in self.allowed


@dataclass(frozen=True)
class TensorNetwork:
    """Tensors joined by shared labels.

    ``physical[i]`` is ``(tensor index, label)`` of variable ``i``'s open leg.
    ``layout`` optionally assigns every tensor a ``(row, position)`` slot;
    tensors sharing a slot are merged into one site for boundary sweeps.
    ``log_scale`` is a global factor ``exp(log_scale)`` kept out of the data.
    """

    tensors: tuple
    physical: tuple
    log_scale: float = 0.0
    layout: Optional[tuple] = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_vars(self) -> int:
        return len(self.physical)

    def physical_label(self, var: int):
        return self.physical[var][1]

    def site_tensor(self, var: int) -> Tensor:
        return self.tensors[self.physical[var][0]]

    def replace_tensor(self, idx: int, t: Tensor, log_scale: float = 0.0) -> "TensorNetwork":
        tensors = list(self.tensors)
        tensors[idx] = t
        return replace(self, tensors=tuple(tensors), log_scale=self.log_scale + log_scale)

    def validate(self):
        seen = {}
        for k, t in enumerate(self.tensors):
            for l, d in zip(t.labels, t.dims):
                seen.setdefault(l, []).append((k, d))
        phys = {lab for _, lab in self.physical}
        for l, occ in seen.items():
            if l in phys:
                if len(occ) != 1 or occ[0][1] != 2:
                    raise NetworkError(f"physical label {l!r} must appear once with extent 2")
            elif len(occ) != 2:
                raise NetworkError(f"bond {l!r} appears on {len(occ)} tensors")
            elif occ[0][1] != occ[1][1]:
                raise NetworkError(f"bond {l!r} has mismatched extents")
        for k, lab in self.physical:
            if lab not in self.tensors[k].labels:
                raise NetworkError(f"physical label {lab!r} missing from tensor {k}")
        if self.layout is not None and len(self.layout) != len(self.tensors):
            raise NetworkError("layout must have one slot per tensor")


def var_label(i: int) -> str:
    return f"x{i}"


def bond_label(c: int, k: int) -> str:
    return f"c{c}.{k}"


def build_network(n_vars: int, constraints: Sequence[LocalConstraint]) -> TensorNetwork:
    """Copy tensors for ``n_vars`` variables bonded to one indicator per constraint.

    Variable ``i`` owns tensor ``i``; constraint ``c`` owns tensor ``n_vars + c``.
    The bond between constraint ``c`` and the ``k``-th variable of its scope
    is labelled ``c{c}.{k}``.
    """
    if n_vars < 1:
        raise NetworkError("network needs at least one variable")
    legs = [[var_label(i)] for i in range(n_vars)]
    for c, con in enumerate(constraints):
        for k, v in enumerate(con.scope):
            if not 0 <= v < n_vars:
                raise NetworkError(f"constraint {c} references unknown variable {v}")
            legs[v].append(bond_label(c, k))
    tensors = []
    for i in range(n_vars):
        if len(legs[i]) == 1:
            tensors.append(Tensor((var_label(i),), np.ones(2)))
        else:
            tensors.append(delta_tensor(len(legs[i]), 2, labels=legs[i]))
    for c, con in enumerate(constraints):
        tensors.append(indicator_tensor(len(con.scope), sorted(con.allowed),
                                        labels=[bond_label(c, k) for k in range(len(con.scope))]))
    physical = tuple((i, var_label(i)) for i in range(n_vars))
    net = TensorNetwork(tuple(tensors), physical)
    net.validate()
    return net


def fix_assignment(net: TensorNetwork, assignment) -> list:
    """Network tensors with every physical leg sliced at the given bit."""
    if len(assignment) != net.n_vars:
        raise NetworkError(f"assignment has length {len(assignment)}, network has {net.n_vars} variables")
    tensors = list(net.tensors)
    for var, (k, lab) in enumerate(net.physical):
        tensors[k] = tensors[k].fix(lab, int(assignment[var]))
    return tensors


def amplitude_log(net: TensorNetwork, assignment):
    """``(mantissa, log_scale)`` of the basis amplitude for ``assignment``."""
    from .contraction import contract_closed

    tensors = fix_assignment(net, assignment)
    value, log_scale = contract_closed(tensors)
    return value, log_scale + net.log_scale


def amplitude(net: TensorNetwork, assignment) -> float:
    value, log_scale = amplitude_log(net, assignment)
    return value * float(np.exp(log_scale)) if value else 0.0


def amplitude_table(net: TensorNetwork) -> np.ndarray:
    """Full state vector as an order-``n`` array (small networks only)."""
    from .contraction import contract_closed_tensor

    out = contract_closed_tensor(list(net.tensors))
    order = [net.physical_label(i) for i in range(net.n_vars)]
    return out.transpose(order).data * np.exp(net.log_scale)


def load_constraint_spec(path) -> tuple:
    with open(path) as fh:
        return parse_constraint_spec(json.load(fh))


def parse_constraint_spec(doc: dict) -> tuple:
    """``{"n_vars": n, "constraints": [{"scope": [...], "allowed": ["01", ...]}]}``."""
    try:
        n_vars = int(doc["n_vars"])
        cons = [LocalConstraint(c["scope"], c["allowed"]) for c in doc["constraints"]]
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed constraint spec: {exc}") from exc
    return n_vars, cons


def dump_constraint_spec(n_vars: int, constraints: Sequence[LocalConstraint]) -> dict:
    return {
        "n_vars": n_vars,
        "constraints": [
            {"scope": list(c.scope), "allowed": sorted("".join(map(str, a)) for a in c.allowed)}
            for c in constraints
        ],
    }
