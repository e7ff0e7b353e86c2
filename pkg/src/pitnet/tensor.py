"""Dense labelled tensors: construction, pairwise contraction and truncated splitting.

Every tensor carries an ordered tuple of index labels next to a C-ordered
``numpy`` array. Contraction is resolved by label: indices that appear on
both operands are summed, everything else is kept in operand order.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.linalg.lapack


class TensorError(ValueError):
    """Raised on malformed tensors or incompatible operands."""


class SVDFailure(RuntimeError):
    """Raised when both LAPACK SVD drivers fail to converge."""


class EmptyConstraintWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Tensor:
    labels: tuple
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data is self.data or not data.flags.c_contiguous:
            data = data.copy(order="C")
        self._check_and_freeze(tuple(self.labels), data)

    @classmethod
    def _fresh(cls, labels, data: np.ndarray) -> "Tensor":
        # data is a freshly computed array nobody else holds; skip the copy
        t = object.__new__(cls)
        data = np.asarray(data, dtype=np.float64)
        t._check_and_freeze(tuple(labels), np.ascontiguousarray(data) if data.ndim else data.copy())
        return t

    def _check_and_freeze(self, labels, data):
        if data.ndim != len(labels):
            raise TensorError(f"{len(labels)} labels for an array of rank {data.ndim}")
        if len(set(labels)) != len(labels):
            raise TensorError(f"duplicate labels in {labels}")
        if any(d < 1 for d in data.shape):
            raise TensorError(f"zero extent in shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise TensorError("tensor holds non-finite values")
        data.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "data", data)

    @property
    def dims(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def dim(self, label) -> int:
        return self.data.shape[self.labels.index(label)]

    def __repr__(self):
        return f"Tensor({', '.join(f'{l}:{d}' for l, d in zip(self.labels, self.dims))})"

    def transpose(self, labels: Sequence) -> "Tensor":
        perm = [self.labels.index(l) for l in labels]
        return Tensor(tuple(labels), self.data.transpose(perm))

    def relabel(self, mapping: dict) -> "Tensor":
        return Tensor(tuple(mapping.get(l, l) for l in self.labels), self.data)

    def fix(self, label, value: int) -> "Tensor":
        """Slice ``label`` at ``value``, dropping the index."""
        ax = self.labels.index(label)
        labels = self.labels[:ax] + self.labels[ax + 1:]
        return Tensor(labels, np.take(self.data, value, axis=ax))

    def scale(self, factor: float) -> "Tensor":
        return Tensor(self.labels, self.data * factor)

    def item(self) -> float:
        if self.labels:
            raise TensorError(f"tensor with open labels {self.labels} is not a scalar")
        return float(self.data)


@dataclass(frozen=True)
class TruncationPolicy:
    """Bond cut for :func:`split_truncated`.

    ``max_bond`` caps the kept rank; ``rel_threshold`` drops singular values
    below ``rel_threshold * s_max``. When both are set the smaller rank wins.
    """

    max_bond: Optional[int] = None
    rel_threshold: Optional[float] = None

    def __post_init__(self):
        if self.max_bond is None and self.rel_threshold is None:
            raise TensorError("TruncationPolicy needs max_bond or rel_threshold")
        if self.max_bond is not None and self.max_bond < 1:
            raise TensorError("max_bond must be positive")
        if self.rel_threshold is not None and self.rel_threshold < 0:
            raise TensorError("rel_threshold must be nonnegative")

    def rank(self, s: np.ndarray) -> int:
        keep = len(s)
        if self.rel_threshold is not None and len(s):
            keep = int(np.count_nonzero(s > self.rel_threshold * s[0]))
        if self.max_bond is not None:
            keep = min(keep, self.max_bond)
        return max(keep, 1)


EXACT = TruncationPolicy(rel_threshold=1e-12)


def delta_tensor(order: int, dim: int = 2, labels: Optional[Sequence] = None) -> Tensor:
    """Copy tensor: 1 where all ``order`` indices agree, 0 elsewhere."""
    if order < 1:
        raise TensorError("delta tensor needs order >= 1")
    if dim < 2:
        raise TensorError("delta tensor needs dim >= 2")
    data = np.zeros((dim,) * order)
    for v in range(dim):
        data[(v,) * order] = 1.0
    if labels is None:
        labels = tuple(f"i{k}" for k in range(order))
    return Tensor(tuple(labels), data)


def indicator_tensor(arity: int, allowed: Iterable, labels: Optional[Sequence] = None) -> Tensor:
    """Binary tensor with a 1 at every allowed bit tuple.

    ``allowed`` holds tuples of 0/1 or bitstrings such as ``"011"``.
    """
    if arity < 1:
        raise TensorError("indicator tensor needs arity >= 1")
    data = np.zeros((2,) * arity)
    seen = set()
    for entry in allowed:
        bits = tuple(int(b) for b in entry)
        if len(bits) != arity:
            raise TensorError(f"allowed tuple {entry!r} does not have length {arity}")
        if any(b not in (0, 1) for b in bits):
            raise TensorError(f"allowed tuple {entry!r} is not binary")
        if bits in seen:
            raise TensorError(f"allowed tuple {entry!r} listed twice")
        seen.add(bits)
        data[bits] = 1.0
    if not seen:
        warnings.warn("indicator tensor with an empty allowed set is identically zero",
                      EmptyConstraintWarning, stacklevel=2)
    if labels is None:
        labels = tuple(f"i{k}" for k in range(arity))
    return Tensor(tuple(labels), data)


def contract(a: Tensor, b: Tensor) -> Tensor:
    """Sum over all labels shared by ``a`` and ``b``.

    The result carries the free labels of ``a`` followed by those of ``b``,
    each in its original order. Without shared labels this is the outer
    product.
    """
    shared = [l for l in a.labels if l in b.labels]
    ax_a = [a.labels.index(l) for l in shared]
    ax_b = [b.labels.index(l) for l in shared]
    for l, i, j in zip(shared, ax_a, ax_b):
        if a.dims[i] != b.dims[j]:
            raise TensorError(f"extent mismatch on {l!r}: {a.dims[i]} vs {b.dims[j]}")
    data = np.tensordot(a.data, b.data, axes=(ax_a, ax_b))
    labels = tuple(l for l in a.labels if l not in shared) + tuple(l for l in b.labels if l not in shared)
    return Tensor._fresh(labels, np.asarray(data))


def contract_many(tensors: Iterable[Tensor]) -> Tensor:
    """Left-to-right contraction; only for small, local groups."""
    it = iter(tensors)
    out = next(it)
    for t in it:
        out = contract(out, t)
    return out


def _jacobi_svd(mat: np.ndarray):
    # preconditioned one-sided Jacobi: small singular values of graded
    # matrices keep their relative accuracy, unlike bidiagonalization
    tall = mat.shape[0] >= mat.shape[1]
    a = mat if tall else mat.T
    s, u, v, work, _, info = scipy.linalg.lapack.dgejsv(a, joba=3)
    if info != 0 or work[1] == 0:
        raise np.linalg.LinAlgError(f"dgejsv info={info}")
    s = s * (work[0] / work[1])
    u = u[:, :a.shape[1]]
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(s)) and np.all(np.isfinite(v))):
        raise np.linalg.LinAlgError("dgejsv returned non-finite factors")
    return (u, s, v.T) if tall else (v, s, u.T)


def _svd(mat: np.ndarray):
    if not np.any(mat):
        k = min(mat.shape)
        return np.eye(mat.shape[0], k), np.zeros(k), np.eye(k, mat.shape[1])
    for solver in (_jacobi_svd, lambda m: np.linalg.svd(m, full_matrices=False)):
        try:
            return solver(mat)
        except np.linalg.LinAlgError:
            pass
    try:
        return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SVDFailure(f"SVD of a {mat.shape} matrix did not converge") from exc


def split_truncated(t: Tensor, left_labels: Sequence, policy: TruncationPolicy = EXACT,
                    bond=None, absorb: str = "both"):
    """Factor ``t`` into ``L`` (``left_labels`` + bond) and ``R`` (bond + rest).

    Returns ``(L, R, truncation_error)`` where the error is the discarded
    fraction of the Frobenius norm. ``absorb`` places the singular values:
    ``"both"`` splits them as square roots, ``"left"``/``"right"`` puts them
    on one side so the other factor is an isometry.
    """
    left_labels = tuple(left_labels)
    right_labels = tuple(l for l in t.labels if l not in left_labels)
    if not left_labels or not right_labels or len(left_labels) + len(right_labels) != len(t.labels):
        raise TensorError("left_labels must be a nonempty proper subset of the tensor's labels")
    if bond is None:
        bond = "_bond"
    if bond in t.labels:
        raise TensorError(f"bond label {bond!r} already on tensor")
    m = t.transpose(left_labels + right_labels).data
    lshape, rshape = m.shape[:len(left_labels)], m.shape[len(left_labels):]
    mat = m.reshape(int(np.prod(lshape)), int(np.prod(rshape)))
    u, s, vh = _svd(mat)
    keep = policy.rank(s)
    total = float(np.sum(s * s))
    err = float(np.sqrt(np.sum(s[keep:] ** 2) / total)) if total > 0 else 0.0
    u, s, vh = u[:, :keep], s[:keep], vh[:keep]
    if absorb == "both":
        r = np.sqrt(s)
        u, vh = u * r, r[:, None] * vh
    elif absorb == "left":
        u = u * s
    elif absorb == "right":
        vh = s[:, None] * vh
    else:
        raise TensorError(f"unknown absorb mode {absorb!r}")
    left = Tensor(left_labels + (bond,), u.reshape(*lshape, keep))
    right = Tensor((bond,) + right_labels, vh.reshape(keep, *rshape))
    return left, right, err


def scale_normalize(t: Tensor):
    """Divide by the largest absolute entry; return ``(tensor, log(max))``."""
    m = float(np.max(np.abs(t.data))) if t.size else 0.0
    if m == 0.0:
        raise TensorError("cannot normalize an all-zero tensor")
    if m == 1.0:
        return t, 0.0
    return Tensor(t.labels, t.data / m), float(np.log(m))


def loop_contract(a: Tensor, b: Tensor) -> Tensor:
    """Reference contraction by explicit index loops (slow; for checks)."""
    shared = [l for l in a.labels if l in b.labels]
    fa = [l for l in a.labels if l not in shared]
    fb = [l for l in b.labels if l not in shared]
    ext = {l: a.dim(l) for l in a.labels}
    ext.update({l: b.dim(l) for l in b.labels})
    out = np.zeros(tuple(ext[l] for l in fa + fb))
    for free in itertools.product(*(range(ext[l]) for l in fa + fb)):
        fixed = dict(zip(fa + fb, free))
        acc = 0.0
        for summed in itertools.product(*(range(ext[l]) for l in shared)):
            fixed.update(zip(shared, summed))
            acc += a.data[tuple(fixed[l] for l in a.labels)] * b.data[tuple(fixed[l] for l in b.labels)]
        out[free] = acc
    return Tensor(tuple(fa + fb), out)
