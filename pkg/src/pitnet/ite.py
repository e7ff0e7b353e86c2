"""Imaginary-time evolution of a diagonal Hamiltonian on a constraint network.

The Hamiltonian is a sum of single-site diagonal terms, so all terms commute
and ``exp(-tau H)`` factorizes into one 2x2 diagonal gate per variable. One
application of the gates is therefore exact; no Trotter steps are needed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .contraction import Engine, SweepStats, expectations
from .mining import MineInstance, Solution, build_mining_network, make_solution
from .network import TensorNetwork
from .tensor import Tensor, scale_normalize

DEFAULT_TAU = 6.0
DEFAULT_DEG_A = 1.1
DEFAULT_DEG_B = 0.025


class ITEOverflowError(FloatingPointError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DiagonalHamiltonian:
    """``H = sum_i diag(e0[i], e1[i])`` acting on variable ``i``."""

    e0: np.ndarray
    e1: np.ndarray

    def __post_init__(self):
        e0 = np.asarray(self.e0, dtype=np.float64)
        e1 = np.asarray(self.e1, dtype=np.float64)
        if e0.shape != e1.shape or e0.ndim != 1:
            raise ConfigError("e0 and e1 must be vectors of equal length")
        if not (np.all(np.isfinite(e0)) and np.all(np.isfinite(e1))):
            raise ConfigError("Hamiltonian energies must be finite")
        object.__setattr__(self, "e0", e0)
        object.__setattr__(self, "e1", e1)

    @classmethod
    def from_weights(cls, weights) -> "DiagonalHamiltonian":
        """Profit maximization of ``sum w_i x_i``: ``(e0, e1) = (0, -w)``."""
        w = np.asarray(weights, dtype=np.float64)
        return cls(np.zeros_like(w), -w)

    def __len__(self):
        return len(self.e0)

    def energy(self, assignment) -> float:
        x = np.asarray(assignment, dtype=bool)
        return float(np.sum(np.where(x, self.e1, self.e0)))

    def shifted(self, c: float) -> "DiagonalHamiltonian":
        return DiagonalHamiltonian(self.e0 + c, self.e1 + c)


def build_hamiltonian(inst: MineInstance) -> DiagonalHamiltonian:
    return DiagonalHamiltonian.from_weights(inst.block_weights)


@dataclass(frozen=True)
class SolverConfig:
    tau: float = DEFAULT_TAU
    engine: Engine = field(default_factory=Engine)
    a: float = 1.0
    b: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.a < 1:
            raise ConfigError("degeneracy parameter a must be >= 1")
        if self.a > 1 and not 0 < self.b < (self.a - 1) / 2:
            raise ConfigError(f"with a={self.a}, b must lie in (0, {(self.a - 1) / 2})")

    @classmethod
    def degeneracy_breaking(cls, **kw) -> "SolverConfig":
        return cls(a=DEFAULT_DEG_A, b=DEFAULT_DEG_B, **kw)


def suggest_tau(gap: float, separation: float = 1e3) -> float:
    """Evolution time that suppresses a state ``gap`` above the ground state.

    The norm network weighs each basis state by ``exp(-2 tau E)``; requiring a
    ratio of at least ``separation`` gives ``tau >= ln(separation) / (2 gap)``.
    """
    if gap <= 0:
        raise ConfigError("gap must be positive")
    return math.log(separation) / (2.0 * gap)


def apply_ite(net: TensorNetwork, H: DiagonalHamiltonian, tau: float) -> TensorNetwork:
    """Apply ``exp(-tau H)`` site by site, rescaling each touched tensor."""
    if not tau > 0:
        raise ConfigError("tau must be positive")
    if len(H) != net.n_vars:
        raise ConfigError(f"Hamiltonian has {len(H)} sites, network has {net.n_vars} variables")
    tensors = list(net.tensors)
    log_scale = net.log_scale
    for var, (k, lab) in enumerate(net.physical):
        expo = np.array([-tau * H.e0[var], -tau * H.e1[var]])
        top = float(expo.max())
        gate = np.exp(expo - top)
        if gate.min() == 0.0 or not np.all(np.isfinite(gate)):
            raise ITEOverflowError(
                f"gate on variable {var} spans more than the float range; reduce tau")
        t = tensors[k]
        ax = t.labels.index(lab)
        shape = [1] * len(t.dims)
        shape[ax] = 2
        t, ls = scale_normalize(Tensor(t.labels, t.data * gate.reshape(shape)))
        tensors[k] = t
        log_scale += top + ls
    return replace(net, tensors=tuple(tensors), log_scale=log_scale)


def measurement_op(a: float = 1.0) -> tuple:
    """Diagonal of ``diag(a, -1)``; ``a = 1`` is Pauli Z."""
    return (float(a), -1.0)


def measure_site(net: TensorNetwork, i: int, engine: Engine = Engine(), a: float = 1.0) -> float:
    return float(expectations(net, engine, measurement_op(a), [i])[0])


def measure_all(net: TensorNetwork, engine: Engine = Engine(), a: float = 1.0,
                stats: Optional[SweepStats] = None) -> np.ndarray:
    return expectations(net, engine, measurement_op(a), stats=stats)


def threshold(cfg: SolverConfig) -> float:
    return cfg.b if cfg.a > 1 else 0.0


def decode_assignment(net: TensorNetwork, cfg: SolverConfig, values: Optional[np.ndarray] = None) -> tuple:
    """``x_i = 1`` iff the site expectation is strictly below the threshold."""
    if values is None:
        values = measure_all(net, cfg.engine, cfg.a)
    b = threshold(cfg)
    return tuple(int(v < b) for v in values)


def decode(net: TensorNetwork, cfg: SolverConfig, inst: MineInstance) -> Solution:
    return make_solution(inst, decode_assignment(net, cfg))


def measure_energy(net: TensorNetwork, H: DiagonalHamiltonian, engine: Engine = Engine()) -> float:
    z = measure_all(net, engine, 1.0)
    p1 = (1.0 - z) / 2.0
    return float(np.sum(H.e1 * p1 + H.e0 * (1.0 - p1)))


@dataclass
class SolveReport:
    solution: Solution
    expectations: np.ndarray
    wall_time: float
    config: SolverConfig
    sweep: Optional[SweepStats] = None  # boundary statistics, BMPS only


def solve(inst: MineInstance, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Build, evolve and decode; the timer covers all three stages."""
    t0 = time.perf_counter()
    stats = SweepStats() if cfg.engine.kind == "bmps" else None
    net = build_mining_network(inst)
    net = apply_ite(net, build_hamiltonian(inst), cfg.tau)
    values = measure_all(net, cfg.engine, cfg.a, stats)
    sol = make_solution(inst, decode_assignment(net, cfg, values))
    return SolveReport(sol, values, time.perf_counter() - t0, cfg, stats)
