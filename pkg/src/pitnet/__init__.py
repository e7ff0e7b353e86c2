"""Tensor-network solver for locally constrained binary optimization.

Variables become copy tensors, constraints become indicator tensors, a
diagonal Hamiltonian is applied by imaginary-time evolution, and the
optimum is read off single-site expectation values. Open-pit mining with
the 45-degree slope rule is the worked application.
"""

__version__ = "0.1.0"

from .contraction import Engine, bmps_contract, contract_closed, expectations, site_environments
from .ite import DiagonalHamiltonian, SolverConfig, apply_ite, decode, solve
from .mining import (
    MineInstance,
    Solution,
    brute_force_oracle,
    build_mining_network,
    evaluate_solution,
    generate_instance,
)
from .network import LocalConstraint, TensorNetwork, amplitude, build_network
from .tensor import Tensor, TruncationPolicy, contract, delta_tensor, indicator_tensor, split_truncated

__all__ = [
    "DiagonalHamiltonian", "Engine", "LocalConstraint", "MineInstance", "Solution", "SolverConfig",
    "Tensor", "TensorNetwork", "TruncationPolicy", "amplitude", "apply_ite", "bmps_contract",
    "brute_force_oracle", "build_mining_network", "build_network", "contract", "contract_closed",
    "decode", "delta_tensor", "evaluate_solution", "expectations", "generate_instance",
    "indicator_tensor", "site_environments", "solve", "split_truncated",
]
