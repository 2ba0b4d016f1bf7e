"""Weighted sum-rate maximization for MIMO B-MAC networks by the Dual Link algorithm."""

__version__ = "0.1.0"

from .kernels import BACKEND
from .network import (CovarianceSet, NetworkSpec, forward_interference_cov, link_rate,
                      reverse_interference_cov, reverse_link_rate, weighted_sum_rate)
from .dual_link import (IterationTrace, SolveResult, SolverConfig, SolverError,
                        forward_to_reverse, init_covariances, residual, reverse_to_forward, solve)
from .kkt import (MultiplierState, check_scaling_invariance, extract_multipliers, grad_omega,
                  grad_sigma, lagrangian, saddle_point_check)
from .baselines import BaselineConfig, mac_capacity_oracle, pwf_solve, wmmse_solve
from .whitening import NoiseModel, PowerWeights, recover_solution, to_equivalent

__all__ = [
    "BACKEND",
    "NetworkSpec", "CovarianceSet",
    "forward_interference_cov", "reverse_interference_cov",
    "link_rate", "reverse_link_rate", "weighted_sum_rate",
    "SolverConfig", "IterationTrace", "SolveResult", "SolverError",
    "init_covariances", "forward_to_reverse", "reverse_to_forward", "solve", "residual",
    "MultiplierState", "lagrangian", "grad_sigma", "grad_omega", "extract_multipliers",
    "check_scaling_invariance", "saddle_point_check",
    "BaselineConfig", "pwf_solve", "wmmse_solve", "mac_capacity_oracle",
    "NoiseModel", "PowerWeights", "to_equivalent", "recover_solution",
]
