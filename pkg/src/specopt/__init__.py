"""Specular differentiation and specular gradient methods for nonsmooth
convex optimization."""

__version__ = "0.1.0"

from .core import (OneSidedSlopes, angular_mean, optimality_certificate,
                   specular_directional, zero_direction_specular)
from .oracles import (FDConfig, Problem, FunctionOracle, SpecularGradient,
                      check_subgradient_inequality, component_specular_gradient,
                      specular_directional_exact, specular_directional_fd,
                      specular_gradient, specular_gradient_fd, unbiasedness_gap)
from .problems import (AbsNorm, ElasticNet, InstanceSpec, MaxAffine, Quadratic,
                       generate_instance, problem_from_dict, toy_problems)
from .optimizers import (Box, EuclideanBall, OptimizerTrace, RunConfig, StepSchedule,
                         adam, gd, hspeg, projected_speg, speg, sspeg,
                         subgradient_baseline, verify_basic_inequality)

__all__ = [
    "OneSidedSlopes", "angular_mean", "optimality_certificate", "specular_directional",
    "zero_direction_specular", "FDConfig", "Problem", "FunctionOracle",
    "SpecularGradient", "check_subgradient_inequality", "component_specular_gradient",
    "specular_directional_exact", "specular_directional_fd", "specular_gradient",
    "specular_gradient_fd", "unbiasedness_gap", "AbsNorm", "ElasticNet", "InstanceSpec",
    "MaxAffine", "Quadratic", "generate_instance", "problem_from_dict", "toy_problems",
    "Box", "EuclideanBall", "OptimizerTrace", "RunConfig", "StepSchedule", "adam", "gd",
    "hspeg", "projected_speg", "speg", "sspeg", "subgradient_baseline",
    "verify_basic_inequality",
]
