"""NFV network slicing: LP relaxation, iterative rounding and routing refinement."""
from .harness import ExperimentConfig, run_experiment
from .model import (GeneratorParams, Instance, Network, Service, generate_instance,
                    load_instance, dump_instance, validate_instance)
from .oracle import OracleLimits, exact_solve
from .placement import baseline_round, round_placement
from .routing import RefinementConfig, decompose_flow, refine_routing
from .solution import METHODS, SliceSolution, run_method
from .validate import validate_solution

__all__ = [
    "ExperimentConfig", "GeneratorParams", "Instance", "METHODS", "Network", "OracleLimits",
    "RefinementConfig", "Service", "SliceSolution", "baseline_round", "decompose_flow",
    "dump_instance", "exact_solve", "generate_instance", "load_instance", "refine_routing",
    "round_placement", "run_experiment", "run_method", "validate_instance", "validate_solution",
]
