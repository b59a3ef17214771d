"""Green's functions of birth-death chains on integer windows and finite trees.

Four independent routes compute the expected visit counts ``G(x, y)``:
the fundamental-matrix solve (:mod:`greenchain.exact`), Brownian local
times (:mod:`greenchain.embedding`), electric voltages
(:mod:`greenchain.network`, :mod:`greenchain.tree`) and simulation
(:mod:`greenchain.mc`).  The ratio ``G(j, k) / G(k, j)`` has a closed form
in the transition probabilities alone.
"""

__version__ = "0.1.0"

from .chain import (BirthDeathChain, ProbabilityTriple, RecurrenceVerdict, SeriesStatus, Verdict,
                    classify, log_symmetry_ratio, remove_laziness, symmetry_ratio, validate)
from .embedding import (EmbeddingData, build_embedding, expected_local_time,
                        green_via_local_time)
from .errors import (ConfigurationError, ConnectivityError, DomainError, GreenChainError,
                     PreconditionError, ShapeError, SolverError, SpecParseError, ValidationError)
from .exact import GreenMatrix, GreenResult, Route, green, green_matrix, verify_theorem1
from .mc import SimConfig, VisitEstimate, simulate_line, simulate_tree
from .network import (ConductanceNetwork, VoltageSolution, green_via_voltage, line_conductances,
                      ratio_via_conductance, solve_voltages)
from .tree import (TreeChain, TreePath, assign_conductances, green_tree, path_ratio,
                   recover_probabilities, tree_path)

__all__ = [
    "BirthDeathChain",
    "ConductanceNetwork",
    "ConfigurationError",
    "ConnectivityError",
    "DomainError",
    "EmbeddingData",
    "GreenChainError",
    "GreenMatrix",
    "GreenResult",
    "PreconditionError",
    "ProbabilityTriple",
    "RecurrenceVerdict",
    "Route",
    "SeriesStatus",
    "ShapeError",
    "SimConfig",
    "SolverError",
    "SpecParseError",
    "TreeChain",
    "TreePath",
    "ValidationError",
    "Verdict",
    "VisitEstimate",
    "VoltageSolution",
    "assign_conductances",
    "build_embedding",
    "classify",
    "expected_local_time",
    "green",
    "green_matrix",
    "green_tree",
    "green_via_local_time",
    "green_via_voltage",
    "line_conductances",
    "log_symmetry_ratio",
    "path_ratio",
    "ratio_via_conductance",
    "recover_probabilities",
    "remove_laziness",
    "simulate_line",
    "simulate_tree",
    "solve_voltages",
    "symmetry_ratio",
    "tree_path",
    "validate",
    "verify_theorem1",
]
