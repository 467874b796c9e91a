"""Flux balance analysis of a core cancer-metabolism network and random
objective-function ensembles screened for the glycolysis/respiration switch."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    Diagnostic, MetabolicModel, Metabolite, ModelError, Reaction, RoleMap,
    build_stoichiometric_matrix, validate_model,
)
from .lp import LpProblem, LpSolution, SolverOptions, enumerate_vertices, solve  # noqa: E402
from .io import ModelDocument, bundled_core_model, parse_model, serialize_model  # noqa: E402
from .fba import (  # noqa: E402
    ObjectiveFunction, detect_switch, feasibility_check, growth_sweep, preset_objectives, run_fba,
)
from .ensemble import SamplerConfig, reaction_frequencies, run_ensemble, sample_objective  # noqa: E402
