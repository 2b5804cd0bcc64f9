"""Ground Markov logic networks and joint entity/relation extraction."""

from .errors import MLNError
from .estimator import JointExtractor
from .evaluation import ScoreReport, score
from .grounding import EvidenceSet, FactorGraph, build_factor_graph
from .inference import BpConfig, MarginalTable, bp_marginals, exact_marginals, formula_probability
from .logic import MlnProgram, WeightedFormula, validate_program
from .parser import parse_evidence, parse_formula, parse_program, print_program

__version__ = "0.1.0"

__all__ = [
    "BpConfig",
    "EvidenceSet",
    "FactorGraph",
    "JointExtractor",
    "MLNError",
    "MarginalTable",
    "MlnProgram",
    "ScoreReport",
    "WeightedFormula",
    "bp_marginals",
    "build_factor_graph",
    "exact_marginals",
    "formula_probability",
    "parse_evidence",
    "parse_formula",
    "parse_program",
    "print_program",
    "score",
    "validate_program",
]
