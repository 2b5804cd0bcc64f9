"""Marginal and conditional-probability inference over factor graphs."""

from __future__ import annotations

import math

from ..errors import ConditionImpossible, NotGround
from ..grounding import EvidenceSet, FactorGraph, build_factor_graph, reduce_formula
from ..logic import (
    BINARY,
    And,
    Atom,
    GroundAtom,
    Not,
    free_variables,
    iter_atoms,
    validate_formula,
)
from .bp import bp_marginals
from .exact import DEFAULT_CAP, JointTable, exact_marginals, find_blocks
from .marginals import BpConfig, MarginalTable

__all__ = [
    "BpConfig",
    "DEFAULT_CAP",
    "JointTable",
    "MarginalTable",
    "bp_marginals",
    "exact_marginals",
    "find_blocks",
    "formula_probability",
    "world_log_weight",
]


def world_log_weight(graph: FactorGraph, world) -> float:
    """Sum of satisfied soft weights; ``-inf`` if a hard factor is violated.

    ``world`` maps every variable of ``graph`` to a bool.
    """
    total = float(graph.offset)
    for f in graph.factors:
        sat = bool(f.evaluate(world))
        if f.is_hard:
            if not sat:
                return -math.inf
        elif sat:
            total += f.weight
    return total


def _to_ground(formula):
    if isinstance(formula, Atom):
        return GroundAtom(formula.predicate, tuple(t.symbol for t in formula.args))
    if isinstance(formula, Not):
        return Not(_to_ground(formula.arg))
    if isinstance(formula, BINARY):
        return type(formula)(_to_ground(formula.left), _to_ground(formula.right))
    return formula


def formula_probability(
    program,
    evidence: EvidenceSet | None,
    query,
    given=None,
    cap: float = DEFAULT_CAP,
    graph: FactorGraph | None = None,
) -> float:
    """P(query | given) by exact enumeration; ``given=None`` is a tautology.

    Both formulas must be ground.  Evidence atoms are replaced by their
    values and query atoms are resolved through the graph's pruning records.
    """
    graph = graph or build_factor_graph(program, evidence)
    ev = (evidence or EvidenceSet()).closed_over(program)

    def value_of(atom):
        v = ev.lookup(atom)
        return graph.fixed.get(atom) if v is None else v

    def prepare(f):
        if f is None:
            return True
        if free_variables(f):
            raise NotGround(f"formula has free variables {sorted(free_variables(f))}")
        validate_formula(f, program)
        return reduce_formula(_to_ground(f), value_of, graph.alias)

    q, c = prepare(query), prepare(given)
    joint = JointTable(graph, cap)

    def log_mass(f):
        if f is True:
            return joint.log_z
        if f is False:
            return -math.inf
        return joint.log_mass(f, tuple(dict.fromkeys(iter_atoms(f))))

    denom = log_mass(c)
    if denom == -math.inf:
        raise ConditionImpossible("the conditioning formula has probability zero")
    if q is False:
        return 0.0
    if q is True:
        both = c
    elif c is True:
        both = q
    else:
        both = And(q, c)
    return float(min(1.0, math.exp(log_mass(both) - denom)))
