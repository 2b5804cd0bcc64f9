"""Exact inference by enumerating worlds.

Groups of atoms tied by an exactly-one hard constraint (one positive clause
over the group plus a pairwise ``!a v !b`` clause for every pair) are
enumerated as categorical blocks.  Every other world in such a group has
probability zero, so this only shrinks the search space.  The joint log-weight
is a dense tensor with one axis per block or free atom.  Factors are added
into it with broadcasting.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import TooLarge, Unsatisfiable
from ..grounding import FactorGraph
from .marginals import MarginalTable

DEFAULT_CAP = 25


def _is_positive_clause(formula):
    from ..logic import GroundAtom, Or

    if isinstance(formula, GroundAtom):
        return True
    return isinstance(formula, Or) and _is_positive_clause(formula.left) and _is_positive_clause(formula.right)


def find_blocks(graph: FactorGraph) -> list[tuple]:
    """Exactly-one groups implied by the hard factors of ``graph``."""
    at_most = set()
    for f in graph.factors:
        if f.is_hard and len(f.scope) == 2:
            t = f.table
            if not t[1, 1] and t[0, 0] and t[0, 1] and t[1, 0]:
                at_most.add(frozenset(f.scope))
    taken = set()
    blocks = []
    for f in graph.factors:
        if not f.is_hard or len(f.scope) < 2:
            continue
        t = f.table
        if t is not None:
            flat = t.reshape(-1)
            at_least = not flat[0] and flat[1:].all()
        else:
            at_least = _is_positive_clause(f.formula)
        if not at_least or taken.intersection(f.scope):
            continue
        if all(frozenset(p) in at_most for p in itertools.combinations(f.scope, 2)):
            blocks.append(tuple(f.scope))
            taken.update(f.scope)
    return blocks


@dataclass
class Unit:
    """One tensor axis: a categorical block or a single free atom."""

    atoms: tuple
    categorical: bool

    @property
    def size(self):
        return len(self.atoms) if self.categorical else 2

    def indicator(self, atom):
        """Boolean vector over this unit's states: is ``atom`` true?"""
        if self.categorical:
            return np.arange(self.size) == self.atoms.index(atom)
        return np.array([False, True])


def plan_units(graph: FactorGraph, use_blocks=True) -> list[Unit]:
    blocks = find_blocks(graph) if use_blocks else []
    in_block = {a: b for b in blocks for a in b}
    units, seen = [], set()
    for a in graph.variables:
        b = in_block.get(a)
        if b is None:
            units.append(Unit((a,), False))
        elif b not in seen:
            seen.add(b)
            units.append(Unit(b, True))
    return units


def effective_size(units) -> float:
    """log2 of the number of enumerated worlds."""
    return float(sum(math.log2(u.size) for u in units))


class JointTable:
    """Dense log-weight tensor over all enumerated worlds of a graph."""

    def __init__(self, graph: FactorGraph, cap: float = DEFAULT_CAP, use_blocks=True):
        self.graph = graph
        self.units = plan_units(graph, use_blocks)
        size = effective_size(self.units)
        if size > cap:
            raise TooLarge(size, cap)
        self.unit_of = {a: (k, u) for k, u in enumerate(self.units) for a in u.atoms}
        self.shape = tuple(u.size for u in self.units)
        logw = np.full(self.shape, float(graph.offset))
        grouped: dict[tuple, np.ndarray] = {}
        for f in graph.factors:
            axes, lp = self.factor_tensor(f)
            if axes in grouped:
                grouped[axes] = grouped[axes] + lp
            else:
                grouped[axes] = lp
        for axes, lp in grouped.items():
            logw = logw + self._expand(axes, lp)
        self.log_weights = logw
        self.log_z = float(logsumexp(logw)) if logw.size else 0.0
        if self.log_z == -math.inf:
            raise Unsatisfiable("no world satisfies every hard constraint")

    def _expand(self, axes, tensor):
        full = [1] * len(self.units)
        for ax, n in zip(axes, tensor.shape):
            full[ax] = n
        return tensor.reshape(full)

    def truth_tensor(self, formula, scope):
        """Truth of ``formula`` over the units it touches: ``(axes, bool tensor)``."""
        axes = tuple(sorted({self.unit_of[a][0] for a in scope}))
        pos = {ax: i for i, ax in enumerate(axes)}
        values = {}
        for a in scope:
            ax, unit = self.unit_of[a]
            shape = [1] * len(axes)
            shape[pos[ax]] = unit.size
            values[a] = unit.indicator(a).reshape(shape)
        from ..logic import evaluate

        truth = np.asarray(evaluate(formula, values), dtype=bool)
        truth = np.broadcast_to(truth, tuple(self.shape[ax] for ax in axes))
        return axes, truth

    def factor_tensor(self, feature):
        axes, truth = self.truth_tensor(feature.formula, feature.scope)
        return axes, feature.log_potential(truth)

    def log_mass(self, formula, scope):
        """log of the unnormalised weight of worlds where ``formula`` holds."""
        axes, truth = self.truth_tensor(formula, scope)
        masked = np.where(self._expand(axes, truth), self.log_weights, -np.inf)
        return float(logsumexp(masked))

    def probabilities(self):
        return np.exp(self.log_weights - self.log_z)

    def unit_marginals(self):
        probs = self.probabilities()
        out = []
        for k in range(len(self.units)):
            others = tuple(i for i in range(len(self.units)) if i != k)
            out.append(probs.sum(axis=others))
        return out

    def iter_worlds(self):
        """Yield ``(assignment dict, probability)`` for every enumerated world."""
        probs = self.probabilities()
        for idx in np.ndindex(*self.shape):
            world = {}
            for state, unit in zip(idx, self.units):
                if unit.categorical:
                    for j, a in enumerate(unit.atoms):
                        world[a] = j == state
                else:
                    world[unit.atoms[0]] = bool(state)
            yield world, float(probs[idx])


def atom_probabilities(graph: FactorGraph, var_prob):
    """Expand per-variable probabilities to every query atom, pruned ones included."""
    out = {}
    for atom in graph.query_atoms:
        rep, value = graph.resolve(atom)
        out[atom] = float(value) if rep is None else float(var_prob[rep])
    return out


def exact_marginals(graph: FactorGraph, cap: float = DEFAULT_CAP, use_blocks=True) -> MarginalTable:
    """Exact P(atom = true) for every query atom of ``graph``."""
    table = JointTable(graph, cap, use_blocks)
    var_prob = {}
    for unit, marg in zip(table.units, table.unit_marginals()):
        if unit.categorical:
            for a, p in zip(unit.atoms, marg):
                var_prob[a] = min(max(float(p), 0.0), 1.0)
        else:
            var_prob[unit.atoms[0]] = min(max(float(marg[1]), 0.0), 1.0)
    return MarginalTable(
        atom_probabilities(graph, var_prob),
        method="exact",
        log_partition=table.log_z,
        extra={
            "worlds_log2": effective_size(table.units),
            "blocks": sum(u.categorical for u in table.units),
            "variables": len(graph.variables),
        },
    )
