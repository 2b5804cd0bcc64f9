"""Grounding of weighted first-order programs into factor graphs.

A :class:`FactorGraph` has one binary variable per unresolved ground atom and
one :class:`GroundFeature` per surviving ground formula.  Evidence is folded
in before the graph is built.  Hard features that pin a single atom, or that
state ``A <=> B`` between two atoms, are resolved by fixing or merging
variables.  Conditional distributions over the query atoms stay the same.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InconsistentEvidence, Unsatisfiable
from .logic import (
    And,
    Atom,
    Constant,
    GroundAtom,
    Iff,
    Implies,
    MlnProgram,
    Not,
    Or,
    TermEq,
    TermNeq,
    Variable,
    WeightedFormula,
    evaluate,
    free_variables,
    iter_atoms,
    variable_domains,
)

# Features with larger scopes are evaluated on demand instead of tabulated.
MAX_TABLE_SCOPE = 8


class EvidenceSet(Mapping):
    """Truth values for evidence atoms.

    ``closed`` names the predicates whose unlisted atoms count as false under
    the closed-world assumption.
    """

    def __init__(self, values=None, closed=()):
        self._values = dict(values or {})
        self.closed = frozenset(closed)

    def __getitem__(self, atom):
        return self._values[atom]

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        return f"EvidenceSet({len(self._values)} atoms, closed={sorted(self.closed)})"

    @classmethod
    def from_atoms(cls, true=(), false=(), closed=()):
        values = {}
        for atom in true:
            values[atom] = True
        for atom in false:
            if values.get(atom) is True:
                raise InconsistentEvidence(f"{atom} asserted both true and false")
            values[atom] = False
        return cls(values, closed)

    def closed_over(self, program: MlnProgram) -> "EvidenceSet":
        names = {p.name for p in program.predicates_of_kind("evidence")}
        return EvidenceSet(self._values, self.closed | names)

    def lookup(self, atom, closed_world=True):
        value = self._values.get(atom)
        if value is None and closed_world and atom.predicate in self.closed:
            return False
        return value


@dataclass(frozen=True, eq=False)
class GroundFeature:
    """One grounding of one weighted formula.

    ``scope`` lists the distinct atoms of ``formula`` in first-occurrence
    order; axis ``p`` of :attr:`table` corresponds to ``scope[p]``.
    """

    source: int
    formula: object
    scope: tuple[GroundAtom, ...]
    weight: float

    @property
    def is_hard(self):
        return self.weight == math.inf

    def evaluate(self, values):
        return evaluate(self.formula, values)

    def compute_table(self):
        k = len(self.scope)
        values = {}
        for p, atom in enumerate(self.scope):
            shape = [1] * k
            shape[p] = 2
            values[atom] = np.array([False, True]).reshape(shape)
        return np.broadcast_to(self.evaluate(values), (2,) * k).copy()

    @cached_property
    def table(self):
        """Boolean truth tensor of shape ``(2,) * k``, or None above the size cap."""
        if len(self.scope) > MAX_TABLE_SCOPE:
            return None
        return self.compute_table()

    def log_potential(self, truth):
        """Log of the factor value for boolean array ``truth``."""
        if self.is_hard:
            return np.where(truth, 0.0, -np.inf)
        return np.where(truth, self.weight, 0.0)

    def __str__(self):
        from .parser import format_formula

        w = "hard" if self.is_hard else f"{self.weight:g}"
        return f"[{w}] {format_formula(self.formula)}"


def _scope_of(formula):
    return tuple(dict.fromkeys(iter_atoms(formula)))


def _substitute(formula, binding):
    """Replace variables by constants and first-order atoms by ground atoms."""
    if isinstance(formula, Atom):
        args = []
        for t in formula.args:
            args.append(binding[t.name] if isinstance(t, Variable) else t.symbol)
        return GroundAtom(formula.predicate, tuple(args))
    if isinstance(formula, GroundAtom):
        return formula
    if isinstance(formula, Not):
        return Not(_substitute(formula.arg, binding))
    if isinstance(formula, (TermEq, TermNeq)):
        def term(t):
            return Constant(binding[t.name]) if isinstance(t, Variable) else t

        return type(formula)(term(formula.left), term(formula.right))
    return type(formula)(_substitute(formula.left, binding), _substitute(formula.right, binding))


def _negate(f):
    if isinstance(f, bool):
        return not f
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def reduce_formula(formula, value_of=None, alias=None):
    """Partially evaluate a ground formula.

    ``value_of(atom)`` returns True/False for known atoms or None; ``alias``
    maps atoms to their representative.  Returns a bool when the formula is
    decided, else the simplified formula.
    """
    if isinstance(formula, GroundAtom):
        if alias:
            formula = alias.get(formula, formula)
        if value_of is not None:
            v = value_of(formula)
            if v is not None:
                return bool(v)
        return formula
    if isinstance(formula, (TermEq, TermNeq)):
        if isinstance(formula.left, Variable) or isinstance(formula.right, Variable):
            raise ValueError("comparison is not ground")
        same = formula.left.symbol == formula.right.symbol
        return same if isinstance(formula, TermEq) else not same
    if isinstance(formula, Not):
        return _negate(reduce_formula(formula.arg, value_of, alias))
    left = reduce_formula(formula.left, value_of, alias)
    right = reduce_formula(formula.right, value_of, alias)
    if isinstance(formula, And):
        if left is False or right is False:
            return False
        if left is True:
            return right
        if right is True:
            return left
        return And(left, right)
    if isinstance(formula, Or):
        if left is True or right is True:
            return True
        if left is False:
            return right
        if right is False:
            return left
        return Or(left, right)
    if isinstance(formula, Implies):
        if left is False or right is True:
            return True
        if left is True:
            return right
        if right is False:
            return _negate(left)
        return Implies(left, right)
    if isinstance(formula, Iff):
        if isinstance(left, bool) and isinstance(right, bool):
            return left == right
        if isinstance(left, bool):
            return right if left else _negate(right)
        if isinstance(right, bool):
            return left if right else _negate(left)
        return Iff(left, right)
    raise TypeError(f"cannot reduce {formula!r}")


def _make_feature(source, formula, weight, decide=True):
    """Build a feature, or return a bool if the formula is a tautology/contradiction.

    With ``decide`` off only syntactically constant formulas become bools.
    """
    if isinstance(formula, bool):
        return formula
    feat = GroundFeature(source, formula, _scope_of(formula), weight)
    table = feat.table if decide else None
    if table is not None:
        if table.all():
            return True
        if not table.any():
            return False
    return feat


def _iter_groundings(wf: WeightedFormula, program: MlnProgram):
    names = sorted(free_variables(wf.formula))
    doms = variable_domains(wf.formula, program)
    pools = [program.domain(doms[n]).constants for n in names]
    for combo in itertools.product(*pools):
        yield _substitute(wf.formula, dict(zip(names, combo)))


@dataclass
class _Folded:
    features: list = field(default_factory=list)
    offset: float = 0.0
    decide: bool = True

    def add(self, source, formula, weight, where=""):
        item = _make_feature(source, formula, weight, self.decide)
        if item is True:
            if weight != math.inf:
                self.offset += weight
        elif item is False:
            if weight == math.inf:
                raise Unsatisfiable(f"hard formula #{source} is false{where}")
        else:
            self.features.append(item)


def ground_formula(wf: WeightedFormula, program: MlnProgram, index: int = 0):
    """All ground features of one weighted formula.

    Groundings decided by ``=``/``!=`` alone are dropped when true; a hard
    grounding that is decided false raises :class:`Unsatisfiable`.
    Tautologies such as ``A => A`` are kept here; the graph builder drops them.
    """
    out = _Folded(decide=False)
    for g in _iter_groundings(wf, program):
        out.add(index, reduce_formula(g), wf.weight)
    return out.features


def apply_evidence(features, evidence: EvidenceSet, closed_world=True):
    """Substitute evidence truth values into ground features."""
    out = _Folded()
    value_of = lambda a: evidence.lookup(a, closed_world)  # noqa: E731
    for f in features:
        out.add(f.source, reduce_formula(f.formula, value_of), f.weight)
    return out.features


@dataclass(frozen=True, eq=False)
class FactorGraph:
    """Ground network over the unresolved atoms.

    ``offset`` collects the weights of soft groundings that became constant
    true, so world log-weights stay comparable with the first-order program.
    ``fixed`` and ``alias`` record atoms resolved by pruning.
    """

    program: MlnProgram
    variables: tuple[GroundAtom, ...]
    factors: tuple[GroundFeature, ...]
    query_atoms: tuple[GroundAtom, ...] = ()
    offset: float = 0.0
    fixed: Mapping = field(default_factory=dict)
    alias: Mapping = field(default_factory=dict)

    @cached_property
    def index(self) -> dict[GroundAtom, int]:
        return {a: i for i, a in enumerate(self.variables)}

    @cached_property
    def neighbors(self) -> list[list[int]]:
        """Factor indices touching each variable."""
        out = [[] for _ in self.variables]
        for fi, f in enumerate(self.factors):
            for a in f.scope:
                out[self.index[a]].append(fi)
        return out

    def resolve(self, atom: GroundAtom):
        """Return ``(representative_variable, None)`` or ``(None, fixed_value)``."""
        atom = self.alias.get(atom, atom)
        if atom in self.fixed:
            return None, self.fixed[atom]
        if atom not in self.index:
            raise KeyError(atom)
        return atom, None


def _ground_atoms(program: MlnProgram, kinds):
    for p in program.predicates_of_kind(*kinds):
        pools = [program.domain(d).constants for d in p.arg_domains]
        for combo in itertools.product(*pools):
            yield GroundAtom(p.name, combo)


def _root(parent, a):
    while parent.get(a, a) != a:
        a = parent[a]
    return a


def build_factor_graph(
    program: MlnProgram,
    evidence: EvidenceSet | None = None,
    closed_world: bool = True,
    prune: bool = True,
) -> FactorGraph:
    """Ground ``program``, fold ``evidence`` in and return the factor graph."""
    evidence = (evidence or EvidenceSet()).closed_over(program)
    value_of = lambda a: evidence.lookup(a, closed_world)  # noqa: E731
    folded = _Folded()
    for i, wf in enumerate(program.formulas):
        for g in _iter_groundings(wf, program):
            folded.add(i, reduce_formula(g, value_of), wf.weight, f" under the evidence ({g})")

    features, offset = folded.features, folded.offset
    fixed: dict[GroundAtom, bool] = {}
    parent: dict[GroundAtom, GroundAtom] = {}
    key = program.atom_key
    while prune:
        changed = False
        for f in features:
            if not f.is_hard or f.table is None:
                continue
            if len(f.scope) == 1:
                atom = f.scope[0]
                allowed = [v for v in (False, True) if f.table[int(v)]]
                if len(allowed) == 1 and atom not in fixed:
                    fixed[atom] = allowed[0]
                    changed = True
            elif len(f.scope) == 2 and (f.table == np.array([[True, False], [False, True]])).all():
                a, b = (_root(parent, x) for x in f.scope)
                if a != b:
                    lo, hi = sorted((a, b), key=key)
                    parent[hi] = lo
                    changed = True
        if not changed:
            break
        alias = {a: _root(parent, a) for a in parent}
        for a, v in list(fixed.items()):
            r = alias.get(a, a)
            if fixed.get(r, v) != v:
                raise Unsatisfiable(f"pruning fixes {r} both true and false")
            fixed[r] = v
        refold = _Folded(offset=offset)
        lookup = fixed.get
        for f in features:
            refold.add(f.source, reduce_formula(f.formula, lookup, alias), f.weight, " after pruning")
        features, offset = refold.features, refold.offset

    alias = {a: _root(parent, a) for a in parent}
    # atoms merged into a fixed representative are fixed as well
    for a, r in alias.items():
        if r in fixed:
            fixed[a] = fixed[r]

    query_atoms = tuple(_ground_atoms(program, ("query", "derived")))
    variables = {}
    for a in query_atoms:
        r = alias.get(a, a)
        if r not in fixed:
            variables[r] = None
    for f in features:
        for a in f.scope:
            if a not in variables:
                # unlisted evidence atoms under the open-world assumption
                variables[a] = None
    ordered = tuple(sorted(variables, key=key))
    return FactorGraph(
        program=program,
        variables=ordered,
        factors=tuple(features),
        query_atoms=query_atoms,
        offset=offset,
        fixed=dict(fixed),
        alias=alias,
    )
