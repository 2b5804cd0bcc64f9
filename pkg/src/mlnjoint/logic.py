"""Abstract syntax for weighted first-order programs over finite domains.

Formulas are immutable trees.  Free variables are implicitly universally
quantified at the outermost level; there are no explicit quantifiers and no
function symbols.  Ground formulas use :class:`GroundAtom` leaves in place of
:class:`Atom`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping, Union

import numpy as np

from .errors import (
    ArityMismatch,
    DomainMismatch,
    DuplicateName,
    UndeclaredDomain,
    UndeclaredPredicate,
    ValidationError,
)

HARD = math.inf

PREDICATE_KINDS = ("evidence", "query", "derived")


@dataclass(frozen=True)
class Constant:
    symbol: str

    def __str__(self):
        return self.symbol


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


Term = Union[Constant, Variable]


@dataclass(frozen=True)
class GroundAtom:
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self):
        return f"{self.predicate}({','.join(self.args)})"


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, ...] = ()

    def __str__(self):
        return f"{self.predicate}({','.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class TermEq:
    left: Term
    right: Term


@dataclass(frozen=True)
class TermNeq:
    left: Term
    right: Term


Formula = Union[Atom, GroundAtom, Not, And, Or, Implies, Iff, TermEq, TermNeq]
BINARY = (And, Or, Implies, Iff)


def conjoin(*parts):
    """Left-nested conjunction of one or more formulas."""
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disjoin(*parts):
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


@dataclass(frozen=True)
class WeightedFormula:
    formula: Formula
    weight: float = HARD

    def __post_init__(self):
        w = float(self.weight)
        if math.isnan(w) or w == -math.inf:
            raise ValidationError(f"invalid formula weight {self.weight!r}")
        object.__setattr__(self, "weight", w)

    @property
    def is_hard(self):
        return self.weight == HARD


@dataclass(frozen=True)
class DomainDecl:
    name: str
    constants: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "constants", tuple(self.constants))


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    arg_domains: tuple[str, ...] = ()
    kind: str = "query"

    def __post_init__(self):
        object.__setattr__(self, "arg_domains", tuple(self.arg_domains))
        if self.kind not in PREDICATE_KINDS:
            raise ValidationError(f"unknown predicate kind {self.kind!r}")

    @property
    def arity(self):
        return len(self.arg_domains)


@dataclass(frozen=True)
class MlnProgram:
    domains: tuple[DomainDecl, ...] = ()
    predicates: tuple[PredicateDecl, ...] = ()
    formulas: tuple[WeightedFormula, ...] = ()

    def __post_init__(self):
        for name in ("domains", "predicates", "formulas"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @cached_property
    def domain_map(self) -> dict[str, DomainDecl]:
        return {d.name: d for d in self.domains}

    @cached_property
    def predicate_map(self) -> dict[str, PredicateDecl]:
        return {p.name: p for p in self.predicates}

    @cached_property
    def constant_domain(self) -> dict[str, str]:
        """Constant symbol -> owning domain name."""
        return {c: d.name for d in self.domains for c in d.constants}

    @cached_property
    def constant_rank(self) -> dict[str, int]:
        """Position of each constant within its domain, used for ordering."""
        return {c: i for d in self.domains for i, c in enumerate(d.constants)}

    def domain(self, name):
        try:
            return self.domain_map[name]
        except KeyError:
            raise UndeclaredDomain(f"undeclared domain {name!r}") from None

    def predicate(self, name):
        try:
            return self.predicate_map[name]
        except KeyError:
            raise UndeclaredPredicate(f"undeclared predicate {name!r}") from None

    def predicates_of_kind(self, *kinds):
        return [p for p in self.predicates if p.kind in kinds]

    def atom_key(self, atom: GroundAtom):
        """Deterministic sort key: predicate name, then constant positions."""
        rank = self.constant_rank
        return (atom.predicate, tuple(rank.get(a, -1) for a in atom.args), atom.args)

    def with_formulas(self, formulas):
        return MlnProgram(self.domains, self.predicates, tuple(formulas))

    def with_kinds(self, kinds: Mapping[str, str]):
        """Copy with predicate kinds overridden by name."""
        preds = []
        for p in self.predicates:
            preds.append(PredicateDecl(p.name, p.arg_domains, kinds.get(p.name, p.kind)))
        unknown = set(kinds) - {p.name for p in self.predicates}
        if unknown:
            raise UndeclaredPredicate(f"undeclared predicate(s) {sorted(unknown)}")
        return MlnProgram(self.domains, tuple(preds), self.formulas)


def iter_atoms(formula) -> Iterator[Union[Atom, GroundAtom]]:
    if isinstance(formula, (Atom, GroundAtom)):
        yield formula
    elif isinstance(formula, Not):
        yield from iter_atoms(formula.arg)
    elif isinstance(formula, BINARY):
        yield from iter_atoms(formula.left)
        yield from iter_atoms(formula.right)


def _iter_terms(formula) -> Iterator[Term]:
    if isinstance(formula, Atom):
        yield from formula.args
    elif isinstance(formula, (TermEq, TermNeq)):
        yield formula.left
        yield formula.right
    elif isinstance(formula, Not):
        yield from _iter_terms(formula.arg)
    elif isinstance(formula, BINARY):
        yield from _iter_terms(formula.left)
        yield from _iter_terms(formula.right)


def free_variables(formula) -> frozenset[str]:
    """Names of every variable occurring anywhere in ``formula``."""
    return frozenset(t.name for t in _iter_terms(formula) if isinstance(t, Variable))


def is_ground(formula):
    return not free_variables(formula)


def variable_domains(formula, program: MlnProgram) -> dict[str, str]:
    """Infer each variable's domain from the argument positions it fills.

    Variables that occur only inside ``=``/``!=`` comparisons take the domain
    of the constant they are compared to, if any.
    """
    domains: dict[str, str] = {}
    for atom in iter_atoms(formula):
        if isinstance(atom, GroundAtom):
            continue
        decl = program.predicate(atom.predicate)
        for term, dom in zip(atom.args, decl.arg_domains):
            if isinstance(term, Variable):
                prev = domains.setdefault(term.name, dom)
                if prev != dom:
                    raise DomainMismatch(
                        f"variable {term.name!r} used with domains {prev!r} and {dom!r}"
                    )
    pending = True
    while pending:
        pending = False
        for cmp in _iter_comparisons(formula):
            a, b = cmp.left, cmp.right
            for x, y in ((a, b), (b, a)):
                if isinstance(x, Variable) and x.name not in domains:
                    if isinstance(y, Constant) and y.symbol in program.constant_domain:
                        domains[x.name] = program.constant_domain[y.symbol]
                        pending = True
                    elif isinstance(y, Variable) and y.name in domains:
                        domains[x.name] = domains[y.name]
                        pending = True
    missing = free_variables(formula) - set(domains)
    if missing:
        raise DomainMismatch(f"cannot infer a domain for variable(s) {sorted(missing)}")
    return domains


def _iter_comparisons(formula):
    if isinstance(formula, (TermEq, TermNeq)):
        yield formula
    elif isinstance(formula, Not):
        yield from _iter_comparisons(formula.arg)
    elif isinstance(formula, BINARY):
        yield from _iter_comparisons(formula.left)
        yield from _iter_comparisons(formula.right)


def _check_term(term, expected_domain, program, where):
    if isinstance(term, Constant):
        owner = program.constant_domain.get(term.symbol)
        if owner is None:
            raise DomainMismatch(f"undeclared constant {term.symbol!r} in {where}")
        if expected_domain is not None and owner != expected_domain:
            raise DomainMismatch(
                f"constant {term.symbol!r} belongs to {owner!r}, expected {expected_domain!r} in {where}"
            )


def validate_formula(formula, program: MlnProgram):
    """Check a formula against the declarations of ``program``."""
    for atom in iter_atoms(formula):
        decl = program.predicate(atom.predicate)
        if len(atom.args) != decl.arity:
            raise ArityMismatch(
                f"{atom.predicate} takes {decl.arity} argument(s), got {len(atom.args)}"
            )
        for term, dom in zip(atom.args, decl.arg_domains):
            if isinstance(atom, GroundAtom):
                term = Constant(term)
            _check_term(term, dom, program, str(atom))
    domains = variable_domains(formula, program)
    for cmp in _iter_comparisons(formula):
        sides = []
        for t in (cmp.left, cmp.right):
            _check_term(t, None, program, "comparison")
            if isinstance(t, Constant):
                sides.append(program.constant_domain[t.symbol])
            else:
                sides.append(domains[t.name])
        if sides[0] != sides[1]:
            raise DomainMismatch(f"comparison between domains {sides[0]!r} and {sides[1]!r}")


def validate_program(program: MlnProgram) -> MlnProgram:
    """Return ``program`` unchanged if it is well formed, else raise."""
    seen = set()
    for d in program.domains:
        if d.name in seen:
            raise DuplicateName(f"domain {d.name!r} declared twice")
        seen.add(d.name)
        if not d.constants:
            raise ValidationError(f"domain {d.name!r} is empty")
        if len(set(d.constants)) != len(d.constants):
            raise DuplicateName(f"duplicate constant in domain {d.name!r}")
    owners: dict[str, str] = {}
    for d in program.domains:
        for c in d.constants:
            if c in owners:
                raise DuplicateName(f"constant {c!r} appears in {owners[c]!r} and {d.name!r}")
            owners[c] = d.name
    names = set()
    for p in program.predicates:
        if p.name in names:
            raise DuplicateName(f"predicate {p.name!r} declared twice")
        names.add(p.name)
        for dom in p.arg_domains:
            program.domain(dom)
    for wf in program.formulas:
        validate_formula(wf.formula, program)
    return program


def evaluate(formula, values: Mapping[GroundAtom, object]):
    """Truth value of a ground formula; ``values`` may hold bools or bool arrays.

    Arrays broadcast, so one call can evaluate a formula over many worlds.
    """
    if isinstance(formula, GroundAtom):
        return values[formula]
    if isinstance(formula, Not):
        return np.logical_not(evaluate(formula.arg, values))
    if isinstance(formula, And):
        return np.logical_and(evaluate(formula.left, values), evaluate(formula.right, values))
    if isinstance(formula, Or):
        return np.logical_or(evaluate(formula.left, values), evaluate(formula.right, values))
    if isinstance(formula, Implies):
        return np.logical_or(
            np.logical_not(evaluate(formula.left, values)), evaluate(formula.right, values)
        )
    if isinstance(formula, Iff):
        return np.equal(evaluate(formula.left, values), evaluate(formula.right, values))
    if isinstance(formula, (TermEq, TermNeq)):
        if not (isinstance(formula.left, Constant) and isinstance(formula.right, Constant)):
            raise ValueError("cannot evaluate a comparison with free variables")
        same = formula.left.symbol == formula.right.symbol
        return same if isinstance(formula, TermEq) else not same
    raise TypeError(f"cannot evaluate {formula!r}")
