"""Reader and printer for the rule-file and evidence-file formats.

Rule files hold one statement per line, in any order::

    etype = {PER, ORG, NONE}            // domain
    ET(entity, etype)   // evidence     // predicate, kind marker optional
    6.13 ET(1,PER) <=> ETFinal(1,PER)   // weighted rule
    ETFinal(2,NONE) => RTFinal(1,2,NULL).   // hard rule

Operators, tightest first: ``!``, ``^``, ``v``, ``=>``, ``<=>``.  ``=`` and
``!=`` compare terms.  Lowercase identifiers are variables; uppercase
identifiers and unsigned integers are constants.  ``v`` and ``inf`` are
reserved.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import (
    InconsistentEvidence,
    MlnSyntaxError,
    SourceSpan,
    NotEvidencePredicate,
    NotGround,
    ValidationError,
)
from .logic import (
    PREDICATE_KINDS,
    And,
    Atom,
    Constant,
    DomainDecl,
    GroundAtom,
    Iff,
    Implies,
    MlnProgram,
    Not,
    Or,
    PredicateDecl,
    TermEq,
    TermNeq,
    Variable,
    WeightedFormula,
    validate_formula,
    validate_program,
)

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>[-+]?(?:\d+\.\d+|\d+)(?:[eE][-+]?\d+)?|[-+]inf\b)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=>|=>|!=|[!^=(){},.])
    """,
    re.VERBOSE,
)

_INT = re.compile(r"\d+$")


@dataclass(frozen=True)
class _Tok:
    kind: str  # number | ident | op | end
    text: str
    col: int


def _tokenize(text, line_no, col_offset=0):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise MlnSyntaxError(f"unexpected character {text[pos]!r}", line_no, col_offset + pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            tok_text = m.group()
            # "-1" after a term is not a number; keep signs only at statement start
            if kind == "number" and tok_text[0] in "+-" and toks:
                raise MlnSyntaxError(f"unexpected {tok_text!r}", line_no, col_offset + pos + 1)
            toks.append(_Tok(kind, tok_text, col_offset + pos + 1))
        pos = m.end()
    toks.append(_Tok("end", "", col_offset + len(text) + 1))
    return toks


class _FormulaParser:
    def __init__(self, toks, line_no):
        self.toks = toks
        self.i = 0
        self.line = line_no

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        j = min(self.i + k, len(self.toks) - 1)
        return self.toks[j]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return MlnSyntaxError(msg, self.line, tok.col)

    def accept(self, text):
        if self.tok.text == text and self.tok.kind in ("op", "ident"):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of line"
            raise self.error(f"expected {text!r}, found {found!r}")

    def parse_iff(self):
        node = self.parse_implies()
        while self.accept("<=>"):
            node = Iff(node, self.parse_implies())
        return node

    def parse_implies(self):
        node = self.parse_or()
        if self.accept("=>"):
            return Implies(node, self.parse_implies())
        return node

    def parse_or(self):
        node = self.parse_and()
        while self.tok.kind == "ident" and self.tok.text == "v":
            self.i += 1
            node = Or(node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_unary()
        while self.accept("^"):
            node = And(node, self.parse_unary())
        return node

    def parse_unary(self):
        if self.accept("!"):
            return Not(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self):
        tok = self.tok
        if self.accept("("):
            node = self.parse_iff()
            self.expect(")")
            return node
        if tok.kind == "ident" and tok.text not in ("v", "inf"):
            nxt = self.peek()
            if nxt.text == "(":
                return self.parse_atom()
            if nxt.text in ("=", "!="):
                return self.parse_comparison()
            if tok.text[0].isupper():
                self.i += 1
                return Atom(tok.text, ())
            raise self.error(f"bare variable {tok.text!r} is not a formula")
        if tok.kind == "number" and _INT.match(tok.text):
            return self.parse_comparison()
        raise self.error(f"unexpected {tok.text or 'end of line'!r}")

    def parse_term(self):
        tok = self.tok
        if tok.kind == "number" and _INT.match(tok.text):
            self.i += 1
            return Constant(tok.text)
        if tok.kind == "ident" and tok.text not in ("v", "inf"):
            self.i += 1
            if tok.text[0].islower():
                return Variable(tok.text)
            return Constant(tok.text)
        raise self.error(f"expected a term, found {tok.text or 'end of line'!r}")

    def parse_atom(self):
        name = self.tok.text
        self.i += 1
        self.expect("(")
        args = []
        if not self.accept(")"):
            args.append(self.parse_term())
            while self.accept(","):
                args.append(self.parse_term())
            self.expect(")")
        return Atom(name, tuple(args))

    def parse_comparison(self):
        left = self.parse_term()
        if self.accept("="):
            return TermEq(left, self.parse_term())
        if self.accept("!="):
            return TermNeq(left, self.parse_term())
        raise self.error("expected '=' or '!='")


def parse_formula(text: str, line_no: int = 1):
    """Parse a single formula (no weight, no trailing period)."""
    toks = _tokenize(text, line_no)
    p = _FormulaParser(toks, line_no)
    node = p.parse_iff()
    if p.tok.kind != "end":
        raise p.error(f"unexpected {p.tok.text!r}")
    return node


def _split_comment(line):
    idx = line.find("//")
    if idx < 0:
        return line, ""
    return line[:idx], line[idx + 2 :].strip()


def _is_decl(toks):
    # Name ( dom , dom ... )  with lowercase domain names and nothing else
    if len(toks) < 4 or toks[0].kind != "ident" or toks[1].text != "(":
        return False
    if toks[0].text in ("v", "inf"):
        return False
    body = toks[2:-1]
    if not body or body[-1].text != ")":
        return False
    inner = body[:-1]
    if not inner:
        return True
    for k, t in enumerate(inner):
        if k % 2 == 0:
            if t.kind != "ident" or not t.text[0].islower() or t.text in ("v", "inf"):
                return False
        elif t.text != ",":
            return False
    return len(inner) % 2 == 1


def _parse_weight(tok):
    text = tok.text.lstrip("+")
    if text in ("inf",):
        return math.inf
    if text == "-inf":
        return -math.inf
    return float(text)


def parse_program(text: str) -> MlnProgram:
    """Parse rule-file text into a validated :class:`MlnProgram`."""
    domains, predicates, rules = [], [], []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        code, comment = _split_comment(raw)
        if not code.strip():
            continue
        toks = _tokenize(code, line_no)
        head = toks[0]
        if head.kind == "ident" and head.text[0].islower() and toks[1].text == "=" and toks[2].text == "{":
            domains.append((_parse_domain(toks, line_no), line_no))
        elif _is_decl(toks):
            kind = comment.split()[0] if comment else "query"
            if kind not in PREDICATE_KINDS:
                raise MlnSyntaxError(f"unknown predicate kind marker {kind!r}", line_no, len(code) + 1)
            args = tuple(t.text for t in toks[2:-2] if t.text != ",")
            predicates.append((PredicateDecl(head.text, args, kind), line_no))
        else:
            rules.append((_parse_rule(toks, line_no), line_no))

    program = MlnProgram(
        tuple(d for d, _ in domains),
        tuple(p for p, _ in predicates),
        (),
    )
    validate_program(program)
    for wf, line_no in rules:
        try:
            validate_formula(wf.formula, program)
        except ValidationError as exc:
            raise type(exc)(f"{exc} (line {line_no})") from None
    return program.with_formulas(wf for wf, _ in rules)


def _parse_domain(toks, line_no):
    name = toks[0].text
    consts = []
    i = 3
    if toks[i].text == "}":
        raise MlnSyntaxError(f"domain {name!r} is empty", line_no, toks[i].col)
    while True:
        t = toks[i]
        if t.kind == "number" and _INT.match(t.text):
            consts.append(t.text)
        elif t.kind == "ident" and t.text[0].isupper():
            consts.append(t.text)
        else:
            raise MlnSyntaxError(f"bad constant {t.text or 'end of line'!r}", line_no, t.col)
        i += 1
        if toks[i].text == ",":
            i += 1
            continue
        if toks[i].text == "}":
            i += 1
            break
        raise MlnSyntaxError("expected ',' or '}'", line_no, toks[i].col)
    if toks[i].kind != "end":
        raise MlnSyntaxError(f"unexpected {toks[i].text!r}", line_no, toks[i].col)
    return DomainDecl(name, tuple(consts))


def _parse_rule(toks, line_no):
    weight = None
    start = 0
    head = toks[0]
    is_weight = head.kind == "number" or (head.kind == "ident" and head.text == "inf")
    if is_weight and not (_INT.match(head.text) and toks[1].text in ("=", "!=")):
        weight = _parse_weight(head)
        start = 1
    hard_mark = len(toks) >= 2 and toks[-2].text == "."
    body = toks[start:-2] + [toks[-1]] if hard_mark else toks[start:]
    p = _FormulaParser(body, line_no)
    formula = p.parse_iff()
    if p.tok.kind != "end":
        raise p.error(f"unexpected {p.tok.text!r}")
    if hard_mark:
        if weight is not None and weight != math.inf:
            raise MlnSyntaxError("a weighted rule cannot end with '.'", line_no, toks[-2].col)
        weight = math.inf
    if weight is None:
        raise MlnSyntaxError("rule needs a weight or a trailing '.'", line_no, head.col)
    try:
        return WeightedFormula(formula, weight)
    except ValidationError as exc:
        raise MlnSyntaxError(str(exc), line_no, head.col) from None


def parse_evidence(text: str, program: MlnProgram):
    """Parse evidence-file text into an :class:`~mlnjoint.grounding.EvidenceSet`."""
    from .grounding import EvidenceSet

    values: dict[GroundAtom, bool] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        code, _ = _split_comment(raw)
        if not code.strip():
            continue
        toks = _tokenize(code, line_no)
        p = _FormulaParser(toks, line_no)
        truth = not p.accept("!")
        tok = p.tok
        if tok.kind != "ident" or p.peek().text != "(":
            if not (tok.kind == "ident" and tok.text[:1].isupper() and p.peek().kind == "end"):
                raise p.error("expected a ground atom")
        atom = p.parse_primary()
        if p.tok.kind != "end" or not isinstance(atom, Atom):
            raise p.error("expected a single ground atom per line")
        decl = program.predicate(atom.predicate)
        if decl.kind != "evidence":
            raise NotEvidencePredicate(f"{atom.predicate} is a {decl.kind} predicate (line {line_no})")
        if any(isinstance(t, Variable) for t in atom.args):
            raise NotGround(f"evidence atom {atom} has variables (line {line_no})")
        try:
            validate_formula(atom, program)
        except ValidationError as exc:
            raise type(exc)(f"{exc} (line {line_no})") from None
        ga = GroundAtom(atom.predicate, tuple(t.symbol for t in atom.args))
        if values.get(ga, truth) != truth:
            raise InconsistentEvidence(f"{ga} asserted both true and false (line {line_no})")
        values[ga] = truth
    return EvidenceSet(values)


# -- printing -------------------------------------------------------------

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5}
_SYMBOL = {Iff: "<=>", Implies: "=>", Or: "v", And: "^"}


def _prec(node):
    return _PREC.get(type(node), 6)


def format_formula(node) -> str:
    if isinstance(node, (Atom, GroundAtom)):
        if not node.args:
            return node.predicate
        return f"{node.predicate}({','.join(str(a) for a in node.args)})"
    if isinstance(node, TermEq):
        return f"{node.left} = {node.right}"
    if isinstance(node, TermNeq):
        return f"{node.left} != {node.right}"
    if isinstance(node, Not):
        inner = format_formula(node.arg)
        if isinstance(node.arg, (*_SYMBOL, TermEq, TermNeq)):
            inner = f"({inner})"
        return "!" + inner
    op = type(node)
    p = _PREC[op]
    left, right = format_formula(node.left), format_formula(node.right)
    lp, rp = _prec(node.left), _prec(node.right)
    right_assoc = op is Implies
    if lp < p or (lp == p and right_assoc):
        left = f"({left})"
    if rp < p or (rp == p and not right_assoc):
        right = f"({right})"
    return f"{left} {_SYMBOL[op]} {right}"


def format_weight(w: float) -> str:
    return repr(float(w))


def print_program(program: MlnProgram) -> str:
    """Render ``program`` as rule-file text that parses back to an equal program."""
    lines = []
    for d in program.domains:
        lines.append(f"{d.name} = {{{', '.join(d.constants)}}}")
    if program.domains:
        lines.append("")
    for p in program.predicates:
        lines.append(f"{p.name}({', '.join(p.arg_domains)}) // {p.kind}")
    if program.formulas:
        lines.append("")
    for wf in program.formulas:
        text = format_formula(wf.formula)
        if wf.is_hard:
            lines.append(f"{text}.")
        else:
            lines.append(f"{format_weight(wf.weight)} {text}")
    return "\n".join(lines) + "\n"


def print_evidence(evidence) -> str:
    lines = []
    for atom, value in evidence.items():
        lines.append(("" if value else "!") + str(atom))
    return "\n".join(lines) + ("\n" if lines else "")
