"""Loopy sum-product belief propagation on the binary factor graph.

A message to a binary variable is stored as one log-odds number
``log m(1) - log m(0)``.  Exact zeros from hard factors become ``+-inf``.
Each variable keeps an aggregate of its incoming log-odds: a finite sum
plus counts of ``+inf`` and ``-inf`` entries, so the "all but one" product
is O(1) to read.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from ..errors import NumericalFailure
from ..grounding import FactorGraph
from .exact import atom_probabilities
from .marginals import BpConfig, MarginalTable

logger = logging.getLogger(__name__)

INF = math.inf


def _lse(a, b):
    if a == -INF:
        return b
    if b == -INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def _log_sigmoid(x):
    """log P(true) for a message with log-odds ``x``."""
    if x == INF:
        return 0.0
    if x == -INF:
        return -INF
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def _prob(x):
    return math.exp(_log_sigmoid(x))


def _pair(x):
    """Log message ``(m(0), m(1))`` up to a constant, for log-odds ``x``."""
    if x == INF:
        return -INF, 0.0
    return 0.0, x


def _odds(o0, o1):
    if o0 == -INF and o1 == -INF:
        return None
    if o0 == -INF:
        return INF
    if o1 == -INF:
        return -INF
    return o1 - o0


class _Aggregate:
    """Sum of incoming log-odds per variable, tolerant to infinities."""

    def __init__(self, n):
        self.finite = [0.0] * n
        self.pos = [0] * n
        self.neg = [0] * n

    def add(self, v, x, sign=1):
        if x == INF:
            self.pos[v] += sign
        elif x == -INF:
            self.neg[v] += sign
        else:
            self.finite[v] += sign * x

    def _read(self, finite, pos, neg):
        if pos > 0 and neg > 0:
            return None
        if pos > 0:
            return INF
        if neg > 0:
            return -INF
        return finite

    def total(self, v):
        return self._read(self.finite[v], self.pos[v], self.neg[v])

    def excluding(self, v, x):
        pos, neg, finite = self.pos[v], self.neg[v], self.finite[v]
        if x == INF:
            pos -= 1
        elif x == -INF:
            neg -= 1
        else:
            finite -= x
        return self._read(finite, pos, neg)


class _Factor:
    __slots__ = ("vars", "logpot", "axes", "pair")

    def __init__(self, feature, index):
        table = feature.table if feature.table is not None else feature.compute_table()
        self.vars = [index[a] for a in feature.scope]
        self.logpot = feature.log_potential(table)
        k = len(self.vars)
        self.axes = [tuple(q for q in range(k) if q != p) for p in range(k)]
        self.pair = self.logpot.tolist() if k == 2 else None

    def messages_out(self, incoming):
        """Factor-to-variable log message pairs given incoming log-odds."""
        k = len(self.vars)
        if k == 1:
            return [(float(self.logpot[0]), float(self.logpot[1]))]
        if k == 2:
            (l00, l01), (l10, l11) = self.pair
            a0, a1 = _pair(incoming[0])
            b0, b1 = _pair(incoming[1])
            return [
                (_lse(l00 + b0, l01 + b1), _lse(l10 + b0, l11 + b1)),
                (_lse(l00 + a0, l10 + a1), _lse(l01 + a0, l11 + a1)),
            ]
        expanded = []
        for q, x in enumerate(incoming):
            shape = [1] * k
            shape[q] = 2
            expanded.append(np.array(_pair(x)).reshape(shape))
        out = []
        for p in range(k):
            partial = self.logpot
            for q in range(k):
                if q != p:
                    partial = partial + expanded[q]
            top = partial.max()
            if top == -INF:
                out.append((-INF, -INF))
                continue
            with np.errstate(divide="ignore"):
                m = np.log(np.exp(partial - top).sum(axis=self.axes[p])) + top
            out.append((float(m[0]), float(m[1])))
        return out


def bp_marginals(graph: FactorGraph, config: BpConfig | None = None) -> MarginalTable:
    """Approximate marginals by (damped) loopy belief propagation."""
    config = config or BpConfig()
    n = len(graph.variables)
    factors = [_Factor(f, graph.index) for f in graph.factors]
    msgs = [[0.0] * len(f.vars) for f in factors]

    def aggregate():
        agg = _Aggregate(n)
        for f, ms in zip(factors, msgs):
            for v, x in zip(f.vars, ms):
                agg.add(v, x)
        return agg

    agg = aggregate()
    damped = config.damping > 0
    keep = math.log(config.damping) if damped else None
    fresh = math.log1p(-config.damping)

    def update(fi):
        f = factors[fi]
        incoming = []
        for p, v in enumerate(f.vars):
            x = agg.excluding(v, msgs[fi][p])
            incoming.append(0.0 if x is None else x)
        residual = 0.0
        updated = []
        for p, (o0, o1) in enumerate(f.messages_out(incoming)):
            x = _odds(o0, o1)
            if x is None:
                raise NumericalFailure(
                    f"factor #{graph.factors[fi].source} sends an all-zero message to "
                    f"{graph.variables[f.vars[p]]}: conflicting hard constraints"
                )
            old = msgs[fi][p]
            # residual of the undamped proposal, i.e. distance from a fixed point
            residual = max(residual, abs(_prob(x) - _prob(old)))
            # unary factors send a constant message, so damping them only slows things down
            if damped and len(f.vars) > 1:
                x = _odds(
                    _lse(fresh + _log_sigmoid(-x), keep + _log_sigmoid(-old)),
                    _lse(fresh + _log_sigmoid(x), keep + _log_sigmoid(old)),
                )
            updated.append(x)
        return updated, residual

    converged = False
    residual = INF
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        residual = 0.0
        if config.schedule == "sequential":
            for fi, f in enumerate(factors):
                updated, r = update(fi)
                residual = max(residual, r)
                for p, (v, x) in enumerate(zip(f.vars, updated)):
                    agg.add(v, msgs[fi][p], -1)
                    agg.add(v, x)
                    msgs[fi][p] = x
        else:
            staged = []
            for fi in range(len(factors)):
                updated, r = update(fi)
                residual = max(residual, r)
                staged.append(updated)
            msgs = staged
        # rebuild aggregates to cancel drift from incremental updates
        agg = aggregate()
        if residual < config.convergence_tolerance:
            converged = True
            break

    var_prob = {}
    for v, atom in enumerate(graph.variables):
        x = agg.total(v)
        if x is None:
            raise NumericalFailure(f"belief of {atom} is zero in both states")
        var_prob[atom] = _prob(x)
    if not converged:
        logger.warning(
            "belief propagation stopped after %d iterations with residual %.3g",
            iterations,
            residual,
        )
    return MarginalTable(
        atom_probabilities(graph, var_prob),
        method="bp",
        iterations=iterations,
        max_residual=float(residual) if factors else 0.0,
        converged=converged or not factors,
    )
