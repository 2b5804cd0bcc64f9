"""Command-line entry point: ``mlnjoint infer|mln|eval|oracle``."""

from __future__ import annotations

import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from .errors import MLNError
from .evaluation import score
from .extraction.decode import JointPrediction
from .extraction.pipeline import AUTO_CAP, INFERENCE_METHODS, run_inference, run_sentence
from .extraction.schema import load_bundles, load_compatibility
from .extraction.weights import WeightStrategy
from .grounding import build_factor_graph
from .inference import BpConfig, JointTable, exact_marginals, formula_probability
from .inference.exact import DEFAULT_CAP
from .parser import parse_evidence, parse_formula, parse_program

logger = logging.getLogger("mlnjoint")


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temp file so readers never see a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(payload, out):
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        atomic_write(out, text)
    else:
        click.echo(text, nl=False)


def _default_cap(cap, inference):
    if cap is not None:
        return cap
    return DEFAULT_CAP if inference == "exact" else AUTO_CAP


def _bp_config(max_iters, damping, tol):
    try:
        return BpConfig(max_iters, damping, tol)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None


def bp_options(f):
    f = click.option("--bp-tol", type=float, default=1e-6, show_default=True, help="BP convergence tolerance.")(f)
    f = click.option("--bp-damping", type=float, default=0.5, show_default=True, help="BP message damping in [0,1).")(f)
    f = click.option("--bp-max-iters", type=int, default=1000, show_default=True, help="BP iteration limit.")(f)
    f = click.option(
        "--cap",
        type=float,
        default=None,
        help="Largest log2 world count enumerated exactly [default: 20 for auto, 25 for exact].",
    )(f)
    f = click.option(
        "--inference", type=click.Choice(INFERENCE_METHODS), default="auto", show_default=True
    )(f)
    return f


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Markov logic inference and joint entity/relation extraction."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


# -- infer ------------------------------------------------------------------


def _infer_one(job):
    bundle, options = job
    try:
        pred, marginals = run_sentence(bundle, **options)
    except (MLNError, ValueError) as exc:
        return {"sentence_id": bundle.sentence_id, "error": type(exc).__name__, "message": str(exc)}
    record = pred.to_dict()
    record["inference"] = {
        "method": marginals.method,
        "iterations": marginals.iterations,
        "max_residual": marginals.max_residual,
        "converged": marginals.converged,
    }
    return record


def _empty_prediction(bundle):
    return JointPrediction(
        bundle.sentence_id, {m.id: None for m in bundle.mentions}, {p.ids: "NULL" for p in bundle.pairs}
    )


@main.command()
@click.argument("bundles", type=click.Path(exists=True, dir_okay=False))
@click.option("--compat", type=click.Path(exists=True, dir_okay=False), help="Compatibility table JSON.")
@click.option("--strategy", type=click.Choice(["lor", "cm"]), default="lor", show_default=True)
@click.option("--k", type=float, default=10.0, show_default=True, help="CM multiplier.")
@click.option("--semantic-rules/--no-semantic-rules", default=True, show_default=True)
@click.option("--exactly-one/--no-exactly-one", default=True, show_default=True)
@bp_options
@click.option("--emit-marginals", is_flag=True, help="Include full marginal tables.")
@click.option("--score", "do_score", is_flag=True, help="Score against gold in the bundle file.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes.")
@click.option("--out", type=click.Path(dir_okay=False), help="Output JSON (default: stdout).")
def infer(
    bundles, compat, strategy, k, semantic_rules, exactly_one, inference, cap,
    bp_max_iters, bp_damping, bp_tol, emit_marginals, do_score, jobs, out,
):
    """Joint inference and decoding for every sentence in BUNDLES."""
    items = load_bundles(bundles)
    try:
        options = dict(
            table=load_compatibility(compat),
            strategy=WeightStrategy(strategy, k),
            semantic_rules=semantic_rules,
            exactly_one=exactly_one,
            inference=inference,
            cap=_default_cap(cap, inference),
            bp_config=_bp_config(bp_max_iters, bp_damping, bp_tol),
            keep_marginals=emit_marginals,
        )
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None
    jobs_list = [(b, options) for b in items]
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_infer_one, jobs_list))
    else:
        records = [_infer_one(j) for j in jobs_list]

    predictions, failures = [], []
    for bundle, rec in zip(items, records):
        if "error" in rec:
            logger.warning("sentence %s failed: %s", bundle.sentence_id, rec["message"])
            failures.append(rec)
        else:
            predictions.append(rec)
    payload = {"predictions": predictions, "failures": failures}
    if do_score:
        by_id = {r["sentence_id"]: JointPrediction.from_dict(r) for r in predictions}
        # failed sentences count as predicting nothing
        preds = [by_id.get(b.sentence_id) or _empty_prediction(b) for b in items]
        report = score(preds, items)
        payload["score"] = report.to_dict()
        click.echo(report.to_text(), err=True)
    _emit(payload, out)
    if failures:
        click.echo(f"{len(failures)} sentence(s) failed", err=True)
        sys.exit(1)


# -- mln --------------------------------------------------------------------


def _load_mln(rules, evidence, evidence_pred):
    program = parse_program(Path(rules).read_text(encoding="utf-8"))
    if evidence_pred:
        program = program.with_kinds({name: "evidence" for name in evidence_pred})
    ev = parse_evidence(Path(evidence).read_text(encoding="utf-8"), program) if evidence else None
    return program, ev


@main.command()
@click.argument("rules", type=click.Path(exists=True, dir_okay=False))
@click.argument("evidence", type=click.Path(exists=True, dir_okay=False), required=False)
@bp_options
@click.option("--query-formula", help="Ground formula F1; prints P(F1 | F2) instead of marginals.")
@click.option("--given-formula", help="Ground formula F2 to condition on (default: true).")
@click.option("--evidence-pred", multiple=True, help="Treat this predicate as evidence (repeatable).")
@click.option("--out", type=click.Path(dir_okay=False))
def mln(rules, evidence, inference, cap, bp_max_iters, bp_damping, bp_tol, query_formula, given_formula, evidence_pred, out):
    """Marginals of every query atom of RULES given EVIDENCE."""
    try:
        program, ev = _load_mln(rules, evidence, evidence_pred)
        if given_formula and not query_formula:
            raise click.UsageError("--given-formula needs --query-formula")
        if query_formula:
            f1 = parse_formula(query_formula)
            f2 = parse_formula(given_formula) if given_formula else None
            p = formula_probability(program, ev, f1, f2, cap=_default_cap(cap, "exact"))
            payload = {"query": query_formula, "given": given_formula, "probability": p}
        else:
            graph = build_factor_graph(program, ev)
            config = _bp_config(bp_max_iters, bp_damping, bp_tol)
            payload = run_inference(graph, inference, _default_cap(cap, inference), config).to_dict()
    except MLNError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from None
    _emit(payload, out)


# -- eval -------------------------------------------------------------------


@main.command("eval")
@click.argument("predictions", type=click.Path(exists=True, dir_okay=False))
@click.argument("bundles", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="Score report JSON.")
def eval_cmd(predictions, bundles, out):
    """Score a prediction file (as written by ``infer``) against gold bundles."""
    data = json.loads(Path(predictions).read_text(encoding="utf-8"))
    records = data["predictions"] if isinstance(data, dict) else data
    items = load_bundles(bundles)
    by_id = {r["sentence_id"]: JointPrediction.from_dict(r) for r in records}
    preds = [by_id.get(b.sentence_id) or _empty_prediction(b) for b in items]
    try:
        report = score(preds, items)
    except MLNError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from None
    click.echo(report.to_text())
    if out:
        atomic_write(out, json.dumps(report.to_dict(), indent=2) + "\n")


# -- oracle -----------------------------------------------------------------


@main.command()
@click.argument("rules", type=click.Path(exists=True, dir_okay=False))
@click.argument("evidence", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--cap", type=float, default=DEFAULT_CAP, show_default=True)
@click.option("--worlds", is_flag=True, help="Also dump every enumerated world with its probability.")
@click.option("--evidence-pred", multiple=True)
@click.option("--out", type=click.Path(dir_okay=False))
def oracle(rules, evidence, cap, worlds, evidence_pred, out):
    """Exact marginals by enumeration, optionally with the full world table."""
    try:
        program, ev = _load_mln(rules, evidence, evidence_pred)
        graph = build_factor_graph(program, ev)
        payload = exact_marginals(graph, cap=cap).to_dict()
        if worlds:
            table = JointTable(graph, cap)
            payload["worlds"] = [
                {"true": [str(a) for a, v in world.items() if v], "probability": p}
                for world, p in table.iter_worlds()
            ]
    except MLNError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from None
    _emit(payload, out)


if __name__ == "__main__":
    main()
