"""scikit-learn style wrapper around per-sentence joint inference."""

from __future__ import annotations

from pathlib import Path

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .evaluation import score as score_predictions
from .extraction.pipeline import AUTO_CAP, INFERENCE_METHODS, run_sentence
from .extraction.schema import (
    CompatibilityTable,
    SentenceBundle,
    bundle_from_dict,
    load_bundles,
    load_compatibility,
)
from .extraction.weights import WeightStrategy
from .inference import BpConfig


def check_bundles(X) -> list[SentenceBundle]:
    """Accept bundles, their JSON dicts, or a bundle-file path."""
    if isinstance(X, (str, Path)):
        return load_bundles(X)
    if isinstance(X, SentenceBundle):
        raise TypeError("expected a sequence of sentence bundles, got a single bundle")
    out = []
    for item in X:
        if isinstance(item, SentenceBundle):
            out.append(item)
        elif isinstance(item, dict):
            out.append(bundle_from_dict(item))
        else:
            raise TypeError(f"cannot interpret {type(item).__name__} as a sentence bundle")
    return out


def check_compatibility(table) -> CompatibilityTable:
    if isinstance(table, CompatibilityTable):
        return table
    return load_compatibility(table)


class JointExtractor(BaseEstimator):
    """Joint entity and relation decoding with one MLN per sentence.

    Nothing is learned: rule weights come straight from the classifier
    probabilities carried by each bundle.  ``fit`` only validates the
    configuration and loads the compatibility table.
    """

    def __init__(
        self,
        strategy="lor",
        k=10.0,
        semantic_rules=True,
        exactly_one=True,
        inference="auto",
        cap=AUTO_CAP,
        bp_max_iters=1000,
        bp_damping=0.5,
        bp_tol=1e-6,
        compatibility=None,
    ):
        self.strategy = strategy
        self.k = k
        self.semantic_rules = semantic_rules
        self.exactly_one = exactly_one
        self.inference = inference
        self.cap = cap
        self.bp_max_iters = bp_max_iters
        self.bp_damping = bp_damping
        self.bp_tol = bp_tol
        self.compatibility = compatibility

    def fit(self, X=None, y=None):
        if self.inference not in INFERENCE_METHODS:
            raise ValueError(f"inference must be one of {INFERENCE_METHODS}")
        if not self.cap > 0:
            raise ValueError("cap must be positive")
        self.strategy_ = WeightStrategy(self.strategy, self.k)
        self.bp_config_ = BpConfig(self.bp_max_iters, self.bp_damping, self.bp_tol)
        self.table_ = check_compatibility(self.compatibility)
        return self

    def _run(self, bundle, keep_marginals=False):
        return run_sentence(
            bundle,
            self.table_,
            self.strategy_,
            self.semantic_rules,
            self.exactly_one,
            self.inference,
            self.cap,
            self.bp_config_,
            keep_marginals,
        )

    def predict(self, X):
        check_is_fitted(self, "table_")
        return [self._run(b)[0] for b in check_bundles(X)]

    def predict_marginals(self, X):
        check_is_fitted(self, "table_")
        return [self._run(b)[1] for b in check_bundles(X)]

    def score(self, X, y=None):
        """Combined entity+relation F1 against the gold carried by ``X``."""
        bundles = check_bundles(X)
        return score_predictions(self.predict(bundles), bundles)["entity+relation"].f1
