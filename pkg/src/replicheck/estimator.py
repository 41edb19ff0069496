"""scikit-learn compatible front end.

``GRBDAnova`` takes ``X`` with two categorical columns (treatment, batch)
and the outcome ``y``. Fitting runs the whole analysis; ``predict``
returns the fitted cell means of the full fixed-effects model.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted, column_or_1d

from .anova import grbd_anova, reproducibility_verdict
from .domain import Dataset, Observation, summarize_design, validate_grbd
from .effects import per_batch_effects
from .errors import DesignError


def check_grbd_input(X, y=None, sample_mask=None) -> tuple[np.ndarray, np.ndarray | None]:
    """Validate ``X`` as an (n, 2) table of labels and ``y`` as finite reals.

    Returns ``(labels, y)`` with labels as stripped strings of dtype object.
    Accepts pandas DataFrames; columns named ``treatment`` and ``batch``
    are picked by name, anything else by position.
    """
    if hasattr(X, "columns") and {"treatment", "batch"} <= set(map(str, X.columns)):
        X = X[["treatment", "batch"]]
    labels = check_array(X, dtype=None, ensure_all_finite=False)
    if labels.shape[1] != 2:
        raise ValueError(f"X must have exactly 2 columns (treatment, batch), got {labels.shape[1]}")
    labels = np.vectorize(lambda v: str(v).strip(), otypes=[object])(labels)
    if y is None:
        return labels, None
    y = column_or_1d(y).astype(float)
    check_consistent_length(labels, y)
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains NaN or infinite values")
    if sample_mask is not None:
        check_consistent_length(labels, sample_mask)
    return labels, y


def to_dataset(X, y, excluded=None, name: str = "dataset") -> Dataset:
    labels, y = check_grbd_input(X, y, excluded)
    flags = np.zeros(len(y), dtype=bool) if excluded is None else np.asarray(excluded, dtype=bool)
    return Dataset(tuple(
        Observation(float(v), tr, bt, bool(ex)) for v, (tr, bt), ex in zip(y, labels, flags)
    ), name=name)


class GRBDAnova(RegressorMixin, BaseEstimator):
    """Two-factor fixed-effects ANOVA for internal replication.

    Parameters
    ----------
    alpha : float
        Significance level for the verdict flags.
    confidence : float
        Level of the per-batch effect intervals.
    reference : str or None
        Control treatment label; defaults to the smallest label.

    Attributes
    ----------
    design_ : DesignSummary
    validation_ : ValidationReport
    anova_table_ : AnovaTable
    effects_ : EffectSet or None
        Only computed for two-level treatments.
    verdict_ : Verdict
    cell_means_ : dict mapping (treatment, batch) to the fitted mean
    """

    def __init__(self, alpha=0.05, confidence=0.95, reference=None):
        self.alpha = alpha
        self.confidence = confidence
        self.reference = reference

    def fit(self, X, y, sample_mask=None):
        """``sample_mask`` marks rows to exclude (True = excluded)."""
        dataset = to_dataset(X, y, sample_mask)
        self.design_ = summarize_design(dataset)
        self.validation_ = validate_grbd(self.design_)
        if not self.validation_.get("crossed").passed:
            raise DesignError(self.validation_.get("crossed").message)
        self.anova_table_ = grbd_anova(dataset)
        self.effects_ = (
            per_batch_effects(dataset, self.confidence, self.reference) if self.design_.t == 2 else None
        )
        self.verdict_ = reproducibility_verdict(self.anova_table_, self.alpha)
        vals, tr, bt = dataset.columns()
        sums = {}
        for v, a, c in zip(vals, tr, bt):
            s, k = sums.get((a, c), (0.0, 0))
            sums[(a, c)] = (s + v, k + 1)
        self.cell_means_ = {key: s / k for key, (s, k) in sums.items()}
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "cell_means_")
        labels, _ = check_grbd_input(X)
        out = np.empty(labels.shape[0])
        for i, (tr, bt) in enumerate(labels):
            try:
                out[i] = self.cell_means_[(tr, bt)]
            except KeyError:
                raise ValueError(f"no fitted cell for treatment={tr!r}, batch={bt!r}") from None
        return out

    def summary_frame(self):
        """ANOVA table as a list of plain dicts (one per term)."""
        check_is_fitted(self, "anova_table_")
        return [dict(vars(row)) for row in self.anova_table_.rows]
