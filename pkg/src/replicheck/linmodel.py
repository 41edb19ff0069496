"""Least squares for the two-factor fixed-effects model.

Design matrices use reference-level dummy coding (reference = smallest
label). Fits go through a Gram-Schmidt QR with reorthogonalisation; a
column whose residual norm after orthogonalisation drops below
``RANK_TOL`` times its original norm is treated as linearly dependent
and dropped.

Sequential (Type I) sums of squares follow the fixed order
batch -> treatment -> interaction. Because the model sequence is nested,
one orthogonal factorisation of the full design gives every term's SS as
the squared length of the projection of y onto that term's new
orthonormal directions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import Dataset, summarize_design, validate_grbd
from .errors import DesignError

RANK_TOL = 1e-10

INTERCEPT, BATCH, TREATMENT, INTERACTION = "intercept", "batch", "treatment", "interaction"
_KNOWN_TERMS = (INTERCEPT, BATCH, TREATMENT, INTERACTION)
FULL_MODEL = (INTERCEPT, BATCH, TREATMENT, INTERACTION)


@dataclass(frozen=True)
class ModelTerms:
    terms: tuple[str, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("empty term list")
        for term in terms:
            if term not in _KNOWN_TERMS:
                raise ValueError(f"unknown model term {term!r}")
        if len(set(terms)) != len(terms):
            raise ValueError("duplicate model terms")
        if terms[0] != INTERCEPT:
            raise ValueError("intercept must be present and first")
        if INTERACTION in terms and not (BATCH in terms and TREATMENT in terms):
            raise ValueError("interaction requires both batch and treatment")
        object.__setattr__(self, "terms", terms)

    def __iter__(self):
        return iter(self.terms)


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    labels: tuple[str, ...]
    column_terms: tuple[str, ...]

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class FitResult:
    residual_ss: float
    df_residual: int
    rank: int
    coefficients: tuple[float, ...]
    dropped: tuple[int, ...] = ()


@dataclass(frozen=True)
class SsTerm:
    term: str
    df: int
    ss: float | None
    reason: str | None = None


@dataclass(frozen=True)
class SsDecomposition:
    terms: tuple[SsTerm, ...]
    total_ss: float
    n: int

    def __getitem__(self, term: str) -> SsTerm:
        for entry in self.terms:
            if entry.term == term:
                return entry
        raise KeyError(term)

    @property
    def interaction_available(self) -> bool:
        return self[INTERACTION].ss is not None


def _as_terms(terms) -> ModelTerms:
    return terms if isinstance(terms, ModelTerms) else ModelTerms(tuple(terms))


def encode_columns(treatment: Sequence[str], batch: Sequence[str], terms=FULL_MODEL,
                   treatment_levels=None, batch_levels=None) -> DesignMatrix:
    terms = _as_terms(terms)
    n = len(treatment)
    tr = np.asarray(treatment, dtype=object)
    bt = np.asarray(batch, dtype=object)
    t_levels = tuple(sorted(set(treatment))) if treatment_levels is None else tuple(treatment_levels)
    b_levels = tuple(sorted(set(batch))) if batch_levels is None else tuple(batch_levels)
    b_dummies = [(f"batch[{lev}]", (bt == lev).astype(float)) for lev in b_levels[1:]]
    t_dummies = [(f"treatment[{lev}]", (tr == lev).astype(float)) for lev in t_levels[1:]]

    cols, labels, owners = [], [], []
    for term in terms:
        if term == INTERCEPT:
            block = [("intercept", np.ones(n))]
        elif term == BATCH:
            block = b_dummies
        elif term == TREATMENT:
            block = t_dummies
        else:
            block = [(f"{tl}:{bl}", tv * bv) for tl, tv in t_dummies for bl, bv in b_dummies]
        for label, col in block:
            cols.append(col)
            labels.append(label)
            owners.append(term)
    values = np.column_stack(cols) if cols else np.empty((n, 0))
    return DesignMatrix(values, tuple(labels), tuple(owners))


def encode(dataset: Dataset, terms=FULL_MODEL) -> DesignMatrix:
    """Dummy-coded design matrix for the included rows of ``dataset``."""
    _, treatment, batch = dataset.columns()
    return encode_columns(treatment, batch, terms)


def _orthonormalize(x: np.ndarray):
    """Gram-Schmidt QR with one reorthogonalisation pass per column.

    Returns ``(q, r, kept)`` where ``q`` has orthonormal columns spanning the
    kept columns of ``x`` (in order) and ``r`` is upper triangular with
    ``x[:, kept] = q @ r``.
    """
    n, p = x.shape
    q = np.empty((n, 0))
    r_cols = []
    kept = []
    for j in range(p):
        v = x[:, j].astype(float, copy=True)
        norm0 = np.linalg.norm(v)
        coef = np.zeros(q.shape[1])
        for _ in range(2):
            c = q.T @ v
            v -= q @ c
            coef += c
        norm = np.linalg.norm(v)
        if norm0 == 0.0 or norm <= RANK_TOL * norm0:
            continue
        kept.append(j)
        q = np.column_stack([q, v / norm])
        r_cols.append(np.append(coef, norm))
    k = len(kept)
    r = np.zeros((k, k))
    for i, col in enumerate(r_cols):
        r[: i + 1, i] = col
    return q, r, kept


def _check_y(y, n_rows: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("outcome must be one-dimensional")
    if y.shape[0] != n_rows:
        raise ValueError(f"outcome length {y.shape[0]} does not match {n_rows} design rows")
    if n_rows == 0:
        raise ValueError("cannot fit a model with zero rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("outcome contains non-finite values")
    return y


def fit_ols(x: DesignMatrix | np.ndarray, y) -> FitResult:
    values = x.values if isinstance(x, DesignMatrix) else np.asarray(x, dtype=float)
    y = _check_y(y, values.shape[0])
    q, r, kept = _orthonormalize(values)
    qty = q.T @ y
    resid = y - q @ qty
    resid -= q @ (q.T @ resid)
    beta = np.zeros(values.shape[1])
    if kept:
        # back substitution on the triangular factor
        sol = np.zeros(len(kept))
        for i in range(len(kept) - 1, -1, -1):
            sol[i] = (qty[i] - r[i, i + 1:] @ sol[i + 1:]) / r[i, i]
        beta[kept] = sol
    dropped = tuple(j for j in range(values.shape[1]) if j not in kept)
    return FitResult(
        residual_ss=float(resid @ resid),
        df_residual=values.shape[0] - len(kept),
        rank=len(kept),
        coefficients=tuple(float(b) for b in beta),
        dropped=dropped,
    )


@dataclass(frozen=True)
class SequentialProjector:
    """Orthonormal basis of the nested model sequence for a fixed layout.

    Reusable across many outcome vectors that share the same treatment and
    batch labels (simulation replicates, permutation resamples).
    """

    q: np.ndarray
    groups: tuple[tuple[str, np.ndarray], ...]
    n: int

    @classmethod
    def from_design(cls, x: DesignMatrix, terms=(BATCH, TREATMENT, INTERACTION)):
        q, _, kept = _orthonormalize(x.values)
        owners = np.array([x.column_terms[j] for j in kept], dtype=object)
        groups = tuple((term, np.flatnonzero(owners == term)) for term in terms)
        return cls(q, groups, x.values.shape[0])

    def df(self, term: str) -> int:
        return int(dict(self.groups)[term].size)

    @property
    def rank(self) -> int:
        return self.q.shape[1]

    def ss(self, y: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray, np.ndarray]:
        """Term SS, error SS and corrected total SS for one or many outcome columns."""
        y = np.asarray(y, dtype=float)
        yc = y - y.mean(axis=0)
        coords = self.q.T @ yc
        resid = yc - self.q @ coords
        resid -= self.q @ (self.q.T @ resid)
        term_ss = {term: np.sum(coords[idx] ** 2, axis=0) for term, idx in self.groups}
        return term_ss, np.sum(resid ** 2, axis=0), np.sum(yc ** 2, axis=0)


def sequential_ss(dataset: Dataset) -> SsDecomposition:
    """Type I sums of squares in the order batch, treatment, interaction, error.

    When some treatment x batch cell lacks genuine replication the
    interaction is reported as unavailable and the error term is taken from
    the additive (batch + treatment) model.
    """
    summary = summarize_design(dataset)
    report = validate_grbd(summary)
    if not report.get("crossed").passed:
        raise DesignError("treatment and batch are not fully crossed: " + report.get("crossed").message)
    y, treatment, batch = dataset.columns()
    y = _check_y(y, len(y))
    n = len(y)

    testable = report.interaction_testable
    terms = FULL_MODEL if testable else (INTERCEPT, BATCH, TREATMENT)
    proj = SequentialProjector.from_design(
        encode_columns(treatment, batch, terms, summary.treatments, summary.batches),
        terms=terms[1:],
    )
    term_ss, err_ss, total = proj.ss(y)

    entries = [SsTerm(BATCH, proj.df(BATCH), float(term_ss[BATCH])),
               SsTerm(TREATMENT, proj.df(TREATMENT), float(term_ss[TREATMENT]))]
    df_int = (summary.t - 1) * (summary.b - 1)
    if testable:
        entries.append(SsTerm(INTERACTION, proj.df(INTERACTION), float(term_ss[INTERACTION])))
    else:
        entries.append(SsTerm(INTERACTION, df_int, None,
                              "interaction untestable: " + report.get("genuine_replication").message))
    entries.append(SsTerm("error", n - proj.rank, float(err_ss)))
    return SsDecomposition(tuple(entries), float(total), n)
