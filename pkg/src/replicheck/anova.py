"""GRBD ANOVA table with two treatment tests and a reproducibility verdict.

Every effect is tested against MS(Error). The treatment effect is also
tested against MS(Treatment x Batch), which asks whether the average
effect stands out from its batch-to-batch variation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

from .domain import Dataset, summarize_design
from .errors import ConsistencyError, DegenerateDataError
from .linmodel import BATCH, INTERACTION, TREATMENT, sequential_ss
from .special import f_sf

ERROR = "error"
TERMS = (BATCH, TREATMENT, INTERACTION, ERROR)

_ALIASES = {
    BATCH: {"batch", "block", "site", "blocks", "batches"},
    TREATMENT: {"treatment", "treat", "trt"},
    INTERACTION: {"interaction", "treatment:batch", "batch:treatment", "sxt", "s×t", "txb",
                  "bxt", "t×b", "b×t", "treatment x batch", "batch x treatment",
                  "site:treatment", "treatment:site", "block:treatment", "treatment:block"},
    ERROR: {"error", "residual", "residuals", "within"},
}


def canonical_term(name: str) -> str:
    key = name.strip().lower()
    for term, aliases in _ALIASES.items():
        if key in aliases:
            return term
    raise ConsistencyError(f"unrecognised ANOVA term name {name!r}")


@dataclass(frozen=True)
class AnovaRow:
    term: str
    df: int
    ss: float | None
    ms: float | None
    f_error: float | None = None
    p_error: float | None = None
    f_interaction_denom: float | None = None
    p_interaction_denom: float | None = None
    reason: str | None = None


@dataclass(frozen=True)
class AnovaTable:
    rows: tuple[AnovaRow, ...]
    n: int
    t: int
    b: int

    def __getitem__(self, term: str) -> AnovaRow:
        for row in self.rows:
            if row.term == term:
                return row
        raise KeyError(term)

    @property
    def interaction_available(self) -> bool:
        return self[INTERACTION].ss is not None


def _fill(entries: dict[str, tuple[int, float | None, str | None]], n: int, t: int, b: int) -> AnovaTable:
    df_err, ss_err, _ = entries[ERROR]
    if df_err <= 0:
        raise DegenerateDataError(f"no residual degrees of freedom (N={n}, t*b={t * b})")
    ms_err = ss_err / df_err
    if not ms_err > 0:
        raise DegenerateDataError(
            "MS(Error) is zero: all observations within each treatment x batch cell are identical")

    def tested(term):
        df, ss, reason = entries[term]
        if ss is None:
            return AnovaRow(term, df, None, None, reason=reason)
        ms = ss / df
        f = ms / ms_err
        return AnovaRow(term, df, ss, ms, f_error=f, p_error=f_sf(f, df, df_err))

    batch_row = tested(BATCH)
    trt_row = tested(TREATMENT)
    int_row = tested(INTERACTION)
    if int_row.ss is None:
        trt_row = replace(trt_row, reason="stringent treatment test unavailable: " + (int_row.reason or ""))
    elif int_row.ms > 0:
        f2 = trt_row.ms / int_row.ms
        trt_row = replace(trt_row, f_interaction_denom=f2,
                          p_interaction_denom=f_sf(f2, trt_row.df, int_row.df))
    else:
        trt_row = replace(trt_row, reason="MS(Treatment x Batch) is zero; stringent test undefined")
    err_row = AnovaRow(ERROR, df_err, ss_err, ms_err)
    return AnovaTable((batch_row, trt_row, int_row, err_row), n, t, b)


# Relative threshold below which the error SS is considered exactly zero
# (round-off from the orthogonal projection of constant cells).
_DEGENERATE_REL = 1e-24


def grbd_anova(dataset: Dataset) -> AnovaTable:
    summary = summarize_design(dataset)
    dec = sequential_ss(dataset)
    y = dataset.columns()[0]
    scale = sum(v * v for v in y) or 1.0
    entries = {e.term: (e.df, e.ss, e.reason) for e in dec.terms}
    if entries[ERROR][1] <= _DEGENERATE_REL * scale:
        entries[ERROR] = (entries[ERROR][0], 0.0, None)
    return _fill(entries, summary.N, summary.t, summary.b)


def complete_table(rows: Iterable[tuple[str, int, float]], n: int) -> AnovaTable:
    """Fill MS, F and p columns from published (term, df, SS) summaries."""
    entries: dict[str, tuple[int, float | None, str | None]] = {}
    for name, df, ss in rows:
        term = canonical_term(name)
        if term in entries:
            raise ConsistencyError(f"term {term!r} given twice")
        if int(df) != df or df <= 0:
            raise ConsistencyError(f"df for {term!r} must be a positive integer, got {df!r}")
        ss = float(ss)
        if not math.isfinite(ss) or ss < 0:
            raise ConsistencyError(f"SS for {term!r} must be finite and >= 0, got {ss!r}")
        entries[term] = (int(df), ss, None)
    missing = [term for term in TERMS if term not in entries]
    if missing:
        raise ConsistencyError("missing terms: " + ", ".join(missing))
    n = int(n)
    total_df = sum(df for df, _, _ in entries.values())
    if total_df != n - 1:
        raise ConsistencyError(f"degrees of freedom sum to {total_df}, expected N-1 = {n - 1}")
    t = entries[TREATMENT][0] + 1
    b = entries[BATCH][0] + 1
    if entries[INTERACTION][0] != (t - 1) * (b - 1):
        raise ConsistencyError(
            f"interaction df {entries[INTERACTION][0]} != (t-1)(b-1) = {(t - 1) * (b - 1)}")
    return _fill(entries, n, t, b)


@dataclass(frozen=True)
class Verdict:
    interaction_significant: bool
    treatment_significant_eq1: bool
    treatment_significant_eq2: bool
    alpha: float
    narrative: str


def format_p(p: float | None) -> str:
    if p is None:
        return ""
    return "<0.001" if p < 0.0005 else f"{p:.3f}"


def format_f(f: float | None) -> str:
    return "" if f is None else f"{f:.1f}"


def reproducibility_verdict(table: AnovaTable, alpha: float = 0.05) -> Verdict:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    trt = table[TREATMENT]
    inter = table[INTERACTION]

    def sig(p):
        return p is not None and p < alpha

    eq1 = sig(trt.p_error)
    interaction = sig(inter.p_error)
    eq2 = sig(trt.p_interaction_denom)

    parts = []
    parts.append(
        f"Treatment effect (tested against MS(Error)): "
        f"{'detected' if eq1 else 'not detected'} at alpha = {alpha:g} "
        f"(F = {format_f(trt.f_error)}, p = {format_p(trt.p_error)})."
    )
    if inter.p_error is None:
        parts.append("Internal reproducibility could not be assessed: " + (inter.reason or "interaction untestable") + ".")
    elif interaction:
        parts.append(
            f"The treatment x batch interaction is significant (p = {format_p(inter.p_error)}): "
            "the effect is not reproducible across batches, so the average treatment effect "
            "should be read alongside the per-batch effects.")
    else:
        parts.append(
            f"The treatment x batch interaction is not significant (p = {format_p(inter.p_error)}): "
            "no evidence that the effect varies across batches beyond sampling variability.")
    if trt.p_interaction_denom is None:
        if trt.reason:
            parts.append(trt.reason[0].upper() + trt.reason[1:] + ".")
    else:
        parts.append(
            f"Against batch-to-batch variation in the effect (MS(Treatment x Batch) as error), the "
            f"treatment effect is {'significant' if eq2 else 'not significant'} "
            f"(F = {format_f(trt.f_interaction_denom)}, p = {format_p(trt.p_interaction_denom)}, "
            f"df = {trt.df}, {inter.df}). This test has low power because its error df grow with the "
            "number of batches, not the number of units: a significant result is strong evidence, "
            "a non-significant one does not count against a treatment effect.")
    return Verdict(interaction, eq1, eq2, float(alpha), " ".join(parts))
