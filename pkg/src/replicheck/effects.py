"""Per-batch treatment effects with pooled-variance t intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .anova import AnovaTable
from .domain import Dataset
from .errors import DegenerateDataError, DesignError, UnsupportedDesignError
from .linmodel import INTERACTION
from .special import t_quantile

POOLED = "pooled"


@dataclass(frozen=True)
class BatchEffect:
    batch: str
    diff: float
    se: float
    ci_low: float
    ci_high: float
    n_treated: int
    n_control: int


@dataclass(frozen=True)
class EffectSet:
    per_batch: tuple[BatchEffect, ...]
    overall: BatchEffect
    confidence: float
    reference: str
    treated: str


def two_group_effect(label: str, control, treated, confidence: float) -> BatchEffect:
    """Mean difference ``treated - control`` with a pooled-variance t interval."""
    control = np.asarray(control, dtype=float)
    treated = np.asarray(treated, dtype=float)
    n_c, n_t = control.size, treated.size
    if n_c < 2 or n_t < 2:
        raise DesignError(f"{label}: need at least 2 observations per group (control {n_c}, treated {n_t})")
    diff = float(treated.mean() - control.mean())
    df = n_c + n_t - 2
    pooled_var = (np.sum((control - control.mean()) ** 2) + np.sum((treated - treated.mean()) ** 2)) / df
    if not pooled_var > 0:
        raise DegenerateDataError(f"{label}: zero within-group variance, interval undefined")
    se = math.sqrt(pooled_var * (1.0 / n_t + 1.0 / n_c))
    half = t_quantile((1.0 + confidence) / 2.0, df) * se
    return BatchEffect(label, diff, se, diff - half, diff + half, n_t, n_c)


def per_batch_effects(dataset: Dataset, confidence: float = 0.95, reference: str | None = None) -> EffectSet:
    """Treated-minus-reference mean difference within each batch, plus one pooled
    two-group analysis that ignores batch."""
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    levels = dataset.treatment_levels()
    if len(levels) != 2:
        raise UnsupportedDesignError(
            f"per-batch effects need exactly 2 treatment levels, found {len(levels)}")
    if reference is None:
        reference = levels[0]
    reference = str(reference).strip()
    if reference not in levels:
        raise ValueError(f"reference {reference!r} is not a treatment level {levels}")
    treated = levels[1] if reference == levels[0] else levels[0]

    y, tr, bt = dataset.columns()
    y = np.asarray(y)
    tr = np.asarray(tr, dtype=object)
    bt = np.asarray(bt, dtype=object)
    per_batch = tuple(
        two_group_effect(batch, y[(bt == batch) & (tr == reference)],
                         y[(bt == batch) & (tr == treated)], confidence)
        for batch in dataset.batch_levels()
    )
    overall = two_group_effect(POOLED, y[tr == reference], y[tr == treated], confidence)
    return EffectSet(per_batch, overall, float(confidence), reference, treated)


@dataclass(frozen=True)
class Heterogeneity:
    range: float
    sd: float
    mixed_signs: bool
    interaction_p: float | None
    note: str


def effect_heterogeneity(effects: EffectSet, table: AnovaTable | None = None) -> Heterogeneity:
    diffs = np.array([e.diff for e in effects.per_batch])
    spread = float(diffs.max() - diffs.min())
    sd = float(diffs.std(ddof=1)) if diffs.size > 1 else 0.0
    mixed = bool(np.any(diffs > 0) and np.any(diffs < 0))
    p = table[INTERACTION].p_error if table is not None else None

    notes = [f"Per-batch effects range over {spread:.4g} (SD {sd:.4g})."]
    if mixed:
        pos = [e.batch for e in effects.per_batch if e.diff > 0]
        neg = [e.batch for e in effects.per_batch if e.diff < 0]
        notes.append(
            "The effect changes sign between batches (positive in "
            + ", ".join(pos) + "; negative in " + ", ".join(neg) + ").")
    if p is not None:
        notes.append(f"Formal test of heterogeneity: treatment x batch interaction p = {p:.3g}.")
    return Heterogeneity(spread, sd, mixed, p, " ".join(notes))
