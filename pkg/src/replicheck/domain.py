"""Data model for a treatment x batch experiment.

Holds the observation/dataset types, the design summary used by every
analysis step, GRBD validity checks and the six-way taxonomy of internal
replication (independence x timing).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .errors import DesignError


@dataclass(frozen=True)
class Observation:
    outcome: float
    treatment: str
    batch: str
    excluded: bool = False

    def __post_init__(self):
        try:
            outcome = float(self.outcome)
        except (TypeError, ValueError):
            raise ValueError(f"outcome must be a real number, got {self.outcome!r}") from None
        if not math.isfinite(outcome):
            raise ValueError(f"outcome must be finite, got {outcome!r}")
        treatment = str(self.treatment).strip()
        batch = str(self.batch).strip()
        if not treatment:
            raise ValueError("treatment label is empty")
        if not batch:
            raise ValueError("batch label is empty")
        object.__setattr__(self, "outcome", outcome)
        object.__setattr__(self, "treatment", treatment)
        object.__setattr__(self, "batch", batch)
        object.__setattr__(self, "excluded", bool(self.excluded))


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable collection of observations.

    Excluded rows stay in the dataset so reports can say how many were
    dropped; every analysis only looks at :attr:`included`.
    """

    observations: tuple[Observation, ...]
    name: str = "dataset"

    def __post_init__(self):
        obs = tuple(self.observations)
        for o in obs:
            if not isinstance(o, Observation):
                raise TypeError(f"expected Observation, got {type(o).__name__}")
        if not any(not o.excluded for o in obs):
            raise DesignError("dataset has no non-excluded observations")
        object.__setattr__(self, "observations", obs)

    @classmethod
    def from_columns(
        cls,
        outcome: Iterable[float],
        treatment: Iterable[object],
        batch: Iterable[object],
        excluded: Iterable[bool] | None = None,
        name: str = "dataset",
    ) -> "Dataset":
        outcome, treatment, batch = list(outcome), list(treatment), list(batch)
        if not (len(outcome) == len(treatment) == len(batch)):
            raise ValueError("outcome, treatment and batch must have equal length")
        flags = [False] * len(outcome) if excluded is None else list(excluded)
        if len(flags) != len(outcome):
            raise ValueError("excluded must have the same length as outcome")
        rows = tuple(
            Observation(y, str(tr), str(bt), bool(ex))
            for y, tr, bt, ex in zip(outcome, treatment, batch, flags)
        )
        return cls(rows, name=name)

    @property
    def included(self) -> tuple[Observation, ...]:
        return tuple(o for o in self.observations if not o.excluded)

    @property
    def n_excluded(self) -> int:
        return sum(o.excluded for o in self.observations)

    def columns(self) -> tuple[list[float], list[str], list[str]]:
        """Outcome, treatment and batch columns of the included rows."""
        inc = self.included
        return ([o.outcome for o in inc], [o.treatment for o in inc], [o.batch for o in inc])

    def treatment_levels(self) -> tuple[str, ...]:
        return tuple(sorted({o.treatment for o in self.included}))

    def batch_levels(self) -> tuple[str, ...]:
        return tuple(sorted({o.batch for o in self.included}))

    def with_outcomes(self, outcomes: Sequence[float]) -> "Dataset":
        """Copy with the included rows' outcomes replaced (in order)."""
        inc_idx = [i for i, o in enumerate(self.observations) if not o.excluded]
        if len(outcomes) != len(inc_idx):
            raise ValueError("need one outcome per included observation")
        obs = list(self.observations)
        for i, y in zip(inc_idx, outcomes):
            o = obs[i]
            obs[i] = Observation(float(y), o.treatment, o.batch, False)
        return Dataset(tuple(obs), name=self.name)


@dataclass(frozen=True)
class DesignSummary:
    treatments: tuple[str, ...]
    batches: tuple[str, ...]
    cell_counts: tuple[tuple[int, ...], ...]  # [treatment][batch]

    @property
    def t(self) -> int:
        return len(self.treatments)

    @property
    def b(self) -> int:
        return len(self.batches)

    @property
    def N(self) -> int:
        return sum(sum(row) for row in self.cell_counts)

    @property
    def balanced(self) -> bool:
        counts = {c for row in self.cell_counts for c in row}
        return len(counts) == 1 and counts.pop() >= 1

    @property
    def fully_crossed(self) -> bool:
        return all(c >= 1 for row in self.cell_counts for c in row)

    @property
    def genuine_replication(self) -> bool:
        return all(c >= 2 for row in self.cell_counts for c in row)

    def count(self, treatment: str, batch: str) -> int:
        return self.cell_counts[self.treatments.index(treatment)][self.batches.index(batch)]


def summarize_design(dataset: Dataset) -> DesignSummary:
    """Tabulate per-cell replicate counts over the non-excluded rows."""
    treatments = dataset.treatment_levels()
    batches = dataset.batch_levels()
    if len(treatments) < 2:
        raise DesignError(f"need at least 2 treatment levels, found {len(treatments)}")
    if len(batches) < 2:
        raise DesignError(f"need at least 2 batch levels, found {len(batches)}")
    ti = {lab: i for i, lab in enumerate(treatments)}
    bi = {lab: j for j, lab in enumerate(batches)}
    counts = [[0] * len(batches) for _ in treatments]
    for o in dataset.included:
        counts[ti[o.treatment]][bi[o.batch]] += 1
    return DesignSummary(treatments, batches, tuple(tuple(r) for r in counts))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    message: str
    severity: str = "error"  # "error" checks gate `overall`; "warning" checks never do


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks if c.severity == "error")

    @property
    def failures(self) -> tuple[Check, ...]:
        return tuple(c for c in self.checks if c.severity == "error" and not c.passed)

    @property
    def warnings(self) -> tuple[Check, ...]:
        return tuple(c for c in self.checks if c.severity == "warning" and not c.passed)

    @property
    def interaction_testable(self) -> bool:
        return all(c.passed for c in self.checks if c.name in ("crossed", "genuine_replication"))

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _empty_cells(summary: DesignSummary, below: int) -> list[str]:
    return [
        f"{tr}/{bt}"
        for i, tr in enumerate(summary.treatments)
        for j, bt in enumerate(summary.batches)
        if summary.cell_counts[i][j] < below
    ]


def validate_grbd(summary: DesignSummary) -> ValidationReport:
    checks = []

    ok = summary.t >= 2 and summary.b >= 2
    checks.append(Check(
        "minimum_levels", ok,
        f"t={summary.t}, b={summary.b}" + ("" if ok else " (need t >= 2 and b >= 2)"),
    ))

    empty = _empty_cells(summary, 1)
    checks.append(Check(
        "crossed", not empty,
        "every treatment appears in every batch" if not empty
        else "empty treatment x batch cells: " + ", ".join(empty),
    ))

    single = _empty_cells(summary, 2)
    checks.append(Check(
        "genuine_replication", not single,
        "every cell has at least 2 replicates" if not single
        else "cells with fewer than 2 replicates (genuine replication is required "
        "to test the treatment-by-batch interaction): " + ", ".join(single),
    ))

    counts = sorted({c for row in summary.cell_counts for c in row})
    checks.append(Check(
        "balance", summary.balanced,
        f"all cells have {counts[0]} replicates" if summary.balanced
        else f"unbalanced: cell counts range {counts[0]}-{counts[-1]}",
        severity="warning",
    ))
    return ValidationReport(tuple(checks))


class Independence(str, Enum):
    FULL = "full"
    PARTIAL = "partial"


class Timing(str, Enum):
    SEQUENTIAL = "sequential"
    STAGGERED = "staggered"
    PARALLEL = "parallel"


@dataclass(frozen=True)
class ReplicationClass:
    independence: Independence
    timing: Timing
    label: str
    figure_panel: str
    example: str = field(default="", compare=False)


_TAXONOMY = {
    (Independence.FULL, Timing.SEQUENTIAL): (
        "A", "cell culture experiment repeated independently several times"),
    (Independence.PARTIAL, Timing.SEQUENTIAL): (
        "B", "repeated runs sharing stock cultures, media or reagents"),
    (Independence.FULL, Timing.PARALLEL): (
        "C", "same protocol run at several sites or laboratories"),
    (Independence.PARTIAL, Timing.PARALLEL): (
        "D", "animals drawn from multiple litters"),
    (Independence.FULL, Timing.STAGGERED): (
        "E", "independent researchers starting overlapping runs on different days"),
    (Independence.PARTIAL, Timing.STAGGERED): (
        "F", "one researcher operating on half the animals per day, assessed later"),
}


def classify_replication(independence: Independence | str, timing: Timing | str) -> ReplicationClass:
    """Map the two replication dimensions to one of the six classes (panels A-F)."""
    ind = Independence(independence)
    tim = Timing(timing)
    panel, example = _TAXONOMY[(ind, tim)]
    prefix = "independent" if ind is Independence.FULL else "partially independent"
    return ReplicationClass(ind, tim, f"{prefix} {tim.value}", panel, example)


def all_replication_classes() -> list[ReplicationClass]:
    classes = [classify_replication(i, t) for i in Independence for t in Timing]
    return sorted(classes, key=lambda c: c.figure_panel)
