"""CSV ingestion."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .domain import Dataset, Observation
from .errors import DesignError, ParseError

_TRUTHY = {"1", "true", "yes"}


@dataclass(frozen=True)
class ColumnMapping:
    outcome_col: str
    treatment_col: str
    batch_col: str
    exclude_col: str | None = None
    reference_level: str | None = None

    def __post_init__(self):
        names = (self.outcome_col, self.treatment_col, self.batch_col)
        if len(set(names)) != 3:
            raise ValueError(f"outcome, treatment and batch columns must be distinct, got {names}")


def parse_csv(path, mapping: ColumnMapping) -> Dataset:
    """Read a header-first, comma-delimited UTF-8 file into a Dataset.

    Row numbers in error messages count the header as row 1.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8-sig") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            if not header:
                raise ParseError(f"{path}: empty file (no header row)")
            header = [h.strip() for h in header]
            reader.fieldnames = header
            wanted = [mapping.outcome_col, mapping.treatment_col, mapping.batch_col]
            if mapping.exclude_col:
                wanted.append(mapping.exclude_col)
            for col in wanted:
                if col not in header:
                    raise ParseError(f"{path}: missing column {col!r} (found: {', '.join(header)})")
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                raw = (rec.get(mapping.outcome_col) or "").strip()
                try:
                    y = float(raw)
                except ValueError:
                    raise ParseError(f"{path}: row {lineno}: outcome {raw!r} is not a number") from None
                if not math.isfinite(y):
                    raise ParseError(f"{path}: row {lineno}: outcome {raw!r} is not finite")
                tr = (rec.get(mapping.treatment_col) or "").strip()
                bt = (rec.get(mapping.batch_col) or "").strip()
                if not tr or not bt:
                    raise ParseError(f"{path}: row {lineno}: empty treatment or batch label")
                excluded = False
                if mapping.exclude_col:
                    excluded = (rec.get(mapping.exclude_col) or "").strip().lower() in _TRUTHY
                rows.append(Observation(y, tr, bt, excluded))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    try:
        return Dataset(tuple(rows), name=str(path))
    except DesignError as exc:
        raise DesignError(f"{path}: {exc}") from None


def write_csv(dataset: Dataset, path, mapping: ColumnMapping | None = None) -> None:
    mapping = mapping or ColumnMapping("outcome", "treatment", "batch", "excluded")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = [mapping.outcome_col, mapping.treatment_col, mapping.batch_col]
        if mapping.exclude_col:
            cols.append(mapping.exclude_col)
        w.writerow(cols)
        for o in dataset.observations:
            row = [repr(o.outcome), o.treatment, o.batch]
            if mapping.exclude_col:
                row.append("yes" if o.excluded else "")
            w.writerow(row)
