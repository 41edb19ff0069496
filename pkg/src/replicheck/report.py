"""Analysis pipeline, composite report and its text / JSON renderings."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable

from . import __version__
from .anova import (
    ERROR, AnovaRow, AnovaTable, Verdict, complete_table, format_f, format_p, grbd_anova,
    reproducibility_verdict,
)
from .domain import (
    Check, Dataset, DesignSummary, Observation, ReplicationClass, ValidationReport,
    classify_replication, summarize_design, validate_grbd,
)
from .effects import BatchEffect, EffectSet, Heterogeneity, effect_heterogeneity, per_batch_effects
from .errors import ConsistencyError, DesignError, ParseError
from .linmodel import BATCH, INTERACTION, TREATMENT

SCHEMA = "replicheck/1"


@dataclass(frozen=True)
class AnalysisReport:
    anova: AnovaTable | None
    verdict: Verdict | None
    design: DesignSummary | None = None
    validation: ValidationReport | None = None
    effects: EffectSet | None = None
    heterogeneity: Heterogeneity | None = None
    replication: ReplicationClass | None = None
    dataset: Dataset | None = None
    provenance: dict[str, Any] = field(default_factory=dict)


def analyze_dataset(dataset: Dataset, alpha: float = 0.05, confidence: float = 0.95,
                    reference: str | None = None, replication: ReplicationClass | None = None,
                    provenance: dict[str, Any] | None = None) -> AnalysisReport:
    """summarize -> validate -> ANOVA -> effects -> verdict.

    Raises :class:`DesignError` when the design fails GRBD validation.
    """
    design = summarize_design(dataset)
    validation = validate_grbd(design)
    if not validation.overall:
        raise DesignError("design validation failed: " + "; ".join(c.message for c in validation.failures))
    table = grbd_anova(dataset)
    verdict = reproducibility_verdict(table, alpha)
    effects = heterogeneity = None
    if design.t == 2:
        effects = per_batch_effects(dataset, confidence, reference)
        heterogeneity = effect_heterogeneity(effects, table)
    prov = {
        "mode": "data",
        "source": dataset.name,
        "n_rows": len(dataset.observations),
        "n_included": design.N,
        "n_excluded": dataset.n_excluded,
        "alpha": float(alpha),
        "confidence": float(confidence),
        "tool_version": __version__,
    }
    prov.update(provenance or {})
    return AnalysisReport(table, verdict, design, validation, effects, heterogeneity,
                          replication, dataset, prov)


def load_summaries(data: dict) -> tuple[list[tuple[str, int, float]], int]:
    """Parse ``{"n": int, "terms": [{"name", "df", "ss"}, ...]}``."""
    try:
        n = data["n"]
        terms = [(str(t["name"]), t["df"], t["ss"]) for t in data["terms"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"summaries JSON must look like {{'n': int, 'terms': [{{'name', 'df', 'ss'}}]}}: {exc}") from None
    if isinstance(n, bool) or not isinstance(n, int):
        raise ParseError(f"'n' must be an integer, got {n!r}")
    for name, df, ss in terms:
        if isinstance(df, bool) or not isinstance(df, int):
            raise ParseError(f"df for term {name!r} must be an integer, got {df!r}")
        if isinstance(ss, bool) or not isinstance(ss, (int, float)):
            raise ParseError(f"ss for term {name!r} must be a number, got {ss!r}")
    return terms, n


def analyze_summaries(data: dict, alpha: float = 0.05, source: str = "summaries",
                      replication: ReplicationClass | None = None) -> AnalysisReport:
    from .anova import canonical_term

    terms, n = load_summaries(data)
    table = complete_table(terms, n)
    labels = {}
    for name, _, _ in terms:
        try:
            labels[canonical_term(name)] = name
        except ConsistencyError:
            pass
    prov = {
        "mode": "summaries",
        "source": source,
        "n_included": n,
        "alpha": float(alpha),
        "term_labels": labels,
        "tool_version": __version__,
    }
    return AnalysisReport(table, reproducibility_verdict(table, alpha), replication=replication, provenance=prov)


# ---------------------------------------------------------------- JSON

def _row_dict(row: AnovaRow) -> dict:
    return {
        "term": row.term, "df": row.df, "ss": row.ss, "ms": row.ms,
        "f_error": row.f_error, "p_error": row.p_error,
        "f_interaction_denom": row.f_interaction_denom,
        "p_interaction_denom": row.p_interaction_denom,
        "reason": row.reason,
    }


def _effect_dict(e: BatchEffect) -> dict:
    return {"batch": e.batch, "diff": e.diff, "se": e.se, "ci_low": e.ci_low, "ci_high": e.ci_high,
            "n_treated": e.n_treated, "n_control": e.n_control}


def report_to_dict(report: AnalysisReport) -> dict:
    d: dict[str, Any] = {"schema": SCHEMA, "provenance": report.provenance}
    ds = report.design
    d["design"] = None if ds is None else {
        "treatments": list(ds.treatments), "batches": list(ds.batches),
        "cell_counts": [list(r) for r in ds.cell_counts],
        "t": ds.t, "b": ds.b, "N": ds.N, "balanced": ds.balanced,
        "fully_crossed": ds.fully_crossed, "genuine_replication": ds.genuine_replication,
    }
    v = report.validation
    d["validation"] = None if v is None else {
        "overall": v.overall,
        "checks": [{"name": c.name, "passed": c.passed, "message": c.message, "severity": c.severity}
                   for c in v.checks],
    }
    a = report.anova
    d["anova"] = None if a is None else {
        "n": a.n, "t": a.t, "b": a.b, "rows": [_row_dict(r) for r in a.rows],
    }
    vd = report.verdict
    d["verdict"] = None if vd is None else {
        "alpha": vd.alpha,
        "interaction_significant": vd.interaction_significant,
        "treatment_significant_eq1": vd.treatment_significant_eq1,
        "treatment_significant_eq2": vd.treatment_significant_eq2,
        "narrative": vd.narrative,
    }
    e = report.effects
    d["effects"] = None if e is None else {
        "confidence": e.confidence, "reference": e.reference, "treated": e.treated,
        "per_batch": [_effect_dict(x) for x in e.per_batch], "overall": _effect_dict(e.overall),
    }
    h = report.heterogeneity
    d["heterogeneity"] = None if h is None else {
        "range": h.range, "sd": h.sd, "mixed_signs": h.mixed_signs,
        "interaction_p": h.interaction_p, "note": h.note,
    }
    rc = report.replication
    d["replication"] = None if rc is None else {
        "independence": rc.independence.value, "timing": rc.timing.value,
        "label": rc.label, "figure_panel": rc.figure_panel,
    }
    data = report.dataset
    d["data"] = None if data is None else {
        "name": data.name,
        "outcome": [o.outcome for o in data.observations],
        "treatment": [o.treatment for o in data.observations],
        "batch": [o.batch for o in data.observations],
        "excluded": [o.excluded for o in data.observations],
    }
    return d


def render_json(report: AnalysisReport) -> bytes:
    text = json.dumps(report_to_dict(report), indent=2, ensure_ascii=False, allow_nan=False)
    return (text + "\n").encode("utf-8")


def _effect_from(d: dict) -> BatchEffect:
    return BatchEffect(d["batch"], d["diff"], d["se"], d["ci_low"], d["ci_high"],
                       d["n_treated"], d["n_control"])


def report_from_dict(d: dict) -> AnalysisReport:
    if d.get("schema") != SCHEMA:
        raise ParseError(f"unsupported report schema {d.get('schema')!r}")
    ds = d["design"]
    design = None if ds is None else DesignSummary(
        tuple(ds["treatments"]), tuple(ds["batches"]), tuple(tuple(r) for r in ds["cell_counts"]))
    v = d["validation"]
    validation = None if v is None else ValidationReport(tuple(
        Check(c["name"], c["passed"], c["message"], c["severity"]) for c in v["checks"]))
    a = d["anova"]
    anova = None if a is None else AnovaTable(
        tuple(AnovaRow(**r) for r in a["rows"]), a["n"], a["t"], a["b"])
    vd = d["verdict"]
    verdict = None if vd is None else Verdict(
        vd["interaction_significant"], vd["treatment_significant_eq1"],
        vd["treatment_significant_eq2"], vd["alpha"], vd["narrative"])
    e = d["effects"]
    effects = None if e is None else EffectSet(
        tuple(_effect_from(x) for x in e["per_batch"]), _effect_from(e["overall"]),
        e["confidence"], e["reference"], e["treated"])
    h = d["heterogeneity"]
    het = None if h is None else Heterogeneity(h["range"], h["sd"], h["mixed_signs"], h["interaction_p"], h["note"])
    rc = d["replication"]
    replication = None if rc is None else classify_replication(rc["independence"], rc["timing"])
    data = d["data"]
    dataset = None if data is None else Dataset(tuple(
        Observation(y, tr, bt, ex) for y, tr, bt, ex in
        zip(data["outcome"], data["treatment"], data["batch"], data["excluded"])), name=data["name"])
    return AnalysisReport(anova, verdict, design, validation, effects, het, replication, dataset,
                          d["provenance"])


def parse_report_json(raw: bytes | str) -> AnalysisReport:
    return report_from_dict(json.loads(raw))


# ---------------------------------------------------------------- text

def format_number(x: float | None) -> str:
    if x is None:
        return ""
    return f"{x:,.0f}" if abs(x) >= 1000 else f"{x:.4g}"


def _table(header: list[str], rows: Iterable[list[str]], left: int = 1) -> list[str]:
    """Fixed-width table; columns widen to fit, text columns left-aligned."""
    rows = [header] + list(rows)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for r in rows:
        cells = [c.ljust(w) if i < left else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))]
        lines.append("  ".join(cells).rstrip())
    return lines


def term_labels(report: AnalysisReport) -> dict[str, str]:
    prov = report.provenance
    labels = {BATCH: "Batch", TREATMENT: "Treatment", ERROR: "Error"}
    given = prov.get("term_labels") or {}
    labels[BATCH] = given.get(BATCH, prov.get("batch_column", labels[BATCH]))
    labels[TREATMENT] = given.get(TREATMENT, prov.get("treatment_column", labels[TREATMENT]))
    labels[INTERACTION] = given.get(INTERACTION, f"{labels[BATCH]} x {labels[TREATMENT]}")
    labels[ERROR] = given.get(ERROR, "Error")
    return labels


def render_text(report: AnalysisReport) -> str:
    out: list[str] = []
    prov = report.provenance
    out.append(f"Internal replication analysis: {prov.get('source', '')}")

    ds = report.design
    if ds is not None:
        yn = {True: "yes", False: "no"}
        out.append(
            f"Design: t={ds.t} ({', '.join(ds.treatments)}), b={ds.b} ({', '.join(ds.batches)}), "
            f"N={ds.N}" + (f" ({prov['n_excluded']} excluded)" if prov.get("n_excluded") else ""))
        out.append(f"  balanced: {yn[ds.balanced]}; fully crossed: {yn[ds.fully_crossed]}; "
                   f"genuine replication: {yn[ds.genuine_replication]}")
    if report.validation is not None:
        v = report.validation
        out.append(f"Validation: {'PASS' if v.overall else 'FAIL'}")
        for c in v.checks:
            if not c.passed:
                out.append(f"  {c.severity}: {c.name}: {c.message}")

    if report.anova is not None:
        labels = term_labels(report)
        out.append("")
        out.append("ANOVA (sequential SS)")
        rows = []
        for r in report.anova.rows:
            rows.append([
                labels[r.term], str(r.df), format_number(r.ss), format_number(r.ms),
                format_f(r.f_error), format_p(r.p_error),
                format_f(r.f_interaction_denom), format_p(r.p_interaction_denom),
            ])
        out.extend(_table(["", "df", "SS", "MS", "F_Error", "P_Error", "F_SxT", "P_SxT"], rows))
        for r in report.anova.rows:
            if r.reason:
                out.append(f"  note ({labels[r.term]}): {r.reason}")

    if report.verdict is not None:
        out.append("")
        out.append(f"Verdict (alpha = {report.verdict.alpha:g}):")
        out.append(report.verdict.narrative)

    e = report.effects
    if e is not None and e.per_batch:
        out.append("")
        out.append(f"Per-batch effects: {e.treated} - {e.reference} (reference), "
                   f"{e.confidence * 100:g}% CI")
        rows = [[x.batch, str(x.n_treated), str(x.n_control), f"{x.diff:.4g}", f"{x.se:.4g}",
                 f"{x.ci_low:.4g}", f"{x.ci_high:.4g}"] for x in (*e.per_batch, e.overall)]
        out.extend(_table(["batch", "n_treated", "n_control", "diff", "se", "ci_low", "ci_high"], rows))
        if report.heterogeneity is not None:
            out.append(report.heterogeneity.note)

    rc = report.replication
    if rc is not None:
        out.append("")
        out.append(f"Replication type: {rc.label} (panel {rc.figure_panel})")
    return "\n".join(out) + "\n"
