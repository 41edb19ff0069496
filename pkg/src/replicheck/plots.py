"""Self-contained SVG 1.1 figures: raw data by batch and a forest plot of per-batch effects."""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import DesignError, ReplicheckError
from .report import AnalysisReport

DEFAULT_SEED = 20240101
PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c")
KINDS = ("strip", "forest")


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    scale = max(abs(lo), abs(hi), 1.0)
    if hi - lo < 1e-9 * scale:
        # flat data: centre a unit-scaled window on it
        mid = (lo + hi) / 2
        lo, hi = mid - 0.5 * scale, mid + 0.5 * scale
    raw = (hi - lo) / max(target, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    # outermost ticks enclose [lo, hi] so the axis always ends on a labelled tick
    first = math.floor(lo / step + 1e-9)
    last = math.ceil(hi / step - 1e-9)
    return [float(f"{k * step:.12g}") for k in range(first, last + 1)]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:g}" if abs(v) < 1e6 else f"{v:.3g}"


class _Canvas:
    def __init__(self, width: int, height: int, title: str):
        self.width, self.height = width, height
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif" font-size="12">',
            f"<title>{escape(title)}</title>",
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        ]

    def add(self, s: str):
        self.parts.append(s)

    def text(self, x, y, s, anchor="middle", size=None, **attrs):
        extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
        sz = f' font-size="{size}"' if size else ""
        self.add(f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}"{sz}{extra}>{escape(str(s))}</text>')

    def line(self, x1, y1, x2, y2, stroke="#000000", width=1.0, dash=None, cls=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        c = f' class="{cls}"' if cls else ""
        self.add(f'<line{c} x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
                 f'stroke="{stroke}" stroke-width="{width}"{d}/>')

    def svg(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def strip_svg(report: AnalysisReport, seed: int = DEFAULT_SEED) -> str:
    """Points for every included observation, grouped by batch then treatment."""
    if report.dataset is None:
        raise DesignError("strip plot needs raw data (not available in summaries mode)")
    obs = report.dataset.included
    treatments = report.dataset.treatment_levels()
    batches = report.dataset.batch_levels()
    ys = np.array([o.outcome for o in obs])
    ticks = nice_ticks(float(ys.min()), float(ys.max()))
    lo, hi = min(ticks[0], ys.min()), max(ticks[-1], ys.max())
    if hi == lo:
        hi = lo + 1.0

    longest = max(len(b) for b in batches)
    group_w = max(40 * len(treatments) + 20, 7 * longest + 20)
    left, right, top, bottom = 70, 20 + 9 * max(len(t) for t in treatments) + 30, 40, 60
    width = left + group_w * len(batches) + right
    height = 420
    plot_h = height - top - bottom
    cv = _Canvas(width, height, f"Outcome by batch: {report.dataset.name}")

    def ypos(v):
        return top + plot_h * (1.0 - (v - lo) / (hi - lo))

    x0, x1 = left, left + group_w * len(batches)
    cv.line(x0, top, x0, top + plot_h)
    cv.line(x0, top + plot_h, x1, top + plot_h)
    for tk in ticks:
        cv.line(x0 - 5, ypos(tk), x0, ypos(tk))
        cv.text(x0 - 8, ypos(tk) + 4, _tick_label(tk), anchor="end")
    outcome_label = report.provenance.get("outcome_column", "outcome")
    cv.text(18, top + plot_h / 2, outcome_label, transform=f"rotate(-90 18 {_fmt(top + plot_h / 2)})")

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    jitter = rng.uniform(-1.0, 1.0, size=len(obs))
    slot = group_w / (len(treatments) + 1)
    color = {t: PALETTE[i % len(PALETTE)] for i, t in enumerate(treatments)}
    pos = {(tr, bt): left + j * group_w + (i + 1) * slot
           for j, bt in enumerate(batches) for i, tr in enumerate(treatments)}

    for j, bt in enumerate(batches):
        cx = left + (j + 0.5) * group_w
        cv.text(cx, top + plot_h + 20, bt)
        if j:
            cv.line(left + j * group_w, top, left + j * group_w, top + plot_h, stroke="#dddddd")
    cv.add('<g class="points">')
    for o, jit in zip(obs, jitter):
        x = pos[(o.treatment, o.batch)] + jit * slot * 0.3
        cv.add(f'<circle cx="{_fmt(x)}" cy="{_fmt(ypos(o.outcome))}" r="3" fill="{color[o.treatment]}" '
               f'fill-opacity="0.6" stroke="none"/>')
    cv.add("</g>")
    # cell means
    for (tr, bt), x in pos.items():
        vals = [o.outcome for o in obs if o.treatment == tr and o.batch == bt]
        if vals:
            m = sum(vals) / len(vals)
            cv.line(x - slot * 0.35, ypos(m), x + slot * 0.35, ypos(m), stroke="#000000", width=2, cls="mean")
    lx = x1 + 15
    for i, tr in enumerate(treatments):
        ly = top + 10 + 18 * i
        cv.add(f'<rect x="{lx}" y="{_fmt(ly - 9)}" width="10" height="10" fill="{color[tr]}"/>')
        cv.text(lx + 15, ly, tr, anchor="start")
    cv.text(left + group_w * len(batches) / 2, top + plot_h + 45, report.provenance.get("batch_column", "batch"))
    return cv.svg()


def forest_svg(report: AnalysisReport) -> str:
    """Per-batch mean differences with intervals, pooled estimate last."""
    e = report.effects
    if e is None:
        raise DesignError("forest plot needs per-batch effects (two treatment levels and raw data)")
    entries = list(e.per_batch) + [e.overall]
    lo = min(min(x.ci_low for x in entries), 0.0)
    hi = max(max(x.ci_high for x in entries), 0.0)
    ticks = nice_ticks(lo, hi)
    lo, hi = min(lo, ticks[0]), max(hi, ticks[-1])

    label_w = 8 * max(len(x.batch) for x in entries) + 20
    left, right, top, row_h = label_w + 10, 30, 50, 30
    plot_w = 420
    width = left + plot_w + right
    height = top + row_h * len(entries) + 60
    cv = _Canvas(width, height, f"Per-batch effects: {e.treated} - {e.reference}")

    def xpos(v):
        return left + plot_w * (v - lo) / (hi - lo)

    base = top + row_h * len(entries)
    cv.line(left, base, left + plot_w, base)
    for tk in ticks:
        cv.line(xpos(tk), base, xpos(tk), base + 5)
        cv.text(xpos(tk), base + 18, _tick_label(tk))
    cv.text(left + plot_w / 2, base + 40,
            f"{e.treated} - {e.reference} ({e.confidence * 100:g}% CI)")
    cv.line(xpos(0.0), top - 10, xpos(0.0), base, stroke="#888888", dash="4 3", cls="zero")

    for i, x in enumerate(entries):
        cy = top + row_h * (i + 0.5)
        pooled = i == len(entries) - 1
        cv.text(left - 10, cy + 4, x.batch, anchor="end", font_weight="bold" if pooled else "normal")
        cv.add(f'<g class="interval" data-batch="{escape(x.batch)}">')
        cv.line(xpos(x.ci_low), cy, xpos(x.ci_high), cy, width=1.5)
        if pooled:
            cx = xpos(x.diff)
            cv.add(f'<polygon points="{_fmt(cx - 7)},{_fmt(cy)} {_fmt(cx)},{_fmt(cy - 7)} '
                   f'{_fmt(cx + 7)},{_fmt(cy)} {_fmt(cx)},{_fmt(cy + 7)}" fill="#000000"/>')
        else:
            cv.add(f'<rect x="{_fmt(xpos(x.diff) - 4)}" y="{_fmt(cy - 4)}" width="8" height="8" '
                   f'fill="{PALETTE[0]}"/>')
        cv.add("</g>")
    return cv.svg()


def render_svg(report: AnalysisReport, kind: str, path=None, seed: int = DEFAULT_SEED) -> str:
    """Build the figure and optionally write it to ``path``; returns the SVG text."""
    if kind == "strip":
        svg = strip_svg(report, seed)
    elif kind == "forest":
        svg = forest_svg(report)
    else:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if path is not None:
        try:
            Path(path).write_text(svg, encoding="utf-8")
        except OSError as exc:
            raise ReplicheckError(f"cannot write {path}: {exc.strerror or exc}") from None
    return svg
