"""Command-line interface.

Exit codes: 0 success, 2 design/validation failure, 3 parse error,
4 internal numeric error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .domain import Independence, Timing, all_replication_classes, classify_replication, summarize_design, validate_grbd
from .errors import ConfigurationError, NumericError, ParseError, ReplicheckError
from .io import ColumnMapping, parse_csv, write_csv
from .plots import DEFAULT_SEED, KINDS, render_svg
from .report import AnalysisReport, analyze_dataset, analyze_summaries, render_json, render_text
from .sim import SimParams, calibration_study, generate_grbd


def _mapping(args) -> ColumnMapping:
    try:
        return ColumnMapping(args.outcome, args.treatment, args.batch, args.exclude, args.reference)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None


def _replication(args):
    ind, tim = getattr(args, "independence", None), getattr(args, "timing", None)
    if ind is None and tim is None:
        return None
    if ind is None or tim is None:
        raise ConfigurationError("--independence and --timing must be given together")
    return classify_replication(ind, tim)


def analyze(path, mapping: ColumnMapping, alpha: float = 0.05, confidence: float = 0.95,
            replication=None) -> AnalysisReport:
    dataset = parse_csv(path, mapping)
    prov = {
        "outcome_column": mapping.outcome_col,
        "treatment_column": mapping.treatment_col,
        "batch_column": mapping.batch_col,
        "exclude_column": mapping.exclude_col,
    }
    return analyze_dataset(dataset, alpha, confidence, mapping.reference_level, replication, prov)


def _emit(text: str | bytes, output: str | None) -> None:
    if output:
        data = text if isinstance(text, bytes) else text.encode("utf-8")
        try:
            Path(output).write_bytes(data)
        except OSError as exc:
            raise ReplicheckError(f"cannot write {output}: {exc.strerror or exc}") from None
    elif isinstance(text, bytes):
        sys.stdout.buffer.write(text)
        sys.stdout.flush()
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    replication = _replication(args)
    if args.from_summaries:
        try:
            raw = json.loads(Path(args.from_summaries).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ParseError(f"cannot read {args.from_summaries}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.from_summaries}: invalid JSON ({exc})") from None
        report = analyze_summaries(raw, args.alpha, source=args.from_summaries, replication=replication)
    else:
        if not args.csv:
            raise ConfigurationError("analyze needs a CSV path or --from-summaries")
        report = analyze(args.csv, _mapping(args), args.alpha, args.confidence, replication)
    _emit(render_json(report) if args.format == "json" else render_text(report), args.output)
    return 0


def cmd_validate(args) -> int:
    dataset = parse_csv(args.csv, _mapping(args))
    report = validate_grbd(summarize_design(dataset))
    for c in report.checks:
        status = "ok" if c.passed else ("WARN" if c.severity == "warning" else "FAIL")
        print(f"{status:4}  {c.name}: {c.message}")
    print("overall: " + ("pass" if report.overall else "fail"))
    return 0 if report.overall else 2


def cmd_classify(args) -> int:
    classes = all_replication_classes() if args.all else [classify_replication(args.independence, args.timing)]
    if args.format == "json":
        payload = [{"independence": c.independence.value, "timing": c.timing.value,
                    "label": c.label, "figure_panel": c.figure_panel} for c in classes]
        print(json.dumps(payload if args.all else payload[0], indent=2))
    else:
        for c in classes:
            print(f"{c.figure_panel}  {c.label}  (e.g. {c.example})")
    return 0


def _floats(text: str | None):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise ConfigurationError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_simulate(args) -> int:
    params = SimParams(args.t, args.b, args.r, _floats(args.treatment_effects), _floats(args.batch_effects),
                       args.interaction_sd, args.sigma, args.seed)
    if args.write_csv:
        write_csv(generate_grbd(params), args.write_csv)
        return 0
    res = calibration_study(params, args.n_sims, args.alpha, n_jobs=args.n_jobs)
    se = res.monte_carlo_se
    payload = {
        "n_sims": res.n_sims, "alpha": res.alpha, "seed": params.seed, "rng": "PCG64",
        "rejection_rate_eq1": res.rejection_rate_eq1,
        "rejection_rate_eq2": res.rejection_rate_eq2,
        "rejection_rate_interaction": res.rejection_rate_interaction,
        "monte_carlo_se": se,
    }
    if args.format == "json":
        _emit(json.dumps(payload, indent=2) + "\n", args.output)
    else:
        lines = [
            f"Calibration: t={params.t}, b={params.b}, r={params.r}, sigma={params.sigma:g}, "
            f"interaction_sd={params.interaction_sd:g}, seed={params.seed}, {res.n_sims} simulations",
            f"rejection rate at alpha={res.alpha:g}:",
            *(f"  {label:<36}{rate:.4f} (MC se {se[key]:.4f})" for label, rate, key in (
                ("treatment vs MS(Error)", res.rejection_rate_eq1, "eq1"),
                ("treatment vs MS(Treatment x Batch)", res.rejection_rate_eq2, "eq2"),
                ("treatment x batch interaction", res.rejection_rate_interaction, "interaction"),
            )),
        ]
        _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_plot(args) -> int:
    report = analyze(args.csv, _mapping(args), args.alpha, args.confidence)
    render_svg(report, args.kind, args.out, seed=args.seed)
    return 0


def _add_mapping(p):
    p.add_argument("csv", nargs="?", help="input CSV (header row required)")
    p.add_argument("--outcome", default="outcome", help="outcome column (default: outcome)")
    p.add_argument("--treatment", default="treatment", help="treatment column (default: treatment)")
    p.add_argument("--batch", default="batch", help="batch column (default: batch)")
    p.add_argument("--exclude", default=None, help="column flagging excluded rows (1/true/yes)")
    p.add_argument("--reference", default=None, help="control treatment label")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="replicheck", description="Internal replication analysis for batched experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file whose keys mirror the subcommand's flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="GRBD ANOVA, effects and reproducibility verdict")
    _add_mapping(p)
    p.add_argument("--from-summaries", help="JSON with published df/SS instead of raw data")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--independence", choices=[i.value for i in Independence])
    p.add_argument("--timing", choices=[t.value for t in Timing])
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", "-o", help="write report here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validate", help="check GRBD design requirements")
    _add_mapping(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("classify", help="name the type of internal replication")
    p.add_argument("--independence", choices=[i.value for i in Independence])
    p.add_argument("--timing", choices=[t.value for t in Timing])
    p.add_argument("--all", action="store_true", help="list all six types")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="Monte Carlo calibration or synthetic data")
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--b", type=int, default=3)
    p.add_argument("--r", type=int, default=10)
    p.add_argument("--treatment-effects", help="comma-separated, one per treatment")
    p.add_argument("--batch-effects", help="comma-separated, one per batch")
    p.add_argument("--interaction-sd", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--n-sims", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--n-jobs", type=int, default=None)
    p.add_argument("--write-csv", help="write one simulated dataset to this path and exit")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="SVG strip plot or forest plot")
    _add_mapping(p)
    p.add_argument("--kind", choices=KINDS, default="forest")
    p.add_argument("--out", required=False, help="output SVG path")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="jitter seed for strip plots")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--confidence", type=float, default=0.95)
    p.set_defaults(func=cmd_plot)
    parser.subcommands = sub.choices
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read config {known.config}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{known.config}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ParseError(f"{known.config}: config must be a JSON object")
    command = parser.parse_args(argv).command
    sub_parser = parser.subcommands[command]
    dests = {a.dest for a in sub_parser._actions} - {"help"}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in dests:
            raise ConfigurationError(f"config key {key!r} is not a flag of '{command}'")
        defaults[dest] = value
    sub_parser.set_defaults(**defaults)
    args = parser.parse_args(argv)
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.command == "classify" and not args.all and (args.independence is None or args.timing is None):
            raise ConfigurationError("classify needs --independence and --timing (or --all)")
        if args.command == "plot" and not args.out:
            raise ConfigurationError("plot needs --out")
        if args.command in ("validate", "plot") and not args.csv:
            raise ConfigurationError(f"{args.command} needs a CSV path")
        return args.func(args)
    except ReplicheckError as exc:
        print(f"replicheck: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"replicheck: numeric error: {exc}", file=sys.stderr)
        return NumericError.exit_code
    except ValueError as exc:
        print(f"replicheck: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
