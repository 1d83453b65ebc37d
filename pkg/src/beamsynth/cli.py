"""Batch command-line interface.

Exit codes: 0 success with passing verdicts, 1 usage or configuration
error, 2 solver-flagged degeneracy, 3 verdict failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import harness, pipeline, plots
from .errors import BeamsynthError, ConfigurationError
from .scenario import ScenarioConfig, load_config

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DEGENERATE = 2
EXIT_VERDICT = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="scenario config JSON")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--mode", choices=["armijo", "unfolded"], default=None,
                        help="override step-size mode")
    parser.add_argument("--weights", default=None, help="override step-size weights file")


def _load(args) -> ScenarioConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.weights is not None:
        config = replace(config, weights_path=args.weights)
    if args.mode is not None:
        if args.mode == "unfolded" and not (args.weights or config.weights_path):
            raise ConfigurationError("--mode unfolded needs --weights or a config weights path")
        config = replace(config, mode=args.mode)
    return config


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synthesize(args) -> int:
    config = _load(args)
    result = pipeline.synthesize(config)
    out = _out_dir(args)
    paths = pipeline.write_synthesis_outputs(out, result)
    plots.save_pattern_figure(out / "pattern.png", result.report_angles,
                              result.report.gains_db, config.spec)
    traces = {f"node {i}": a.trace for i, a in enumerate(result.analog)}
    traces["digital"] = result.digital.trace
    plots.save_convergence_figure(out / "convergence.png", traces)

    report = result.report
    print(f"wrote {paths['solution']}")
    print(f"ripple {report.ripple_db:.3f} dB, max sidelobe {report.max_sidelobe_db:.2f} dB, "
          f"max null {report.max_null_db:.2f} dB")
    for name, verdict in sorted(report.verdicts.items()):
        print(f"verdict {name}: {'pass' if verdict.passed else 'FAIL'} "
              f"(margin {verdict.margin_db:+.2f} dB)")
    if result.flags:
        print(f"solver flags: {', '.join(result.flags)}")
        return EXIT_DEGENERATE
    return EXIT_OK if report.all_passed else EXIT_VERDICT


def cmd_evaluate(args) -> int:
    config = _load(args)
    solution = pipeline.load_solution(args.solution)
    report, table = pipeline.evaluate_solution(config, solution)
    out = _out_dir(args)
    pipeline.write_report_json(out / "report.json", report)
    pipeline.write_lines(out / "pattern.csv",
                         __import__("beamsynth.metrics", fromlist=["pattern_csv_lines"])
                         .pattern_csv_lines(report.angles_deg, report.gains_db))
    pipeline.write_lines(out / "sinr.csv", pipeline.sinr_csv_lines(table))
    plots.save_pattern_figure(out / "pattern.png", report.angles_deg,
                              report.gains_db, config.spec)
    for row in table:
        print(f"JSR {row.jsr_db:+.1f} dB: sum rate {row.sum_rate:.3f} bit/s/Hz")
    print(f"ripple {report.ripple_db:.3f} dB, max sidelobe {report.max_sidelobe_db:.2f} dB, "
          f"max null {report.max_null_db:.2f} dB")
    return EXIT_OK if report.all_passed else EXIT_VERDICT


def cmd_bench_scaling(args) -> int:
    config = _load(args)
    l_list = [int(x) for x in args.node_counts.split(",")]
    fit = harness.bench_scaling(config, l_list, runs=args.runs)
    out = _out_dir(args)
    pipeline.write_lines(out / "scaling.csv", harness.scaling_csv_lines(fit))
    plots.save_scaling_figure(out / "scaling.png", fit)
    for row in fit.rows:
        print(f"L={row.num_aps}: median {row.median_time_s * 1e3:.1f} ms")
    print(f"linear fit slope {fit.slope * 1e3:.2f} ms/node, R^2 {fit.r_squared:.4f}")
    return EXIT_OK


def cmd_compare_stepsize(args) -> int:
    config = _load(args)
    rows = harness.compare_stepsize(config, num_instances=args.instances)
    out = _out_dir(args)
    pipeline.write_lines(out / "compare.csv", harness.compare_csv_lines(rows))
    plots.save_compare_figure(out / "compare.png", rows)
    t_a = sum(r.armijo_time_s for r in rows) / len(rows)
    t_u = sum(r.unfolded_time_s for r in rows) / len(rows)
    wins = sum(r.unfolded_time_s < r.armijo_time_s for r in rows)
    print(f"mean solve time: line search {t_a * 1e3:.2f} ms, learned {t_u * 1e3:.2f} ms")
    print(f"learned steps faster on {wins}/{len(rows)} instances")
    return EXIT_OK


def cmd_impairment_study(args) -> int:
    config_doc = {}
    if args.impairments:
        try:
            config_doc = json.loads(Path(args.impairments).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read impairment config: {exc}") from exc
    study_cfg = harness.ImpairmentStudyConfig.from_dict(config_doc)
    result = harness.impairment_study(study_cfg)
    out = _out_dir(args)
    for which in ("ideal", "uncorrected", "compensated"):
        pipeline.write_lines(out / f"pattern_{which}.csv",
                             harness.impairment_csv_lines(result.patterns, which))
    plots.save_impairment_figure(out / "impairment.png", result.patterns, result.null_db)
    for name, level in result.null_db.items():
        print(f"{name} null level: {level:.2f} dB")
    print(f"compensation deepens the null by {result.improvement_db:.2f} dB")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamsynth",
        description="Two-stage anti-jamming beam pattern synthesis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="run the two-stage synthesis for a scenario")
    _add_common(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("evaluate", help="recompute metrics from saved weights")
    _add_common(p)
    p.add_argument("--solution", required=True, help="solution JSON from synthesize")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench-scaling", help="runtime scaling over node counts")
    _add_common(p)
    p.add_argument("--node-counts", default="2,4,6,8,10",
                   help="comma-separated ascending node counts")
    p.add_argument("--runs", type=int, default=5, help="timed runs per point")
    p.set_defaults(func=cmd_bench_scaling)

    p = sub.add_parser("compare-stepsize", help="line search vs learned step sizes")
    _add_common(p)
    p.add_argument("--instances", type=int, default=50, help="paired instances")
    p.set_defaults(func=cmd_compare_stepsize)

    p = sub.add_parser("impairment-study", help="quantization and channel-error study")
    _add_common(p)
    p.add_argument("--impairments", default=None, help="impairment study config JSON")
    p.set_defaults(func=cmd_impairment_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except BeamsynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
