"""Command-line interface: validate, analyze, what-if overrides, DOT export.

Exit codes: 0 success / targets met; 1 I/O or syntax failure; 2 validation
error; 3 analysis ran but some target is unmet or impractical; 4 feedback
iteration limit exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .depgraph import CyclicDependency, build_graph, render_dot
from .engine import (
    EngineConfig,
    IterationLimitExceeded,
    Override,
    OverrideError,
    ValidationFailed,
    run,
)
from .feasibility import RiskLevel, risk_of
from .model import (
    DanglingReferenceError,
    ModelError,
    ModelSyntaxError,
    ParseResult,
    SchemaError,
    Severity,
    consolidate,
    has_errors,
    parse_model_report,
    validate_model,
)
from .reportio import render_machine, render_text

CONFIG_ENV_VAR = "DEMOSCOPE_CONFIG"

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_TARGETS_UNMET = 3
EXIT_ITERATION_LIMIT = 4


def _load_source(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _CliFailure(EXIT_IO, f"cannot read {path}: {exc}") from exc


class _CliFailure(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        self.message = message
        super().__init__(message)


def _parse_file(path: str, lenient: bool) -> ParseResult:
    source = _load_source(path)
    try:
        return parse_model_report(source, strict=not lenient)
    except ModelSyntaxError as exc:
        raise _CliFailure(EXIT_IO, f"syntax error: {exc}") from exc
    except (SchemaError, DanglingReferenceError) as exc:
        raise _CliFailure(EXIT_INVALID, f"invalid model: {exc}") from exc
    except ModelError as exc:
        raise _CliFailure(EXIT_INVALID, f"invalid model: {exc}") from exc


def _load_config(max_iterations: int | None) -> EngineConfig:
    config = EngineConfig()
    config_path = os.environ.get(CONFIG_ENV_VAR)
    if config_path:
        try:
            raw = yaml.safe_load(Path(config_path).read_text(encoding="utf-8")) or {}
            config = EngineConfig.from_dict(raw)
        except OSError as exc:
            raise _CliFailure(EXIT_IO, f"cannot read config {config_path}: {exc}") from exc
        except (KeyError, ValueError, TypeError) as exc:
            raise _CliFailure(EXIT_INVALID, f"invalid config {config_path}: {exc}") from exc
    if max_iterations is not None:
        config = replace(config, max_feedback_iterations=max_iterations)
    return config


def cmd_validate(args) -> int:
    result = _parse_file(args.file, args.lenient)
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    diagnostics = validate_model(result.model)
    for diagnostic in diagnostics:
        stream = sys.stderr if diagnostic.severity is Severity.ERROR else sys.stdout
        print(
            f"{diagnostic.severity.value}: {diagnostic.code} [{diagnostic.subject}] "
            f"{diagnostic.message}",
            file=stream,
        )
    if has_errors(diagnostics):
        return EXIT_INVALID
    print(f"{args.file}: valid ({len(diagnostics)} advisories)")
    return EXIT_OK


def cmd_analyze(args) -> int:
    result = _parse_file(args.file, args.lenient)
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    config = _load_config(args.max_iterations)
    try:
        overrides = [Override.parse(item) for item in args.set or []]
        report = run(result.model, config, overrides)
    except OverrideError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationFailed as exc:
        for diagnostic in exc.diagnostics:
            print(
                f"error: {diagnostic.code} [{diagnostic.subject}] {diagnostic.message}",
                file=sys.stderr,
            )
        return EXIT_INVALID
    except CyclicDependency as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except IterationLimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ITERATION_LIMIT

    if args.format == "machine":
        sys.stdout.write(render_machine(report))
    else:
        sys.stdout.write(render_text(report))

    unmet = False
    for assessment in report.assessments:
        if assessment.shortfall > 0:
            unmet = True
        if assessment.target_trl is not None and assessment.achievable_trl is None:
            unmet = True
        if assessment.target_level is not None:
            if risk_of(assessment.target_level, assessment.use_case_type) is RiskLevel.IMPRACTICAL:
                unmet = True
    return EXIT_TARGETS_UNMET if unmet else EXIT_OK


def cmd_export_dot(args) -> int:
    result = _parse_file(args.file, args.lenient)
    diagnostics = validate_model(result.model)
    if has_errors(diagnostics):
        for diagnostic in diagnostics:
            if diagnostic.severity is Severity.ERROR:
                print(
                    f"error: {diagnostic.code} [{diagnostic.subject}] {diagnostic.message}",
                    file=sys.stderr,
                )
        return EXIT_INVALID
    graph = build_graph(consolidate(result.model))
    text = render_dot(graph, result.model)
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demoscope",
        description=(
            "Assess demonstrator feasibility for a multi-work-package research "
            "project and elaborate the requirements for the attainable level."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="parse and validate a project model file")
    p_validate.add_argument("file")
    p_validate.add_argument(
        "--lenient", action="store_true", help="downgrade unknown keys to warnings"
    )
    p_validate.set_defaults(func=cmd_validate)

    p_analyze = sub.add_parser("analyze", help="run the full seven-block analysis")
    p_analyze.add_argument("file")
    p_analyze.add_argument("--format", choices=("text", "machine"), default="text")
    p_analyze.add_argument(
        "--set",
        action="append",
        metavar="PATH=VALUE",
        help="what-if override, e.g. wp.WP2.estimated_trl=5 or demo.d1.covered_wps+=WP4",
    )
    p_analyze.add_argument("--max-iterations", type=int, default=None)
    p_analyze.add_argument(
        "--lenient", action="store_true", help="downgrade unknown keys to warnings"
    )
    p_analyze.set_defaults(func=cmd_analyze)

    p_dot = sub.add_parser("export-dot", help="write the WP dependency graph as DOT")
    p_dot.add_argument("file")
    p_dot.add_argument("--out", default=None)
    p_dot.add_argument(
        "--lenient", action="store_true", help="downgrade unknown keys to warnings"
    )
    p_dot.set_defaults(func=cmd_export_dot)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliFailure as failure:
        print(f"error: {failure.message}", file=sys.stderr)
        return failure.code


if __name__ == "__main__":
    sys.exit(main())
