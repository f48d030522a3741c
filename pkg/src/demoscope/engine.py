"""Pipeline orchestration: blocks 1..7, bounded feedback, what-if overrides."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .depgraph import (
    AdjustedTrlMap,
    DEFAULT_GRADE_CAPS,
    StructureReport,
    analyze_structure,
    build_graph,
    compute_caps,
    propagate,
)
from .feasibility import (
    DEFAULT_LEVEL_BANDS,
    DemonstrationLevel,
    DemonstratorAssessment,
    UnknownWp,
    achievable_demo_trl,
    recommend_level,
)
from .model import (
    ConsolidatedInput,
    DefaultApplied,
    Diagnostic,
    ProjectModel,
    QualityCoverage,
    ReadinessGrade,
    Severity,
    TrlLevel,
    WpKind,
    consolidate,
    has_errors,
    validate_model,
)
from .quality import ComplianceReport, assess_compliance
from .requirements import RequirementsSpec, elaborate
from .trlgap import (
    DEFAULT_THRESHOLDS,
    DemoGap,
    GapThresholds,
    WpGap,
    demo_gap_table,
    gap_table,
    incomplete_wp_ids,
)


@dataclass(frozen=True)
class EngineConfig:
    """All tunable thresholds in one place; defaults match the published
    readings (gap 1 minor / 2 major, grade caps G0..G4 -> TRL 3..7, level
    bands L1..L5 -> TRL 3/5/5/6/7)."""

    gap_thresholds: GapThresholds = DEFAULT_THRESHOLDS
    grade_cap_table: Mapping[ReadinessGrade, TrlLevel] = field(
        default_factory=lambda: dict(DEFAULT_GRADE_CAPS)
    )
    level_trl_bands: Mapping[DemonstrationLevel, TrlLevel] = field(
        default_factory=lambda: dict(DEFAULT_LEVEL_BANDS)
    )
    max_feedback_iterations: int = 3
    strict_schema: bool = True

    def __post_init__(self):
        if self.max_feedback_iterations < 1:
            raise ValueError("max_feedback_iterations must be >= 1")
        caps = [self.grade_cap_table[g] for g in sorted(self.grade_cap_table)]
        if caps != sorted(caps):
            raise ValueError("grade_cap_table must be monotone in grade")
        if set(self.grade_cap_table) != set(ReadinessGrade):
            raise ValueError("grade_cap_table must cover every readiness grade")
        bands = [self.level_trl_bands[l] for l in sorted(self.level_trl_bands)]
        if bands != sorted(bands):
            raise ValueError("level_trl_bands must be monotone in level")
        if set(self.level_trl_bands) != set(DemonstrationLevel):
            raise ValueError("level_trl_bands must cover every demonstration level")

    @classmethod
    def from_dict(cls, data: Mapping) -> "EngineConfig":
        kwargs = {}
        if "gap_thresholds" in data:
            raw = data["gap_thresholds"]
            kwargs["gap_thresholds"] = GapThresholds(
                minor=int(raw["minor"]), major=int(raw["major"])
            )
        if "grade_cap_table" in data:
            kwargs["grade_cap_table"] = {
                ReadinessGrade[k]: TrlLevel(v) for k, v in data["grade_cap_table"].items()
            }
        if "level_trl_bands" in data:
            kwargs["level_trl_bands"] = {
                DemonstrationLevel.from_token(k): TrlLevel(v)
                for k, v in data["level_trl_bands"].items()
            }
        if "max_feedback_iterations" in data:
            kwargs["max_feedback_iterations"] = int(data["max_feedback_iterations"])
        if "strict_schema" in data:
            kwargs["strict_schema"] = bool(data["strict_schema"])
        return cls(**kwargs)


@dataclass(frozen=True)
class FeedbackEvent:
    from_block: int
    to_block: int
    reason: str
    iteration: int

    def __post_init__(self):
        if (self.from_block, self.to_block) not in {(4, 1), (4, 2), (5, 3), (6, 3)}:
            raise ValueError(f"no such feedback route: {self.from_block}->{self.to_block}")


@dataclass(frozen=True)
class Override:
    """A single what-if edit: dotted path, literal value, append or replace."""

    path: str
    value: str
    append: bool = False

    @classmethod
    def parse(cls, expression: str) -> "Override":
        if "+=" in expression:
            path, value = expression.split("+=", 1)
            return cls(path=path.strip(), value=value.strip(), append=True)
        if "=" in expression:
            path, value = expression.split("=", 1)
            return cls(path=path.strip(), value=value.strip(), append=False)
        raise OverrideError(f"override must look like path=value or path+=value: {expression!r}")


class OverrideError(Exception):
    pass


class ValidationFailed(Exception):
    def __init__(self, diagnostics: Sequence[Diagnostic]):
        self.diagnostics = tuple(diagnostics)
        lines = "; ".join(f"{d.code}({d.subject}): {d.message}" for d in diagnostics)
        super().__init__(f"model validation failed: {lines}")


class IterationLimitExceeded(Exception):
    def __init__(self, iterations: int):
        self.iterations = iterations
        super().__init__(
            f"feedback loop still requesting refinements after {iterations} iteration(s)"
        )


@dataclass(frozen=True)
class AnalysisReport:
    consolidated: ConsolidatedInput
    diagnostics: tuple[Diagnostic, ...]
    gaps: tuple[WpGap, ...]
    demo_gaps: tuple[DemoGap, ...]
    adjusted: AdjustedTrlMap
    structure: StructureReport
    compliance: tuple[ComplianceReport, ...]
    assessments: tuple[DemonstratorAssessment, ...]
    specs: tuple[RequirementsSpec, ...]
    feedback: tuple[FeedbackEvent, ...]
    config_used: EngineConfig

    @property
    def project_name(self) -> str:
        return self.consolidated.model.name

    def assessment(self, demo_id: str) -> DemonstratorAssessment:
        for item in self.assessments:
            if item.demo_id == demo_id:
                return item
        raise KeyError(demo_id)

    def compliance_for(self, demo_id: str) -> ComplianceReport:
        for item in self.compliance:
            if item.demo_id == demo_id:
                return item
        raise KeyError(demo_id)

    def spec_for(self, demo_id: str) -> RequirementsSpec:
        for item in self.specs:
            if item.demo_id == demo_id:
                return item
        raise KeyError(demo_id)


# ---------------------------------------------------------------------------
# overrides

_BOOL_TOKENS = {"true": True, "false": False}


def apply_overrides(model: ProjectModel, overrides: Sequence[Override]) -> ProjectModel:
    for override in overrides:
        model = _apply_one(model, override)
    return model


def _apply_one(model: ProjectModel, override: Override) -> ProjectModel:
    parts = override.path.split(".")
    if len(parts) == 2 and parts[0] == "project":
        return _apply_project(model, parts[1], override)
    if len(parts) != 3:
        raise OverrideError(
            f"override path must be root.id.field (or project.field): {override.path!r}"
        )
    root, item_id, field_name = parts
    if root == "wp":
        return _apply_wp(model, item_id, field_name, override)
    if root == "use_case":
        return _apply_use_case(model, item_id, field_name, override)
    if root == "demo":
        return _apply_demo(model, item_id, field_name, override)
    raise OverrideError(f"unknown override root {root!r} in {override.path!r}")


def _parse_trl(value: str, path: str) -> TrlLevel:
    try:
        return TrlLevel(int(value))
    except ValueError as exc:
        raise OverrideError(f"{path}: {exc}") from None


def _apply_project(model: ProjectModel, field_name: str, override: Override) -> ProjectModel:
    if override.append:
        raise OverrideError(f"{override.path}: += not supported here")
    if field_name == "name":
        return replace(model, name=override.value)
    if field_name == "blanket_trl_range":
        parts = [p.strip() for p in override.value.split(",")]
        if len(parts) != 2:
            raise OverrideError(f"{override.path}: expected 'low,high'")
        return replace(
            model,
            blanket_trl_range=(
                _parse_trl(parts[0], override.path),
                _parse_trl(parts[1], override.path),
            ),
        )
    raise OverrideError(f"unknown project field {field_name!r}")


def _apply_wp(model: ProjectModel, wp_id: str, field_name: str, override: Override) -> ProjectModel:
    try:
        wp = model.wp(wp_id)
    except KeyError:
        raise OverrideError(f"{override.path}: unknown work package {wp_id!r}") from None
    if field_name == "use_cases":
        refs = _edit_list(wp.use_case_refs, override)
        updated = replace(wp, use_case_refs=refs)
    elif field_name in ("target_trl", "estimated_trl"):
        if override.append:
            raise OverrideError(f"{override.path}: += not supported here")
        updated = replace(wp, **{field_name: _parse_trl(override.value, override.path)})
    elif field_name == "analyzed":
        token = override.value.lower()
        if token not in _BOOL_TOKENS:
            raise OverrideError(f"{override.path}: expected true or false")
        updated = replace(wp, analyzed=_BOOL_TOKENS[token])
    elif field_name == "kind":
        try:
            updated = replace(wp, kind=WpKind(override.value))
        except ValueError:
            raise OverrideError(f"{override.path}: invalid kind {override.value!r}") from None
    elif field_name == "name":
        updated = replace(wp, name=override.value)
    else:
        raise OverrideError(f"unknown work package field {field_name!r}")
    return replace(
        model,
        work_packages=tuple(updated if w.id == wp_id else w for w in model.work_packages),
    )


def _apply_use_case(
    model: ProjectModel, uc_id: str, field_name: str, override: Override
) -> ProjectModel:
    try:
        uc = model.use_case(uc_id)
    except KeyError:
        raise OverrideError(f"{override.path}: unknown use-case {uc_id!r}") from None
    if override.append:
        raise OverrideError(f"{override.path}: += not supported here")
    if field_name == "readiness":
        try:
            updated = replace(uc, readiness=ReadinessGrade[override.value])
        except KeyError:
            raise OverrideError(f"{override.path}: expected a grade G0..G4") from None
    elif field_name == "framework_group":
        updated = replace(uc, framework_group=override.value or None)
    elif field_name == "provider":
        updated = replace(uc, provider=override.value)
    else:
        raise OverrideError(f"unknown use-case field {field_name!r}")
    return replace(
        model,
        use_cases=tuple(updated if u.id == uc_id else u for u in model.use_cases),
    )


def _apply_demo(
    model: ProjectModel, demo_id: str, field_name: str, override: Override
) -> ProjectModel:
    try:
        demo = model.demonstrator(demo_id)
    except KeyError:
        raise OverrideError(f"{override.path}: unknown demonstrator {demo_id!r}") from None
    if field_name == "covered_wps":
        updated = replace(demo, covered_wp_ids=_edit_list(demo.covered_wp_ids, override))
    elif field_name == "use_cases":
        updated = replace(demo, use_case_refs=_edit_list(demo.use_case_refs, override))
    elif field_name == "target_trl":
        if override.append:
            raise OverrideError(f"{override.path}: += not supported here")
        updated = replace(demo, target_trl=_parse_trl(override.value, override.path))
    elif field_name == "qualities":
        try:
            updated = replace(demo, qualities=QualityCoverage(override.value))
        except ValueError:
            raise OverrideError(f"{override.path}: invalid qualities {override.value!r}") from None
    elif field_name == "name":
        updated = replace(demo, name=override.value)
    else:
        raise OverrideError(f"unknown demonstrator field {field_name!r}")
    return replace(
        model,
        demonstrators=tuple(updated if d.id == demo_id else d for d in model.demonstrators),
    )


def _edit_list(current: tuple[str, ...], override: Override) -> tuple[str, ...]:
    if override.append:
        return current if override.value in current else current + (override.value,)
    return tuple(v.strip() for v in override.value.split(",") if v.strip())


# ---------------------------------------------------------------------------
# pipeline

def run(
    model: ProjectModel,
    config: EngineConfig | None = None,
    overrides: Sequence[Override] = (),
) -> AnalysisReport:
    """Execute blocks 1..7 with bounded feedback.

    A feedback condition that can be resolved mechanically (per-WP targets
    derivable from demonstrator targets) re-runs from block 2; anything
    needing human input is recorded as an advisory event and the pipeline
    completes with flags.
    """
    config = config or EngineConfig()
    model = apply_overrides(model, overrides)
    diagnostics = validate_model(model)
    if has_errors(diagnostics):
        raise ValidationFailed([d for d in diagnostics if d.severity is Severity.ERROR])

    consolidated = consolidate(model)  # block 1
    feedback: list[FeedbackEvent] = []
    iteration = 1
    while True:
        # block 2
        incomplete = incomplete_wp_ids(consolidated)
        gaps = gap_table(consolidated, config.gap_thresholds, exclude=set(incomplete))
        demo_gaps = demo_gap_table(consolidated, config.gap_thresholds)
        # block 3
        graph = build_graph(consolidated)
        caps = compute_caps(consolidated.model, config.grade_cap_table)
        estimates = {
            wp.id: wp.estimated_trl
            for wp in consolidated.model.trl_wps()
            if wp.estimated_trl is not None
        }
        adjusted = propagate(graph.subgraph(estimates), estimates, caps)
        structure = analyze_structure(graph, adjusted)
        # block 4 feedback: refine what the model itself can still supply
        refinements = _derivable_targets(consolidated)
        if refinements:
            if iteration >= config.max_feedback_iterations:
                raise IterationLimitExceeded(iteration)
            feedback.append(
                FeedbackEvent(
                    from_block=4,
                    to_block=2,
                    reason=(
                        "derived per-WP TRL targets from demonstrator targets for: "
                        + ", ".join(sorted(refinements))
                    ),
                    iteration=iteration,
                )
            )
            consolidated = _apply_refinements(consolidated, refinements)
            iteration += 1
            continue
        break

    demos = sorted(consolidated.model.demonstrators, key=lambda d: d.id)
    compliance_reports: list[ComplianceReport] = []
    assessments: list[DemonstratorAssessment] = []
    specs: list[RequirementsSpec] = []

    for demo in demos:
        # block 4
        try:
            achievable = achievable_demo_trl(demo, adjusted, graph)
        except UnknownWp as exc:
            achievable = None
            feedback.append(
                FeedbackEvent(
                    from_block=4,
                    to_block=1,
                    reason=(
                        f"demonstrator {demo.id}: no adjusted TRL for covered WPs "
                        f"{', '.join(exc.wp_ids)} (estimates missing)"
                    ),
                    iteration=iteration,
                )
            )
        if demo.target_trl is None:
            feedback.append(
                FeedbackEvent(
                    from_block=4,
                    to_block=1,
                    reason=(
                        f"demonstrator {demo.id}: target TRL not stated; "
                        f"deduce one from the proposal"
                    ),
                    iteration=iteration,
                )
            )
        # block 5
        gate = demo.target_trl if demo.target_trl is not None else achievable
        compliance = assess_compliance(
            consolidated, demo, gate, graph, config.grade_cap_table
        )
        compliance_reports.append(compliance)
        if compliance.affects_dependencies:
            wps = ", ".join(compliance.non_compliant_wps())
            feedback.append(
                FeedbackEvent(
                    from_block=5,
                    to_block=3,
                    reason=(
                        f"demonstrator {demo.id}: quality gaps on {wps} affect "
                        f"dependencies; readiness caps already reflect declared grades"
                    ),
                    iteration=iteration,
                )
            )
        # block 6
        assessment = recommend_level(
            demo,
            consolidated.model,
            graph,
            structure,
            compliance,
            achievable,
            bands=config.level_trl_bands,
        )
        assessments.append(assessment)
        if assessment.target_level is not None and assessment.recommended_level < assessment.target_level:
            feedback.append(
                FeedbackEvent(
                    from_block=6,
                    to_block=3,
                    reason=(
                        f"demonstrator {demo.id}: aiming for "
                        f"{assessment.target_level.token} needs TRL upgrades; "
                        f"see mitigations"
                    ),
                    iteration=iteration,
                )
            )
        # block 7
        specs.append(elaborate(assessment, consolidated.model, graph))

    return AnalysisReport(
        consolidated=consolidated,
        diagnostics=tuple(diagnostics),
        gaps=tuple(gaps),
        demo_gaps=tuple(demo_gaps),
        adjusted=adjusted,
        structure=structure,
        compliance=tuple(compliance_reports),
        assessments=tuple(assessments),
        specs=tuple(specs),
        feedback=tuple(feedback),
        config_used=config,
    )


def _derivable_targets(consolidated: ConsolidatedInput) -> dict[str, TrlLevel]:
    """Per-WP targets deducible from demonstrator targets (block 4 -> 2).

    A multi-WP demonstrator sits one TRL above its constituent WPs: the
    difference is the integration step. The most conservative deduction
    wins when several demonstrators cover the same WP.
    """
    model = consolidated.model
    derived: dict[str, TrlLevel] = {}
    for wp in model.trl_wps():
        if wp.target_trl is not None:
            continue
        candidates = []
        for demo in model.demonstrators:
            if demo.target_trl is None or wp.id not in demo.covered_wp_ids:
                continue
            step = 1 if len(set(demo.covered_wp_ids)) > 1 else 0
            candidates.append(max(1, int(demo.target_trl) - step))
        if candidates:
            derived[wp.id] = TrlLevel(min(candidates))
    return derived


def _apply_refinements(
    consolidated: ConsolidatedInput, refinements: dict[str, TrlLevel]
) -> ConsolidatedInput:
    model = consolidated.model
    refined = replace(
        model,
        work_packages=tuple(
            replace(wp, target_trl=refinements[wp.id]) if wp.id in refinements else wp
            for wp in model.work_packages
        ),
    )
    redone = consolidate(refined)
    extra = tuple(
        DefaultApplied(
            path=f"wp.{wp_id}.target_trl",
            value=int(level),
            provenance="derived from demonstrator target (block 4 feedback)",
        )
        for wp_id, level in sorted(refinements.items())
    )
    return ConsolidatedInput(
        model=redone.model,
        flags=redone.flags,
        defaults_applied=consolidated.defaults_applied + extra,
    )


# ---------------------------------------------------------------------------
# what-if comparison

class ProjectMismatch(Exception):
    pass


@dataclass(frozen=True)
class ReportDiff:
    adjusted_changes: tuple[tuple[str, int | None, int | None], ...]
    recommendation_changes: tuple[tuple[str, str, str], ...]
    constraint_changes: tuple[tuple[str, tuple[str, ...], tuple[str, ...]], ...]

    def is_empty(self) -> bool:
        return not (
            self.adjusted_changes or self.recommendation_changes or self.constraint_changes
        )


def diff_reports(a: AnalysisReport, b: AnalysisReport) -> ReportDiff:
    """Structured what-if diff: adjusted TRLs, recommendations, constraints."""
    if a.project_name != b.project_name:
        raise ProjectMismatch(f"{a.project_name!r} vs {b.project_name!r}")

    adjusted_changes = []
    for wp_id in sorted(set(a.adjusted.entries) | set(b.adjusted.entries)):
        before = a.adjusted.entries.get(wp_id)
        after = b.adjusted.entries.get(wp_id)
        old = int(before.adjusted) if before else None
        new = int(after.adjusted) if after else None
        if old != new:
            adjusted_changes.append((wp_id, old, new))

    recommendation_changes = []
    constraint_changes = []
    a_by_id = {item.demo_id: item for item in a.assessments}
    b_by_id = {item.demo_id: item for item in b.assessments}
    for demo_id in sorted(set(a_by_id) | set(b_by_id)):
        before, after = a_by_id.get(demo_id), b_by_id.get(demo_id)
        old_level = before.recommended_level.token if before else "-"
        new_level = after.recommended_level.token if after else "-"
        if old_level != new_level:
            recommendation_changes.append((demo_id, old_level, new_level))
        old_constraints = set(before.constraints) if before else set()
        new_constraints = set(after.constraints) if after else set()
        added = tuple(sorted(new_constraints - old_constraints))
        removed = tuple(sorted(old_constraints - new_constraints))
        if added or removed:
            constraint_changes.append((demo_id, added, removed))

    return ReportDiff(
        adjusted_changes=tuple(adjusted_changes),
        recommendation_changes=tuple(recommendation_changes),
        constraint_changes=tuple(constraint_changes),
    )
