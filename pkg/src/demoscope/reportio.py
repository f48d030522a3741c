"""Report serialization: machine-readable JSON (round-trip safe) and the
stable sectioned text rendering, one section per pipeline block."""

from __future__ import annotations

import json
from typing import Any

from .depgraph import AdjustedTrl, AdjustedTrlMap, Bottleneck, StructureReport
from .engine import AnalysisReport, EngineConfig, FeedbackEvent
from .feasibility import (
    DemonstrationLevel,
    DemonstratorAssessment,
    Mitigation,
    MitigationKind,
    RiskLevel,
    UseCaseType,
)
from .model import (
    ConsolidatedInput,
    DefaultApplied,
    Diagnostic,
    IssueKind,
    MissingInfo,
    ReadinessGrade,
    Severity,
    TrlLevel,
    model_from_dict,
    model_to_dict,
)
from .quality import ComplianceReport, ComplianceRow
from .requirements import (
    ImprovementAction,
    Requirement,
    RequirementKind,
    RequirementsSpec,
    RequirementSource,
)
from .trlgap import DemoGap, GapCategory, GapThresholds, WpGap

REPORT_VERSION = 1


def _trl(value: TrlLevel | None) -> int | None:
    return None if value is None else int(value)


def _level(value: DemonstrationLevel | None) -> str | None:
    return None if value is None else value.token


def report_to_dict(report: AnalysisReport) -> dict[str, Any]:
    return {
        "report_version": REPORT_VERSION,
        "project": report.project_name,
        "consolidated": {
            "model": model_to_dict(report.consolidated.model),
            "flags": [
                {"subject": f.subject, "issue": f.issue.value, "note": f.note}
                for f in report.consolidated.flags
            ],
            "defaults_applied": [
                {"path": d.path, "value": d.value, "provenance": d.provenance}
                for d in report.consolidated.defaults_applied
            ],
        },
        "diagnostics": [
            {
                "severity": d.severity.value,
                "code": d.code,
                "subject": d.subject,
                "message": d.message,
            }
            for d in report.diagnostics
        ],
        "gaps": [
            {
                "wp_id": g.wp_id,
                "target": int(g.target),
                "estimated": int(g.estimated),
                "gap": g.gap,
                "category": g.category.token,
            }
            for g in report.gaps
        ],
        "demo_gaps": [
            {
                "demo_id": g.demo_id,
                "target": int(g.target),
                "baseline": int(g.baseline),
                "gap": g.gap,
                "category": g.category.token,
            }
            for g in report.demo_gaps
        ],
        "adjusted": {
            "entries": {
                wp_id: {
                    "own_estimate": int(entry.own_estimate),
                    "adjusted": int(entry.adjusted),
                    "quality_cap": _trl(entry.quality_cap),
                    "limiting_upstream": entry.limiting_upstream,
                }
                for wp_id, entry in report.adjusted.entries.items()
            },
            "advisories": list(report.adjusted.advisories),
        },
        "structure": {
            "islands": list(report.structure.islands),
            "bottlenecks": [
                {"wp_id": b.wp_id, "blocked_downstream_count": b.blocked_downstream_count}
                for b in report.structure.bottlenecks
            ],
            "cycles": [list(c) for c in report.structure.cycles],
        },
        "compliance": [
            {
                "demo_id": c.demo_id,
                "gate_trl": _trl(c.gate_trl),
                "rows": [
                    {
                        "wp_id": r.wp_id,
                        "use_case_id": r.use_case_id,
                        "required": r.required.name,
                        "actual": r.actual.name if r.actual is not None else None,
                        "compliant": r.compliant,
                        "availability_failure": r.availability_failure,
                    }
                    for r in c.rows
                ],
                "corrective_actions": list(c.corrective_actions),
                "affects_dependencies": c.affects_dependencies,
            }
            for c in report.compliance
        ],
        "assessments": [
            {
                "demo_id": a.demo_id,
                "achievable_trl": _trl(a.achievable_trl),
                "target_trl": _trl(a.target_trl),
                "shortfall": a.shortfall,
                "use_case_type": a.use_case_type.value,
                "recommended_level": a.recommended_level.token,
                "target_level": _level(a.target_level),
                "risk": a.risk.value,
                "constraints": list(a.constraints),
                "mitigations": [
                    {
                        "kind": m.kind.value,
                        "text": m.text,
                        "wp_ids": list(m.wp_ids),
                        "use_case_id": m.use_case_id,
                        "unlocks": _level(m.unlocks),
                    }
                    for m in a.mitigations
                ],
            }
            for a in report.assessments
        ],
        "specs": [
            {
                "demo_id": s.demo_id,
                "level": s.level.token,
                "requirements": [
                    {
                        "id": r.id,
                        "kind": r.kind.value,
                        "subject": r.subject,
                        "statement": r.statement,
                        "source": r.source.value,
                    }
                    for r in s.requirements
                ],
                "improvement_plan": [
                    {
                        "action": p.action,
                        "wp_ids": list(p.wp_ids),
                        "use_case_id": p.use_case_id,
                        "unlocks": _level(p.unlocks),
                    }
                    for p in s.improvement_plan
                ],
            }
            for s in report.specs
        ],
        "feedback": [
            {
                "from_block": f.from_block,
                "to_block": f.to_block,
                "reason": f.reason,
                "iteration": f.iteration,
            }
            for f in report.feedback
        ],
        "config": {
            "gap_thresholds": {
                "minor": report.config_used.gap_thresholds.minor,
                "major": report.config_used.gap_thresholds.major,
            },
            "grade_cap_table": {
                g.name: int(report.config_used.grade_cap_table[g])
                for g in sorted(report.config_used.grade_cap_table)
            },
            "level_trl_bands": {
                l.token: int(report.config_used.level_trl_bands[l])
                for l in sorted(report.config_used.level_trl_bands)
            },
            "max_feedback_iterations": report.config_used.max_feedback_iterations,
            "strict_schema": report.config_used.strict_schema,
        },
    }


def report_from_dict(data: dict[str, Any]) -> AnalysisReport:
    version = data.get("report_version")
    if version != REPORT_VERSION:
        raise ValueError(f"unsupported report_version {version!r}")

    consolidated = ConsolidatedInput(
        model=model_from_dict(data["consolidated"]["model"]),
        flags=tuple(
            MissingInfo(
                subject=f["subject"], issue=IssueKind(f["issue"]), note=f["note"]
            )
            for f in data["consolidated"]["flags"]
        ),
        defaults_applied=tuple(
            DefaultApplied(path=d["path"], value=d["value"], provenance=d["provenance"])
            for d in data["consolidated"]["defaults_applied"]
        ),
    )
    diagnostics = tuple(
        Diagnostic(
            severity=Severity(d["severity"]),
            code=d["code"],
            subject=d["subject"],
            message=d["message"],
        )
        for d in data["diagnostics"]
    )
    gaps = tuple(
        WpGap(
            wp_id=g["wp_id"],
            target=TrlLevel(g["target"]),
            estimated=TrlLevel(g["estimated"]),
            gap=g["gap"],
            category=GapCategory[g["category"].upper()],
        )
        for g in data["gaps"]
    )
    demo_gaps = tuple(
        DemoGap(
            demo_id=g["demo_id"],
            target=TrlLevel(g["target"]),
            baseline=TrlLevel(g["baseline"]),
            gap=g["gap"],
            category=GapCategory[g["category"].upper()],
        )
        for g in data["demo_gaps"]
    )
    adjusted = AdjustedTrlMap(
        entries={
            wp_id: AdjustedTrl(
                own_estimate=TrlLevel(e["own_estimate"]),
                adjusted=TrlLevel(e["adjusted"]),
                quality_cap=TrlLevel(e["quality_cap"]) if e["quality_cap"] is not None else None,
                limiting_upstream=e["limiting_upstream"],
            )
            for wp_id, e in data["adjusted"]["entries"].items()
        },
        advisories=tuple(data["adjusted"]["advisories"]),
    )
    structure = StructureReport(
        islands=tuple(data["structure"]["islands"]),
        bottlenecks=tuple(
            Bottleneck(wp_id=b["wp_id"], blocked_downstream_count=b["blocked_downstream_count"])
            for b in data["structure"]["bottlenecks"]
        ),
        cycles=tuple(tuple(c) for c in data["structure"]["cycles"]),
    )
    compliance = tuple(
        ComplianceReport(
            demo_id=c["demo_id"],
            gate_trl=TrlLevel(c["gate_trl"]) if c["gate_trl"] is not None else None,
            rows=tuple(
                ComplianceRow(
                    wp_id=r["wp_id"],
                    use_case_id=r["use_case_id"],
                    required=ReadinessGrade[r["required"]],
                    actual=ReadinessGrade[r["actual"]] if r["actual"] is not None else None,
                    compliant=r["compliant"],
                    availability_failure=r["availability_failure"],
                )
                for r in c["rows"]
            ),
            corrective_actions=tuple(c["corrective_actions"]),
            affects_dependencies=c["affects_dependencies"],
        )
        for c in data["compliance"]
    )
    assessments = tuple(
        DemonstratorAssessment(
            demo_id=a["demo_id"],
            achievable_trl=TrlLevel(a["achievable_trl"]) if a["achievable_trl"] is not None else None,
            target_trl=TrlLevel(a["target_trl"]) if a["target_trl"] is not None else None,
            shortfall=a["shortfall"],
            use_case_type=UseCaseType(a["use_case_type"]),
            recommended_level=DemonstrationLevel.from_token(a["recommended_level"]),
            target_level=(
                DemonstrationLevel.from_token(a["target_level"])
                if a["target_level"] is not None
                else None
            ),
            risk=RiskLevel(a["risk"]),
            constraints=tuple(a["constraints"]),
            mitigations=tuple(
                Mitigation(
                    kind=MitigationKind(m["kind"]),
                    text=m["text"],
                    wp_ids=tuple(m["wp_ids"]),
                    use_case_id=m["use_case_id"],
                    unlocks=(
                        DemonstrationLevel.from_token(m["unlocks"])
                        if m["unlocks"] is not None
                        else None
                    ),
                )
                for m in a["mitigations"]
            ),
        )
        for a in data["assessments"]
    )
    specs = tuple(
        RequirementsSpec(
            demo_id=s["demo_id"],
            level=DemonstrationLevel.from_token(s["level"]),
            requirements=tuple(
                Requirement(
                    id=r["id"],
                    kind=RequirementKind(r["kind"]),
                    subject=r["subject"],
                    statement=r["statement"],
                    source=RequirementSource(r["source"]),
                )
                for r in s["requirements"]
            ),
            improvement_plan=tuple(
                ImprovementAction(
                    action=p["action"],
                    wp_ids=tuple(p["wp_ids"]),
                    use_case_id=p["use_case_id"],
                    unlocks=(
                        DemonstrationLevel.from_token(p["unlocks"])
                        if p["unlocks"] is not None
                        else None
                    ),
                )
                for p in s["improvement_plan"]
            ),
        )
        for s in data["specs"]
    )
    feedback = tuple(
        FeedbackEvent(
            from_block=f["from_block"],
            to_block=f["to_block"],
            reason=f["reason"],
            iteration=f["iteration"],
        )
        for f in data["feedback"]
    )
    raw_config = data["config"]
    config = EngineConfig(
        gap_thresholds=GapThresholds(
            minor=raw_config["gap_thresholds"]["minor"],
            major=raw_config["gap_thresholds"]["major"],
        ),
        grade_cap_table={
            ReadinessGrade[k]: TrlLevel(v) for k, v in raw_config["grade_cap_table"].items()
        },
        level_trl_bands={
            DemonstrationLevel.from_token(k): TrlLevel(v)
            for k, v in raw_config["level_trl_bands"].items()
        },
        max_feedback_iterations=raw_config["max_feedback_iterations"],
        strict_schema=raw_config["strict_schema"],
    )
    return AnalysisReport(
        consolidated=consolidated,
        diagnostics=diagnostics,
        gaps=gaps,
        demo_gaps=demo_gaps,
        adjusted=adjusted,
        structure=structure,
        compliance=compliance,
        assessments=assessments,
        specs=specs,
        feedback=feedback,
        config_used=config,
    )


def render_machine(report: AnalysisReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def parse_machine(text: str) -> AnalysisReport:
    return report_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# text rendering

def render_text(report: AnalysisReport) -> str:
    out: list[str] = []
    model = report.consolidated.model
    out.append(f"Project: {model.name}")
    out.append(
        f"Work packages: {len(model.work_packages)} "
        f"({len(model.analyzed_wps())} analyzed) | "
        f"use-cases: {len(model.use_cases)} | "
        f"demonstrators: {len(model.demonstrators)}"
    )

    out.append("")
    out.append("[1] Input consolidation")
    if report.consolidated.defaults_applied:
        out.append("  defaults applied:")
        for default in report.consolidated.defaults_applied:
            out.append(f"    - {default.path} = {default.value} ({default.provenance})")
    if report.consolidated.flags:
        out.append("  flags:")
        for flag in report.consolidated.flags:
            out.append(f"    - {flag.subject}: {flag.issue.value} ({flag.note})")
    if not report.consolidated.defaults_applied and not report.consolidated.flags:
        out.append("  complete input; nothing to flag")

    out.append("")
    out.append("[2] TRL gap analysis")
    if report.gaps:
        for gap in report.gaps:
            out.append(
                f"  {gap.wp_id}: target {int(gap.target)}, estimated "
                f"{int(gap.estimated)}, gap {gap.gap:+d} -> {gap.category.token}"
            )
    else:
        out.append("  no WP rows (TRL data incomplete)")
    for gap in report.demo_gaps:
        out.append(
            f"  demonstrator {gap.demo_id}: target {int(gap.target)}, weakest covered "
            f"estimate {int(gap.baseline)}, gap {gap.gap:+d} -> {gap.category.token}"
        )

    out.append("")
    out.append("[3] Dependency-adjusted TRL")
    if report.adjusted.entries:
        for wp_id, entry in report.adjusted.entries.items():
            cap = str(int(entry.quality_cap)) if entry.quality_cap is not None else "-"
            limiter = entry.limiting_upstream or "-"
            out.append(
                f"  {wp_id}: estimate {int(entry.own_estimate)}, cap {cap}, "
                f"adjusted {int(entry.adjusted)}, limited by {limiter}"
            )
    else:
        out.append("  no adjusted map (no estimates available)")
    out.append(f"  islands: {', '.join(report.structure.islands) or 'none'}")
    bottleneck_text = (
        ", ".join(
            f"{b.wp_id} (blocks {b.blocked_downstream_count})"
            for b in report.structure.bottlenecks
        )
        or "none"
    )
    out.append(f"  bottlenecks: {bottleneck_text}")
    cycle_text = (
        "; ".join(" -> ".join(cycle) for cycle in report.structure.cycles) or "none"
    )
    out.append(f"  cycles: {cycle_text}")

    out.append("")
    out.append("[4] Demonstrator TRL feasibility")
    for assessment in report.assessments:
        achievable = (
            str(int(assessment.achievable_trl))
            if assessment.achievable_trl is not None
            else "undetermined"
        )
        target = str(int(assessment.target_trl)) if assessment.target_trl is not None else "-"
        out.append(
            f"  {assessment.demo_id}: achievable TRL {achievable}, target {target}, "
            f"shortfall {assessment.shortfall}"
        )
        for mitigation in assessment.mitigations:
            unlocks = f" [unlocks {mitigation.unlocks.token}]" if mitigation.unlocks else ""
            out.append(f"    mitigation: {mitigation.text}{unlocks}")

    out.append("")
    out.append("[5] Artifact quality gate")
    for compliance in report.compliance:
        gate = str(int(compliance.gate_trl)) if compliance.gate_trl is not None else "-"
        out.append(f"  {compliance.demo_id} (gate TRL {gate}):")
        for row in compliance.rows:
            actual = row.actual.name if row.actual is not None else "-"
            status = "ok" if row.compliant else (
                "availability failure" if row.availability_failure else "below gate"
            )
            out.append(
                f"    {row.wp_id} / {row.use_case_id}: required {row.required.name}, "
                f"actual {actual} -> {status}"
            )
        if not compliance.rows:
            out.append("    no rows (no gate TRL or no covered WPs)")
        if compliance.affects_dependencies:
            out.append("    quality gaps affect dependencies (see block 3 caps)")

    out.append("")
    out.append("[6] Demonstration level mapping")
    for assessment in report.assessments:
        target_level = assessment.target_level.token if assessment.target_level else "-"
        out.append(
            f"  {assessment.demo_id}: use-case type {assessment.use_case_type.value}, "
            f"recommended {assessment.recommended_level.token} "
            f"({assessment.recommended_level.label}), target level {target_level}, "
            f"risk {assessment.risk.value}"
        )
        for constraint in assessment.constraints:
            out.append(f"    constraint: {constraint}")

    out.append("")
    out.append("[7] Requirements elaboration")
    for spec in report.specs:
        by_kind: dict[str, int] = {}
        for requirement in spec.requirements:
            by_kind[requirement.kind.value] = by_kind.get(requirement.kind.value, 0) + 1
        counts = ", ".join(f"{v} {k}" for k, v in sorted(by_kind.items()))
        out.append(f"  {spec.demo_id} at {spec.level.token}: {counts or 'no requirements'}")
        for requirement in spec.requirements:
            out.append(f"    [{requirement.id}] {requirement.statement}")
        if spec.improvement_plan:
            out.append("    improvement plan:")
            for action in spec.improvement_plan:
                unlocks = f" -> unlocks {action.unlocks.token}" if action.unlocks else ""
                out.append(f"      - {action.action}{unlocks}")

    out.append("")
    out.append("Feedback events")
    if report.feedback:
        for event in report.feedback:
            out.append(
                f"  iteration {event.iteration}: block {event.from_block} -> "
                f"block {event.to_block}: {event.reason}"
            )
    else:
        out.append("  none")
    return "\n".join(out) + "\n"
