"""Artifact quality gate: readiness thresholds and compliance checks (block 5)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .depgraph import DEFAULT_GRADE_CAPS, WpGraph, build_graph
from .model import ConsolidatedInput, DemonstratorTarget, ReadinessGrade, TrlLevel


@dataclass(frozen=True)
class QualityThreshold:
    trl: TrlLevel
    required_grade: ReadinessGrade


def thresholds_for(
    trl: TrlLevel | int,
    grade_caps: Mapping[ReadinessGrade, TrlLevel] = DEFAULT_GRADE_CAPS,
) -> QualityThreshold:
    """Minimal readiness grade whose cap reaches ``trl``; TRL 8+ needs G4."""
    trl = TrlLevel(trl)
    for grade in sorted(grade_caps):
        if grade_caps[grade] >= trl:
            return QualityThreshold(trl=trl, required_grade=grade)
    return QualityThreshold(trl=trl, required_grade=max(grade_caps))


@dataclass(frozen=True)
class ComplianceRow:
    wp_id: str
    use_case_id: str
    required: ReadinessGrade
    actual: ReadinessGrade | None
    compliant: bool
    availability_failure: bool


@dataclass(frozen=True)
class ComplianceReport:
    demo_id: str
    gate_trl: TrlLevel | None
    rows: tuple[ComplianceRow, ...]
    corrective_actions: tuple[str, ...]
    affects_dependencies: bool

    def availability_failures(self) -> tuple[ComplianceRow, ...]:
        return tuple(r for r in self.rows if r.availability_failure)

    def non_compliant_wps(self) -> tuple[str, ...]:
        return tuple(sorted({r.wp_id for r in self.rows if not r.compliant}))


def assess_compliance(
    consolidated: ConsolidatedInput,
    demo: DemonstratorTarget,
    gate_trl: TrlLevel | None,
    graph: WpGraph | None = None,
    grade_caps: Mapping[ReadinessGrade, TrlLevel] = DEFAULT_GRADE_CAPS,
) -> ComplianceReport:
    """Compare artifact readiness against what the gate TRL demands.

    A covered WP sharing no use-case with the demonstrator is an
    availability failure (one row per referenced use-case, actual absent):
    no artifacts reach that WP at all, which is worse than a grade gap.
    Grades are declared by the artifact users, never measured here.
    """
    model = consolidated.model
    if graph is None:
        graph = build_graph(consolidated)
    if gate_trl is None:
        return ComplianceReport(
            demo_id=demo.id,
            gate_trl=None,
            rows=(),
            corrective_actions=(
                "no target or achievable TRL known; quality gate cannot run",
            ),
            affects_dependencies=False,
        )

    required = thresholds_for(gate_trl, grade_caps).required_grade
    grades = {uc.id: uc.readiness for uc in model.use_cases}

    rows: list[ComplianceRow] = []
    for wp_id in sorted(demo.covered_wp_ids):
        wp = model.wp(wp_id)
        shared = sorted(set(wp.use_case_refs) & set(demo.use_case_refs))
        if shared:
            for uc_id in shared:
                actual = grades.get(uc_id)
                rows.append(
                    ComplianceRow(
                        wp_id=wp_id,
                        use_case_id=uc_id,
                        required=required,
                        actual=actual,
                        compliant=actual is not None and actual >= required,
                        availability_failure=False,
                    )
                )
        else:
            for uc_id in sorted(demo.use_case_refs):
                rows.append(
                    ComplianceRow(
                        wp_id=wp_id,
                        use_case_id=uc_id,
                        required=required,
                        actual=None,
                        compliant=False,
                        availability_failure=True,
                    )
                )

    actions: list[str] = []
    for row in rows:
        if row.compliant:
            continue
        if row.availability_failure:
            actions.append(
                f"associate use-case {row.use_case_id} with {row.wp_id}: "
                f"no referenced use-case supplies artifacts there"
            )
        elif row.actual is None:
            actions.append(
                f"assess readiness of use-case {row.use_case_id} artifacts for "
                f"{row.wp_id} (grade {row.required.name} or better needed)"
            )
        else:
            actions.append(
                f"raise readiness of use-case {row.use_case_id} from "
                f"{row.actual.name} to at least {row.required.name} for {row.wp_id}"
            )

    non_compliant = {r.wp_id for r in rows if not r.compliant}
    outgoing = {e.source for e in graph.direct_edges()}
    affects = bool(non_compliant & outgoing)

    return ComplianceReport(
        demo_id=demo.id,
        gate_trl=gate_trl,
        rows=tuple(rows),
        corrective_actions=tuple(actions),
        affects_dependencies=affects,
    )
