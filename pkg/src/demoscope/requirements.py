"""Requirements elaboration for the recommended demonstration level (block 7).

Statements are template-generated with model names slotted in; projects are
expected to edit the wording downstream, so the structure is the contract,
not the prose.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .depgraph import WpGraph
from .feasibility import (
    DemonstrationLevel,
    DemonstratorAssessment,
    GRAND_LEVELS,
    Mitigation,
    MitigationKind,
    OPTIMISED_LEVELS,
)
from .model import ProjectModel

DEFAULT_QUALITY_ATTRIBUTES = (
    "performance",
    "latency",
    "throughput",
    "explainability",
    "resource efficiency",
)


class RequirementKind(Enum):
    FUNCTIONAL = "functional"
    EXTRA_FUNCTIONAL = "extra_functional"
    INTEGRATION = "integration"
    VALIDATION = "validation"


class RequirementSource(Enum):
    LEVEL_TEMPLATE = "level_template"
    COMPLIANCE_GAP = "compliance_gap"
    DEPENDENCY_EDGE = "dependency_edge"


@dataclass(frozen=True)
class Requirement:
    id: str
    kind: RequirementKind
    subject: str
    statement: str
    source: RequirementSource


@dataclass(frozen=True)
class ImprovementAction:
    action: str
    wp_ids: tuple[str, ...] = ()
    use_case_id: str | None = None
    unlocks: DemonstrationLevel | None = None


@dataclass(frozen=True)
class RequirementsSpec:
    demo_id: str
    level: DemonstrationLevel
    requirements: tuple[Requirement, ...]
    improvement_plan: tuple[ImprovementAction, ...]


def elaborate(
    assessment: DemonstratorAssessment,
    model: ProjectModel,
    graph: WpGraph,
    quality_attributes: tuple[str, ...] = DEFAULT_QUALITY_ATTRIBUTES,
) -> RequirementsSpec:
    """Expand the assessment into a requirements skeleton plus improvement plan.

    Every covered WP gets a functional requirement; levels with integration
    get one integration requirement per direct edge inside the coverage,
    each demanding well-defined input/output data structures; optimised
    levels enumerate the extra-functional attributes; every referenced
    use-case gets a validation requirement.
    """
    demo = model.demonstrator(assessment.demo_id)
    level = assessment.recommended_level
    requirements: list[Requirement] = []

    for wp_id in sorted(demo.covered_wp_ids):
        wp = model.wp(wp_id)
        requirements.append(
            Requirement(
                id=f"{demo.id}-FUN-{wp_id}",
                kind=RequirementKind.FUNCTIONAL,
                subject=wp_id,
                statement=(
                    f"{wp_id} ({wp.name}) shall deliver its functional capabilities "
                    f"as part of demonstrator '{demo.name}'."
                ),
                source=RequirementSource.LEVEL_TEMPLATE,
            )
        )

    if level >= DemonstrationLevel.PROOF_OF_INTEGRATION:
        covered = set(demo.covered_wp_ids)
        pairs = sorted(
            {
                (e.source, e.target)
                for e in graph.direct_edges()
                if e.source in covered and e.target in covered
            }
        )
        for source, target in pairs:
            requirements.append(
                Requirement(
                    id=f"{demo.id}-INT-{source}-{target}",
                    kind=RequirementKind.INTEGRATION,
                    subject=f"{source}->{target}",
                    statement=(
                        f"The interface from {source} to {target} shall have its "
                        f"input/output data structures and formatting well-defined, "
                        f"documented, and agreed before integration."
                    ),
                    source=RequirementSource.DEPENDENCY_EDGE,
                )
            )

    if level in OPTIMISED_LEVELS:
        scope = "all covered work packages" if level in GRAND_LEVELS else "the integrated subset"
        for attribute in quality_attributes:
            token = attribute.replace(" ", "-")
            requirements.append(
                Requirement(
                    id=f"{demo.id}-XF-{token}",
                    kind=RequirementKind.EXTRA_FUNCTIONAL,
                    subject=demo.id,
                    statement=(
                        f"Demonstrator '{demo.name}' shall meet agreed {attribute} "
                        f"targets across {scope}, measured against supplied baselines."
                    ),
                    source=RequirementSource.LEVEL_TEMPLATE,
                )
            )

    for uc_id in sorted(demo.use_case_refs):
        uc = model.use_case(uc_id)
        requirements.append(
            Requirement(
                id=f"{demo.id}-VAL-{uc_id}",
                kind=RequirementKind.VALIDATION,
                subject=uc_id,
                statement=(
                    f"Demonstrator '{demo.name}' shall be validated against the "
                    f"{uc_id} use-case supplied by {uc.provider}."
                ),
                source=RequirementSource.LEVEL_TEMPLATE,
            )
        )

    for mitigation in assessment.mitigations:
        if mitigation.kind is MitigationKind.RAISE_GRADE and mitigation.use_case_id:
            requirements.append(
                Requirement(
                    id=f"{demo.id}-QUAL-{mitigation.use_case_id}",
                    kind=RequirementKind.VALIDATION,
                    subject=mitigation.use_case_id,
                    statement=(
                        f"Artifacts supplied for use-case {mitigation.use_case_id} "
                        f"shall reach the readiness the gate demands, including "
                        f"baselines or benchmarking results where extra-functional "
                        f"qualities are demonstrated."
                    ),
                    source=RequirementSource.COMPLIANCE_GAP,
                )
            )

    plan = [_plan_entry(m) for m in assessment.mitigations]
    needs_plan = (
        assessment.target_level is not None
        and assessment.recommended_level < assessment.target_level
    ) or bool(assessment.constraints)
    if needs_plan and not plan:
        plan.append(
            ImprovementAction(
                action=(
                    "revise the WP planning (estimated TRLs, dependencies, or "
                    "demonstrator scope) to address the recorded constraints"
                ),
                wp_ids=tuple(sorted(demo.covered_wp_ids)),
                unlocks=assessment.target_level,
            )
        )

    return RequirementsSpec(
        demo_id=demo.id,
        level=level,
        requirements=tuple(requirements),
        improvement_plan=tuple(plan),
    )


def _plan_entry(mitigation: Mitigation) -> ImprovementAction:
    return ImprovementAction(
        action=mitigation.text,
        wp_ids=mitigation.wp_ids,
        use_case_id=mitigation.use_case_id,
        unlocks=mitigation.unlocks,
    )
