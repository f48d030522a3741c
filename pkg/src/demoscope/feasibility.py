"""Demonstrator feasibility: achievable TRL, use-case typing, level matrix,
and the demonstration-level recommendation (blocks 4 and 6)."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum, IntEnum
from typing import Mapping

from .depgraph import AdjustedTrlMap, StructureReport, WpGraph, weakly_connected
from .model import (
    DemonstratorTarget,
    ProjectModel,
    QualityCoverage,
    ReadinessGrade,
    TrlLevel,
)
from .quality import ComplianceReport

#: Highest TRL demonstrable without any integration between components
#: (the last stand-alone rung on the adapted scale).
STANDALONE_TRL_CAP = TrlLevel(4)

#: Grade at which artifacts come with baselines/benchmarking results, the
#: precondition for demonstrating extra-functional qualities.
EXTRA_FUNCTIONAL_GRADE_FLOOR = ReadinessGrade.G3


class DemonstrationLevel(IntEnum):
    PROOF_OF_CONCEPT = 1
    PROOF_OF_INTEGRATION = 2
    OPTIMISED_POI = 3
    GRAND_POI = 4
    OPTIMISED_GRAND_POI = 5

    @property
    def token(self) -> str:
        return f"L{self.value}"

    @property
    def label(self) -> str:
        return _LEVEL_LABELS[self]

    @classmethod
    def from_token(cls, token: str) -> "DemonstrationLevel":
        if len(token) == 2 and token[0] == "L" and token[1].isdigit():
            return cls(int(token[1]))
        raise ValueError(f"invalid demonstration level token {token!r}")


_LEVEL_LABELS = {
    DemonstrationLevel.PROOF_OF_CONCEPT: "proof of concept",
    DemonstrationLevel.PROOF_OF_INTEGRATION: "proof of integration",
    DemonstrationLevel.OPTIMISED_POI: "optimised proof of integration",
    DemonstrationLevel.GRAND_POI: "grand proof of integration",
    DemonstrationLevel.OPTIMISED_GRAND_POI: "optimised grand proof of integration",
}

#: Levels that add extra-functional qualities on top of functional ones.
OPTIMISED_LEVELS = frozenset(
    {DemonstrationLevel.OPTIMISED_POI, DemonstrationLevel.OPTIMISED_GRAND_POI}
)
#: Levels demanding project-wide coverage (all non-island analyzed WPs).
GRAND_LEVELS = frozenset(
    {DemonstrationLevel.GRAND_POI, DemonstrationLevel.OPTIMISED_GRAND_POI}
)

#: TRL each level corresponds to: subset integration implies TRL 5, full
#: coverage with industrial artifacts points at TRL 6, and a high-fidelity
#: operational setting at TRL 7.
DEFAULT_LEVEL_BANDS: dict[DemonstrationLevel, TrlLevel] = {
    DemonstrationLevel.PROOF_OF_CONCEPT: TrlLevel(3),
    DemonstrationLevel.PROOF_OF_INTEGRATION: TrlLevel(5),
    DemonstrationLevel.OPTIMISED_POI: TrlLevel(5),
    DemonstrationLevel.GRAND_POI: TrlLevel(6),
    DemonstrationLevel.OPTIMISED_GRAND_POI: TrlLevel(7),
}


class UseCaseType(Enum):
    UNIFIED = "unified"
    COORDINATED_MULTI = "coordinated_multi"
    DISPARATE = "disparate"


class RiskLevel(Enum):
    NORMAL = "normal"
    MODERATE = "moderate"
    HIGH = "high"
    IMPRACTICAL = "impractical"


# Risk of attempting a level, by use-case type. Exactly the published matrix
# (golden-tested); impractical cells are exactly the infeasible ones.
_RISK_MATRIX: dict[DemonstrationLevel, dict[UseCaseType, RiskLevel]] = {
    DemonstrationLevel.PROOF_OF_CONCEPT: {
        UseCaseType.UNIFIED: RiskLevel.NORMAL,
        UseCaseType.COORDINATED_MULTI: RiskLevel.NORMAL,
        UseCaseType.DISPARATE: RiskLevel.NORMAL,
    },
    DemonstrationLevel.PROOF_OF_INTEGRATION: {
        UseCaseType.UNIFIED: RiskLevel.MODERATE,
        UseCaseType.COORDINATED_MULTI: RiskLevel.MODERATE,
        UseCaseType.DISPARATE: RiskLevel.IMPRACTICAL,
    },
    DemonstrationLevel.OPTIMISED_POI: {
        UseCaseType.UNIFIED: RiskLevel.HIGH,
        UseCaseType.COORDINATED_MULTI: RiskLevel.HIGH,
        UseCaseType.DISPARATE: RiskLevel.IMPRACTICAL,
    },
    DemonstrationLevel.GRAND_POI: {
        UseCaseType.UNIFIED: RiskLevel.MODERATE,
        UseCaseType.COORDINATED_MULTI: RiskLevel.IMPRACTICAL,
        UseCaseType.DISPARATE: RiskLevel.IMPRACTICAL,
    },
    DemonstrationLevel.OPTIMISED_GRAND_POI: {
        UseCaseType.UNIFIED: RiskLevel.HIGH,
        UseCaseType.COORDINATED_MULTI: RiskLevel.IMPRACTICAL,
        UseCaseType.DISPARATE: RiskLevel.IMPRACTICAL,
    },
}


def risk_of(level: DemonstrationLevel, use_case_type: UseCaseType) -> RiskLevel:
    return _RISK_MATRIX[level][use_case_type]


def feasible_levels(use_case_type: UseCaseType) -> frozenset[DemonstrationLevel]:
    """Levels not marked impractical for the given use-case type."""
    return frozenset(
        level
        for level in DemonstrationLevel
        if _RISK_MATRIX[level][use_case_type] is not RiskLevel.IMPRACTICAL
    )


class UnknownWp(Exception):
    def __init__(self, wp_ids: tuple[str, ...]):
        self.wp_ids = wp_ids
        super().__init__(f"covered WPs absent from adjusted TRL map: {', '.join(wp_ids)}")


class NoUseCase(Exception):
    def __init__(self, demo_id: str):
        self.demo_id = demo_id
        super().__init__(f"demonstrator {demo_id} references no use-cases")


def achievable_demo_trl(
    demo: DemonstratorTarget, adjusted: AdjustedTrlMap, graph: WpGraph
) -> TrlLevel:
    """Highest TRL the demonstrator can reach given its covered WPs.

    The weakest covered WP bounds the whole demonstrator; a covered set
    that is not weakly connected by direct edges cannot demonstrate any
    integration and is additionally capped at the stand-alone TRL.
    """
    missing = tuple(sorted(set(demo.covered_wp_ids) - set(adjusted.entries)))
    if missing:
        raise UnknownWp(missing)
    result = min(adjusted.entries[wp_id].adjusted for wp_id in demo.covered_wp_ids)
    if len(set(demo.covered_wp_ids)) >= 2 and not weakly_connected(graph, demo.covered_wp_ids):
        result = min(result, STANDALONE_TRL_CAP)
    return result


def classify_use_case_type(demo: DemonstratorTarget, model: ProjectModel) -> UseCaseType:
    """Classify by the demonstrator's declared use-case references.

    Unified: one referenced use-case reaches every covered WP. Coordinated:
    every covered WP is reached by some referenced use-case and all
    referenced use-cases share a technological framework. Anything else is
    disparate (component-level integration only).
    """
    if not demo.use_case_refs:
        raise NoUseCase(demo.id)
    covered = [model.wp(wp_id) for wp_id in demo.covered_wp_ids]
    refs = set(demo.use_case_refs)

    for uc_id in sorted(refs):
        if all(uc_id in wp.use_case_refs for wp in covered):
            return UseCaseType.UNIFIED

    every_wp_reached = all(refs & set(wp.use_case_refs) for wp in covered)
    groups = {model.use_case(uc_id).framework_group for uc_id in refs}
    shares_framework = len(groups) == 1 and None not in groups
    if every_wp_reached and shares_framework:
        return UseCaseType.COORDINATED_MULTI
    return UseCaseType.DISPARATE


def coordinated_subsets(
    demo: DemonstratorTarget, model: ProjectModel, graph: WpGraph
) -> tuple[tuple[str, str, str], ...]:
    """Direct-edge pairs inside the coverage that share an associated use-case.

    These are the subsets over which partial integration is demonstrable
    even when the declared use-case set reaches nowhere: each pair can
    adopt the commonly associated use-case. Returned as (source, target,
    use_case) triples, sorted.
    """
    covered = set(demo.covered_wp_ids)
    assoc = {wp.id: set(wp.use_case_refs) for wp in model.work_packages}
    pairs = []
    for edge in graph.direct_edges():
        if edge.source in covered and edge.target in covered:
            for uc_id in sorted(assoc[edge.source] & assoc[edge.target]):
                pairs.append((edge.source, edge.target, uc_id))
    return tuple(sorted(set(pairs)))


def effective_use_case_type(
    demo: DemonstratorTarget, model: ProjectModel, graph: WpGraph
) -> tuple[UseCaseType, UseCaseType]:
    """(declared, effective) type for recommendation purposes.

    A disparate declaration is upgraded to coordinated-multi when partial
    integrations remain demonstrable through commonly associated use-cases
    on directly dependent covered WPs; the recommendation then targets
    those subsets instead of giving up on integration entirely.
    """
    try:
        declared = classify_use_case_type(demo, model)
    except NoUseCase:
        declared = UseCaseType.DISPARATE
    effective = declared
    if declared is UseCaseType.DISPARATE and coordinated_subsets(demo, model, graph):
        effective = UseCaseType.COORDINATED_MULTI
    return declared, effective


def grand_coverage_universe(model: ProjectModel, structure: StructureReport) -> tuple[str, ...]:
    """The WPs a grand proof of integration must span: every TRL-carrying
    analyzed WP that is not an island."""
    islands = set(structure.islands)
    return tuple(sorted(wp.id for wp in model.trl_wps() if wp.id not in islands))


class MitigationKind(Enum):
    ADD_ASSOCIATION = "add_association"
    RAISE_GRADE = "raise_grade"
    EXTEND_COVERAGE = "extend_coverage"


@dataclass(frozen=True)
class Mitigation:
    kind: MitigationKind
    text: str
    wp_ids: tuple[str, ...] = ()
    use_case_id: str | None = None
    unlocks: DemonstrationLevel | None = None


@dataclass(frozen=True)
class DemonstratorAssessment:
    demo_id: str
    achievable_trl: TrlLevel | None
    target_trl: TrlLevel | None
    shortfall: int
    use_case_type: UseCaseType
    recommended_level: DemonstrationLevel
    target_level: DemonstrationLevel | None
    risk: RiskLevel
    constraints: tuple[str, ...] = ()
    mitigations: tuple[Mitigation, ...] = ()


def target_level_for(
    demo: DemonstratorTarget,
    universe: tuple[str, ...],
    bands: Mapping[DemonstrationLevel, TrlLevel] = DEFAULT_LEVEL_BANDS,
) -> DemonstrationLevel | None:
    """Demonstration level the declared target TRL and shape correspond to.

    Highest level whose TRL band the target reaches and whose coverage and
    quality shape the demonstrator declares; ambiguity resolves downward.
    """
    if demo.target_trl is None:
        return None
    for level in sorted(DemonstrationLevel, reverse=True):
        if not _coverage_compatible(level, demo, universe):
            continue
        if level in OPTIMISED_LEVELS and demo.qualities is not QualityCoverage.FUNCTIONAL_AND_EXTRA:
            continue
        if bands[level] > demo.target_trl:
            continue
        return level
    return DemonstrationLevel.PROOF_OF_CONCEPT


def _coverage_compatible(
    level: DemonstrationLevel, demo: DemonstratorTarget, universe: tuple[str, ...]
) -> bool:
    covered = set(demo.covered_wp_ids)
    if level in GRAND_LEVELS:
        return bool(universe) and covered >= set(universe)
    if level is DemonstrationLevel.PROOF_OF_CONCEPT:
        return len(covered) >= 1
    return len(covered) >= 2


def shortfall_analysis(
    demo: DemonstratorTarget,
    achievable: TrlLevel | None,
    compliance: ComplianceReport,
    model: ProjectModel,
    graph: WpGraph,
) -> tuple[int, tuple[Mitigation, ...]]:
    """Shortfall against the target plus mitigations for each limiting factor."""
    if demo.target_trl is not None and achievable is not None:
        shortfall = max(0, int(demo.target_trl) - int(achievable))
    else:
        shortfall = 0

    mitigations: list[Mitigation] = []

    # Missing artifact availability: group the unreachable WPs per use-case.
    unavailable: dict[str, list[str]] = {}
    for row in compliance.availability_failures():
        unavailable.setdefault(row.use_case_id, []).append(row.wp_id)
    for uc_id in sorted(unavailable):
        wps = tuple(sorted(set(unavailable[uc_id])))
        mitigations.append(
            Mitigation(
                kind=MitigationKind.ADD_ASSOCIATION,
                text=f"associate use-case {uc_id} with {', '.join(wps)}",
                wp_ids=wps,
                use_case_id=uc_id,
            )
        )

    # Insufficient or undeclared grades on use-cases that do reach their WPs.
    weak: dict[str, list[str]] = {}
    required_by_uc: dict[str, ReadinessGrade] = {}
    for row in compliance.rows:
        if row.compliant or row.availability_failure:
            continue
        weak.setdefault(row.use_case_id, []).append(row.wp_id)
        required_by_uc[row.use_case_id] = row.required
    for uc_id in sorted(weak):
        wps = tuple(sorted(set(weak[uc_id])))
        required = required_by_uc[uc_id]
        actual = model.use_case(uc_id).readiness
        if actual is None:
            text = (
                f"assess and declare readiness of use-case {uc_id} artifacts "
                f"(grade {required.name} or better needed for {', '.join(wps)})"
            )
        else:
            text = (
                f"raise readiness of use-case {uc_id} from {actual.name} to at "
                f"least {required.name} (needed for {', '.join(wps)})"
            )
        mitigations.append(
            Mitigation(
                kind=MitigationKind.RAISE_GRADE,
                text=text,
                wp_ids=wps,
                use_case_id=uc_id,
            )
        )

    # Disconnected coverage: suggest the WPs that would connect it.
    if len(set(demo.covered_wp_ids)) >= 2 and not weakly_connected(graph, demo.covered_wp_ids):
        connectors = _connecting_wps(graph, demo.covered_wp_ids)
        if connectors:
            text = f"include connecting work packages {', '.join(connectors)} in the coverage"
        else:
            text = "covered WPs share no dependency path; add dependencies or split the demonstrator"
        mitigations.append(
            Mitigation(
                kind=MitigationKind.EXTEND_COVERAGE,
                text=text,
                wp_ids=connectors,
            )
        )

    return shortfall, tuple(mitigations)


def _connecting_wps(graph: WpGraph, covered) -> tuple[str, ...]:
    """Non-covered WPs on shortest undirected paths between coverage components."""
    covered = set(covered)
    neighbours: dict[str, set[str]] = {n: set() for n in graph.nodes}
    for edge in graph.direct_edges():
        neighbours[edge.source].add(edge.target)
        neighbours[edge.target].add(edge.source)

    inside = sorted(covered & set(graph.nodes))
    if not inside:
        return ()
    # BFS from one covered component towards any other covered node.
    component = {inside[0]}
    frontier = [inside[0]]
    while frontier:
        node = frontier.pop()
        for nxt in neighbours[node]:
            if nxt in covered and nxt not in component:
                component.add(nxt)
                frontier.append(nxt)
    others = covered - component
    if not others:
        return ()
    parents: dict[str, str | None] = {n: None for n in component}
    queue = sorted(component)
    while queue:
        node = queue.pop(0)
        for nxt in sorted(neighbours[node]):
            if nxt in parents:
                continue
            parents[nxt] = node
            if nxt in others:
                path = []
                walk: str | None = parents[nxt]
                while walk is not None and walk not in component:
                    path.append(walk)
                    walk = parents[walk]
                return tuple(sorted(p for p in path if p not in covered))
            queue.append(nxt)
    return ()


def recommend_level(
    demo: DemonstratorTarget,
    model: ProjectModel,
    graph: WpGraph,
    structure: StructureReport,
    compliance: ComplianceReport,
    achievable: TrlLevel | None,
    bands: Mapping[DemonstrationLevel, TrlLevel] = DEFAULT_LEVEL_BANDS,
) -> DemonstratorAssessment:
    """Select the highest demonstration level attainable without major
    additional work, with the binding conditions spelled out.

    The level matrix and the declared coverage/quality shape gate first;
    the TRL band is checked against the demonstrator's target (the level is
    the shape of the demonstration the project should plan for, while the
    achievable TRL feeds the shortfall analysis). Optimised levels also
    need baseline-grade artifacts on the integrated WPs.
    """
    declared_type, effective_type = effective_use_case_type(demo, model, graph)
    universe = grand_coverage_universe(model, structure)
    target_level = target_level_for(demo, universe, bands)
    allowed = feasible_levels(effective_type)
    subsets = coordinated_subsets(demo, model, graph)
    availability = compliance.availability_failures()

    constraints: list[str] = []
    if not demo.use_case_refs:
        constraints.append("no use-cases referenced; classified as disparate")
    if declared_type is not effective_type:
        constraints.append(
            "declared use-case references support no project-wide integration; "
            "coordinated subset integrations remain possible through commonly "
            "associated use-cases"
        )

    recommended = DemonstrationLevel.PROOF_OF_CONCEPT
    l3_grade_blocked = False
    l5_grade_blocked = False
    for level in sorted(DemonstrationLevel, reverse=True):
        if level not in allowed:
            continue
        if not _coverage_compatible(level, demo, universe):
            continue
        if level in OPTIMISED_LEVELS and demo.qualities is not QualityCoverage.FUNCTIONAL_AND_EXTRA:
            continue
        if demo.target_trl is not None and bands[level] > demo.target_trl:
            continue
        if level in GRAND_LEVELS and availability:
            continue
        if level not in GRAND_LEVELS and level is not DemonstrationLevel.PROOF_OF_CONCEPT:
            if not subsets:
                continue
        if level in OPTIMISED_LEVELS:
            if not _grades_support_optimised(level, model, compliance, subsets):
                if level is DemonstrationLevel.OPTIMISED_POI:
                    l3_grade_blocked = True
                else:
                    l5_grade_blocked = True
                continue
        recommended = level
        break

    if availability:
        wps = ", ".join(sorted({row.wp_id for row in availability}))
        ucs = ", ".join(sorted({row.use_case_id for row in availability}))
        constraints.append(
            f"grand integration blocked: use-case {ucs} not associated with {wps}"
        )
    weak_rows = [r for r in compliance.rows if not r.compliant and not r.availability_failure]
    if weak_rows:
        ucs = ", ".join(sorted({row.use_case_id for row in weak_rows}))
        constraints.append(
            f"artifact readiness unassessed or below the quality gate for "
            f"use-case(s) {ucs}"
        )
    if target_level in GRAND_LEVELS and declared_type is not UseCaseType.UNIFIED:
        refs = ", ".join(sorted(demo.use_case_refs)) or "none"
        covered = ", ".join(sorted(demo.covered_wp_ids))
        constraints.append(
            f"no single referenced use-case ({refs}) is associated with every "
            f"covered WP ({covered})"
        )
    if target_level is not None and risk_of(target_level, effective_type) is RiskLevel.IMPRACTICAL:
        constraints.append(
            f"target level {target_level.token} ({target_level.label}) is "
            f"impractical for {effective_type.value} use-cases"
        )
    if l3_grade_blocked and recommended < DemonstrationLevel.OPTIMISED_POI:
        constraints.append(
            f"level L3 ({DemonstrationLevel.OPTIMISED_POI.label}) attainable only "
            f"with artifact readiness {EXTRA_FUNCTIONAL_GRADE_FLOOR.name} or better "
            f"(baselines/benchmarking results) on an integrated subset"
        )
    if l5_grade_blocked and recommended < DemonstrationLevel.OPTIMISED_GRAND_POI:
        constraints.append(
            f"level L5 ({DemonstrationLevel.OPTIMISED_GRAND_POI.label}) attainable "
            f"only with artifact readiness {EXTRA_FUNCTIONAL_GRADE_FLOOR.name} or "
            f"better on every covered WP"
        )
    if demo.target_trl is not None and achievable is not None and achievable < demo.target_trl:
        constraints.append(
            f"target TRL {int(demo.target_trl)} out of reach: achievable TRL is {int(achievable)}"
        )
    if achievable is None:
        constraints.append("achievable TRL undetermined: per-WP TRL data incomplete")
    if len(set(demo.covered_wp_ids)) >= 2 and not weakly_connected(graph, demo.covered_wp_ids):
        constraints.append(
            f"covered WPs are not connected by direct dependencies; "
            f"stand-alone cap TRL {int(STANDALONE_TRL_CAP)} applies"
        )

    shortfall, mitigations = shortfall_analysis(demo, achievable, compliance, model, graph)
    mitigations = _annotate_unlocks(
        mitigations, demo, effective_type, universe, bands, recommended
    )

    return DemonstratorAssessment(
        demo_id=demo.id,
        achievable_trl=achievable,
        target_trl=demo.target_trl,
        shortfall=shortfall,
        use_case_type=effective_type,
        recommended_level=recommended,
        target_level=target_level,
        risk=risk_of(recommended, effective_type),
        constraints=tuple(constraints),
        mitigations=mitigations,
    )


def _grades_support_optimised(
    level: DemonstrationLevel,
    model: ProjectModel,
    compliance: ComplianceReport,
    subsets: tuple[tuple[str, str, str], ...],
) -> bool:
    if level is DemonstrationLevel.OPTIMISED_GRAND_POI:
        # Grand optimised proof: baselines needed everywhere.
        return bool(compliance.rows) and all(
            row.actual is not None and row.actual >= EXTRA_FUNCTIONAL_GRADE_FLOOR
            for row in compliance.rows
        )
    # Subset optimised proof: one integrable pair with baseline-grade
    # artifacts on the shared use-case suffices.
    for _, _, uc_id in subsets:
        grade = model.use_case(uc_id).readiness
        if grade is not None and grade >= EXTRA_FUNCTIONAL_GRADE_FLOOR:
            return True
    return False


def _annotate_unlocks(
    mitigations: tuple[Mitigation, ...],
    demo: DemonstratorTarget,
    effective_type: UseCaseType,
    universe: tuple[str, ...],
    bands: Mapping[DemonstrationLevel, TrlLevel],
    recommended: DemonstrationLevel,
) -> tuple[Mitigation, ...]:
    grand_candidate = None
    for level in (DemonstrationLevel.OPTIMISED_GRAND_POI, DemonstrationLevel.GRAND_POI):
        if not _coverage_compatible(level, demo, universe):
            continue
        if level in OPTIMISED_LEVELS and demo.qualities is not QualityCoverage.FUNCTIONAL_AND_EXTRA:
            continue
        if demo.target_trl is not None and bands[level] > demo.target_trl:
            continue
        grand_candidate = level
        break

    optimised_candidate = None
    for level in (DemonstrationLevel.OPTIMISED_GRAND_POI, DemonstrationLevel.OPTIMISED_POI):
        if level <= recommended:
            continue
        if not _coverage_compatible(level, demo, universe):
            continue
        if demo.qualities is not QualityCoverage.FUNCTIONAL_AND_EXTRA:
            continue
        if demo.target_trl is not None and bands[level] > demo.target_trl:
            continue
        optimised_candidate = level
        break

    annotated = []
    for mitigation in mitigations:
        unlocks = None
        if mitigation.kind is MitigationKind.ADD_ASSOCIATION:
            unlocks = grand_candidate
        elif mitigation.kind is MitigationKind.RAISE_GRADE:
            unlocks = optimised_candidate
        elif mitigation.kind is MitigationKind.EXTEND_COVERAGE:
            unlocks = DemonstrationLevel.PROOF_OF_INTEGRATION
        annotated.append(replace(mitigation, unlocks=unlocks))
    return tuple(annotated)
