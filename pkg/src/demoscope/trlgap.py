"""TRL scale definitions and per-WP / per-demonstrator gap analysis (block 2)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from .model import ConsolidatedInput, DemonstratorTarget, TrlLevel


@dataclass(frozen=True)
class TrlDefinition:
    level: TrlLevel
    original_text: str
    adapted_text: str


# One row per level: (original hardware-oriented definition, definition
# adapted for software-intensive systems). These strings are frozen; a
# golden test guards against accidental edits.
_SCALE: dict[int, tuple[str, str]] = {
    1: (
        "Basic principles observed and reported",
        "Basic principles or algorithms identified and described",
    ),
    2: (
        "Technology concept and/or application formulated",
        "Software concept and intended application formulated",
    ),
    3: (
        "Analytical and experimental critical function and/or characteristic proof-of-concept",
        "Proof-of-concept algorithms developed and demonstrated in analytical or simulation environments",
    ),
    4: (
        "Component and/or breadboard validation in laboratory environment",
        "Individual software components prototyped and tested in controlled lab conditions",
    ),
    5: (
        "Component and/or breadboard validation in relevant environment",
        "Software modules integrated and tested with representative data and interfaces in a simulated or partially relevant environment",
    ),
    6: (
        "System/subsystem model or prototype demonstration in a relevant environment (ground or space)",
        "Prototype software integrated with relevant subsystems and tested in a relevant environment, e.g., hardware-in-the-loop",
    ),
    7: (
        "System prototype demonstration in a space environment",
        "Integrated software prototype demonstrated in an operational or high-fidelity simulated environment",
    ),
    8: (
        'Actual system completed and "flight qualified" through test and demonstration (ground or space)',
        "Fully developed software system qualified through rigorous testing under expected operational conditions",
    ),
    9: (
        'Actual system "flight proven" through successful mission operations',
        "Software system validated through successful operational use in the target environment",
    ),
}

TRL_DEFINITIONS: tuple[TrlDefinition, ...] = tuple(
    TrlDefinition(level=TrlLevel(level), original_text=original, adapted_text=adapted)
    for level, (original, adapted) in sorted(_SCALE.items())
)


def trl_definition(level: TrlLevel | int) -> TrlDefinition:
    """Return the original and software-adapted definition texts for a level."""
    return TRL_DEFINITIONS[TrlLevel(level) - 1]


class GapCategory(IntEnum):
    ON_TRACK = 0
    MINOR_GAP = 1
    MAJOR_GAP = 2

    @property
    def token(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class GapThresholds:
    """Gap sizes at which a gap counts as minor / major (defaults 1 / 2)."""

    minor: int = 1
    major: int = 2

    def __post_init__(self):
        if not 0 < self.minor <= self.major:
            raise ValueError(f"thresholds must satisfy 0 < minor <= major, got {self}")


DEFAULT_THRESHOLDS = GapThresholds()


def categorize(gap: int, thresholds: GapThresholds = DEFAULT_THRESHOLDS) -> GapCategory:
    """Categorize a target-minus-estimate gap.

    Non-positive gaps are on track (over-delivery is harmless); a one-level
    gap is minor because integration alone can bridge it; anything wider is
    major.
    """
    if gap < thresholds.minor:
        return GapCategory.ON_TRACK
    if gap < thresholds.major:
        return GapCategory.MINOR_GAP
    return GapCategory.MAJOR_GAP


@dataclass(frozen=True)
class WpGap:
    wp_id: str
    target: TrlLevel
    estimated: TrlLevel
    gap: int
    category: GapCategory


@dataclass(frozen=True)
class DemoGap:
    """Demonstrator-level gap: target vs the weakest covered WP estimate."""

    demo_id: str
    target: TrlLevel
    baseline: TrlLevel
    gap: int
    category: GapCategory


class IncompleteInput(Exception):
    """Raised when TRL-carrying WPs lack the data the gap analysis needs."""

    def __init__(self, wp_ids: tuple[str, ...]):
        self.wp_ids = wp_ids
        super().__init__(f"work packages missing target or estimated TRL: {', '.join(wp_ids)}")


def incomplete_wp_ids(consolidated: ConsolidatedInput) -> tuple[str, ...]:
    """Ids of TRL-carrying WPs still lacking a target or estimate, sorted."""
    return tuple(
        sorted(
            wp.id
            for wp in consolidated.model.trl_wps()
            if wp.target_trl is None or wp.estimated_trl is None
        )
    )


def gap_table(
    consolidated: ConsolidatedInput,
    thresholds: GapThresholds = DEFAULT_THRESHOLDS,
    *,
    exclude: frozenset[str] | set[str] = frozenset(),
) -> list[WpGap]:
    """One gap row per TRL-carrying WP, sorted by id.

    Raises :class:`IncompleteInput` when a non-excluded WP lacks data; the
    engine catches this, records the block-4 feedback, and retries with the
    incomplete WPs excluded.
    """
    missing = tuple(i for i in incomplete_wp_ids(consolidated) if i not in exclude)
    if missing:
        raise IncompleteInput(missing)
    rows = []
    for wp in sorted(consolidated.model.trl_wps(), key=lambda w: w.id):
        if wp.id in exclude:
            continue
        gap = int(wp.target_trl) - int(wp.estimated_trl)
        rows.append(
            WpGap(
                wp_id=wp.id,
                target=wp.target_trl,
                estimated=wp.estimated_trl,
                gap=gap,
                category=categorize(gap, thresholds),
            )
        )
    return rows


def demo_gap_table(
    consolidated: ConsolidatedInput,
    thresholds: GapThresholds = DEFAULT_THRESHOLDS,
) -> list[DemoGap]:
    """Demonstrator gap rows, comparing each target against the weakest
    covered estimate. Demonstrators lacking a target, or covering WPs
    without estimates, produce no row (block 4 routes feedback for those).
    """
    rows = []
    for demo in sorted(consolidated.model.demonstrators, key=lambda d: d.id):
        baseline = _baseline_estimate(consolidated, demo)
        if demo.target_trl is None or baseline is None:
            continue
        gap = int(demo.target_trl) - int(baseline)
        rows.append(
            DemoGap(
                demo_id=demo.id,
                target=demo.target_trl,
                baseline=baseline,
                gap=gap,
                category=categorize(gap, thresholds),
            )
        )
    return rows


def _baseline_estimate(
    consolidated: ConsolidatedInput, demo: DemonstratorTarget
) -> TrlLevel | None:
    estimates = [
        wp.estimated_trl
        for wp in consolidated.model.trl_wps()
        if wp.id in demo.covered_wp_ids
    ]
    if not estimates or any(e is None for e in estimates):
        return None
    return min(estimates)
