"""WP dependency graph: structure detection and readiness propagation (block 3)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .model import (
    Certainty,
    ConsolidatedInput,
    DependencyKind,
    PROPAGATED_KINDS,
    ProjectModel,
    ReadinessGrade,
    TrlLevel,
    UseCase,
    WorkPackage,
)

#: Maximum TRL a readiness grade can support. Anchored on the adapted scale:
#: grade G2 (representative data and interfaces) supports TRL 5, industrial
#: artifacts with baselines support TRL 6, operational-environment artifacts
#: support TRL 7. Ungraded artifacts cap nothing.
DEFAULT_GRADE_CAPS: dict[ReadinessGrade, TrlLevel] = {
    ReadinessGrade.G0: TrlLevel(3),
    ReadinessGrade.G1: TrlLevel(4),
    ReadinessGrade.G2: TrlLevel(5),
    ReadinessGrade.G3: TrlLevel(6),
    ReadinessGrade.G4: TrlLevel(7),
}


class CyclicDependency(Exception):
    def __init__(self, cycle: tuple[str, ...]):
        self.cycle = cycle
        super().__init__(f"cyclic dependency: {' -> '.join(cycle + cycle[:1])}")


class MissingEstimate(Exception):
    def __init__(self, wp_ids: tuple[str, ...]):
        self.wp_ids = wp_ids
        super().__init__(f"no estimated TRL for: {', '.join(wp_ids)}")


@dataclass(frozen=True)
class GraphEdge:
    source: str
    target: str
    kind: DependencyKind
    certainty: Certainty

    @property
    def key(self) -> str:
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class WpGraph:
    """Analyzed WPs plus their data/temporal edges, uncertain edges tagged."""

    nodes: tuple[str, ...]
    edges: tuple[GraphEdge, ...]

    def direct_edges(self) -> tuple[GraphEdge, ...]:
        return tuple(e for e in self.edges if e.certainty is Certainty.DIRECT)

    def subgraph(self, nodes: Iterable[str]) -> "WpGraph":
        keep = set(nodes)
        return WpGraph(
            nodes=tuple(n for n in self.nodes if n in keep),
            edges=tuple(e for e in self.edges if e.source in keep and e.target in keep),
        )


@dataclass(frozen=True)
class AdjustedTrl:
    own_estimate: TrlLevel
    adjusted: TrlLevel
    quality_cap: TrlLevel | None = None
    limiting_upstream: str | None = None


@dataclass(frozen=True)
class AdjustedTrlMap:
    entries: dict[str, AdjustedTrl] = field(default_factory=dict)
    advisories: tuple[str, ...] = ()

    def adjusted(self, wp_id: str) -> TrlLevel:
        return self.entries[wp_id].adjusted


@dataclass(frozen=True)
class Bottleneck:
    wp_id: str
    blocked_downstream_count: int


@dataclass(frozen=True)
class StructureReport:
    islands: tuple[str, ...] = ()
    bottlenecks: tuple[Bottleneck, ...] = ()
    cycles: tuple[tuple[str, ...], ...] = ()


def build_graph(consolidated: ConsolidatedInput) -> WpGraph:
    """Graph over analyzed WPs, keeping only data/temporal edges."""
    model = consolidated.model
    nodes = sorted(wp.id for wp in model.analyzed_wps())
    node_set = set(nodes)
    edges = sorted(
        (
            GraphEdge(dep.source, dep.target, dep.kind, dep.certainty)
            for dep in model.dependencies
            if dep.kind in PROPAGATED_KINDS
            and dep.source in node_set
            and dep.target in node_set
            and dep.source != dep.target
        ),
        key=lambda e: (e.source, e.target, e.kind.value, e.certainty.value),
    )
    return WpGraph(nodes=tuple(nodes), edges=tuple(edges))


def detect_structure(graph: WpGraph) -> StructureReport:
    """Islands (no edges in either direction) and cycles over direct edges."""
    touched: set[str] = set()
    for edge in graph.edges:
        touched.add(edge.source)
        touched.add(edge.target)
    islands = tuple(n for n in graph.nodes if n not in touched)
    return StructureReport(islands=islands, cycles=_find_cycles(graph))


def _find_cycles(graph: WpGraph) -> tuple[tuple[str, ...], ...]:
    # Tarjan SCC over direct edges; every SCC with >1 node is a cycle.
    succ: dict[str, list[str]] = {n: [] for n in graph.nodes}
    for edge in graph.direct_edges():
        succ[edge.source].append(edge.target)
    for targets in succ.values():
        targets.sort()

    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    components: list[list[str]] = []

    def strongconnect(start: str):
        work = [(start, iter(succ[start]))]
        index[start] = low[start] = counter[0]
        counter[0] += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            node, successors = work[-1]
            advanced = False
            for nxt in successors:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                if len(component) > 1:
                    components.append(component)

    for node in graph.nodes:
        if node not in index:
            strongconnect(node)

    cycles = []
    for component in components:
        members = set(component)
        # Walk edges inside the component from its smallest node, always
        # taking the smallest unvisited successor, to report a stable order.
        start = min(component)
        ordered = [start]
        current = start
        while True:
            candidates = [t for t in succ[current] if t in members and t not in ordered]
            if not candidates:
                break
            current = candidates[0]
            ordered.append(current)
        cycles.append(tuple(ordered))
    cycles.sort()
    return tuple(cycles)


def quality_cap(
    wp: WorkPackage,
    use_cases: Iterable[UseCase],
    grade_caps: Mapping[ReadinessGrade, TrlLevel] = DEFAULT_GRADE_CAPS,
) -> TrlLevel | None:
    """Readiness cap for a WP: the best grade among its graded use-cases wins.

    Absent when no associated use-case carries a grade (no information is
    no constraint; consolidation already flagged the absence).
    """
    grades = [
        uc.readiness
        for uc in use_cases
        if uc.id in wp.use_case_refs and uc.readiness is not None
    ]
    if not grades:
        return None
    return grade_caps[max(grades)]


def compute_caps(
    model: ProjectModel,
    grade_caps: Mapping[ReadinessGrade, TrlLevel] = DEFAULT_GRADE_CAPS,
) -> dict[str, TrlLevel]:
    """Quality caps for every TRL-carrying WP that has graded use-cases."""
    caps = {}
    for wp in model.trl_wps():
        cap = quality_cap(wp, model.use_cases, grade_caps)
        if cap is not None:
            caps[wp.id] = cap
    return caps


def topological_order(graph: WpGraph) -> list[str]:
    """Kahn's algorithm over direct edges; raises on cycles."""
    succ: dict[str, list[str]] = {n: [] for n in graph.nodes}
    indegree: dict[str, int] = {n: 0 for n in graph.nodes}
    for edge in graph.direct_edges():
        succ[edge.source].append(edge.target)
        indegree[edge.target] += 1
    ready = sorted(n for n, d in indegree.items() if d == 0)
    order: list[str] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        inserted = False
        for nxt in sorted(succ[node]):
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
                inserted = True
        if inserted:
            ready.sort()
    if len(order) != len(graph.nodes):
        cycles = _find_cycles(graph)
        cycle = cycles[0] if cycles else tuple(sorted(set(graph.nodes) - set(order)))
        raise CyclicDependency(cycle)
    return order


def propagate(
    graph: WpGraph,
    estimates: Mapping[str, TrlLevel],
    caps: Mapping[str, TrlLevel] | None = None,
) -> AdjustedTrlMap:
    """Fold readiness constraints along direct edges, weakest link first.

    Each WP's adjusted TRL is the minimum of its own estimate, its quality
    cap, and every direct upstream's adjusted TRL: a consumer cannot
    demonstrate above the maturity of what it consumes. Uncertain edges add
    an advisory and constrain nothing.
    """
    caps = caps or {}
    missing = tuple(sorted(n for n in graph.nodes if n not in estimates))
    if missing:
        raise MissingEstimate(missing)

    order = topological_order(graph)
    upstream: dict[str, list[str]] = {n: [] for n in graph.nodes}
    for edge in graph.direct_edges():
        upstream[edge.target].append(edge.source)

    entries: dict[str, AdjustedTrl] = {}
    for node in order:
        own = estimates[node]
        cap = caps.get(node)
        base = own if cap is None else min(own, cap)
        adjusted = base
        limiting = None
        for up in sorted(upstream[node]):
            up_adjusted = entries[up].adjusted
            if up_adjusted < adjusted:
                adjusted = up_adjusted
                limiting = up
        entries[node] = AdjustedTrl(
            own_estimate=own,
            adjusted=adjusted,
            quality_cap=cap,
            limiting_upstream=limiting,
        )

    advisories = tuple(
        f"uncertain dependency {e.key} did not constrain readiness"
        for e in sorted(
            (e for e in graph.edges if e.certainty is Certainty.UNCERTAIN),
            key=lambda e: e.key,
        )
    )
    return AdjustedTrlMap(
        entries={n: entries[n] for n in sorted(entries)},
        advisories=advisories,
    )


def bottlenecks(graph: WpGraph, adjusted: AdjustedTrlMap) -> tuple[Bottleneck, ...]:
    """WPs at the root of a readiness limitation, with how many WPs they drag.

    A limited WP's binding chain is walked upstream to the WP that is
    itself limited only by its own estimate or cap; that root is the
    bottleneck, not the intermediate conduits.
    """
    counts: dict[str, int] = {}
    for wp_id, entry in adjusted.entries.items():
        if entry.limiting_upstream is None:
            continue
        root = wp_id
        while adjusted.entries[root].limiting_upstream is not None:
            root = adjusted.entries[root].limiting_upstream
        counts[root] = counts.get(root, 0) + 1
    rows = [Bottleneck(wp_id=k, blocked_downstream_count=v) for k, v in counts.items()]
    rows.sort(key=lambda b: (-b.blocked_downstream_count, b.wp_id))
    return tuple(rows)


def analyze_structure(graph: WpGraph, adjusted: AdjustedTrlMap) -> StructureReport:
    return replace(detect_structure(graph), bottlenecks=bottlenecks(graph, adjusted))


def weakly_connected(graph: WpGraph, nodes: Iterable[str]) -> bool:
    """Whether ``nodes`` form one weakly connected component via direct edges."""
    targets = sorted(set(nodes))
    if len(targets) <= 1:
        return True
    keep = set(targets)
    neighbours: dict[str, set[str]] = {n: set() for n in targets}
    for edge in graph.direct_edges():
        if edge.source in keep and edge.target in keep:
            neighbours[edge.source].add(edge.target)
            neighbours[edge.target].add(edge.source)
    seen = {targets[0]}
    frontier = [targets[0]]
    while frontier:
        node = frontier.pop()
        for nxt in neighbours[node]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return len(seen) == len(targets)


def render_dot(graph: WpGraph, model: ProjectModel) -> str:
    """Graph description in DOT: direct edges solid, uncertain dashed."""
    structure = detect_structure(graph)
    islands = set(structure.islands)
    lines = ["digraph wp_dependencies {", "  rankdir=LR;"]
    for node in graph.nodes:
        wp = model.wp(node)
        label = f"{wp.id}: {wp.name}"
        attrs = [f'label="{_dot_escape(label)}"', "shape=box"]
        if node in islands:
            attrs.append("peripheries=2")
            attrs.append('xlabel="island"')
        lines.append(f'  "{node}" [{", ".join(attrs)}];')
    for edge in graph.edges:
        style = "solid" if edge.certainty is Certainty.DIRECT else "dashed"
        lines.append(f'  "{edge.source}" -> "{edge.target}" [style={style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')
