"""Project data model: schema, parsing, validation, and input consolidation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Any, Iterable

import yaml

ID_PATTERN = re.compile(r"^[A-Za-z0-9_.-]+$")


class ModelError(Exception):
    """Base error for model files; ``path`` names the offending element."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ModelSyntaxError(ModelError):
    """Malformed document (reported with line/column when available)."""


class SchemaError(ModelError):
    """Unknown field, wrong type, or out-of-range value."""


class DanglingReferenceError(ModelError):
    """A cross-reference names an element that does not exist."""


class TrlLevel(int):
    """A technology readiness level, an integer in the closed range 1..9."""

    def __new__(cls, value) -> "TrlLevel":
        level = int(value)
        if not 1 <= level <= 9:
            raise ValueError(f"TRL level must be in 1..9, got {level}")
        return super().__new__(cls, level)


class WpKind(Enum):
    TECHNICAL = "technical"
    DISSEMINATION = "dissemination"
    MANAGEMENT = "management"
    DEMONSTRATION = "demonstration"


class DependencyKind(Enum):
    DATA = "data"
    TEMPORAL = "temporal"
    CONTROL = "control"
    FUNCTIONAL = "functional"


#: Dependency kinds that take part in readiness propagation. Control and
#: functional edges are stored and reported but never propagated.
PROPAGATED_KINDS = frozenset({DependencyKind.DATA, DependencyKind.TEMPORAL})


class Certainty(Enum):
    DIRECT = "direct"
    UNCERTAIN = "uncertain"


class ReadinessGrade(IntEnum):
    """Artifact readiness, ordered G0 (nothing usable) to G4 (operational).

    G0: no usable artifacts; G1: sample data only; G2: representative data
    and interfaces; G3: industrial artifacts with baselines/benchmarks;
    G4: artifacts from an operational or high-fidelity environment.
    """

    G0 = 0
    G1 = 1
    G2 = 2
    G3 = 3
    G4 = 4


class QualityCoverage(Enum):
    """Which quality attributes a demonstrator intends to cover."""

    FUNCTIONAL = "functional"
    FUNCTIONAL_AND_EXTRA = "functional_and_extra_functional"


@dataclass(frozen=True)
class WorkPackage:
    id: str
    name: str
    kind: WpKind
    target_trl: TrlLevel | None = None
    estimated_trl: TrlLevel | None = None
    analyzed: bool | None = None
    use_case_refs: tuple[str, ...] = ()

    def is_analyzed(self) -> bool:
        """Whether the WP participates in the dependency analysis at all."""
        if self.analyzed is not None:
            return self.analyzed
        return self.kind in (WpKind.TECHNICAL, WpKind.DEMONSTRATION)

    def carries_trl(self) -> bool:
        """Whether the WP is expected to carry its own TRL data.

        Demonstration WPs sit in the graph as consumers but their maturity
        is the demonstrator's, so they carry no per-WP TRL.
        """
        return self.is_analyzed() and self.kind is not WpKind.DEMONSTRATION


@dataclass(frozen=True)
class WpDependency:
    source: str
    target: str
    kind: DependencyKind
    certainty: Certainty = Certainty.DIRECT

    @property
    def key(self) -> str:
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class UseCase:
    id: str
    provider: str
    framework_group: str | None = None
    readiness: ReadinessGrade | None = None


@dataclass(frozen=True)
class DemonstratorTarget:
    id: str
    name: str
    covered_wp_ids: tuple[str, ...]
    use_case_refs: tuple[str, ...]
    qualities: QualityCoverage
    target_trl: TrlLevel | None = None


@dataclass(frozen=True)
class ProjectModel:
    name: str
    work_packages: tuple[WorkPackage, ...]
    dependencies: tuple[WpDependency, ...] = ()
    use_cases: tuple[UseCase, ...] = ()
    demonstrators: tuple[DemonstratorTarget, ...] = ()
    blanket_trl_range: tuple[TrlLevel, TrlLevel] | None = None

    def wp(self, wp_id: str) -> WorkPackage:
        for wp in self.work_packages:
            if wp.id == wp_id:
                return wp
        raise KeyError(wp_id)

    def use_case(self, uc_id: str) -> UseCase:
        for uc in self.use_cases:
            if uc.id == uc_id:
                return uc
        raise KeyError(uc_id)

    def demonstrator(self, demo_id: str) -> DemonstratorTarget:
        for demo in self.demonstrators:
            if demo.id == demo_id:
                return demo
        raise KeyError(demo_id)

    def analyzed_wps(self) -> tuple[WorkPackage, ...]:
        return tuple(wp for wp in self.work_packages if wp.is_analyzed())

    def trl_wps(self) -> tuple[WorkPackage, ...]:
        return tuple(wp for wp in self.work_packages if wp.carries_trl())


class IssueKind(Enum):
    MISSING_TARGET_TRL = "missing_target_trl"
    MISSING_ESTIMATED_TRL = "missing_estimated_trl"
    MISSING_READINESS = "missing_readiness"
    MISSING_DEMONSTRATOR_TRL = "missing_demonstrator_trl"
    UNCERTAIN_DEPENDENCY = "uncertain_dependency"


@dataclass(frozen=True)
class MissingInfo:
    subject: str
    issue: IssueKind
    note: str


@dataclass(frozen=True)
class DefaultApplied:
    path: str
    value: int
    provenance: str


@dataclass(frozen=True)
class ConsolidatedInput:
    model: ProjectModel
    flags: tuple[MissingInfo, ...]
    defaults_applied: tuple[DefaultApplied, ...]


class Severity(Enum):
    ERROR = "error"
    ADVISORY = "advisory"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    subject: str
    message: str


@dataclass(frozen=True)
class ParseResult:
    model: ProjectModel
    warnings: tuple[str, ...]


# ---------------------------------------------------------------------------
# parsing

_TOP_KEYS = {"project", "work_packages", "dependencies", "use_cases", "demonstrators"}
_PROJECT_KEYS = {"name", "blanket_trl_range"}
_WP_KEYS = {"id", "name", "kind", "target_trl", "estimated_trl", "analyzed", "use_cases"}
_DEP_KEYS = {"from", "to", "kind", "certainty"}
_UC_KEYS = {"id", "provider", "framework_group", "readiness"}
_DEMO_KEYS = {"id", "name", "target_trl", "covered_wps", "use_cases", "qualities"}


def _require_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"expected a mapping, got {type(value).__name__}", path)
    return value


def _require_list(value, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"expected a list, got {type(value).__name__}", path)
    return value


def _require_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"expected a string, got {type(value).__name__}", path)
    return value


def _require_id(value, path: str) -> str:
    token = _require_str(value, path)
    if not ID_PATTERN.match(token):
        raise SchemaError(f"invalid id token {token!r} (allowed: [A-Za-z0-9_.-]+)", path)
    return token


def _require_trl(value, path: str) -> TrlLevel:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"expected an integer TRL, got {type(value).__name__}", path)
    try:
        return TrlLevel(value)
    except ValueError as exc:
        raise SchemaError(str(exc), path) from None


def _require_enum(enum_cls, value, path: str):
    token = _require_str(value, path)
    for member in enum_cls:
        if member.value == token:
            return member
    allowed = ", ".join(m.value for m in enum_cls)
    raise SchemaError(f"invalid value {token!r}; expected one of: {allowed}", path)


def _require_grade(value, path: str) -> ReadinessGrade:
    token = _require_str(value, path)
    try:
        return ReadinessGrade[token]
    except KeyError:
        raise SchemaError(f"invalid readiness grade {token!r}; expected G0..G4", path) from None


def _check_keys(mapping: dict, allowed: set, path: str, strict: bool, warnings: list):
    unknown = sorted(k for k in mapping if not isinstance(k, str) or k not in allowed)
    if not unknown:
        return
    message = f"unknown key(s) {unknown}"
    if strict:
        raise SchemaError(message, path)
    warnings.append(f"{path}: {message} (ignored)")


def _id_list(value, path: str) -> tuple[str, ...]:
    items = _require_list(value, path)
    return tuple(_require_id(item, f"{path}[{i}]") for i, item in enumerate(items))


def parse_model_report(source: str | bytes, *, strict: bool = True) -> ParseResult:
    """Parse a project model document, returning the model plus any warnings.

    In strict mode unknown keys raise :class:`SchemaError`; in lenient mode
    they are collected as warnings instead.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        document = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ModelSyntaxError(f"malformed document{where}: {exc}") from exc
    if document is None:
        raise SchemaError("document is empty")
    return _build_model(document, strict=strict)


def model_from_dict(document: dict, *, strict: bool = True) -> ProjectModel:
    """Build a model from an already-decoded document."""
    return _build_model(document, strict=strict).model


def _build_model(document, *, strict: bool) -> ParseResult:
    warnings: list[str] = []
    root = _require_mapping(document, "document")
    _check_keys(root, _TOP_KEYS, "document", strict, warnings)
    if "project" not in root:
        raise SchemaError("missing required key 'project'", "document")
    if "work_packages" not in root:
        raise SchemaError("missing required key 'work_packages'", "document")

    project = _require_mapping(root["project"], "project")
    _check_keys(project, _PROJECT_KEYS, "project", strict, warnings)
    if "name" not in project:
        raise SchemaError("missing required key 'name'", "project")
    name = _require_str(project["name"], "project.name")

    blanket = None
    if project.get("blanket_trl_range") is not None:
        pair = _require_list(project["blanket_trl_range"], "project.blanket_trl_range")
        if len(pair) != 2:
            raise SchemaError("expected a pair [low, high]", "project.blanket_trl_range")
        blanket = (
            _require_trl(pair[0], "project.blanket_trl_range[0]"),
            _require_trl(pair[1], "project.blanket_trl_range[1]"),
        )

    wp_entries = _require_list(root["work_packages"], "work_packages")
    if not wp_entries:
        raise SchemaError("at least one work package is required", "work_packages")
    work_packages = []
    for i, entry in enumerate(wp_entries):
        path = f"work_packages[{i}]"
        record = _require_mapping(entry, path)
        _check_keys(record, _WP_KEYS, path, strict, warnings)
        for key in ("id", "name", "kind"):
            if key not in record:
                raise SchemaError(f"missing required key '{key}'", path)
        analyzed = record.get("analyzed")
        if analyzed is not None and not isinstance(analyzed, bool):
            raise SchemaError("expected a boolean", f"{path}.analyzed")
        work_packages.append(
            WorkPackage(
                id=_require_id(record["id"], f"{path}.id"),
                name=_require_str(record["name"], f"{path}.name"),
                kind=_require_enum(WpKind, record["kind"], f"{path}.kind"),
                target_trl=(
                    _require_trl(record["target_trl"], f"{path}.target_trl")
                    if record.get("target_trl") is not None
                    else None
                ),
                estimated_trl=(
                    _require_trl(record["estimated_trl"], f"{path}.estimated_trl")
                    if record.get("estimated_trl") is not None
                    else None
                ),
                analyzed=analyzed,
                use_case_refs=_id_list(record.get("use_cases", []), f"{path}.use_cases"),
            )
        )

    dependencies = []
    for i, entry in enumerate(_require_list(root.get("dependencies", []), "dependencies")):
        path = f"dependencies[{i}]"
        record = _require_mapping(entry, path)
        _check_keys(record, _DEP_KEYS, path, strict, warnings)
        for key in ("from", "to", "kind"):
            if key not in record:
                raise SchemaError(f"missing required key '{key}'", path)
        dependencies.append(
            WpDependency(
                source=_require_id(record["from"], f"{path}.from"),
                target=_require_id(record["to"], f"{path}.to"),
                kind=_require_enum(DependencyKind, record["kind"], f"{path}.kind"),
                certainty=(
                    _require_enum(Certainty, record["certainty"], f"{path}.certainty")
                    if record.get("certainty") is not None
                    else Certainty.DIRECT
                ),
            )
        )

    use_cases = []
    for i, entry in enumerate(_require_list(root.get("use_cases", []), "use_cases")):
        path = f"use_cases[{i}]"
        record = _require_mapping(entry, path)
        _check_keys(record, _UC_KEYS, path, strict, warnings)
        for key in ("id", "provider"):
            if key not in record:
                raise SchemaError(f"missing required key '{key}'", path)
        use_cases.append(
            UseCase(
                id=_require_id(record["id"], f"{path}.id"),
                provider=_require_str(record["provider"], f"{path}.provider"),
                framework_group=(
                    _require_id(record["framework_group"], f"{path}.framework_group")
                    if record.get("framework_group") is not None
                    else None
                ),
                readiness=(
                    _require_grade(record["readiness"], f"{path}.readiness")
                    if record.get("readiness") is not None
                    else None
                ),
            )
        )

    demonstrators = []
    for i, entry in enumerate(_require_list(root.get("demonstrators", []), "demonstrators")):
        path = f"demonstrators[{i}]"
        record = _require_mapping(entry, path)
        _check_keys(record, _DEMO_KEYS, path, strict, warnings)
        for key in ("id", "name", "covered_wps", "use_cases", "qualities"):
            if key not in record:
                raise SchemaError(f"missing required key '{key}'", path)
        covered = _id_list(record["covered_wps"], f"{path}.covered_wps")
        if not covered:
            raise SchemaError("covered_wps must not be empty", f"{path}.covered_wps")
        demonstrators.append(
            DemonstratorTarget(
                id=_require_id(record["id"], f"{path}.id"),
                name=_require_str(record["name"], f"{path}.name"),
                target_trl=(
                    _require_trl(record["target_trl"], f"{path}.target_trl")
                    if record.get("target_trl") is not None
                    else None
                ),
                covered_wp_ids=covered,
                use_case_refs=_id_list(record["use_cases"], f"{path}.use_cases"),
                qualities=_require_enum(QualityCoverage, record["qualities"], f"{path}.qualities"),
            )
        )

    model = ProjectModel(
        name=name,
        work_packages=tuple(work_packages),
        dependencies=tuple(dependencies),
        use_cases=tuple(use_cases),
        demonstrators=tuple(demonstrators),
        blanket_trl_range=blanket,
    )
    _resolve_references(model)
    return ParseResult(model=model, warnings=tuple(warnings))


def parse_model(source: str | bytes, *, strict: bool = True) -> ProjectModel:
    """Parse a project model document; see :func:`parse_model_report`."""
    return parse_model_report(source, strict=strict).model


def _resolve_references(model: ProjectModel) -> None:
    wp_ids = [wp.id for wp in model.work_packages]
    uc_ids = [uc.id for uc in model.use_cases]
    for collection, label in ((wp_ids, "work package"), (uc_ids, "use-case")):
        seen = set()
        for item in collection:
            if item in seen:
                raise SchemaError(f"duplicate {label} id {item!r}")
            seen.add(item)
    demo_seen = set()
    for demo in model.demonstrators:
        if demo.id in demo_seen:
            raise SchemaError(f"duplicate demonstrator id {demo.id!r}")
        demo_seen.add(demo.id)

    wp_set, uc_set = set(wp_ids), set(uc_ids)
    for wp in model.work_packages:
        for ref in wp.use_case_refs:
            if ref not in uc_set:
                raise DanglingReferenceError(
                    f"unknown use-case {ref!r}", f"wp.{wp.id}.use_cases"
                )
    for dep in model.dependencies:
        for endpoint, key in ((dep.source, "from"), (dep.target, "to")):
            if endpoint not in wp_set:
                raise DanglingReferenceError(
                    f"unknown work package {endpoint!r}", f"dependency.{dep.key}.{key}"
                )
    for demo in model.demonstrators:
        for ref in demo.covered_wp_ids:
            if ref not in wp_set:
                raise DanglingReferenceError(
                    f"unknown work package {ref!r}", f"demo.{demo.id}.covered_wps"
                )
        for ref in demo.use_case_refs:
            if ref not in uc_set:
                raise DanglingReferenceError(
                    f"unknown use-case {ref!r}", f"demo.{demo.id}.use_cases"
                )


# ---------------------------------------------------------------------------
# serialization

def model_to_dict(model: ProjectModel) -> dict[str, Any]:
    project: dict[str, Any] = {"name": model.name}
    if model.blanket_trl_range is not None:
        project["blanket_trl_range"] = [int(v) for v in model.blanket_trl_range]
    document: dict[str, Any] = {"project": project, "work_packages": []}
    for wp in model.work_packages:
        record: dict[str, Any] = {"id": wp.id, "name": wp.name, "kind": wp.kind.value}
        if wp.target_trl is not None:
            record["target_trl"] = int(wp.target_trl)
        if wp.estimated_trl is not None:
            record["estimated_trl"] = int(wp.estimated_trl)
        if wp.analyzed is not None:
            record["analyzed"] = wp.analyzed
        if wp.use_case_refs:
            record["use_cases"] = list(wp.use_case_refs)
        document["work_packages"].append(record)
    if model.dependencies:
        document["dependencies"] = []
        for dep in model.dependencies:
            record = {"from": dep.source, "to": dep.target, "kind": dep.kind.value}
            if dep.certainty is not Certainty.DIRECT:
                record["certainty"] = dep.certainty.value
            document["dependencies"].append(record)
    if model.use_cases:
        document["use_cases"] = []
        for uc in model.use_cases:
            record = {"id": uc.id, "provider": uc.provider}
            if uc.framework_group is not None:
                record["framework_group"] = uc.framework_group
            if uc.readiness is not None:
                record["readiness"] = uc.readiness.name
            document["use_cases"].append(record)
    if model.demonstrators:
        document["demonstrators"] = []
        for demo in model.demonstrators:
            record = {"id": demo.id, "name": demo.name}
            if demo.target_trl is not None:
                record["target_trl"] = int(demo.target_trl)
            record["covered_wps"] = list(demo.covered_wp_ids)
            record["use_cases"] = list(demo.use_case_refs)
            record["qualities"] = demo.qualities.value
            document["demonstrators"].append(record)
    return document


def serialize_model(model: ProjectModel) -> str:
    """Render a model back to its canonical document form (round-trip safe)."""
    return yaml.safe_dump(model_to_dict(model), sort_keys=False, allow_unicode=True)


# ---------------------------------------------------------------------------
# validation

def validate_model(model: ProjectModel) -> list[Diagnostic]:
    """Check every model invariant; errors and advisories come back as a list.

    The model is structurally valid iff no diagnostic has severity ERROR.
    Uncertain and control/functional edges are advisories, never errors.
    """
    diagnostics: list[Diagnostic] = []

    def error(code: str, subject: str, message: str):
        diagnostics.append(Diagnostic(Severity.ERROR, code, subject, message))

    def advisory(code: str, subject: str, message: str):
        diagnostics.append(Diagnostic(Severity.ADVISORY, code, subject, message))

    wp_ids = {wp.id for wp in model.work_packages}
    uc_ids = {uc.id for uc in model.use_cases}

    if not model.work_packages:
        error("EmptyModel", model.name, "at least one work package is required")
    seen: set[str] = set()
    for wp in model.work_packages:
        if wp.id in seen:
            error("DuplicateId", wp.id, f"duplicate work package id {wp.id!r}")
        seen.add(wp.id)
        if not ID_PATTERN.match(wp.id):
            error("InvalidId", wp.id, f"invalid id token {wp.id!r}")
        for ref in wp.use_case_refs:
            if ref not in uc_ids:
                error("DanglingReference", wp.id, f"wp.{wp.id} references unknown use-case {ref!r}")
    seen = set()
    for uc in model.use_cases:
        if uc.id in seen:
            error("DuplicateId", uc.id, f"duplicate use-case id {uc.id!r}")
        seen.add(uc.id)

    for dep in sorted(model.dependencies, key=lambda d: d.key):
        if dep.source == dep.target:
            error("SelfDependency", dep.key, f"dependency {dep.key} is reflexive")
        for endpoint in (dep.source, dep.target):
            if endpoint not in wp_ids:
                error("DanglingReference", dep.key, f"dependency endpoint {endpoint!r} unknown")
        if dep.kind not in PROPAGATED_KINDS:
            advisory(
                "UnpropagatedDependencyKind",
                dep.key,
                f"{dep.kind.value} dependency {dep.key} is recorded but never propagated",
            )
        if dep.certainty is Certainty.UNCERTAIN:
            advisory(
                "UncertainDependency",
                dep.key,
                f"dependency {dep.key} is marked uncertain and will not constrain readiness",
            )

    seen = set()
    for demo in model.demonstrators:
        if demo.id in seen:
            error("DuplicateId", demo.id, f"duplicate demonstrator id {demo.id!r}")
        seen.add(demo.id)
        if not demo.covered_wp_ids:
            error("EmptyCoverage", demo.id, f"demonstrator {demo.id} covers no work packages")
        for ref in demo.covered_wp_ids:
            if ref not in wp_ids:
                error("DanglingReference", demo.id, f"demo.{demo.id} covers unknown WP {ref!r}")
        for ref in demo.use_case_refs:
            if ref not in uc_ids:
                error("DanglingReference", demo.id, f"demo.{demo.id} references unknown use-case {ref!r}")

    if model.blanket_trl_range is not None:
        low, high = model.blanket_trl_range
        if low > high:
            error(
                "InvertedRange",
                "project.blanket_trl_range",
                f"blanket TRL range ({low}, {high}) has low > high",
            )

    diagnostics.sort(key=lambda d: (d.severity.value, d.subject, d.code))
    return diagnostics


# ---------------------------------------------------------------------------
# consolidation (pipeline block 1)

def consolidate(model: ProjectModel) -> ConsolidatedInput:
    """Apply default rules and flag every absence that cannot be defaulted.

    The only default is the blanket TRL range: a TRL-carrying WP without a
    target gets the range's low bound (integration accounts for the high
    end). Demonstrator targets are never defaulted; a missing one is always
    a flag because deducing it needs human judgment.
    """
    flags: list[MissingInfo] = []
    defaults: list[DefaultApplied] = []

    updated_wps = []
    for wp in model.work_packages:
        if wp.carries_trl() and wp.target_trl is None and model.blanket_trl_range is not None:
            low = min(model.blanket_trl_range)
            wp = replace(wp, target_trl=low)
            defaults.append(
                DefaultApplied(
                    path=f"wp.{wp.id}.target_trl",
                    value=int(low),
                    provenance="blanket_trl_range.low",
                )
            )
        if wp.carries_trl():
            if wp.target_trl is None:
                flags.append(
                    MissingInfo(wp.id, IssueKind.MISSING_TARGET_TRL, "no target TRL and no blanket range to default from")
                )
            if wp.estimated_trl is None:
                flags.append(
                    MissingInfo(wp.id, IssueKind.MISSING_ESTIMATED_TRL, "no estimated achievable TRL from planning")
                )
        updated_wps.append(wp)

    for uc in model.use_cases:
        if uc.readiness is None:
            flags.append(
                MissingInfo(uc.id, IssueKind.MISSING_READINESS, "artifact readiness not assessed")
            )

    for demo in model.demonstrators:
        if demo.target_trl is None:
            flags.append(
                MissingInfo(demo.id, IssueKind.MISSING_DEMONSTRATOR_TRL, "demonstrator target TRL not stated; deduce one from the proposal")
            )

    for dep in model.dependencies:
        if dep.certainty is Certainty.UNCERTAIN:
            flags.append(
                MissingInfo(dep.key, IssueKind.UNCERTAIN_DEPENDENCY, "dependency is uncertain/undefined")
            )

    flags.sort(key=lambda f: (f.subject, f.issue.value))
    consolidated = replace(model, work_packages=tuple(updated_wps))
    return ConsolidatedInput(model=consolidated, flags=tuple(flags), defaults_applied=tuple(defaults))


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diagnostics)
