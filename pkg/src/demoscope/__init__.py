"""demoscope: demonstrator feasibility analysis and requirements elaboration
for multi-work-package research projects."""

from .depgraph import (
    AdjustedTrl,
    AdjustedTrlMap,
    Bottleneck,
    CyclicDependency,
    MissingEstimate,
    StructureReport,
    WpGraph,
    analyze_structure,
    bottlenecks,
    build_graph,
    detect_structure,
    propagate,
    quality_cap,
    render_dot,
)
from .engine import (
    AnalysisReport,
    EngineConfig,
    FeedbackEvent,
    IterationLimitExceeded,
    Override,
    OverrideError,
    ProjectMismatch,
    ReportDiff,
    ValidationFailed,
    apply_overrides,
    diff_reports,
    run,
)
from .feasibility import (
    DemonstrationLevel,
    DemonstratorAssessment,
    Mitigation,
    NoUseCase,
    RiskLevel,
    UnknownWp,
    UseCaseType,
    achievable_demo_trl,
    classify_use_case_type,
    feasible_levels,
    recommend_level,
    risk_of,
    shortfall_analysis,
    target_level_for,
)
from .model import (
    Certainty,
    ConsolidatedInput,
    DanglingReferenceError,
    DemonstratorTarget,
    DependencyKind,
    Diagnostic,
    IssueKind,
    MissingInfo,
    ModelError,
    ModelSyntaxError,
    ProjectModel,
    QualityCoverage,
    ReadinessGrade,
    SchemaError,
    Severity,
    TrlLevel,
    UseCase,
    WorkPackage,
    WpDependency,
    WpKind,
    consolidate,
    parse_model,
    parse_model_report,
    serialize_model,
    validate_model,
)
from .quality import ComplianceReport, ComplianceRow, assess_compliance, thresholds_for
from .reportio import (
    parse_machine,
    render_machine,
    render_text,
    report_from_dict,
    report_to_dict,
)
from .requirements import Requirement, RequirementsSpec, elaborate
from .trlgap import (
    DemoGap,
    GapCategory,
    GapThresholds,
    IncompleteInput,
    TrlDefinition,
    WpGap,
    categorize,
    demo_gap_table,
    gap_table,
    trl_definition,
)

__version__ = "0.1.0"
