"""lhvlab: exact verification of contextual local hidden-variable Bell models."""

from .model import (
    BehaviorTable,
    ContextualModel,
    CorrelationQuad,
    DomainMismatchError,
    FactorizationReport,
    NonlocalPairModel,
    OutcomeTable,
    Pmf,
    Setting,
    ValidationReport,
    as_fraction,
    behavior_from_model,
    correlation_quad,
    counterexample_model,
    exact_expectation,
    exact_side_expectation,
    is_setting_factorizable,
    nonlocal_quad,
    validate_model,
)
from .flatten import (
    AveragedModel,
    FlatModel,
    FlatSetting,
    bell_average,
    product_flatten,
    refine_breakpoints,
    uniform_reduce,
)
from .chsh import (
    ChshCombination,
    ChshReport,
    PostSelectionReport,
    chsh_values,
    finite_sample_bound,
    postselected_correlations,
    zero_to_coin,
)
from .fine import (
    InternalInconsistencyError,
    JointDistribution16,
    JointSearchResult,
    NoSignallingReport,
    check_no_signalling,
    coupling_joint,
    find_joint,
    fine_criterion,
    marginalize_context,
)
from .montecarlo import (
    CorrelationEstimate,
    CouplingSamples,
    DagModel,
    IndependenceReport,
    Spreadsheet,
    TrialRecord,
    estimate_correlations,
    from_contextual,
    independence_diagnostic,
    sample_coupling,
    simulate_given_settings,
    simulate_spreadsheet,
)
from .loophole import (
    AngleSet,
    DetectionReport,
    SearchConfig,
    SearchOutcome,
    detection_rates,
    quantum_singlet_behavior,
    search_postselection_violation,
)
from .corpus import random_contextual_model, random_nosignalling_behavior
from .modelio import ModelParseError, parse_path, parse_text, serialize

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
