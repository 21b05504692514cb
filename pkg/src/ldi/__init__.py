"""Localized data imputation for string-valued tables.

Three phases: select the columns whose substring patterns track the target
column, pick a few similar-yet-diverse complete rows as examples, and ask a
completion backend to fill each missing cell, keeping a full explanation
trail for every prediction.
"""

from .attributes import (
    DependencyConfig,
    DependencyReport,
    GroupPatternSet,
    SamplingConfig,
    detect_group_patterns,
    evaluate_dependency,
    filter_unique_patterns,
    group_sample,
    prune_contained,
    select_attributes,
    selected_attributes,
)
from .backend import (
    DEFAULT_CONTEXT,
    BackendConfig,
    MockBackend,
    PromptExample,
    PromptSpec,
    PromptStats,
    RemoteChatBackend,
    impute,
    normalize_answer,
    prompt_stats,
    serialize_prompt,
)
from .errors import (
    BackendError,
    ConfigurationError,
    DataError,
    LdiError,
    OracleMissError,
    ParseError,
    SchemaError,
    TransportError,
)
from .metrics import exact_match, rouge1_f1
from .mining import (
    DocumentSet,
    FrequentSubstringSet,
    MiningStats,
    frequent_substrings,
    group_unique_check,
    lcs_length,
    longest_common_substring,
)
from .pipeline import (
    EvaluationSummary,
    ExperimentSummary,
    ImputationRecord,
    PipelineConfig,
    PipelineRun,
    build_experiment_report,
    build_report,
    run_experiment,
    run_pipeline,
)
from .synth import planted_table
from .table import (
    MISSING,
    GroupIndex,
    MaskPlan,
    Table,
    casefold_cells,
    dump_table,
    dumps_table,
    group_by_target,
    load_table,
    loads_table,
    mask_cells,
)
from .tuples import ExampleSet, SimilarityScore, select_examples, tuple_similarity

__version__ = "0.1.0"
