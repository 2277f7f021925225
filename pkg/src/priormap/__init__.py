"""Existing-map-aware vector map refresh toolkit.

Core pieces: canonical polyline maps (core), scenario perturbations (perturb),
existing-map query encoding (queries), displacement pinning plus Hungarian
matching (matching), chamfer AP evaluation (metrics), synthetic corpus and
pipeline (simulate), file formats (formats), figure rendering (render), and a
solver benchmark (bench).
"""

from .core import (
    CANONICAL_POINTS,
    EVAL_POINTS,
    ElementClass,
    MapElement,
    PatchExtent,
    VectorMap,
    chamfer_distance,
    clip_to_patch,
    polyline_arclength,
    resample_polyline,
    upsample_for_eval,
)
from .errors import (
    AssignmentError,
    CanonicalFormError,
    ClassTagError,
    CorrespondenceError,
    DuplicateIdError,
    FormatError,
    FormatSyntaxError,
    GeometryError,
    NonFiniteCoordinateError,
    PriormapError,
    QueryFormatError,
    QueryOverflowError,
    SchemaVersionError,
)
from .matching import (
    BACKGROUND,
    CLASS_MISMATCH_PENALTY,
    PIN_THRESHOLD,
    Assignment,
    AssignmentEntry,
    PartialAssignment,
    displacement_score,
    hungarian,
    match_with_preattribution,
    matching_cost,
    pre_attribute,
)
from .metrics import (
    EVAL_THRESHOLDS,
    AggregateReport,
    ApDelta,
    ApReport,
    DetectionResult,
    aggregate_runs,
    ap_at_threshold,
    evaluate,
    improvement_delta,
    mean_reports,
)
from .perturb import (
    Correspondence,
    PerturbedMap,
    ScenarioKind,
    ScenarioSpec,
    apply_scenario,
    generate_variants,
    identity_correspondences,
    s1_remove,
    s2a_shift,
    s2b_point_noise,
    s3a_outdated,
    s3b_mix,
    triangular_warp,
    trig_warp,
)
from .queries import (
    DEFAULT_MAX_ELEMENTS,
    DEFAULT_QUERY_WIDTH,
    ENCODING_HEADER,
    ExQuerySet,
    LearnedQueryPool,
    QueryProvenance,
    assemble_query_set,
    decode_element,
    encode_element,
    learned_pool_stub,
)
from .rng import derive_seed, make_rng, splitmix64
from .simulate import (
    EstimatorMode,
    MockEstimatorSpec,
    PipelineReport,
    SampleStats,
    SynthSpec,
    build_corpus,
    mock_estimate,
    oracle_change_score,
    padded_match,
    parse_estimator,
    run_pipeline,
    substitute_if_unchanged,
    synth_map,
)
from .formats import (
    VariantSet,
    load_assignment,
    load_map,
    load_queries,
    load_report,
    load_variants,
    save_assignment,
    save_map,
    save_queries,
    save_report,
    save_variants,
)
from .bench import (
    BenchRow,
    benchmark_matching,
    fit_loglog_slope,
    save_bench_csv,
    speedup_at,
)

__version__ = "0.1.0"
