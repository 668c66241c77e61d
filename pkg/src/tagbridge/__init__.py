"""Cross-lingual tag annotation from concept embeddings and typed graphs."""

from .compose import (
    TagEmbedder,
    TokenTable,
    build_tag_embeddings,
    compose_avg,
    first_singular_direction,
    preprocess_tag,
    remove_first_component,
    sif_weighted_mean,
)
from .errors import (
    CompositionError,
    ConfigError,
    EvaluationError,
    FeasibilityError,
    MissingEmbeddingError,
    ParseError,
    SolverError,
    TagBridgeError,
    UnknownConceptError,
    ValidationError,
)
from .evaluation import (
    CrossValidationReport,
    EvalReport,
    FoldAssignment,
    cross_validate,
    iterative_stratified_split,
    macro_auc,
    roc_auc,
)
from .mapping import (
    EmbeddingScorer,
    GeodesicScorer,
    ScoreMatrix,
    TagVocabulary,
    TranslationScorer,
    TranslationTable,
    annotate_corpus,
    cosine,
    score_targets,
    translation_scores,
)
from .ontology import (
    ComponentIndex,
    ConceptGraph,
    DEFAULT_RELATION_CLASSES,
    connected_components,
    geodesic_scores,
    load_alignment,
    load_graph,
    load_relation_classes,
    merge_aligned,
    prefix_concepts,
)
from .pipeline import PipelineConfig, run_pipeline
from .retrofit import (
    GraphRetrofitter,
    RetrofitWeights,
    SolverReport,
    SystemMatrices,
    build_weights,
    check_feasible,
    direct_solve,
    gauss_seidel_retrofit,
    jacobi_retrofit,
    objective_value,
    system_matrices,
)
from .synth import SynthConfig, generate_bundle
from .vectors import ComposedEmbeddings, EmbeddingSet

__version__ = "0.1.0"

__all__ = [
    "ComponentIndex",
    "ComposedEmbeddings",
    "CompositionError",
    "ConceptGraph",
    "ConfigError",
    "CrossValidationReport",
    "DEFAULT_RELATION_CLASSES",
    "EmbeddingScorer",
    "EmbeddingSet",
    "EvalReport",
    "EvaluationError",
    "FeasibilityError",
    "FoldAssignment",
    "GeodesicScorer",
    "GraphRetrofitter",
    "MissingEmbeddingError",
    "ParseError",
    "PipelineConfig",
    "RetrofitWeights",
    "ScoreMatrix",
    "SolverError",
    "SolverReport",
    "SynthConfig",
    "SystemMatrices",
    "TagBridgeError",
    "TagEmbedder",
    "TagVocabulary",
    "TokenTable",
    "TranslationScorer",
    "TranslationTable",
    "UnknownConceptError",
    "ValidationError",
    "annotate_corpus",
    "build_tag_embeddings",
    "build_weights",
    "check_feasible",
    "compose_avg",
    "connected_components",
    "cosine",
    "cross_validate",
    "direct_solve",
    "first_singular_direction",
    "gauss_seidel_retrofit",
    "generate_bundle",
    "geodesic_scores",
    "iterative_stratified_split",
    "jacobi_retrofit",
    "load_alignment",
    "load_graph",
    "load_relation_classes",
    "macro_auc",
    "merge_aligned",
    "objective_value",
    "prefix_concepts",
    "preprocess_tag",
    "remove_first_component",
    "roc_auc",
    "run_pipeline",
    "score_targets",
    "sif_weighted_mean",
    "system_matrices",
    "translation_scores",
]
