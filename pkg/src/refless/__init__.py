"""Reference-free machine translation evaluation.

Scores system translations directly against their source sentences using
cross-lingual embedding similarity (token-level optimal transport or
sentence-level cosine), optionally improved by weakly-supervised linear
re-mappings and fused with a target-side language model, and evaluates
metric quality by correlation with human judgments.
"""

from .evaluation import (
    CorrelationReport,
    SweepTable,
    W2WReport,
    W2WResult,
    dictionary_size_sweep,
    kendall,
    pearson,
    preference_diff,
    segment_correlation,
    system_correlation,
    w2w_statistic,
)
from .exceptions import (
    ConvergenceError,
    FormatError,
    NoMisalignmentError,
    UnscorableError,
)
from .io import (
    DatasetTable,
    EvaluationRecord,
    read_dataset,
    read_lexicon,
    read_scores,
    write_dataset,
    write_report,
    write_scores,
)
from .lm import (
    FluencyScore,
    NgramLanguageModel,
    load_external_lm_scores,
    load_lm,
    save_lm,
)
from .metrics import CosineScorer, MoverScorer, SegmentScore, score_batch
from .remap import (
    BilingualLexicon,
    CLPProjection,
    RemapPipeline,
    UMDProjection,
    fit_clp,
    fit_pipeline,
    fit_umd,
    jacobi_svd,
    load_transform,
    parse_pipeline_spec,
    save_transform,
)
from .transport import TransportPlan, cost_matrix, solve_wmd, wmd
from .vectors import (
    EmbeddingSpace,
    NgramSequence,
    SentenceEmbedding,
    compute_idf,
    load_embedding_space,
    load_sentence_vectors,
    ngramize,
    pool_sentence,
    save_embedding_space,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "BilingualLexicon",
    "CLPProjection",
    "ConvergenceError",
    "CorrelationReport",
    "CosineScorer",
    "DatasetTable",
    "EmbeddingSpace",
    "EvaluationRecord",
    "FluencyScore",
    "FormatError",
    "MoverScorer",
    "NgramLanguageModel",
    "NgramSequence",
    "NoMisalignmentError",
    "RemapPipeline",
    "SegmentScore",
    "SentenceEmbedding",
    "SweepTable",
    "TransportPlan",
    "UMDProjection",
    "UnscorableError",
    "W2WReport",
    "W2WResult",
    "compute_idf",
    "cost_matrix",
    "dictionary_size_sweep",
    "fit_clp",
    "fit_pipeline",
    "fit_umd",
    "jacobi_svd",
    "kendall",
    "load_embedding_space",
    "load_external_lm_scores",
    "load_lm",
    "load_sentence_vectors",
    "load_transform",
    "ngramize",
    "parse_pipeline_spec",
    "pearson",
    "pool_sentence",
    "preference_diff",
    "read_dataset",
    "read_lexicon",
    "read_scores",
    "save_embedding_space",
    "save_lm",
    "save_transform",
    "score_batch",
    "segment_correlation",
    "solve_wmd",
    "system_correlation",
    "tokenize",
    "w2w_statistic",
    "wmd",
    "write_dataset",
    "write_report",
    "write_scores",
]
