"""Idiom-aware candidate ranking over precomputed embeddings.

Given a sentence containing a potentially idiomatic compound and five
candidate images or captions, the pipeline predicts the sentence type,
rewrites idioms into compositional paraphrases, scores candidates
across pluggable similarity streams, fuses the streams with weighted
Borda counting, and evaluates with Top-1 and NDCG@5.
"""

from .dataset import Dataset, Instance, SchemaConfig, parse_tsv
from .embeddings import EmbeddingStore, load_embeddings, write_embeddings
from .evaluation import EvalReport, RelevanceProfile, evaluate, ndcg5, top1
from .fusion import FusionConfig, RankingResult, borda_fuse, ranks_from_scores
from .pipeline import (
    CoverageReport,
    PipelineConfig,
    PredictionRecord,
    Resources,
    run_dataset,
    run_instance,
)
from .rewriter import IdiomLexicon, load_lexicon, rewrite
from .sentence_typer import (
    LRModel,
    SentenceTypeDecision,
    classify_literal_first,
    ensemble_classify,
    heuristic_classify,
    predict_lr,
    train_lr,
)
from .similarity import QuerySpec, ScoreStream, build_query_embedding, compute_streams, cosine

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Instance",
    "SchemaConfig",
    "parse_tsv",
    "EmbeddingStore",
    "load_embeddings",
    "write_embeddings",
    "EvalReport",
    "RelevanceProfile",
    "evaluate",
    "ndcg5",
    "top1",
    "FusionConfig",
    "RankingResult",
    "borda_fuse",
    "ranks_from_scores",
    "CoverageReport",
    "PipelineConfig",
    "PredictionRecord",
    "Resources",
    "run_dataset",
    "run_instance",
    "IdiomLexicon",
    "load_lexicon",
    "rewrite",
    "LRModel",
    "SentenceTypeDecision",
    "classify_literal_first",
    "ensemble_classify",
    "heuristic_classify",
    "predict_lr",
    "train_lr",
    "QuerySpec",
    "ScoreStream",
    "build_query_embedding",
    "compute_streams",
    "cosine",
    "__version__",
]
