"""xlrank: cross-lingual retrieval, re-ranking, metrics, and augmentation."""

from .models import (
    UND,
    AugmentedExample,
    Candidate,
    Passage,
    QAExample,
    Question,
    RetrievalRun,
)
from .langid import detect_language
from .runfile import parse_run_file, write_run_file
from .scoring import LikelihoodScore, TokenSequence, UnigramScorer, score, tokenize
from .search import (
    EmbeddingMatrix,
    InnerProductSearcher,
    SearchResult,
    full_sort_search,
    load_matrix,
    save_matrix,
    top_k,
)
from .rerank import (
    ExperimentMode,
    QuestionLikelihoodReranker,
    ScoredCandidate,
    ScorerRequest,
    build_request,
    rerank,
    rerank_corpus,
)
from .translators import IdentityTranslator, MappingTranslator
from .clients import (
    HttpScorer,
    HttpTranslator,
    ScoreResponse,
    ServiceEndpoint,
    score_batch,
    translate,
)
from .metrics import (
    AnswerPair,
    MetricsReport,
    aggregate,
    gain,
    mrr,
    positives_at_k,
    recall_at_k,
    token_f1,
)
from .augment import (
    AugmentationConfig,
    ReaderRecord,
    augment_corpus,
    build_reader_input,
    filter_contains_answer,
    translate_example,
)

__version__ = "0.1.0"

__all__ = [
    "UND",
    "AnswerPair",
    "AugmentationConfig",
    "AugmentedExample",
    "Candidate",
    "EmbeddingMatrix",
    "ExperimentMode",
    "HttpScorer",
    "HttpTranslator",
    "IdentityTranslator",
    "InnerProductSearcher",
    "LikelihoodScore",
    "MappingTranslator",
    "MetricsReport",
    "Passage",
    "QAExample",
    "Question",
    "QuestionLikelihoodReranker",
    "ReaderRecord",
    "RetrievalRun",
    "ScoreResponse",
    "ScoredCandidate",
    "ScorerRequest",
    "SearchResult",
    "ServiceEndpoint",
    "TokenSequence",
    "UnigramScorer",
    "aggregate",
    "augment_corpus",
    "build_reader_input",
    "build_request",
    "detect_language",
    "filter_contains_answer",
    "full_sort_search",
    "gain",
    "load_matrix",
    "mrr",
    "parse_run_file",
    "positives_at_k",
    "recall_at_k",
    "rerank",
    "rerank_corpus",
    "save_matrix",
    "score",
    "score_batch",
    "token_f1",
    "tokenize",
    "top_k",
    "translate",
    "translate_example",
    "write_run_file",
]
