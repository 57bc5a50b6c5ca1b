"""replimit: caption generality scoring, caption generalization, replication
measurement, and dual-fusion training on a toy conditional diffusion model."""

__version__ = "0.1.0"

from .lexicon import LexEntry, Lexicon, compute_globals, import_wordnet, load_lexicon, save_lexicon
from .annotate import AnnotatedCaption, Token, annotate, tokenize
from .genmetrics import (
    GeneralityReport,
    aggregate,
    bt_score,
    da_score,
    score_caption,
    score_corpus,
    si_score,
    tm_score,
)
from .generalize import (
    GENERAL,
    FIVE_WORD,
    GeneralizeRequest,
    batch_generalize,
    build_prompt,
    generalize_caption,
    mock_generalizer,
)
from .replication import (
    FeatureMatrix,
    GaussianFit,
    ReplicationResult,
    SimilarityDistribution,
    fit_gaussian,
    frechet_distance,
    load_features,
    replication_score,
    save_features,
    similarity_scores,
    toy_features,
)

__all__ = [
    "LexEntry",
    "Lexicon",
    "compute_globals",
    "import_wordnet",
    "load_lexicon",
    "save_lexicon",
    "AnnotatedCaption",
    "Token",
    "annotate",
    "tokenize",
    "GeneralityReport",
    "aggregate",
    "bt_score",
    "da_score",
    "score_caption",
    "score_corpus",
    "si_score",
    "tm_score",
    "GENERAL",
    "FIVE_WORD",
    "GeneralizeRequest",
    "batch_generalize",
    "build_prompt",
    "generalize_caption",
    "mock_generalizer",
    "FeatureMatrix",
    "GaussianFit",
    "ReplicationResult",
    "SimilarityDistribution",
    "fit_gaussian",
    "frechet_distance",
    "load_features",
    "replication_score",
    "save_features",
    "similarity_scores",
    "toy_features",
]
