"""Entity extraction: recognition, linking, NIL prediction, clustering."""

from .clustering import cluster_mentions
from .community import Partition, WeightedMentionGraph, louvain_partition, modularity
from .embedding import EMBED_DIM, cosine, embed, is_empty_embedding, participant_repr
from .linking import (
    decide_link,
    default_nil_model,
    link_mention,
    load_kb_tsv,
    nil_predict,
    participant_entries,
)
from .logistic import DegenerateFeatureWarning, LogisticModel, accuracy, train_logistic
from .pipeline import ExtractionStats, PipelineResult, run_pipeline
from .recognize import recognize_mentions
from .similarity import (
    default_pair_model,
    jaccard_tokens,
    jaro_winkler,
    pair_features,
    pair_score,
)
from ..entities import KBEntry, LinkDecision, Mention, MentionCluster

__all__ = [
    "EMBED_DIM",
    "DegenerateFeatureWarning",
    "ExtractionStats",
    "KBEntry",
    "LinkDecision",
    "LogisticModel",
    "Mention",
    "MentionCluster",
    "Partition",
    "PipelineResult",
    "WeightedMentionGraph",
    "accuracy",
    "cluster_mentions",
    "cosine",
    "decide_link",
    "default_nil_model",
    "default_pair_model",
    "embed",
    "is_empty_embedding",
    "jaccard_tokens",
    "jaro_winkler",
    "link_mention",
    "load_kb_tsv",
    "louvain_partition",
    "modularity",
    "nil_predict",
    "pair_features",
    "pair_score",
    "participant_entries",
    "participant_repr",
    "recognize_mentions",
    "run_pipeline",
    "train_logistic",
]
