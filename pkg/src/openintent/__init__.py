"""Discovery of novel intents and domains in embedded utterance corpora.

The pipeline runs in three stages over fixed-dimension utterance embeddings:
flag utterances whose intent was never seen in training, cluster them with
a metric learned from the labeled data (cut threshold transferred from the
seen intents), and group the discovered intent clusters into domains.
"""

__version__ = "0.1.0"

from .cluster import (ConstraintSet, Clustering, apply_constraints, bcubed_f1,
                      cluster_novel, complete_linkage, cut, pairwise_distances,
                      pairwise_f1, transfer_threshold)
from .config import RunConfig, config_from_dict, load_config
from .corpus import (Dataset, EmbeddingSet, Utterance, View, join,
                     load_embeddings, load_utterances, split_views,
                     write_embeddings, write_utterances)
from .detector import DocThresholds, NoveltyDetector, doc_threshold
from .errors import (ConfigError, ConstraintError, DataError, DivergenceError,
                     OpenIntentError)
from .metric import (EncoderNet, LossConfig, MetricTrainConfig, Quadruplet,
                     cosine_distance, quadruplet_loss, quadruplet_loss_and_grads,
                     sample_quadruplets, train_metric)
from .metrics import build_report, detection_f1, nmi, purity
from .pipeline import (cmd_detect, cmd_discover, cmd_evaluate, cmd_link,
                       cmd_pipeline)
from .taxonomy import (IntentCluster, Taxonomy, build_taxonomy,
                       compute_centroids, label_seen_clusters, link_domains,
                       novel_clusters, transfer_domain_threshold)

__all__ = [
    "__version__",
    "ConfigError", "ConstraintError", "DataError", "DivergenceError",
    "OpenIntentError",
    "Dataset", "EmbeddingSet", "Utterance", "View",
    "join", "load_embeddings", "load_utterances", "split_views",
    "write_embeddings", "write_utterances",
    "DocThresholds", "NoveltyDetector", "doc_threshold",
    "EncoderNet", "LossConfig", "MetricTrainConfig", "Quadruplet",
    "cosine_distance", "quadruplet_loss", "quadruplet_loss_and_grads",
    "sample_quadruplets", "train_metric",
    "ConstraintSet", "Clustering", "apply_constraints", "bcubed_f1",
    "cluster_novel", "complete_linkage", "cut", "pairwise_distances",
    "pairwise_f1", "transfer_threshold",
    "IntentCluster", "Taxonomy", "build_taxonomy", "compute_centroids",
    "label_seen_clusters", "link_domains", "novel_clusters",
    "transfer_domain_threshold",
    "build_report", "detection_f1", "nmi", "purity",
    "RunConfig", "config_from_dict", "load_config",
    "cmd_detect", "cmd_discover", "cmd_evaluate", "cmd_link", "cmd_pipeline",
]
