"""Recover completely missing node features for graphs in a dataset.

Node embeddings come from a graph autoencoder trained on local structural
features; features of a graph without observations are copied from the
closest nodes of the closest same-label graphs that have them.
"""

from .errors import RecoveryError
from .gae import GaeConfig, GaeModel, embed_all, graph_embedding, node_embeddings, project_2d, train_gae
from .gin import GinConfig, evaluate_accuracy, gin_forward, train_gin
from .graph import Dataset, Graph, SplitPlan, normalized_adjacency, one_hot_features, parse_tudataset, split_dataset
from .recovery import (
    baseline_features,
    build_neighbor_plan,
    lse_ng_estimate,
    lse_nn_estimate,
    nearest_graphs,
    nearest_nodes,
    recover_features,
    recovery_error,
    transfer_matrix,
)
from .structural import clustering_coefficient, egonet_edge_counts, structural_feature_matrix, zscore_normalize

__version__ = "0.1.0"
