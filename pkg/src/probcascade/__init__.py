"""Hierarchical single-label classification with flat, cascade and path-product strategies."""

from ._backend import BACKEND
from .corpus import Corpus, Document, IdfTable, parse_corpus, read_corpus, tfidf_transform
from .evaluation import EvalReport, RecallCurve, evaluate, recall_at_k
from .hierarchy import Hierarchy, ancestors, leaf_descendants, parse_hierarchy, read_hierarchy, tree_distance
from .linear import NodeClassifier, TrainConfig, LabeledSet, log_predict_proba, predict_proba, train_logistic
from .strategies import (
    FlatModel,
    HierModel,
    ScoredLeaf,
    build_features,
    cascade_predict,
    cascade_predict_batch,
    flat_predict,
    flat_predict_batch,
    load_model,
    node_training_set,
    ppath_predict,
    ppath_predict_batch,
    ppath_scores,
    save_model,
    top_k,
    train_flat,
    train_hierarchical,
)

__version__ = "0.1.0"
