"""Random forest and dense-network classifiers over feature matrices."""
from .forest import ForestHyper, Tree, best_split, gini
from .mlp import MlpHyper, Network
from .model import (EvalReport, TrainedModel, class_order, evaluate, mlp_loss_gradients,
                    predict, report_from_predictions, stratified_split,
                    stratified_split_indices, train_forest, train_mlp)

__all__ = [
    "ForestHyper", "MlpHyper", "Network", "Tree", "TrainedModel", "EvalReport",
    "best_split", "gini", "class_order", "evaluate", "mlp_loss_gradients", "predict",
    "report_from_predictions", "stratified_split", "stratified_split_indices",
    "train_forest", "train_mlp",
]
