"""From-scratch classifiers (NB, RF, SVM/SMO) plus model persistence."""

from .forest import (RFModel, TreeNode, impurity, predict_rf,
                     rf_feature_importance, train_rf)
from .model import (ALGORITHMS, DEFAULT_PARAMS, MODEL_FORMAT_VERSION,
                    ModelSpec, Prediction, TrainedModel, load_model,
                    save_model, train_model)
from .nb import NBModel, predict_nb, train_nb
from .svm import (KernelSpec, SVMModel, decision_function, kernel_eval,
                  kernel_matrix, predict_svm, resolve_gamma, train_svm_smo)

__all__ = [
    "ALGORITHMS", "DEFAULT_PARAMS", "MODEL_FORMAT_VERSION",
    "KernelSpec", "ModelSpec", "NBModel", "Prediction", "RFModel",
    "SVMModel", "TrainedModel", "TreeNode", "decision_function", "impurity",
    "kernel_eval", "kernel_matrix", "load_model", "predict_nb", "predict_rf",
    "predict_svm", "rf_feature_importance", "resolve_gamma", "save_model",
    "train_model", "train_nb", "train_rf", "train_svm_smo",
]
