"""From-scratch random forests with a compiled split-search kernel."""

from .core import (
    BACKEND,
    ClassForest,
    ForestParams,
    RegressionForest,
    Tree,
    class_votes,
    fit_classifier,
    fit_regression,
    from_json,
    load,
    predict,
    predict_class,
    save,
    to_json,
)

__all__ = [
    "BACKEND",
    "ClassForest",
    "ForestParams",
    "RegressionForest",
    "Tree",
    "class_votes",
    "fit_classifier",
    "fit_regression",
    "from_json",
    "load",
    "predict",
    "predict_class",
    "save",
    "to_json",
]
