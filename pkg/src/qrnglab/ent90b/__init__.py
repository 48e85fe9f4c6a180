"""Min-entropy assessment for binary sequences: ten non-IID estimators."""

from .estimators import (
    EstimatorResult,
    collision,
    compression,
    markov,
    most_common_value,
    t_tuple_and_lrs,
)
from .predictors import HAVE_NUMBA, lag_prediction, lz78y, multi_mcw, multi_mmc
from .report import ABBREVIATIONS, ESTIMATOR_ORDER, EntropyReport, assess

__all__ = [
    "EstimatorResult",
    "EntropyReport",
    "ESTIMATOR_ORDER",
    "ABBREVIATIONS",
    "HAVE_NUMBA",
    "assess",
    "most_common_value",
    "collision",
    "markov",
    "compression",
    "t_tuple_and_lrs",
    "multi_mcw",
    "lag_prediction",
    "multi_mmc",
    "lz78y",
]
