"""Full non-IID entropy assessment: ten estimators, minimum wins."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import (
    EstimatorResult,
    _check_bits,
    collision,
    compression,
    markov,
    most_common_value,
    t_tuple_and_lrs,
)
from .predictors import lag_prediction, lz78y, multi_mcw, multi_mmc

__all__ = ["EntropyReport", "assess", "ESTIMATOR_ORDER", "ABBREVIATIONS"]

ESTIMATOR_ORDER = (
    "MCV",
    "Collision",
    "Markov",
    "Compression",
    "TTuple",
    "LRS",
    "MultiMCW",
    "LagPrediction",
    "MultiMMC",
    "LZ78Y",
)

# short column names used in serialized summaries
ABBREVIATIONS = {
    "MCV": "MCV",
    "Collision": "ClT",
    "Markov": "MrT",
    "Compression": "CmT",
    "TTuple": "TTT",
    "LRS": "LRS",
    "MultiMCW": "MMCWT",
    "LagPrediction": "LPT",
    "MultiMMC": "MMMCT",
    "LZ78Y": "LZ78Y",
}


@dataclass(frozen=True)
class EntropyReport:
    length: int
    results: tuple[EstimatorResult, ...]

    def __post_init__(self) -> None:
        names = [r.name for r in self.results]
        if names != list(ESTIMATOR_ORDER):
            raise ValueError("report must carry all ten estimators in order")

    def estimate(self, name: str) -> EstimatorResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def min_entropy(self) -> float:
        """Smallest per-bit estimate over all applicable estimators."""
        hs = [r.h for r in self.results if r.h is not None]
        if not hs:
            raise ValueError("no estimator was applicable")
        return min(hs)

    @property
    def h_original(self) -> float:
        return self.min_entropy

    @property
    def h_assessed(self) -> float:
        # only the original sequence is assessed, so the assessed value
        # is the original-track minimum
        return self.h_original

    def to_document(self) -> dict:
        cols = {}
        for r in self.results:
            cols[ABBREVIATIONS[r.name]] = None if r.h is None else round(r.h, 6)
        return {
            "bits": self.length,
            **cols,
            "hOr": round(self.h_original, 6),
            "hAs": round(self.h_assessed, 6),
            "minE": round(self.min_entropy, 6),
        }


def assess(bits: np.ndarray) -> EntropyReport:
    """Run all ten estimators on a bitstream of at least 1000 bits."""
    bits = _check_bits(bits)
    if bits.size < 1000:
        raise ValueError("entropy assessment needs at least 1000 bits")
    ttuple, lrs = t_tuple_and_lrs(bits)
    results = (
        most_common_value(bits),
        collision(bits),
        markov(bits),
        compression(bits),
        ttuple,
        lrs,
        multi_mcw(bits),
        lag_prediction(bits),
        multi_mmc(bits),
        lz78y(bits),
    )
    return EntropyReport(length=int(bits.size), results=results)
