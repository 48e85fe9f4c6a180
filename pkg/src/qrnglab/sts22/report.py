"""Battery driver, report container and cross-stream aggregation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .params import FAMILIES, SUBTEST_COUNTS, TOTAL_SUBTESTS, Sts22Params
from .suite import SubtestResult, run_family

__all__ = [
    "Sts22Report",
    "run_battery",
    "proportion_pass",
    "uniformity",
    "ProportionResult",
    "UniformityResult",
    "HEATMAP_FAMILIES",
    "RULE_OF_THUMB_55",
]

# abbreviated family order used by the per-qubit summary heatmap; the
# plain frequency test is tracked separately as the ones-fraction column
HEATMAP_FAMILIES = (
    ("BlockFrequency", "BF"),
    ("CumulativeSums", "CS"),
    ("Runs", "Rns"),
    ("LongestRun", "LR"),
    ("Rank", "Rnk"),
    ("Spectral", "FFT"),
    ("NonOverlappingTemplate", "NOT"),
    ("OverlappingTemplate", "OT"),
    ("Universal", "Unv"),
    ("ApproximateEntropy", "AE"),
    ("RandomExcursions", "RE"),
    ("RandomExcursionsVariant", "REV"),
    ("Serial", "Srl"),
    ("LinearComplexity", "LC"),
)

# widely quoted minimum passing count for 55 streams at alpha=0.01;
# reported alongside the exact binomial threshold for reference
RULE_OF_THUMB_55 = 52


@dataclass(frozen=True)
class Sts22Report:
    """Results of a full battery run on one bitstream."""

    n: int
    results: tuple[SubtestResult, ...]

    def __post_init__(self) -> None:
        if len(self.results) != TOTAL_SUBTESTS:
            raise ValueError(
                f"a complete battery has {TOTAL_SUBTESTS} subtests, got {len(self.results)}"
            )

    def family(self, name: str) -> list[SubtestResult]:
        return [r for r in self.results if r.family == name]

    def p_values(self, include_na: bool = False) -> list[float | None]:
        if include_na:
            return [r.p_value for r in self.results]
        return [r.p_value for r in self.results if r.p_value is not None]

    def family_worst_p(self, name: str) -> float | None:
        """Smallest applicable p-value in a family, None when all rows are NA."""
        ps = [r.p_value for r in self.family(name) if r.p_value is not None]
        return min(ps) if ps else None

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.results:
            out[r.family] = out.get(r.family, 0) + 1
        return out

    def to_document(self) -> dict:
        rows = []
        for r in self.results:
            rows.append(
                {
                    "family": r.family,
                    "index": r.index,
                    "label": r.label,
                    "p_value": None if r.p_value is None else round(r.p_value, 6),
                    "statistic": None if r.statistic is None else float(r.statistic),
                    "status": "NA" if r.p_value is None else ("pass" if r.p_value >= 0.01 else "fail"),
                }
            )
        return {"bits": self.n, "subtests": rows}


def run_battery(bits: np.ndarray, params: Sts22Params | None = None) -> Sts22Report:
    """Run all fifteen families in canonical order.

    Requires at least 100 bits; individual families that need more
    simply report not-applicable rows.
    """
    bits = np.asarray(bits)
    if bits.ndim != 1:
        raise ValueError("stream must be 1-d")
    if bits.size < 100:
        raise ValueError("battery needs at least 100 bits")
    params = params or Sts22Params()
    results: list[SubtestResult] = []
    for family in FAMILIES:
        rows = run_family(family, bits, params)
        if len(rows) != SUBTEST_COUNTS[family]:
            raise AssertionError(
                f"{family}: {len(rows)} rows, expected {SUBTEST_COUNTS[family]}"
            )
        results.extend(rows)
    return Sts22Report(n=int(bits.size), results=tuple(results))


@dataclass(frozen=True)
class ProportionResult:
    passed: int
    sequences: int
    threshold: int
    ok: bool
    rule_of_thumb: int | None


def proportion_pass(
    p_values: list[float], alpha: float = 0.01, sequences: int | None = None
) -> ProportionResult:
    """Proportion-of-sequences rule for a single subtest across streams.

    ``threshold`` is the usual three-sigma bound on the expected pass
    proportion: ceil(N * ((1 - alpha) - 3 * sqrt(alpha(1-alpha)/N))).
    """
    if sequences is None:
        sequences = len(p_values)
    if sequences <= 0:
        raise ValueError("need at least one sequence")
    if len(p_values) > sequences:
        raise ValueError("more p-values than sequences")
    if any(p is None for p in p_values):
        raise ValueError("filter not-applicable entries before aggregation")
    passed = sum(1 for p in p_values if p >= alpha)
    bound = (1.0 - alpha) - 3.0 * math.sqrt(alpha * (1.0 - alpha) / sequences)
    threshold = math.ceil(sequences * bound)
    return ProportionResult(
        passed=passed,
        sequences=sequences,
        threshold=threshold,
        ok=passed >= threshold,
        rule_of_thumb=RULE_OF_THUMB_55 if sequences == 55 else None,
    )


@dataclass(frozen=True)
class UniformityResult:
    p_value: float
    chi2: float
    threshold: float
    ok: bool


def uniformity(p_values: list[float], threshold: float = 1e-4) -> UniformityResult:
    """Chi-square uniformity of subtest p-values across streams (10 bins)."""
    ps = [p for p in p_values if p is not None]
    if not ps:
        raise ValueError("need at least one p-value")
    if len(ps) < 55:
        warnings.warn(
            f"uniformity assessed on {len(ps)} p-values; below 55 the "
            "chi-square approximation is unreliable",
            stacklevel=2,
        )
    arr = np.asarray(ps, dtype=np.float64)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("p-values must lie in [0, 1]")
    cats = np.minimum((arr * 10).astype(np.int64), 9)
    counts = np.bincount(cats, minlength=10)
    expected = arr.size / 10.0
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    p = float(gammaincc(9.0 / 2.0, chi2 / 2.0))
    return UniformityResult(p_value=p, chi2=chi2, threshold=threshold, ok=p >= threshold)
