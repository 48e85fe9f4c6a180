"""Parameter block and applicability rules for the statistical battery."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["Sts22Params", "FAMILIES", "SUBTEST_COUNTS", "TOTAL_SUBTESTS"]

# canonical family order; reports list subtests in this order
FAMILIES = (
    "Frequency",
    "BlockFrequency",
    "CumulativeSums",
    "Runs",
    "LongestRun",
    "Rank",
    "Spectral",
    "NonOverlappingTemplate",
    "OverlappingTemplate",
    "Universal",
    "ApproximateEntropy",
    "RandomExcursions",
    "RandomExcursionsVariant",
    "Serial",
    "LinearComplexity",
)

SUBTEST_COUNTS = {
    "Frequency": 1,
    "BlockFrequency": 1,
    "CumulativeSums": 2,
    "Runs": 1,
    "LongestRun": 1,
    "Rank": 1,
    "Spectral": 1,
    "NonOverlappingTemplate": 148,
    "OverlappingTemplate": 1,
    "Universal": 1,
    "ApproximateEntropy": 1,
    "RandomExcursions": 8,
    "RandomExcursionsVariant": 18,
    "Serial": 2,
    "LinearComplexity": 1,
}

TOTAL_SUBTESTS = sum(SUBTEST_COUNTS.values())  # 188


@dataclass(frozen=True)
class Sts22Params:
    """Tunable block sizes for the battery.

    Defaults follow the standard recommendations for megabit streams.
    ``overlapping_m`` is fixed at 9 because the reference category
    probabilities are tabulated for that template length with 1032-bit
    blocks.
    """

    block_frequency_m: int = 128
    template_m: int = 9
    overlapping_m: int = 9
    universal_l: int | None = None  # None: choose from stream length
    approximate_entropy_m: int = 10
    serial_m: int = 16
    linear_complexity_m: int = 500

    def __post_init__(self) -> None:
        if self.block_frequency_m < 1:
            raise ValueError("block_frequency_m must be positive")
        if self.template_m < 2:
            raise ValueError("template_m must be at least 2")
        if self.overlapping_m != 9:
            raise ValueError(
                "overlapping_m is fixed at 9; category probabilities are "
                "tabulated for 9-bit templates in 1032-bit blocks"
            )
        if self.universal_l is not None and not 6 <= self.universal_l <= 16:
            raise ValueError("universal_l must be in 6..16")
        if self.approximate_entropy_m < 1:
            raise ValueError("approximate_entropy_m must be positive")
        if self.serial_m < 3:
            raise ValueError("serial_m must be at least 3")
        if self.linear_complexity_m < 4:
            raise ValueError("linear_complexity_m must be at least 4")


# least stream length at which the universal test switches to block size L
_UNIVERSAL_THRESHOLDS = (
    (6, 387_840),
    (7, 904_960),
    (8, 2_068_480),
    (9, 4_654_080),
    (10, 10_342_400),
    (11, 22_753_280),
    (12, 49_643_520),
    (13, 107_560_960),
    (14, 231_669_760),
    (15, 496_435_200),
    (16, 1_059_061_760),
)


def universal_block_size(n: int) -> int | None:
    """Auto-selected L for the universal test, or None when n is too short."""
    chosen = None
    for level, least in _UNIVERSAL_THRESHOLDS:
        if n >= least:
            chosen = level
    return chosen


def applicable(family: str, n: int, params: Sts22Params) -> bool:
    """Length-based applicability; data-dependent gates are checked later.

    RandomExcursions / RandomExcursionsVariant additionally require at
    least 500 walk cycles, which only the data can decide.
    """
    if family == "Frequency":
        return n >= 1
    if family == "BlockFrequency":
        return n >= params.block_frequency_m
    if family == "CumulativeSums":
        return n >= 2
    if family == "Runs":
        return n >= 2
    if family == "LongestRun":
        return n >= 128
    if family == "Rank":
        return n >= 38 * 1024
    if family == "Spectral":
        return n >= 1000
    if family == "NonOverlappingTemplate":
        return n >= 8 * 2**params.template_m
    if family == "OverlappingTemplate":
        return n >= 1_000_000
    if family == "Universal":
        if params.universal_l is not None:
            q = 10 * 2**params.universal_l
            return n // params.universal_l > 2 * q
        return universal_block_size(n) is not None
    if family == "ApproximateEntropy":
        return n >= 2 and params.approximate_entropy_m < math.floor(math.log2(n)) - 5
    if family in ("RandomExcursions", "RandomExcursionsVariant"):
        return n >= 128
    if family == "Serial":
        return n >= 2 and params.serial_m < math.floor(math.log2(n)) - 2
    if family == "LinearComplexity":
        return n // params.linear_complexity_m >= 200
    raise KeyError(f"unknown family: {family}")
