"""Statistical randomness battery: fifteen test families, 188 subtests."""

from .params import FAMILIES, SUBTEST_COUNTS, TOTAL_SUBTESTS, Sts22Params
from .report import (
    HEATMAP_FAMILIES,
    RULE_OF_THUMB_55,
    ProportionResult,
    Sts22Report,
    UniformityResult,
    proportion_pass,
    run_battery,
    uniformity,
)
from .suite import SubtestResult, run_family
from .templates import aperiodic_template_values

__all__ = [
    "FAMILIES",
    "SUBTEST_COUNTS",
    "TOTAL_SUBTESTS",
    "Sts22Params",
    "SubtestResult",
    "Sts22Report",
    "ProportionResult",
    "UniformityResult",
    "HEATMAP_FAMILIES",
    "RULE_OF_THUMB_55",
    "run_family",
    "run_battery",
    "proportion_pass",
    "uniformity",
    "aperiodic_template_values",
]
