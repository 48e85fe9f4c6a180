"""Readout-bias model: expected ones fractions, chi-square goodness of fit,
and the per-qubit frequency summary tables.

The model covers assignment error only. Every circuit family prepares each
measured qubit with an exactly half/half ideal marginal (all three prep
gates are quarter-turns from any basis state, so this holds even for the
repeated C5 measurements without reset), which the confusion matrix maps to

    Pr(read 1) = (1 - p01)/2 + p10/2 = 1/2 - (p01 - p10)/2

per qubit. Multi-qubit entries average the per-qubit values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaincc, gammaln

from .families import GATE_CHOICES, CircuitSpec
from .qcore import CalibrationSnapshot

__all__ = [
    "ChiSquareFit",
    "chi2_fit",
    "expected_ones_fraction",
    "frequency_summary",
]

_MIN_EXPECTED = 5.0


def expected_ones_fraction(
    calibration: CalibrationSnapshot,
    spec: CircuitSpec,
    *,
    bias_increment: float = 0.0,
) -> float:
    """Model ones fraction for a grid entry under readout confusion.

    ``bias_increment`` is an additive offset applied to the extra-gate
    families (C4, C5) for comparing against runs with a fitted or
    deliberately injected preparation offset; it defaults to zero.
    """
    per_qubit = []
    for q in spec.qubits:
        c = calibration[q]
        per_qubit.append(0.5 - (c.p01 - c.p10) / 2.0)
    value = float(np.mean(per_qubit))
    if spec.family in ("C4", "C5"):
        value += bias_increment
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"model fraction {value} outside [0, 1]")
    return value


@dataclass(frozen=True)
class ChiSquareFit:
    """Goodness-of-fit result after low-expectation bins were pooled.

    ``p_value`` underflows to 0.0 in the extreme-deficit regime;
    ``log10_p`` stays finite there and is the value to report.
    """

    chi2: float
    dof: int
    p_value: float
    log10_p: float
    bins: int

    def rejected(self, alpha: float = 0.01) -> bool:
        return self.p_value < alpha

    def to_dict(self) -> dict:
        return {
            "chi2": self.chi2,
            "dof": self.dof,
            "p": self.p_value,
            "log10p": self.log10_p,
            "bins": self.bins,
        }


def _log10_survival(a: float, x: float) -> float:
    """log10 of the upper regularized gamma Q(a, x), stable for huge x.

    Direct evaluation underflows to zero near p ~ 1e-308; the asymptotic
    expansion Q(a, x) ~ x^(a-1) e^(-x) / Gamma(a) * [1 + (a-1)/x + ...]
    keeps the logarithm finite.
    """
    if x == 0.0:
        return 0.0
    direct = float(gammaincc(a, x))
    if direct > 1e-280:
        return math.log10(direct)
    series = 1.0
    term = 1.0
    for k in range(1, 64):
        factor = (a - k) / x
        term *= factor
        if abs(term) < 1e-18 or factor <= 0:
            break
        series += term
    ln_q = (a - 1.0) * math.log(x) - x - float(gammaln(a)) + math.log(max(series, 1e-30))
    return ln_q / math.log(10.0)


def _pool_bins(observed: np.ndarray, expected: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # repeatedly merge the two smallest-expectation bins until every bin
    # expects at least 5 counts; ties broken on observed count so the
    # outcome does not depend on input ordering
    cells = sorted(zip(expected.tolist(), observed.tolist()))
    while len(cells) > 1 and cells[0][0] < _MIN_EXPECTED:
        (e0, o0), (e1, o1) = cells[0], cells[1]
        cells = sorted([(e0 + e1, o0 + o1)] + cells[2:])
    exp, obs = zip(*cells)
    return np.asarray(obs, dtype=np.float64), np.asarray(exp, dtype=np.float64)


def chi2_fit(
    observed: Sequence[int],
    probabilities: Sequence[float],
    total: int | None = None,
) -> ChiSquareFit:
    """Pearson chi-square of an outcome histogram against model probabilities.

    ``total``, when given, must equal the histogram sum (consistency check
    for callers that track shot counts separately).
    """
    obs = np.asarray(observed, dtype=np.float64)
    probs = np.asarray(probabilities, dtype=np.float64)
    if obs.shape != probs.shape or obs.ndim != 1 or obs.size < 2:
        raise ValueError("observed and probabilities must be equal-length vectors (>= 2)")
    if np.any(obs < 0) or np.any(probs < 0):
        raise ValueError("negative counts or probabilities")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {probs.sum()}, not 1")
    count = obs.sum()
    if count <= 0:
        raise ValueError("histogram is empty")
    if total is not None and int(count) != int(total):
        raise ValueError(f"histogram sums to {int(count)}, caller declared {total}")
    obs_pooled, exp_pooled = _pool_bins(obs, probs * count)
    if obs_pooled.size < 2:
        raise ValueError("too few counts: pooling collapsed the histogram to one bin")
    stat = float(((obs_pooled - exp_pooled) ** 2 / exp_pooled).sum())
    dof = obs_pooled.size - 1
    log10_p = _log10_survival(dof / 2.0, stat / 2.0)
    return ChiSquareFit(
        chi2=stat,
        dof=dof,
        p_value=float(gammaincc(dof / 2.0, stat / 2.0)),
        log10_p=log10_p,
        bins=int(obs_pooled.size),
    )


def _column_layout() -> list[tuple[str, str]]:
    return [(f, g) for f in ("C1", "C2", "C4", "C5") for g in GATE_CHOICES]


def _avg_sd(values: list[float | None]) -> tuple[float | None, float | None]:
    present = [v for v in values if v is not None]
    if not present:
        return None, None
    arr = np.asarray(present, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def frequency_summary(results) -> dict:
    """Arrange per-spec ones fractions into the two summary tables.

    ``results``: (spec, fraction) pairs or an equivalent mapping. Main
    table: qubit rows x (C1/C2/C4/C5 x gate) columns, plus a "flatten"
    row holding the simultaneous-run aggregate for each C2 column (the
    mean of the per-qubit C2 cells, which equals the flattened stream's
    fraction for equal-length per-qubit streams). Column statistics cover
    the qubit rows only. The GHZ table lists every C3 subset against the
    three gate choices. Population standard deviations throughout.
    """
    if isinstance(results, Mapping):
        results = results.items()
    main_cells: dict[tuple[int, tuple[str, str]], float] = {}
    ghz_cells: dict[tuple[tuple[int, ...], str], float] = {}
    qubit_ids: set[int] = set()
    subsets: set[tuple[int, ...]] = set()
    for spec, value in results:
        if spec.family == "C3":
            key = (spec.qubits, spec.gate)
            if key in ghz_cells:
                raise ValueError(f"duplicate cell for {spec.label()}")
            ghz_cells[key] = float(value)
            subsets.add(spec.qubits)
            continue
        if len(spec.qubits) != 1:
            raise ValueError(
                f"frequency summary expects per-qubit grid entries, got {spec.label()}"
            )
        (q,) = spec.qubits
        cell = (q, (spec.family, spec.gate))
        if cell in main_cells:
            raise ValueError(f"duplicate cell for {spec.label()}")
        main_cells[cell] = float(value)
        qubit_ids.add(q)
    if not main_cells and not ghz_cells:
        raise ValueError("no results to summarize")

    columns = _column_layout()
    rows = []
    for q in sorted(qubit_ids):
        cells = [main_cells.get((q, col)) for col in columns]
        avg, sd = _avg_sd(cells)
        rows.append({"label": f"q{q}", "cells": cells, "avg": avg, "sd": sd})

    flat_cells: list[float | None] = []
    for family, gate in columns:
        if family != "C2":
            flat_cells.append(None)
            continue
        per_qubit = [main_cells.get((q, ("C2", gate))) for q in sorted(qubit_ids)]
        present = [v for v in per_qubit if v is not None]
        flat_cells.append(float(np.mean(present)) if present else None)
    flat_avg, flat_sd = _avg_sd(flat_cells)
    rows.append({"label": "flatten", "cells": flat_cells, "avg": flat_avg, "sd": flat_sd})

    column_avg = []
    column_sd = []
    for j, col in enumerate(columns):
        vals = [row["cells"][j] for row in rows[:-1]]
        avg, sd = _avg_sd(vals)
        column_avg.append(avg)
        column_sd.append(sd)

    ghz_rows = []
    for subset in sorted(subsets, key=lambda s: (len(s), s)):
        cells = [ghz_cells.get((subset, g)) for g in GATE_CHOICES]
        avg, sd = _avg_sd(cells)
        label = ",".join(str(q) for q in subset)
        ghz_rows.append({"label": label, "cells": cells, "avg": avg, "sd": sd})
    ghz_col_avg = []
    ghz_col_sd = []
    for j in range(len(GATE_CHOICES)):
        vals = [row["cells"][j] for row in ghz_rows]
        avg, sd = _avg_sd(vals)
        ghz_col_avg.append(avg)
        ghz_col_sd.append(sd)

    return {
        "main": {
            "columns": [f"{f}/{g}" for f, g in columns],
            "rows": rows,
            "column_avg": column_avg,
            "column_sd": column_sd,
        },
        "ghz": {
            "columns": list(GATE_CHOICES),
            "rows": ghz_rows,
            "column_avg": ghz_col_avg,
            "column_sd": ghz_col_sd,
        },
    }
