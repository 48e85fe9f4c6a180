"""Prediction-based min-entropy estimators for binary sequences.

Four predictors: multi most-common-in-window, lag, multi Markov model
and LZ78Y.  Each one runs a set of sub-predictors moderated by a
scoreboard: the composite prediction comes from the current leader, and
a sub-predictor takes the lead when its score catches up.  The entropy
bound combines the global accuracy with a local bound derived from the
longest streak of correct predictions.

The per-step loops are jit-compiled when numba is available; the same
functions run as plain Python otherwise.
"""

from __future__ import annotations

import math

import numpy as np

from .estimators import EstimatorResult, _check_bits

try:  # pragma: no cover - exercised implicitly by which path runs
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


__all__ = [
    "multi_mcw",
    "lag_prediction",
    "multi_mmc",
    "lz78y",
    "HAVE_NUMBA",
]

_Z = 2.576


@njit(cache=True)
def _mcw_kernel(s):
    windows = np.array([63, 255, 1023, 4095], dtype=np.int64)
    length = s.size
    ones = np.zeros(4, dtype=np.int64)
    scores = np.zeros(4, dtype=np.int64)
    winner = 0
    n = 0
    correct = 0
    run = 0
    longest = 0
    for i in range(length):
        if i >= 63:
            n += 1
            ok = False
            if i >= windows[winner]:
                pred = 1 if 2 * ones[winner] > windows[winner] else 0
                ok = pred == s[i]
            if ok:
                correct += 1
                run += 1
                if run > longest:
                    longest = run
            else:
                run = 0
            for j in range(4):
                if i >= windows[j]:
                    predj = 1 if 2 * ones[j] > windows[j] else 0
                    if predj == s[i]:
                        scores[j] += 1
                        if scores[j] >= scores[winner]:
                            winner = j
        for j in range(4):
            ones[j] += s[i]
            if i >= windows[j]:
                ones[j] -= s[i - windows[j]]
    return correct, longest, n


@njit(cache=True)
def _lag_kernel(s):
    length = s.size
    depth = 128
    scores = np.zeros(depth, dtype=np.int64)
    winner = 0
    n = 0
    correct = 0
    run = 0
    longest = 0
    for i in range(1, length):
        n += 1
        ok = i >= winner + 1 and s[i - winner - 1] == s[i]
        if ok:
            correct += 1
            run += 1
            if run > longest:
                longest = run
        else:
            run = 0
        top = depth if depth < i else i
        for j in range(top):
            if s[i - j - 1] == s[i]:
                scores[j] += 1
                if scores[j] >= scores[winner]:
                    winner = j
    return correct, longest, n


@njit(cache=True)
def _mmc_kernel(s):
    length = s.size
    depth = 16
    counts = np.zeros((depth, 65536, 2), dtype=np.int64)
    scores = np.zeros(depth, dtype=np.int64)
    winner = 0
    window = 0
    n = 0
    correct = 0
    run = 0
    longest = 0
    for i in range(length):
        if i >= 2:
            n += 1
            ok = False
            d = winner + 1
            if i >= d:
                ctx = window & ((1 << d) - 1)
                c0 = counts[winner, ctx, 0]
                c1 = counts[winner, ctx, 1]
                if c0 > 0 or c1 > 0:
                    pred = 1 if c1 > c0 else 0
                    ok = pred == s[i]
            if ok:
                correct += 1
                run += 1
                if run > longest:
                    longest = run
            else:
                run = 0
            for j in range(depth):
                d = j + 1
                if i >= d:
                    ctx = window & ((1 << d) - 1)
                    c0 = counts[j, ctx, 0]
                    c1 = counts[j, ctx, 1]
                    if c0 > 0 or c1 > 0:
                        predj = 1 if c1 > c0 else 0
                        if predj == s[i]:
                            scores[j] += 1
                            if scores[j] >= scores[winner]:
                                winner = j
        # update the models with the observed transition
        for j in range(depth):
            d = j + 1
            if i >= d:
                ctx = window & ((1 << d) - 1)
                counts[j, ctx, s[i]] += 1
        window = ((window << 1) | s[i]) & 0xFFFF
    return correct, longest, n


@njit(cache=True)
def _lz78y_kernel(s):
    length = s.size
    back = 16
    max_entries = 65536
    counts = np.zeros((back, 65536, 2), dtype=np.int64)
    present = np.zeros((back, 65536), dtype=np.uint8)
    dict_size = 0
    n = 0
    correct = 0
    run = 0
    longest = 0
    if length < back + 2:
        return correct, longest, max(length - back - 1, 0)
    # window of the 16 symbols ending at s[i-2] (bit 0 = most recent)
    window = 0
    for k in range(back):
        window = (window << 1) | s[k]
    for i in range(back + 1, length):
        # grow the dictionary with contexts ending at s[i-2]
        for j in range(back, 0, -1):
            ctx = window & ((1 << j) - 1)
            if present[j - 1, ctx] == 1:
                counts[j - 1, ctx, s[i - 1]] += 1
            elif dict_size < max_entries:
                present[j - 1, ctx] = 1
                counts[j - 1, ctx, s[i - 1]] = 1
                dict_size += 1
        # predict s[i] from the window ending at s[i-1]; longer contexts
        # win ties, shorter ones need a strictly larger count
        wpred = ((window << 1) | s[i - 1]) & 0xFFFF
        best = 0
        pred = -1
        for j in range(back, 0, -1):
            ctx = wpred & ((1 << j) - 1)
            if present[j - 1, ctx] == 1:
                if counts[j - 1, ctx, 0] > best:
                    best = counts[j - 1, ctx, 0]
                    pred = 0
                if counts[j - 1, ctx, 1] > best:
                    best = counts[j - 1, ctx, 1]
                    pred = 1
        n += 1
        if pred == s[i]:
            correct += 1
            run += 1
            if run > longest:
                longest = run
        else:
            run = 0
        window = ((window << 1) | s[i - 1]) & 0xFFFF
    return correct, longest, n


def _no_run_prob(p: float, r: int, n: int) -> float:
    """Probability of seeing no success run of length r in n trials."""
    q = 1.0 - p
    x = 1.0
    for _ in range(128):
        x = 1.0 + q * p**r * x ** (r + 1)
    num = 1.0 - p * x
    den = (r + 1.0 - r * x) * q
    if num <= 0.0 or den <= 0.0 or x <= 0.0:
        return 0.0
    return math.exp(math.log(num) - math.log(den) - (n + 1) * math.log(x))


def _local_probability(longest_run: int, n: int) -> float:
    """Success probability whose run behaviour makes the observed longest
    streak a 99th-percentile event."""
    r = longest_run + 1
    lo, hi = 1e-12, 1.0 - 1e-12
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _no_run_prob(mid, r, n) > 0.99:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _predictor_result(name: str, correct: int, longest: int, n: int) -> EstimatorResult:
    if n < 2:
        return EstimatorResult(name, None, {"n": n})
    p_global = correct / n
    if correct == 0:
        p_global_u = 1.0 - 0.01 ** (1.0 / n)
    else:
        p_global_u = min(
            1.0, p_global + _Z * math.sqrt(p_global * (1.0 - p_global) / (n - 1))
        )
    if correct >= n:
        p = 1.0
        p_local = 1.0
    else:
        p_local = _local_probability(longest, n)
        p = max(p_global_u, p_local, 0.5)
    return EstimatorResult(
        name,
        -math.log2(p),
        {
            "n": n,
            "correct": correct,
            "longest_run": longest,
            "p_global_upper": p_global_u,
            "p_local": p_local,
        },
    )


def multi_mcw(bits: np.ndarray) -> EstimatorResult:
    bits = _check_bits(bits)
    if bits.size < 64:
        return EstimatorResult("MultiMCW", None, {"n": 0})
    c, r, n = _mcw_kernel(bits)
    return _predictor_result("MultiMCW", c, r, n)


def lag_prediction(bits: np.ndarray) -> EstimatorResult:
    bits = _check_bits(bits)
    if bits.size < 3:
        return EstimatorResult("LagPrediction", None, {"n": 0})
    c, r, n = _lag_kernel(bits)
    return _predictor_result("LagPrediction", c, r, n)


def multi_mmc(bits: np.ndarray) -> EstimatorResult:
    bits = _check_bits(bits)
    if bits.size < 4:
        return EstimatorResult("MultiMMC", None, {"n": 0})
    c, r, n = _mmc_kernel(bits)
    return _predictor_result("MultiMMC", c, r, n)


def lz78y(bits: np.ndarray) -> EstimatorResult:
    bits = _check_bits(bits)
    if bits.size < 19:
        return EstimatorResult("LZ78Y", None, {"n": 0})
    c, r, n = _lz78y_kernel(bits)
    return _predictor_result("LZ78Y", c, r, n)
