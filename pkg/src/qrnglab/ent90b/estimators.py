"""Statistical min-entropy estimators for binary sequences.

Six estimators: most common value, collision, Markov, compression,
t-tuple and longest repeated substring.  Each returns a per-bit
min-entropy estimate in [0, 1], or None when the sequence is too short
or degenerate for that statistic.  All upper confidence bounds use the
2.576 z-score (99% two-sided).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EstimatorResult",
    "most_common_value",
    "collision",
    "markov",
    "compression",
    "t_tuple_and_lrs",
]

_Z = 2.576


@dataclass(frozen=True)
class EstimatorResult:
    name: str
    h: float | None
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        # -log2(1.0) gives -0.0; report a clean zero
        if self.h == 0.0:
            object.__setattr__(self, "h", 0.0)


def _check_bits(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.size == 0:
        raise ValueError("need a non-empty 1-d bit array")
    if bits.dtype != np.uint8:
        bits = bits.astype(np.uint8)
    if bits.max(initial=0) > 1:
        raise ValueError("bits must be 0 or 1")
    return bits


# --- most common value ----------------------------------------------------


def most_common_value(bits: np.ndarray) -> EstimatorResult:
    bits = _check_bits(bits)
    n = bits.size
    ones = int(bits.sum())
    p_hat = max(ones, n - ones) / n
    if n < 2:
        return EstimatorResult("MCV", 0.0, {"p_hat": p_hat, "p_upper": 1.0})
    p_u = min(1.0, p_hat + _Z * math.sqrt(p_hat * (1.0 - p_hat) / (n - 1)))
    return EstimatorResult("MCV", -math.log2(p_u), {"p_hat": p_hat, "p_upper": p_u})


# --- collision ------------------------------------------------------------


def _collision_mean(p: float) -> float:
    """Expected distance to the first repeated bit under bias p.

    Collapsed form of the truncated-sum expression: a length-2 window
    collides with probability p^2 + q^2, else the walk takes 3 steps,
    so E[t] = 2(p^2 + q^2) + 3(2pq) = 2 + 2pq.  The reduced expression
    stays stable as p -> 1 where the ratio form cancels catastrophically.
    """
    return 2.0 + 2.0 * p * (1.0 - p)


def collision(bits: np.ndarray) -> EstimatorResult:
    bits = _check_bits(bits)
    # jump walk: a window of two equal bits collides at distance 2,
    # otherwise the third bit must repeat one of the first two
    b = bits
    ts = []
    i = 0
    while i + 1 < b.size:
        if b[i] == b[i + 1]:
            ts.append(2)
            i += 2
        else:
            if i + 2 >= b.size:
                break
            ts.append(3)
            i += 3
    v = len(ts)
    if v < 2:
        return EstimatorResult("Collision", None, {"v": v})
    arr = np.asarray(ts, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1))
    x_prime = mean - _Z * std / math.sqrt(v)
    details = {"v": v, "mean": mean, "x_bar_prime": x_prime}
    if x_prime >= _collision_mean(0.5):
        # statistic consistent with (or beyond) a fair coin
        return EstimatorResult("Collision", 1.0, {**details, "p": 0.5})
    if x_prime <= 2.0:
        # at or below the analytic minimum of the mean map: no evidence
        # of entropy at all
        return EstimatorResult("Collision", 0.0, {**details, "p": 1.0})
    lo, hi = 0.5, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _collision_mean(mid) > x_prime:
            lo = mid
        else:
            hi = mid
    p = 0.5 * (lo + hi)
    return EstimatorResult("Collision", -math.log2(p), {**details, "p": p})


# --- Markov ---------------------------------------------------------------


def markov(bits: np.ndarray) -> EstimatorResult:
    bits = _check_bits(bits)
    if bits.size < 2:
        return EstimatorResult("Markov", None, {})
    n = bits.size
    ones = int(bits.sum())
    p1 = ones / n
    p0 = 1.0 - p1
    prev = bits[:-1]
    nxt = bits[1:]
    c01 = int(((prev == 0) & (nxt == 1)).sum())
    c0 = int((prev == 0).sum())
    c10 = int(((prev == 1) & (nxt == 0)).sum())
    c1 = int((prev == 1).sum())
    p01 = c01 / c0 if c0 else 0.0
    p00 = 1.0 - p01 if c0 else 0.0
    p10 = c10 / c1 if c1 else 0.0
    p11 = 1.0 - p10 if c1 else 0.0

    def lg(x: float) -> float:
        return math.log2(x) if x > 0.0 else -math.inf

    # log-probability of each maximally likely 128-step path shape
    candidates = [
        lg(p0) + 127.0 * lg(p00),
        lg(p0) + 64.0 * lg(p01) + 63.0 * lg(p10),
        lg(p0) + lg(p01) + 126.0 * lg(p11),
        lg(p1) + lg(p10) + 126.0 * lg(p00),
        lg(p1) + 64.0 * lg(p10) + 63.0 * lg(p01),
        lg(p1) + 127.0 * lg(p11),
    ]
    best = max(candidates)
    if best == -math.inf:
        return EstimatorResult("Markov", None, {})
    h = min(-best / 128.0, 1.0)
    return EstimatorResult(
        "Markov", h, {"p_max_log2": best, "p00": p00, "p01": p01, "p10": p10, "p11": p11}
    )


# --- compression ----------------------------------------------------------

_COMPRESSION_B = 6
_COMPRESSION_D = 1000
_COMPRESSION_C = 0.5907


def _compression_g(z: float, v: int, d: int) -> float:
    """Sum of expected log2 distances contributed by a symbol of probability z."""
    if z <= 0.0:
        return 0.0
    k = v - d
    u = np.arange(1, v, dtype=np.float64)
    logs = np.log2(u)
    decay = np.exp(np.log1p(-z) * (u - 1.0))
    # inner term: sum over t of z^2 (1-z)^(u-1) log2(u) for u < t collapses
    # to a weight of (v - max(u, d)) occurrences of each u
    weight = v - np.maximum(u, float(d))
    inner = float((z * z * decay * logs * weight).sum())
    t = np.arange(d + 1, v + 1, dtype=np.float64)
    tail = float((z * np.exp(np.log1p(-z) * (t - 1.0)) * np.log2(t)).sum())
    return (inner + tail) / k


def compression(bits: np.ndarray) -> EstimatorResult:
    bits = _check_bits(bits)
    b = _COMPRESSION_B
    v = bits.size // b
    d = _COMPRESSION_D
    k = v - d
    if k < 2:
        return EstimatorResult("Compression", None, {"blocks": v})
    weights = (np.int64(1) << np.arange(b - 1, -1, -1, dtype=np.int64))[None, :]
    vals = (bits[: v * b].reshape(v, b).astype(np.int64) * weights).sum(axis=1)
    order = np.argsort(vals, kind="stable")
    prev = np.zeros(v, dtype=np.int64)
    same = vals[order[1:]] == vals[order[:-1]]
    prev[order[1:][same]] = order[:-1][same] + 1
    pos = np.arange(1, v + 1)
    dist = (pos - prev)[d:]
    logs = np.log2(dist.astype(np.float64))
    mean = float(logs.mean())
    var = float((logs * logs).mean() - mean * mean)
    x_prime = mean - _Z * _COMPRESSION_C * math.sqrt(max(var, 0.0)) / math.sqrt(k)

    def g_full(p: float) -> float:
        q = (1.0 - p) / (2.0**b - 1.0)
        return _compression_g(p, v, d) + (2.0**b - 1.0) * _compression_g(q, v, d)

    lo = 1.0 / 2.0**b
    details = {"blocks": v, "x_bar": mean, "x_bar_prime": x_prime}
    if g_full(lo) <= x_prime:
        return EstimatorResult("Compression", 1.0, {**details, "p": lo})
    hi = 1.0 - 1e-9
    if g_full(hi) >= x_prime:
        return EstimatorResult("Compression", 0.0, {**details, "p": 1.0})
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if g_full(mid) > x_prime:
            lo = mid
        else:
            hi = mid
    p = 0.5 * (lo + hi)
    h = min(-math.log2(p) / b, 1.0)
    return EstimatorResult("Compression", h, {**details, "p": p})


# --- t-tuple and longest repeated substring -------------------------------

_TUPLE_CUTOFF = 35
_TUPLE_CAP = 64  # window lengths are tracked in a 64-bit rolling word


def _tuple_scan(bits: np.ndarray, cap: int = _TUPLE_CAP):
    """Per window length t: (max repeat count, sum over values of C(c,2)).

    Stops once no window value repeats (or at the cap).  Window values
    are maintained in a rolling 64-bit word, extending one bit per level.
    """
    n = bits.size
    stats = []
    words = bits.astype(np.uint64)
    for t in range(1, min(cap, n) + 1):
        if t > 1:
            # extend each surviving window by its next bit
            words = (words[:-1] << np.uint64(1)) | bits[t - 1 :].astype(np.uint64)
        _, counts = np.unique(words, return_counts=True)
        cmax = int(counts.max())
        coll = float((counts.astype(np.float64) * (counts - 1.0)).sum() / 2.0)
        stats.append((t, cmax, coll))
        if cmax < 2:
            break
    return stats


def t_tuple_and_lrs(bits: np.ndarray) -> tuple[EstimatorResult, EstimatorResult]:
    bits = _check_bits(bits)
    n = bits.size
    stats = _tuple_scan(bits)
    by_t = {t: (cmax, coll) for t, cmax, coll in stats}

    # t-tuple: largest t whose most common tuple still repeats >= 35 times
    t_max = 0
    for t, cmax, _ in stats:
        if cmax >= _TUPLE_CUTOFF:
            t_max = t
    if t_max == 0:
        ttuple = EstimatorResult("TTuple", None, {"t_max": 0})
    else:
        p_hat = 0.0
        for t in range(1, t_max + 1):
            cmax = by_t[t][0]
            p_hat = max(p_hat, (cmax / (n - t + 1)) ** (1.0 / t))
        p_u = min(1.0, p_hat + _Z * math.sqrt(p_hat * (1.0 - p_hat) / (n - 1)))
        ttuple = EstimatorResult(
            "TTuple", -math.log2(p_u), {"t_max": t_max, "p_hat": p_hat, "p_upper": p_u}
        )

    # longest repeated substring: lengths from the first t with sparse
    # repeats up to the longest length that still repeats at all
    u = t_max + 1
    v = 0
    for t, cmax, _ in stats:
        if cmax >= 2:
            v = t
    if v < u or u not in by_t:
        lrs = EstimatorResult("LRS", None, {"u": u, "v": v})
    else:
        p_hat = 0.0
        for w in range(u, v + 1):
            if w not in by_t:
                break
            coll = by_t[w][1]
            windows = n - w + 1
            pw = coll / (windows * (windows - 1) / 2.0)
            p_hat = max(p_hat, pw ** (1.0 / w))
        p_u = min(1.0, p_hat + _Z * math.sqrt(p_hat * (1.0 - p_hat) / (n - 1)))
        lrs = EstimatorResult(
            "LRS", -math.log2(p_u), {"u": u, "v": v, "p_hat": p_hat, "p_upper": p_u}
        )
    return ttuple, lrs
