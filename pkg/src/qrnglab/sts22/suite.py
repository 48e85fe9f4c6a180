"""The fifteen statistical test families.

Each runner takes a 0/1 uint8 array plus a parameter block and returns a
list of SubtestResult, one per subtest.  A subtest that cannot run on the
given stream reports ``p_value=None`` (not applicable); it is never
silently dropped so a full battery always yields the same row count.

Conventions shared by the runners:
  - words built from bit windows are read MSB-first
  - wraparound (cyclic) windows are used where the underlying statistic
    is defined on the extended sequence (serial, approximate entropy)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, gammaincc
from scipy.stats import norm

from .params import Sts22Params, applicable, universal_block_size
from .templates import aperiodic_template_values, template_string

__all__ = ["SubtestResult", "run_family"]


@dataclass(frozen=True)
class SubtestResult:
    family: str
    index: int
    label: str
    p_value: float | None
    statistic: float | None

    @property
    def applicable(self) -> bool:
        return self.p_value is not None

    def passed(self, alpha: float = 0.01) -> bool | None:
        if self.p_value is None:
            return None
        return self.p_value >= alpha


def _na(family: str, count: int, labels: list[str] | None = None) -> list[SubtestResult]:
    labels = labels if labels is not None else [""] * count
    return [SubtestResult(family, i, labels[i], None, None) for i in range(count)]


def _check_stream(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.size == 0:
        raise ValueError("stream must be a non-empty 1-d bit array")
    if bits.dtype != np.uint8:
        bits = bits.astype(np.uint8)
    if bits.max(initial=0) > 1:
        raise ValueError("stream must contain only 0 and 1")
    return bits


def _rolling_words(bits: np.ndarray, m: int, cyclic: bool = False) -> np.ndarray:
    """MSB-first m-bit window value at every start position."""
    seq = np.concatenate([bits, bits[: m - 1]]) if cyclic else bits
    words = np.zeros(seq.size - m + 1, dtype=np.int64)
    for j in range(m):
        words = (words << 1) | seq[j : j + words.size]
    return words


# --- 1. Frequency ---------------------------------------------------------


def _frequency(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    n = bits.size
    s = 2.0 * int(bits.sum()) - n
    stat = abs(s) / math.sqrt(n)
    p = float(erfc(stat / math.sqrt(2.0)))
    return [SubtestResult("Frequency", 0, "", p, stat)]


# --- 2. Block frequency ---------------------------------------------------


def _block_frequency(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    m = params.block_frequency_m
    nblk = bits.size // m
    pi = bits[: nblk * m].reshape(nblk, m).mean(axis=1)
    chi2 = 4.0 * m * float(((pi - 0.5) ** 2).sum())
    p = float(gammaincc(nblk / 2.0, chi2 / 2.0))
    return [SubtestResult("BlockFrequency", 0, f"M={m}", p, chi2)]


# --- 3. Cumulative sums ---------------------------------------------------


def _tdiv(a: int, b: int) -> int:
    # truncate-toward-zero division; the summation bounds below are
    # specified with that convention and floor division would pull in
    # extra near-zero tail terms
    q = a // b
    if q < 0 and q * b != a:
        q += 1
    return q


def _cusum_p(z: int, n: int) -> float:
    sqn = math.sqrt(n)
    nz = n // z
    k1 = np.arange(_tdiv(-nz + 1, 4), _tdiv(nz - 1, 4) + 1)
    term1 = norm.cdf((4 * k1 + 1) * z / sqn) - norm.cdf((4 * k1 - 1) * z / sqn)
    k2 = np.arange(_tdiv(-nz - 3, 4), _tdiv(nz - 1, 4) + 1)
    term2 = norm.cdf((4 * k2 + 3) * z / sqn) - norm.cdf((4 * k2 + 1) * z / sqn)
    # the asymptotic series can stray slightly outside [0,1] for tiny n
    return float(min(max(1.0 - term1.sum() + term2.sum(), 0.0), 1.0))


def _cumulative_sums(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    x = bits.astype(np.int64) * 2 - 1
    n = bits.size
    out = []
    for idx, (label, seq) in enumerate((("forward", x), ("backward", x[::-1]))):
        z = int(np.abs(np.cumsum(seq)).max())
        if z == 0:
            # all-partial-sums-zero cannot happen for n >= 1 (first sum is +-1)
            out.append(SubtestResult("CumulativeSums", idx, label, 0.0, 0.0))
            continue
        out.append(SubtestResult("CumulativeSums", idx, label, _cusum_p(z, n), float(z)))
    return out


# --- 4. Runs --------------------------------------------------------------


def _runs(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    n = bits.size
    pi = float(bits.mean())
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n) or pi in (0.0, 1.0):
        # frequency prerequisite failed or the stream is constant; the
        # runs statistic is meaningless
        return [SubtestResult("Runs", 0, "", 0.0, None)]
    v = 1 + int((bits[1:] != bits[:-1]).sum())
    num = abs(v - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    p = float(erfc(num / den))
    return [SubtestResult("Runs", 0, "", p, float(v))]


# --- 5. Longest run of ones -----------------------------------------------


_LONGEST_RUN_TABLES = (
    # (least n, M, category lower edges, category probabilities)
    (750_000, 10_000, (10, 11, 12, 13, 14, 15, 16),
     (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6_272, 128, (4, 5, 6, 7, 8, 9),
     (0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847)),
    (128, 8, (1, 2, 3, 4),
     (0.21484375, 0.3671875, 0.23046875, 0.1875)),
)


def _longest_run_per_block(blocks: np.ndarray) -> np.ndarray:
    # after k shift-and steps a block is nonzero iff it holds a run > k
    x = blocks.astype(bool)
    longest = np.zeros(blocks.shape[0], dtype=np.int64)
    while x.size and x.any():
        longest += x.any(axis=1)
        x = x[:, 1:] & x[:, :-1]
    return longest


def _longest_run(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    n = bits.size
    for least, m, edges, probs in _LONGEST_RUN_TABLES:
        if n >= least:
            break
    nblk = n // m
    runs = _longest_run_per_block(bits[: nblk * m].reshape(nblk, m))
    cats = np.clip(np.searchsorted(edges, runs, side="right") - 1, 0, len(edges) - 1)
    freq = np.bincount(cats, minlength=len(edges))
    expected = nblk * np.asarray(probs)
    chi2 = float(((freq - expected) ** 2 / expected).sum())
    p = float(gammaincc((len(edges) - 1) / 2.0, chi2 / 2.0))
    return [SubtestResult("LongestRun", 0, f"M={m}", p, chi2)]


# --- 6. Binary matrix rank ------------------------------------------------


def _rank_probability(r: int, dim: int = 32) -> float:
    # exact probability that a random GF(2) dim x dim matrix has rank r
    log2p = float(r * (2 * dim - r) - dim * dim)
    prod = 1.0
    for i in range(r):
        prod *= (1.0 - 2.0 ** (i - dim)) ** 2 / (1.0 - 2.0 ** (i - r))
    return 2.0**log2p * prod


def _gf2_ranks(rows: np.ndarray) -> np.ndarray:
    """Ranks of many 32x32 GF(2) matrices, each given as 32 packed uint32 rows."""
    rows = rows.copy()
    nmat = rows.shape[0]
    r = np.zeros(nmat, dtype=np.int64)
    row_idx = np.arange(32)
    mats = np.arange(nmat)
    for col in range(31, -1, -1):
        bit = (rows >> np.uint32(col)) & np.uint32(1)
        candidate = np.where((bit == 1) & (row_idx[None, :] >= r[:, None]), row_idx[None, :], 99)
        pivot_at = candidate.min(axis=1)
        has = pivot_at < 99
        sel = mats[has]
        # swap pivot row into position r
        tmp = rows[sel, r[sel]].copy()
        rows[sel, r[sel]] = rows[sel, pivot_at[sel]]
        rows[sel, pivot_at[sel]] = tmp
        pivot = rows[mats, np.minimum(r, 31)]
        bit = (rows >> np.uint32(col)) & np.uint32(1)
        elim = (bit == 1) & has[:, None]
        elim[sel, r[sel]] = False
        rows ^= np.where(elim, pivot[:, None], np.uint32(0))
        r += has
    return r


def _rank(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    nmat = bits.size // 1024
    packed = bits[: nmat * 1024].reshape(nmat, 32, 32)
    weights = (np.uint32(1) << np.arange(31, -1, -1, dtype=np.uint32))[None, None, :]
    rows = (packed.astype(np.uint32) * weights).sum(axis=2, dtype=np.uint32)
    ranks = _gf2_ranks(rows)
    f32 = int((ranks == 32).sum())
    f31 = int((ranks == 31).sum())
    flow = nmat - f32 - f31
    p32 = _rank_probability(32)
    p31 = _rank_probability(31)
    plow = 1.0 - p32 - p31
    chi2 = (
        (f32 - nmat * p32) ** 2 / (nmat * p32)
        + (f31 - nmat * p31) ** 2 / (nmat * p31)
        + (flow - nmat * plow) ** 2 / (nmat * plow)
    )
    p = float(math.exp(-chi2 / 2.0))
    return [SubtestResult("Rank", 0, "", p, float(chi2))]


# --- 7. Discrete Fourier transform ----------------------------------------


def _spectral(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    n = bits.size
    x = bits.astype(np.float64) * 2.0 - 1.0
    mod = np.abs(np.fft.rfft(x))[: n // 2]
    threshold = math.sqrt(n * math.log(1.0 / 0.05))
    n1 = int((mod < threshold).sum())
    n0 = 0.95 * n / 2.0
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    p = float(erfc(abs(d) / math.sqrt(2.0)))
    return [SubtestResult("Spectral", 0, "", p, d)]


# --- 8. Non-overlapping template matching ---------------------------------


def _non_overlapping(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    m = params.template_m
    values = aperiodic_template_values(m)
    if m == 9 and len(values) != 148:
        raise AssertionError("aperiodic template enumeration is broken")
    labels = [template_string(v, m) for v in values]
    nblk = 8
    mblk = bits.size // nblk
    words = _rolling_words(bits[: nblk * mblk], m)
    starts = np.arange(words.size)
    in_block = starts % mblk <= mblk - m  # window must not cross a block edge
    key = (starts[in_block] // mblk) * 2**m + words[in_block]
    counts = np.bincount(key, minlength=nblk * 2**m).reshape(nblk, 2**m)
    mu = (mblk - m + 1) / 2.0**m
    var = mblk * (2.0**-m - (2.0 * m - 1.0) / 2.0 ** (2 * m))
    out = []
    for i, v in enumerate(values):
        w = counts[:, v].astype(np.float64)
        chi2 = float(((w - mu) ** 2 / var).sum())
        p = float(gammaincc(nblk / 2.0, chi2 / 2.0))
        out.append(SubtestResult("NonOverlappingTemplate", i, labels[i], p, chi2))
    return out


# --- 9. Overlapping template matching -------------------------------------

# category probabilities for the all-ones 9-bit template in 1032-bit blocks
_OVERLAPPING_PI = (0.364091, 0.185659, 0.139381, 0.100571, 0.070432, 0.139865)
_OVERLAPPING_BLOCK = 1032


def _overlapping(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    m = params.overlapping_m
    mblk = _OVERLAPPING_BLOCK
    nblk = bits.size // mblk
    label = template_string(2**m - 1, m)
    words = _rolling_words(bits[: nblk * mblk], m)
    hits = (words == 2**m - 1).astype(np.int64)
    cs = np.concatenate([[0], np.cumsum(hits)])
    starts = np.arange(nblk) * mblk
    per_block = cs[starts + mblk - m + 1] - cs[starts]
    cats = np.bincount(np.minimum(per_block, 5), minlength=6)
    expected = nblk * np.asarray(_OVERLAPPING_PI)
    chi2 = float(((cats - expected) ** 2 / expected).sum())
    p = float(gammaincc(5 / 2.0, chi2 / 2.0))
    return [SubtestResult("OverlappingTemplate", 0, label, p, chi2)]


# --- 10. Universal --------------------------------------------------------

# (expected value, variance) of per-block log distance for L = 6..16
_UNIVERSAL_EV = {
    6: (5.2177052, 2.954),
    7: (6.1962507, 3.125),
    8: (7.1836656, 3.238),
    9: (8.1764248, 3.311),
    10: (9.1723243, 3.356),
    11: (10.170032, 3.384),
    12: (11.168765, 3.401),
    13: (12.168070, 3.410),
    14: (13.167693, 3.416),
    15: (14.167488, 3.419),
    16: (15.167379, 3.421),
}


def _universal(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    n = bits.size
    level = params.universal_l if params.universal_l is not None else universal_block_size(n)
    if level is None:
        return _na("Universal", 1)
    q = 10 * 2**level
    k = n // level - q
    if k <= 0:
        return _na("Universal", 1)
    nblk = q + k
    weights = (np.int64(1) << np.arange(level - 1, -1, -1, dtype=np.int64))[None, :]
    vals = (bits[: nblk * level].reshape(nblk, level).astype(np.int64) * weights).sum(axis=1)
    # previous occurrence (1-based block position, 0 = never) per block
    order = np.argsort(vals, kind="stable")
    prev = np.zeros(nblk, dtype=np.int64)
    same = vals[order[1:]] == vals[order[:-1]]
    prev[order[1:][same]] = order[:-1][same] + 1
    pos = np.arange(1, nblk + 1)
    dist = (pos - prev)[q:]
    total = float(np.log2(dist.astype(np.float64)).sum())
    fn = total / k
    expected, variance = _UNIVERSAL_EV[level]
    c = 0.7 - 0.8 / level + (4.0 + 32.0 / level) * k ** (-3.0 / level) / 15.0
    sigma = c * math.sqrt(variance / k)
    p = float(erfc(abs(fn - expected) / (math.sqrt(2.0) * sigma)))
    return [SubtestResult("Universal", 0, f"L={level}", p, fn)]


# --- 11. Approximate entropy ----------------------------------------------


def _apen_phi(bits: np.ndarray, m: int) -> float:
    if m == 0:
        return 0.0
    counts = np.bincount(_rolling_words(bits, m, cyclic=True), minlength=2**m)
    pi = counts[counts > 0] / bits.size
    return float((pi * np.log(pi)).sum())


def _approximate_entropy(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    m = params.approximate_entropy_m
    n = bits.size
    apen = _apen_phi(bits, m) - _apen_phi(bits, m + 1)
    chi2 = 2.0 * n * (math.log(2.0) - apen)
    p = float(gammaincc(2.0 ** (m - 1), chi2 / 2.0))
    return [SubtestResult("ApproximateEntropy", 0, f"m={m}", p, chi2)]


# --- 12/13. Random excursions ---------------------------------------------


def _walk_cycles(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Cumulative walk, cycle id per step, and number of cycles J."""
    s = np.cumsum(bits.astype(np.int64) * 2 - 1)
    zeros = s == 0
    cyc = np.concatenate([[0], np.cumsum(zeros[:-1])])
    j = int(zeros.sum()) + (0 if zeros[-1] else 1)
    return s, cyc, j


_RE_STATES = (-4, -3, -2, -1, 1, 2, 3, 4)

# below this many walk cycles the excursion statistics are unreliable and
# the subtests report not-applicable
_MIN_CYCLES = 500


def _re_pi(k: int, x: int) -> float:
    ax = abs(x)
    if k == 0:
        return 1.0 - 1.0 / (2.0 * ax)
    if k <= 4:
        return (1.0 / (4.0 * ax * ax)) * (1.0 - 1.0 / (2.0 * ax)) ** (k - 1)
    return (1.0 / (2.0 * ax)) * (1.0 - 1.0 / (2.0 * ax)) ** 4


def _random_excursions(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    labels = [f"x={x:+d}" for x in _RE_STATES]
    s, cyc, j = _walk_cycles(bits)
    if j < _MIN_CYCLES:
        return _na("RandomExcursions", 8, labels)
    mask = (s != 0) & (np.abs(s) <= 4)
    state_idx = (s[mask] + 4 - (s[mask] > 0)).astype(np.int64)  # -4..-1,1..4 -> 0..7
    visits = np.bincount(cyc[mask] * 8 + state_idx, minlength=j * 8).reshape(-1, 8)[:j]
    out = []
    for i, x in enumerate(_RE_STATES):
        per_cycle = np.minimum(visits[:, i], 5)
        freq = np.bincount(per_cycle, minlength=6)
        expected = j * np.array([_re_pi(k, x) for k in range(6)])
        chi2 = float(((freq - expected) ** 2 / expected).sum())
        p = float(gammaincc(5 / 2.0, chi2 / 2.0))
        out.append(SubtestResult("RandomExcursions", i, labels[i], p, chi2))
    return out


_REV_STATES = tuple(x for x in range(-9, 10) if x != 0)


def _random_excursions_variant(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    labels = [f"x={x:+d}" for x in _REV_STATES]
    s, _, j = _walk_cycles(bits)
    if j < _MIN_CYCLES:
        return _na("RandomExcursionsVariant", 18, labels)
    out = []
    for i, x in enumerate(_REV_STATES):
        xi = int((s == x).sum())
        denom = math.sqrt(2.0 * j * (4.0 * abs(x) - 2.0))
        p = float(erfc(abs(xi - j) / denom))
        out.append(SubtestResult("RandomExcursionsVariant", i, labels[i], p, float(xi)))
    return out


# --- 14. Serial -----------------------------------------------------------


def _psi_sq(bits: np.ndarray, m: int) -> float:
    if m == 0:
        return 0.0
    counts = np.bincount(_rolling_words(bits, m, cyclic=True), minlength=2**m)
    return float(2.0**m / bits.size * (counts.astype(np.float64) ** 2).sum() - bits.size)


def _serial(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    m = params.serial_m
    psi_m = _psi_sq(bits, m)
    psi_m1 = _psi_sq(bits, m - 1)
    psi_m2 = _psi_sq(bits, m - 2)
    d1 = psi_m - psi_m1
    d2 = psi_m - 2.0 * psi_m1 + psi_m2
    p1 = float(gammaincc(2.0 ** (m - 2), d1 / 2.0))
    p2 = float(gammaincc(2.0 ** (m - 3), d2 / 2.0))
    return [
        SubtestResult("Serial", 0, f"m={m} del1", p1, d1),
        SubtestResult("Serial", 1, f"m={m} del2", p2, d2),
    ]


# --- 15. Linear complexity ------------------------------------------------


def _berlekamp_massey_length(block: list[int]) -> int:
    """Linear span of a bit block via Berlekamp-Massey on int bitmasks.

    ``rev`` keeps the already-seen bits reversed so the discrepancy is a
    single AND + popcount against the connection polynomial.
    """
    c = 1
    b = 1
    length = 0
    m = -1
    rev = 0
    for i, s in enumerate(block):
        rev = (rev << 1) | s
        if (c & rev).bit_count() & 1:
            t = c
            c ^= b << (i - m)
            if 2 * length <= i:
                length = i + 1 - length
                b = t
                m = i
    return length


_LC_PI = (0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833)


def _linear_complexity(bits: np.ndarray, params: Sts22Params) -> list[SubtestResult]:
    m = params.linear_complexity_m
    nblk = bits.size // m
    blocks = bits[: nblk * m].reshape(nblk, m)
    lengths = np.array([_berlekamp_massey_length(row.tolist()) for row in blocks])
    sign = -1.0 if m % 2 else 1.0
    mu = m / 2.0 + (9.0 + (-1.0) ** (m + 1)) / 36.0 - (m / 3.0 + 2.0 / 9.0) / 2.0**m
    t = sign * (lengths - mu) + 2.0 / 9.0
    # class edges: <=-2.5, (-2.5,-1.5], ..., (1.5,2.5], >2.5
    cats = np.searchsorted(np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]), t, side="left")
    freq = np.bincount(cats, minlength=7)
    expected = nblk * np.asarray(_LC_PI)
    chi2 = float(((freq - expected) ** 2 / expected).sum())
    p = float(gammaincc(3.0, chi2 / 2.0))
    return [SubtestResult("LinearComplexity", 0, f"M={m}", p, chi2)]


# --- dispatch -------------------------------------------------------------

_RUNNERS = {
    "Frequency": (_frequency, 1, None),
    "BlockFrequency": (_block_frequency, 1, None),
    "CumulativeSums": (_cumulative_sums, 2, ["forward", "backward"]),
    "Runs": (_runs, 1, None),
    "LongestRun": (_longest_run, 1, None),
    "Rank": (_rank, 1, None),
    "Spectral": (_spectral, 1, None),
    "NonOverlappingTemplate": (_non_overlapping, 148, None),
    "OverlappingTemplate": (_overlapping, 1, None),
    "Universal": (_universal, 1, None),
    "ApproximateEntropy": (_approximate_entropy, 1, None),
    "RandomExcursions": (_random_excursions, 8, [f"x={x:+d}" for x in _RE_STATES]),
    "RandomExcursionsVariant": (
        _random_excursions_variant,
        18,
        [f"x={x:+d}" for x in _REV_STATES],
    ),
    "Serial": (_serial, 2, None),
    "LinearComplexity": (_linear_complexity, 1, None),
}


def run_family(family: str, bits: np.ndarray, params: Sts22Params | None = None) -> list[SubtestResult]:
    """Run one family; not-applicable subtests carry ``p_value=None``."""
    if family not in _RUNNERS:
        raise KeyError(f"unknown family: {family}")
    params = params or Sts22Params()
    bits = _check_stream(bits)
    runner, count, labels = _RUNNERS[family]
    if not applicable(family, bits.size, params):
        if family == "NonOverlappingTemplate":
            values = aperiodic_template_values(params.template_m)
            labels = [template_string(v, params.template_m) for v in values]
            count = len(values)
        return _na(family, count, labels)
    results = runner(bits, params)
    if family != "NonOverlappingTemplate" and len(results) != count:
        raise AssertionError(f"{family} produced {len(results)} subtests, expected {count}")
    return results
