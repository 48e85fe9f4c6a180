"""Entropy estimator tests: closed forms, dict-based reference predictors."""

import hashlib
import json
import math

import numpy as np
import pytest

from qrnglab.ent90b import (
    ABBREVIATIONS,
    ESTIMATOR_ORDER,
    assess,
    collision,
    compression,
    lag_prediction,
    lz78y,
    markov,
    most_common_value,
    multi_mcw,
    multi_mmc,
    t_tuple_and_lrs,
)
from qrnglab.ent90b import estimators, predictors


def sha_stream(seed: bytes, nbits: int) -> np.ndarray:
    nbytes = (nbits + 7) // 8
    out = bytearray()
    ctr = 0
    while len(out) < nbytes:
        out += hashlib.sha256(seed + ctr.to_bytes(8, "little")).digest()
        ctr += 1
    return np.unpackbits(np.frombuffer(bytes(out[:nbytes]), dtype=np.uint8), bitorder="little")[:nbits]


class TestMostCommonValue:
    def test_closed_form(self):
        rng = np.random.default_rng(0)
        bits = np.concatenate([np.ones(600, np.uint8), np.zeros(400, np.uint8)])
        rng.shuffle(bits)
        r = most_common_value(bits)
        p_hat = 0.6
        p_u = p_hat + 2.576 * math.sqrt(p_hat * 0.4 / 999)
        assert abs(r.h - (-math.log2(p_u))) < 1e-12
        assert r.details["p_hat"] == 0.6

    def test_constant(self):
        assert most_common_value(np.ones(1000, np.uint8)).h == 0.0

    def test_balanced(self):
        bits = np.tile(np.array([0, 1], np.uint8), 500)
        r = most_common_value(bits)
        expect = -math.log2(min(1.0, 0.5 + 2.576 * math.sqrt(0.25 / 999)))
        assert abs(r.h - expect) < 1e-12

    def test_input_validation(self):
        with pytest.raises(ValueError):
            most_common_value(np.array([0, 1, 2], np.uint8))
        with pytest.raises(ValueError):
            most_common_value(np.array([], np.uint8))


class TestCollision:
    def test_mean_matches_ratio_form(self):
        # independent expression built from the per-step truncated sums
        for p in (0.5, 0.6, 0.75, 0.9, 0.99):
            q = 1 - p
            half_diff = 0.5 * (1 / p - 1 / q)
            f = q + 2 * q**2 + 2 * q**3
            ratio_form = p / q**2 * (1 + half_diff) * f - p / q * half_diff
            assert abs(estimators._collision_mean(p) - ratio_form) < 1e-9

    def test_mean_fair_coin(self):
        assert estimators._collision_mean(0.5) == 2.5

    def test_jump_walk_counts(self):
        r = collision(np.array([0, 0, 1, 0, 1, 1], np.uint8))
        assert r.details["v"] == 2
        assert r.details["mean"] == 2.5

    def test_constant_zero_entropy(self):
        assert collision(np.zeros(10_000, np.uint8)).h == 0.0

    def test_alternating_caps_at_one(self):
        # every jump sees an unequal pair: mean 3 exceeds any achievable
        # expectation, so the estimate saturates
        bits = np.tile(np.array([0, 1], np.uint8), 5000)
        assert collision(bits).h == 1.0

    def test_uniform_close_to_one(self):
        r = collision(sha_stream(b"coll", 1_000_000))
        assert 0.8 <= r.h <= 1.0

    def test_biased_below_uniform(self):
        rng = np.random.default_rng(10)
        biased = (rng.random(500_000) < 0.75).astype(np.uint8)
        assert collision(biased).h < collision(sha_stream(b"c2", 500_000)).h


class TestMarkov:
    def test_alternating_exact(self):
        bits = np.tile(np.array([0, 1], np.uint8), 5000)
        r = markov(bits)
        # the dominant path alternates with certainty: only the initial
        # state costs probability, so h = 1/128
        assert abs(r.h - 1.0 / 128.0) < 1e-12

    def test_constant(self):
        assert markov(np.zeros(1000, np.uint8)).h == 0.0

    def test_biased_matches_single_step_cost(self):
        rng = np.random.default_rng(3)
        bits = (rng.random(1_000_000) < 0.75).astype(np.uint8)
        r = markov(bits)
        assert abs(r.h - (-math.log2(0.75))) < 0.01

    def test_uniform_near_one(self):
        assert markov(sha_stream(b"mk", 1_000_000)).h > 0.98


class TestCompression:
    def test_g_matches_maurer_expectation(self):
        # at the uniform point the expected log distance for 6-bit blocks
        # is the classic 5.2177052
        v, d = 166_666, 1000
        g = estimators._compression_g(1 / 64, v, d) + 63.0 * estimators._compression_g(
            (1 - 1 / 64) / 63, v, d
        )
        assert abs(g - 5.2177052) < 1e-3

    def test_constant_zero(self):
        assert compression(np.zeros(100_000, np.uint8)).h == 0.0

    def test_uniform_in_plausible_band(self):
        r = compression(sha_stream(b"cmp", 1_000_000))
        assert 0.6 <= r.h <= 1.0

    def test_too_short_is_none(self):
        assert compression(np.zeros(5000, np.uint8)).h is None

    def test_bias_sensitivity(self):
        rng = np.random.default_rng(4)
        biased = (rng.random(1_000_000) < 0.7).astype(np.uint8)
        assert compression(biased).h < compression(sha_stream(b"cmp2", 1_000_000)).h


class TestTupleEstimators:
    @staticmethod
    def reference(bits, cutoff=35, cap=64):
        """Dict-based tuple statistics straight from the definitions."""
        s = "".join(map(str, bits))
        n = len(s)
        q = {}
        coll = {}
        for t in range(1, min(cap, n) + 1):
            counts = {}
            for i in range(n - t + 1):
                w = s[i : i + t]
                counts[w] = counts.get(w, 0) + 1
            q[t] = max(counts.values())
            coll[t] = sum(c * (c - 1) // 2 for c in counts.values())
            if q[t] < 2:
                break
        t_max = max((t for t in q if q[t] >= cutoff), default=0)
        p_t = None
        if t_max:
            p_hat = max((q[t] / (n - t + 1)) ** (1 / t) for t in range(1, t_max + 1))
            p_u = min(1.0, p_hat + 2.576 * math.sqrt(p_hat * (1 - p_hat) / (n - 1)))
            p_t = -math.log2(p_u)
        u = t_max + 1
        v = max((t for t in q if q[t] >= 2), default=0)
        p_l = None
        if v >= u and u in q:
            p_hat = 0.0
            for w in range(u, v + 1):
                pw = coll[w] / ((n - w + 1) * (n - w) / 2)
                p_hat = max(p_hat, pw ** (1 / w))
            p_u = min(1.0, p_hat + 2.576 * math.sqrt(p_hat * (1 - p_hat) / (n - 1)))
            p_l = -math.log2(p_u)
        return p_t, p_l

    def test_periodic_stream_matches_reference(self):
        bits = np.array(([1, 1, 0] * 400), np.uint8)
        ttuple, lrs = t_tuple_and_lrs(bits)
        ref_t, ref_l = self.reference(bits)
        assert abs(ttuple.h - ref_t) < 1e-12
        if ref_l is None:
            assert lrs.h is None
        else:
            assert abs(lrs.h - ref_l) < 1e-12

    def test_random_stream_matches_reference(self):
        bits = sha_stream(b"tuple", 2000)
        ttuple, lrs = t_tuple_and_lrs(bits)
        ref_t, ref_l = self.reference(bits)
        assert abs(ttuple.h - ref_t) < 1e-12
        assert abs(lrs.h - ref_l) < 1e-12

    def test_biased_stream_matches_reference(self):
        rng = np.random.default_rng(8)
        bits = (rng.random(3000) < 0.7).astype(np.uint8)
        ttuple, lrs = t_tuple_and_lrs(bits)
        ref_t, ref_l = self.reference(bits)
        assert abs(ttuple.h - ref_t) < 1e-12
        assert abs(lrs.h - ref_l) < 1e-12

    def test_tuple_not_applicable_when_sparse(self):
        ttuple, lrs = t_tuple_and_lrs(sha_stream(b"sparse", 60))
        assert ttuple.h is None
        assert lrs.h is not None

    def test_constant_zero(self):
        ttuple, _ = t_tuple_and_lrs(np.ones(100_000, np.uint8))
        assert ttuple.h == 0.0


def ref_mcw(s):
    windows = (63, 255, 1023, 4095)
    scores = [0] * 4
    winner = 0
    correct = longest = run = n = 0
    for i in range(63, len(s)):
        preds = []
        for w in windows:
            if i >= w:
                ones = int(sum(s[i - w : i]))
                preds.append(1 if 2 * ones > w else 0)
            else:
                preds.append(None)
        n += 1
        if preds[winner] is not None and preds[winner] == s[i]:
            correct += 1
            run += 1
            longest = max(longest, run)
        else:
            run = 0
        for j in range(4):
            if preds[j] is not None and preds[j] == s[i]:
                scores[j] += 1
                if scores[j] >= scores[winner]:
                    winner = j
    return correct, longest, n


def ref_lag(s):
    depth = 128
    scores = [0] * depth
    winner = 0
    correct = longest = run = n = 0
    for i in range(1, len(s)):
        n += 1
        ok = i >= winner + 1 and s[i - winner - 1] == s[i]
        if ok:
            correct += 1
            run += 1
            longest = max(longest, run)
        else:
            run = 0
        for j in range(min(depth, i)):
            if s[i - j - 1] == s[i]:
                scores[j] += 1
                if scores[j] >= scores[winner]:
                    winner = j
    return correct, longest, n


def ref_mmc(s):
    depth = 16
    models = [dict() for _ in range(depth)]
    scores = [0] * depth
    winner = 0
    correct = longest = run = n = 0
    for i in range(len(s)):
        if i >= 2:
            n += 1
            preds = []
            for d in range(1, depth + 1):
                if i >= d:
                    c = models[d - 1].get(tuple(s[i - d : i]))
                    preds.append(None if c is None else (1 if c[1] > c[0] else 0))
                else:
                    preds.append(None)
            if preds[winner] is not None and preds[winner] == s[i]:
                correct += 1
                run += 1
                longest = max(longest, run)
            else:
                run = 0
            for j in range(depth):
                if preds[j] is not None and preds[j] == s[i]:
                    scores[j] += 1
                    if scores[j] >= scores[winner]:
                        winner = j
        for d in range(1, depth + 1):
            if i >= d:
                c = models[d - 1].setdefault(tuple(s[i - d : i]), [0, 0])
                c[s[i]] += 1
    return correct, longest, n


def ref_lz78y(s):
    back = 16
    cap = 65536
    d: dict = {}
    size = 0
    correct = longest = run = n = 0
    for i in range(back + 1, len(s)):
        for j in range(back, 0, -1):
            ctx = tuple(s[i - j - 1 : i - 1])
            if ctx in d:
                d[ctx][s[i - 1]] += 1
            elif size < cap:
                d[ctx] = [0, 0]
                d[ctx][s[i - 1]] = 1
                size += 1
        best = 0
        pred = None
        for j in range(back, 0, -1):
            ctx = tuple(s[i - j : i])
            if ctx in d:
                for y in (0, 1):
                    if d[ctx][y] > best:
                        best = d[ctx][y]
                        pred = y
        n += 1
        if pred == s[i]:
            correct += 1
            run += 1
            longest = max(longest, run)
        else:
            run = 0
    return correct, longest, n


STREAMS = {
    "random": sha_stream(b"pred", 600).tolist(),
    "alternating": ([0, 1] * 300),
    "period3": ([1, 1, 0] * 200),
    "biased": (np.random.default_rng(12).random(600) < 0.8).astype(int).tolist(),
    "constant": [1] * 600,
}


class TestPredictorKernelsAgainstReferences:
    @pytest.mark.parametrize("name", sorted(STREAMS))
    def test_mcw(self, name):
        s = np.array(STREAMS[name], np.uint8)
        assert tuple(predictors._mcw_kernel(s)) == ref_mcw(s.tolist())

    @pytest.mark.parametrize("name", sorted(STREAMS))
    def test_lag(self, name):
        s = np.array(STREAMS[name], np.uint8)
        assert tuple(predictors._lag_kernel(s)) == ref_lag(s.tolist())

    @pytest.mark.parametrize("name", sorted(STREAMS))
    def test_mmc(self, name):
        s = np.array(STREAMS[name], np.uint8)
        assert tuple(predictors._mmc_kernel(s)) == ref_mmc(s.tolist())

    @pytest.mark.parametrize("name", sorted(STREAMS))
    def test_lz78y(self, name):
        s = np.array(STREAMS[name], np.uint8)
        assert tuple(predictors._lz78y_kernel(s)) == ref_lz78y(s.tolist())


class TestPredictorBehaviour:
    def test_lag_learns_alternation(self):
        bits = np.tile(np.array([0, 1], np.uint8), 5000)
        r = lag_prediction(bits)
        n = r.details["n"]
        assert r.details["correct"] == n - 2  # two steps before lag-2 leads
        assert r.h < 0.05

    def test_mcw_constant_is_zero(self):
        r = multi_mcw(np.ones(10_000, np.uint8))
        assert r.details["correct"] == r.details["n"]
        assert r.h == 0.0

    def test_mcw_alternating_floors_at_one(self):
        # window majority always matches the previous bit, never the next
        r = multi_mcw(np.tile(np.array([0, 1], np.uint8), 5000))
        assert r.details["correct"] == 0
        assert r.h == 1.0

    def test_mmc_learns_period_three(self):
        bits = np.array([1, 1, 0] * 4000, np.uint8)
        r = multi_mmc(bits)
        assert r.details["correct"] >= r.details["n"] - 10
        assert r.h < 0.05

    def test_lz78y_learns_alternation(self):
        r = lz78y(np.tile(np.array([0, 1], np.uint8), 5000))
        assert r.details["correct"] >= r.details["n"] - 20
        assert r.h < 0.05

    def test_uniform_near_full_entropy(self):
        bits = sha_stream(b"highent", 200_000)
        for est in (multi_mcw, lag_prediction, multi_mmc, lz78y):
            r = est(bits)
            assert r.h > 0.9, est.__name__

    def test_run_probability_solver_consistency(self):
        for r, n in ((1, 1000), (5, 1000), (12, 100_000)):
            p = predictors._local_probability(r - 1, n)  # solver targets runs of r
            assert abs(predictors._no_run_prob(p, r, n) - 0.99) < 1e-6

    def test_local_probability_grows_with_run(self):
        n = 10_000
        ps = [predictors._local_probability(r, n) for r in (2, 5, 10, 20)]
        assert ps == sorted(ps)


class TestAssess:
    def test_report_shape_and_order(self):
        rep = assess(sha_stream(b"shape", 50_000))
        assert [r.name for r in rep.results] == list(ESTIMATOR_ORDER)
        hs = [r.h for r in rep.results if r.h is not None]
        assert rep.min_entropy == min(hs)
        assert rep.h_assessed == rep.h_original == rep.min_entropy
        assert all(0.0 <= h <= 1.0 for h in hs)

    def test_constant_min_entropy_zero(self):
        rep = assess(np.zeros(100_000, np.uint8))
        assert rep.min_entropy == 0.0

    def test_min_at_most_mcv(self):
        rng = np.random.default_rng(14)
        bits = (rng.random(200_000) < 0.6).astype(np.uint8)
        rep = assess(bits)
        assert rep.min_entropy <= rep.estimate("MCV").h

    def test_bias_ordering(self):
        rng = np.random.default_rng(15)
        fair = sha_stream(b"ord", 200_000)
        mild = (rng.random(200_000) < 0.6).astype(np.uint8)
        heavy = (rng.random(200_000) < 0.8).astype(np.uint8)
        h_fair = assess(fair).min_entropy
        h_mild = assess(mild).min_entropy
        h_heavy = assess(heavy).min_entropy
        assert h_fair > h_mild > h_heavy

    def test_document_keys_and_rounding(self):
        rep = assess(sha_stream(b"docv", 50_000))
        doc = rep.to_document()
        expected_cols = {"MCV", "ClT", "MrT", "CmT", "TTT", "LRS", "MMCWT", "LPT", "MMMCT", "LZ78Y"}
        assert expected_cols <= set(doc)
        assert {"bits", "hOr", "hAs", "minE"} <= set(doc)
        assert doc["hOr"] == doc["hAs"] == doc["minE"]
        json.dumps(doc)
        for key in expected_cols:
            if doc[key] is not None:
                assert doc[key] == round(doc[key], 6)

    def test_abbreviation_map_is_total(self):
        assert set(ABBREVIATIONS) == set(ESTIMATOR_ORDER)

    def test_short_input_rejected(self):
        with pytest.raises(ValueError):
            assess(np.zeros(999, np.uint8))


class TestComplementInvariance:
    def test_statistical_estimators_exact(self):
        bits = sha_stream(b"compl", 60_000)
        comp = (1 - bits).astype(np.uint8)
        pairs = [
            (most_common_value(bits), most_common_value(comp)),
            (collision(bits), collision(comp)),
            (markov(bits), markov(comp)),
            (compression(bits), compression(comp)),
        ]
        t1, l1 = t_tuple_and_lrs(bits)
        t2, l2 = t_tuple_and_lrs(comp)
        pairs += [(t1, t2), (l1, l2)]
        for a, b in pairs:
            assert a.h is not None and b.h is not None
            assert abs(a.h - b.h) < 1e-9, a.name
