"""Noisy shot execution: distributions, determinism, noise channels."""

import io
import math

import numpy as np
import pytest

from qrnglab.families import CircuitSpec, build, transpile
from qrnglab.qcore import Circuit, Op, spark_topology
from qrnglab.simnoise import (
    NoiseProfile,
    ReadoutError,
    ShotTable,
    outcome_distribution,
    predicted_distribution,
    run,
    write_shot_table,
)

TOP = spark_topology()
IDEAL = NoiseProfile.ideal()


def native(spec):
    return transpile(build(spec, TOP), TOP)


def binom_band(p, n, k=3):
    return k * math.sqrt(p * (1 - p) / n)


class TestRunBasics:
    def test_requires_native_circuit(self):
        with pytest.raises(ValueError):
            run(build(CircuitSpec("C1", "H", (0,)), TOP), 10, IDEAL, seed=0)

    def test_requires_positive_shots(self):
        with pytest.raises(ValueError):
            run(native(CircuitSpec("C1", "H", (0,))), 0, IDEAL, seed=0)

    def test_ideal_c1_h_is_unbiased(self):
        n = 200_000
        table = run(native(CircuitSpec("C1", "H", (0,))), n, IDEAL, seed=101)
        assert table.shots == n and table.qubit_order == (0,)
        assert abs(table.data.mean() - 0.5) < binom_band(0.5, n)

    def test_confusion_biases_c1(self):
        # p01=0.04 / p10=0.02 shifts a balanced readout to 0.49
        noise = NoiseProfile({0: ReadoutError(p01=0.04, p10=0.02)})
        n = 200_000
        table = run(native(CircuitSpec("C1", "H", (0,))), n, noise, seed=7)
        assert abs(table.data.mean() - 0.49) < binom_band(0.49, n)

    def test_all_gate_choices_unbiased(self):
        for gate in ("H", "Rx", "Ry"):
            table = run(native(CircuitSpec("C1", gate, (2,))), 50_000, IDEAL, seed=5)
            assert abs(table.data.mean() - 0.5) < binom_band(0.5, 50_000, k=4)


class TestDeterminism:
    def test_identical_inputs_identical_tables(self):
        circ = native(CircuitSpec("C3", "H", (0, 2, 3)))
        a = run(circ, 5_000, IDEAL, seed=99)
        b = run(circ, 5_000, IDEAL, seed=99)
        assert np.array_equal(a.data, b.data)

    def test_seed_changes_output(self):
        circ = native(CircuitSpec("C1", "H", (0,)))
        a = run(circ, 5_000, IDEAL, seed=1)
        b = run(circ, 5_000, IDEAL, seed=2)
        assert not np.array_equal(a.data, b.data)

    def test_partition_invariance(self):
        # splitting the shot range across workers must not change bits
        circ = native(CircuitSpec("C5", "Ry", (1,), 3))
        noise = NoiseProfile({1: ReadoutError(0.03, 0.05)})
        whole = run(circ, 1_000, noise, seed=17)
        first = run(circ, 400, noise, seed=17, shot_offset=0)
        second = run(circ, 600, noise, seed=17, shot_offset=400)
        assert np.array_equal(whole.data, np.vstack([first.data, second.data]))

    def test_partition_invariance_with_depolarizing(self):
        circ = native(CircuitSpec("C1", "H", (0,)))
        noise = NoiseProfile(depolarizing_p=0.2)
        whole = run(circ, 900, noise, seed=23)
        parts = [run(circ, 300, noise, seed=23, shot_offset=off)
                 for off in (0, 300, 600)]
        assert np.array_equal(whole.data, np.vstack([p.data for p in parts]))


class TestDistributions:
    def test_predicted_single_qubit_closed_form(self):
        noise = NoiseProfile({0: ReadoutError(p01=0.04, p10=0.02)})
        out = predicted_distribution(np.array([0.5, 0.5]), noise, (0,))
        assert out[1] == pytest.approx(0.5 * (1 - 0.04) + 0.5 * 0.02, abs=1e-15)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)

    def test_identity_confusion_is_identity(self):
        ideal = np.array([0.1, 0.2, 0.3, 0.4])
        out = predicted_distribution(ideal, IDEAL, (0, 1))
        np.testing.assert_allclose(out, ideal, atol=1e-15)

    def test_two_qubit_ghz_against_enumeration_oracle(self):
        # brute force: 4 true states x 4 flip patterns
        e0, e1 = ReadoutError(0.04, 0.02), ReadoutError(0.01, 0.07)
        ideal = np.array([0.5, 0.0, 0.0, 0.5])
        oracle = np.zeros(4)
        for true in range(4):
            for reported in range(4):
                prob = ideal[true]
                for bitpos, err in ((0, e0), (1, e1)):
                    t, r = true >> bitpos & 1, reported >> bitpos & 1
                    if t == 1:
                        prob *= err.p01 if r == 0 else 1 - err.p01
                    else:
                        prob *= err.p10 if r == 1 else 1 - err.p10
                oracle[reported] += prob
        noise = NoiseProfile({0: e0, 1: e1})
        np.testing.assert_allclose(
            predicted_distribution(ideal, noise, (0, 1)), oracle, atol=1e-14)

    def test_predicted_validates_input(self):
        with pytest.raises(ValueError):
            predicted_distribution(np.array([0.5, 0.4]), IDEAL, (0,))
        with pytest.raises(ValueError):
            predicted_distribution(np.array([0.5, 0.5]), IDEAL, (0, 1))

    def test_outcome_distribution_matches_empirical_histogram(self):
        # every bin within 5 binomial sigma at 1e5 shots
        spec = CircuitSpec("C2", "Ry", (0, 1, 2))
        circ = native(spec)
        noise = NoiseProfile({q: ReadoutError(0.05, 0.02) for q in range(3)})
        n = 100_000
        table = run(circ, n, noise, seed=31)
        weights = 1 << np.arange(3)
        values = table.data @ weights
        counts = np.bincount(values, minlength=8)
        expected = predicted_distribution(
            outcome_distribution(circ), noise, table.qubit_order)
        for b in range(8):
            p = expected[b]
            assert abs(counts[b] / n - p) <= 5 * math.sqrt(p * (1 - p) / n)

    def test_c3_ideal_has_no_mixed_parity(self):
        circ = native(CircuitSpec("C3", "H", (0, 1, 2, 3, 4)))
        table = run(circ, 20_000, IDEAL, seed=12)
        sums = table.data.sum(axis=1)
        assert set(np.unique(sums)) <= {0, 5}
        dist = outcome_distribution(circ)
        assert dist[0] == pytest.approx(0.5, abs=1e-12)
        assert dist[31] == pytest.approx(0.5, abs=1e-12)
        assert np.all(dist[1:31] < 1e-12)


class TestNoiseChannels:
    def test_angle_error_shifts_rotation(self):
        eps = 0.1
        noise = NoiseProfile(gate_angle_error={"RX": eps})
        circ = native(CircuitSpec("C1", "Rx", (0,)))
        dist = outcome_distribution(circ, noise)
        assert dist[1] == pytest.approx(math.sin((math.pi / 2 + eps) / 2) ** 2,
                                        abs=1e-12)

    def test_depolarizing_after_not_gate(self):
        # X then depolarizing: Pauli X/Y flip the bit back, Z keeps it,
        # so P(1) = 1 - 2p/3
        p = 0.3
        circ = Circuit(1, (Op("RX", (0,), math.pi), Op("M", (0,))), native_only=True)
        n = 30_000
        table = run(circ, n, NoiseProfile(depolarizing_p=p), seed=77)
        expect = 1 - 2 * p / 3
        assert abs(table.data.mean() - expect) < binom_band(expect, n, k=4)

    def test_angle_error_rejects_unknown_gate_kind(self):
        with pytest.raises(ValueError):
            NoiseProfile(gate_angle_error={"CZ": 0.1})

    def test_c5_events_are_independent_flips(self):
        # two measurement events get independent readout flips
        noise = NoiseProfile({1: ReadoutError(0.5, 0.5)})
        circ = native(CircuitSpec("C5", "H", (1,), 2))
        table = run(circ, 40_000, noise, seed=55)
        first = table.event_columns(0)[:, 0].astype(int)
        second = table.event_columns(1)[:, 0].astype(int)
        corr = np.corrcoef(first, second)[0, 1]
        assert abs(corr) < 0.03  # total scramble kills correlation


class TestShotTable:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            ShotTable(((0,),), np.zeros((4, 2), dtype=np.uint8), seed=0)
        with pytest.raises(ValueError):
            ShotTable(((0,),), np.full((4, 1), 2, dtype=np.uint8), seed=0)

    def test_c5_record_layout(self):
        spec = CircuitSpec("C5", "H", (3,), 2)
        table = run(native(spec), 100, IDEAL, seed=1, spec=spec)
        assert table.events == ((3,), (3,))
        assert table.qubit_order == (3, 3)
        assert table.data.shape == (100, 2)

    def test_dump_format(self):
        table = ShotTable(((0, 2), (0,)),
                          np.array([[1, 0, 1], [0, 1, 0]], dtype=np.uint8), seed=3)
        sink = io.StringIO()
        write_shot_table(table, sink)
        lines = sink.getvalue().strip().split("\n")
        assert lines[0] == "# event 0: q0 q2; event 1: q0"
        assert lines[1] == "10 1"
        assert lines[2] == "01 0"
