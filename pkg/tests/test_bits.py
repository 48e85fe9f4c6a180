"""Extraction policies and serialization."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrnglab.bits import (
    BitStream,
    extract,
    ones_fraction,
    read_ascii,
    read_packed,
    write_packed,
)
from qrnglab.families import CircuitSpec, build, transpile
from qrnglab.qcore import spark_topology
from qrnglab.simnoise import NoiseProfile, ReadoutError, ShotTable, run

TOP = spark_topology()


def table(events, rows, spec=None):
    return ShotTable(tuple(events), np.array(rows, dtype=np.uint8), seed=0, spec=spec)


class TestExtract:
    def test_single_qubit_passthrough(self):
        t = table([(3,)], [[1], [0], [1]])
        assert list(extract(t, "SingleQubit").bits) == [1, 0, 1]

    def test_flatten_orders_by_qubit_id(self):
        # event lists qubits out of order; flatten must sort them
        t = table([(2, 0)], [[1, 0], [0, 1]])
        assert list(extract(t, "Flatten").bits) == [0, 1, 1, 0]

    def test_flatten_example_row(self):
        t = table([(0, 1, 2, 3, 4)], [[0, 1, 1, 0, 1]])
        assert list(extract(t, "Flatten").bits) == [0, 1, 1, 0, 1]

    def test_majority_decodes_single_flip_to_zero(self):
        spec = CircuitSpec("C3", "H", (0, 1, 2, 3, 4))
        t = table([(0, 1, 2, 3, 4)], [[0, 1, 0, 0, 0]], spec=spec)  # one stray 1
        assert list(extract(t, "C3Majority").bits) == [0]

    def test_majority_tie_takes_source_bit(self):
        spec = CircuitSpec("C3", "H", (0, 2))
        rows = [[1, 0], [0, 1], [1, 1]]
        t = table([(0, 2)], rows, spec=spec)
        got = extract(t, "C3Majority", source_qubit=2)
        assert list(got.bits) == [0, 1, 1]

    def test_majority_tie_without_source_rejected(self):
        spec = CircuitSpec("C3", "H", (0, 2))
        t = table([(0, 2)], [[1, 0]], spec=spec)
        with pytest.raises(ValueError):
            extract(t, "C3Majority")

    def test_source_policy_picks_column(self):
        spec = CircuitSpec("C3", "H", (0, 2, 3))
        t = table([(0, 2, 3)], [[1, 0, 1], [0, 1, 0]], spec=spec)
        assert list(extract(t, "C3Source", source_qubit=2).bits) == [0, 1]

    def test_c3_policies_require_c3_family(self):
        spec = CircuitSpec("C2", "H", (0, 2))
        t = table([(0, 2)], [[1, 0]], spec=spec)
        with pytest.raises(ValueError):
            extract(t, "C3Majority", source_qubit=2)

    def test_c5_time_order(self):
        spec = CircuitSpec("C5", "H", (1,), 2)
        t = table([(1,), (1,)], [[1, 0], [0, 0]], spec=spec)
        assert list(extract(t, "C5TimeOrder").bits) == [1, 0, 0, 0]

    def test_c5_time_order_needs_multiple_events(self):
        spec = CircuitSpec("C5", "H", (1,), 2)
        t = table([(1,)], [[1]], spec=None)
        with pytest.raises(ValueError):
            extract(t, "C5TimeOrder")
        _ = spec  # family gate exercised above

    def test_lengths_per_policy(self):
        shots = 500
        c2 = CircuitSpec("C2", "Ry", (0, 1, 2))
        t2 = run(transpile(build(c2, TOP), TOP), shots, NoiseProfile.ideal(), 3, spec=c2)
        assert len(extract(t2, "Flatten")) == shots * 3
        c5 = CircuitSpec("C5", "Ry", (0,), 3)
        t5 = run(transpile(build(c5, TOP), TOP), shots, NoiseProfile.ideal(), 3, spec=c5)
        assert len(extract(t5, "C5TimeOrder")) == shots * 3
        c3 = CircuitSpec("C3", "Ry", (1, 2, 4))
        t3 = run(transpile(build(c3, TOP), TOP), shots, NoiseProfile.ideal(), 3, spec=c3)
        assert len(extract(t3, "C3Majority", source_qubit=2)) == shots

    def test_majority_equals_source_without_readout_error(self):
        spec = CircuitSpec("C3", "Rx", (0, 1, 2, 3, 4))
        t = run(transpile(build(spec, TOP), TOP), 3_000, NoiseProfile.ideal(), 8,
                spec=spec)
        maj = extract(t, "C3Majority", source_qubit=2)
        src = extract(t, "C3Source", source_qubit=2)
        assert maj == src

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            extract(table([(0,)], [[1]]), "Bogus")


class TestOnesFraction:
    def test_simple_values(self):
        assert ones_fraction(BitStream([0, 1, 0, 1])) == 0.5
        assert ones_fraction(BitStream([1, 1, 1, 1])) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ones_fraction(BitStream([]))


class TestSerialization:
    def test_lsb_first_byte(self):
        sink = io.BytesIO()
        write_packed(BitStream([1, 0, 0, 0, 0, 0, 0, 0]), sink)
        assert sink.getvalue() == b"\x01"

    def test_trailing_bits_zero(self):
        sink = io.BytesIO()
        write_packed(BitStream([1, 1, 1]), sink)
        assert sink.getvalue() == b"\x07"

    @settings(deadline=None, max_examples=120)
    @given(st.lists(st.sampled_from([0, 1]), min_size=0, max_size=64))
    def test_roundtrip_identity(self, bits):
        sink = io.BytesIO()
        stream = BitStream(bits)
        write_packed(stream, sink)
        back = read_packed(io.BytesIO(sink.getvalue()), len(bits))
        assert back == stream

    def test_short_source_rejected(self):
        with pytest.raises(ValueError):
            read_packed(io.BytesIO(b"\x01"), 17)

    def test_ascii_parsing(self):
        assert list(read_ascii(io.StringIO("10 1\n1")).bits) == [1, 0, 1, 1]

    def test_ascii_rejects_other_characters(self):
        with pytest.raises(ValueError):
            read_ascii(io.StringIO("1012"))

    def test_path_based_io(self, tmp_path):
        p = tmp_path / "s.bin"
        stream = BitStream(np.random.default_rng(1).integers(0, 2, 41))
        write_packed(stream, p)
        assert read_packed(p, 41) == stream
