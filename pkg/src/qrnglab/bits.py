"""Bitstream extraction from shot tables, and bit-exact serialization.

Extraction policies:

* ``SingleQubit`` - one measured bit per shot, passed through.
* ``Flatten`` - per shot, the event's bits in ascending qubit-id order.
* ``C3Majority`` - per shot, the majority bit across the measured qubits;
  ties (even subset sizes) resolve to the GHZ source qubit's bit.
* ``C3Source`` - per shot, the source qubit's bit only.
* ``C5TimeOrder`` - all measurement events of the shot in time order.

Packed serialization is LSB-first: bit i of byte b holds stream bit
8b+i. The choice is normative - statistical results depend on bit order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .simnoise import ShotTable

__all__ = [
    "POLICIES",
    "BitStream",
    "extract",
    "ones_fraction",
    "write_packed",
    "read_packed",
    "read_ascii",
]

POLICIES = ("SingleQubit", "Flatten", "C3Majority", "C3Source", "C5TimeOrder")


@dataclass(frozen=True, eq=False)
class BitStream:
    """Immutable 0/1 sequence."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.bits).reshape(-1), dtype=np.uint8)
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0/1")
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(
            np.all(self.bits == other.bits))

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    @property
    def length(self) -> int:
        return len(self)


def _single_event(table: ShotTable) -> tuple[int, ...]:
    if len(table.events) != 1:
        raise ValueError(f"policy needs exactly one measurement event, "
                         f"table has {len(table.events)}")
    return table.events[0]


def _check_family(table: ShotTable, family: str, policy: str) -> None:
    if table.spec is not None and table.spec.family != family:
        raise ValueError(f"{policy} requires a {family} table, got {table.spec.family}")


def extract(table: ShotTable, policy: str, *, source_qubit: int | None = None) -> BitStream:
    """Decode a shot table into a bitstream under ``policy``.

    ``source_qubit`` names the GHZ source for the C3 policies; C3Source
    always needs it, C3Majority needs it only when ties are possible
    (even qubit counts).
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown extraction policy {policy!r}")

    if policy == "SingleQubit":
        event = _single_event(table)
        if len(event) != 1:
            raise ValueError("SingleQubit needs a single measured qubit")
        return BitStream(table.data[:, 0])

    if policy == "Flatten":
        event = _single_event(table)
        order = np.argsort(event, kind="stable")
        return BitStream(table.data[:, order].reshape(-1))

    if policy in ("C3Majority", "C3Source"):
        _check_family(table, "C3", policy)
        event = _single_event(table)
        if policy == "C3Source" or len(event) % 2 == 0:
            if source_qubit is None:
                raise ValueError(f"{policy} needs source_qubit for this table")
            if source_qubit not in event:
                raise ValueError(f"source qubit {source_qubit} not measured")
        if policy == "C3Source":
            return BitStream(table.data[:, event.index(source_qubit)])
        ones = table.data.sum(axis=1)
        k = len(event)
        majority = np.where(2 * ones > k, 1, np.where(2 * ones < k, 0, 0)).astype(np.uint8)
        if k % 2 == 0:
            tie = 2 * ones == k
            majority[tie] = table.data[tie, event.index(source_qubit)]
        return BitStream(majority)

    # C5TimeOrder
    _check_family(table, "C5", policy)
    if len(table.events) < 2:
        raise ValueError("C5TimeOrder needs at least two measurement events")
    if any(len(e) != 1 for e in table.events):
        raise ValueError("C5TimeOrder expects single-qubit measurement events")
    return BitStream(table.data.reshape(-1))


def ones_fraction(stream: BitStream) -> float:
    """Fraction of 1 bits; undefined (error) on an empty stream."""
    if len(stream) == 0:
        raise ValueError("empty stream has no ones fraction")
    return float(stream.bits.mean())


def _to_sink(sink, data: bytes) -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)


def _from_source(source) -> bytes:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return fh.read()
    return source.read()


def write_packed(stream: BitStream, sink) -> None:
    """Packed bytes, LSB-first within each byte; trailing slack bits zero."""
    _to_sink(sink, np.packbits(stream.bits, bitorder="little").tobytes())


def read_packed(source, length: int) -> BitStream:
    """Read ``length`` bits from a packed source (bytes beyond that ignored)."""
    if length < 0:
        raise ValueError("length must be >= 0")
    raw = _from_source(source)
    needed = (length + 7) // 8
    if len(raw) < needed:
        raise ValueError(f"source holds {len(raw)} bytes, need {needed} for {length} bits")
    arr = np.frombuffer(raw[:needed], dtype=np.uint8)
    return BitStream(np.unpackbits(arr, bitorder="little")[:length])


def read_ascii(source) -> BitStream:
    """Parse an ASCII '0'/'1' stream; whitespace ignored, anything else errors."""
    raw = _from_source(source)
    text = raw.decode("ascii") if isinstance(raw, bytes) else raw
    out = []
    for ch in text:
        if ch in "01":
            out.append(ord(ch) - ord("0"))
        elif not ch.isspace():
            raise ValueError(f"non-binary character {ch!r} in ASCII stream")
    return BitStream(np.array(out, dtype=np.uint8))
