"""Statevector core: gates, measurement, and device metadata.

Conventions used throughout the package:

* Basis index = integer whose bit ``k`` is the state of qubit ``k``
  (qubit 0 is the least significant bit).
* Global phase is physically meaningless and ignored by every equality
  check; see :func:`equal_up_to_global_phase`.
* Dense statevectors only, capped at ``MAX_QUBITS`` qubits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import yaml

__all__ = [
    "MAX_QUBITS",
    "NATIVE_GATE_NAMES",
    "ABSTRACT_GATE_NAMES",
    "Op",
    "Circuit",
    "StateVector",
    "Topology",
    "QubitCalibration",
    "CalibrationSnapshot",
    "apply_gate",
    "measure",
    "gate_matrix",
    "circuit_unitary",
    "equal_up_to_global_phase",
    "zero_state",
    "spark_topology",
    "load_calibration",
    "default_calibration",
]

MAX_QUBITS = 8

NATIVE_GATE_NAMES = frozenset({"RX", "RY", "CZ"})
ABSTRACT_GATE_NAMES = frozenset({"H", "X", "CX"})
MEASURE = "M"

_SINGLE_QUBIT = frozenset({"RX", "RY", "H", "X"})
_TWO_QUBIT = frozenset({"CZ", "CX"})
_ROTATIONS = frozenset({"RX", "RY"})


@dataclass(frozen=True)
class Op:
    """One circuit operation: a gate application or a measurement event.

    ``name`` is one of RX, RY, CZ, H, X, CX, or M. Rotation gates carry
    ``theta`` in radians; every other op must leave it ``None``.
    ``qubits`` are the targets; for CX the order is (control, target).
    """

    name: str
    qubits: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.name in _SINGLE_QUBIT:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.name} takes exactly one qubit, got {self.qubits}")
        elif self.name in _TWO_QUBIT:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{self.name} takes two distinct qubits, got {self.qubits}")
        elif self.name == MEASURE:
            if not self.qubits or len(set(self.qubits)) != len(self.qubits):
                raise ValueError(f"M takes one or more distinct qubits, got {self.qubits}")
        else:
            raise ValueError(f"unknown op name {self.name!r}")
        if self.name in _ROTATIONS:
            if self.theta is None or not math.isfinite(self.theta):
                raise ValueError(f"{self.name} requires a finite angle")
        elif self.theta is not None:
            raise ValueError(f"{self.name} takes no angle")

    @property
    def is_measurement(self) -> bool:
        return self.name == MEASURE

    @property
    def is_native(self) -> bool:
        return self.name in NATIVE_GATE_NAMES


@dataclass(frozen=True)
class Circuit:
    """Ordered op list over ``n_qubits`` qubits with at least one measurement."""

    n_qubits: int
    ops: tuple[Op, ...]
    native_only: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        for op in self.ops:
            bad = [q for q in op.qubits if not 0 <= q < self.n_qubits]
            if bad:
                raise ValueError(f"op {op.name} targets out-of-range qubits {bad}")
            if self.native_only and not op.is_measurement and not op.is_native:
                raise ValueError(f"native-only circuit contains abstract gate {op.name}")
        if not any(op.is_measurement for op in self.ops):
            raise ValueError("circuit must contain at least one measurement")

    @property
    def gate_ops(self) -> tuple[Op, ...]:
        return tuple(op for op in self.ops if not op.is_measurement)

    @property
    def measure_ops(self) -> tuple[Op, ...]:
        return tuple(op for op in self.ops if op.is_measurement)


@dataclass(frozen=True)
class StateVector:
    """Dense amplitude vector of length 2^n over the basis convention above."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"amplitude length {amps.shape} does not match {self.n_qubits} qubits"
            )
        if not np.all(np.isfinite(amps.view(np.float64))):
            raise ValueError("non-finite amplitude")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def zero_state(n_qubits: int) -> StateVector:
    """|0...0> on ``n_qubits`` qubits."""
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


# -- gate matrices -----------------------------------------------------------

def _rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_CZ = np.diag([1, 1, 1, -1]).astype(np.complex128)

# CX on local basis where the first listed qubit (control) is the local
# low bit: |c,t> with index t*2+c; control=1 flips the target.
_CX = np.zeros((4, 4), dtype=np.complex128)
_CX[0, 0] = _CX[3, 1] = _CX[2, 2] = _CX[1, 3] = 1.0


def gate_matrix(op: Op) -> np.ndarray:
    """Unitary of ``op`` over its listed qubits (first listed = local low bit)."""
    if op.name == "RX":
        return _rx(op.theta)
    if op.name == "RY":
        return _ry(op.theta)
    if op.name == "H":
        return _H.copy()
    if op.name == "X":
        return _X.copy()
    if op.name == "CZ":
        return _CZ.copy()
    if op.name == "CX":
        return _CX.copy()
    raise ValueError(f"{op.name} has no gate matrix")


def _apply_local_unitary(tensor: np.ndarray, u: np.ndarray, qubits: tuple[int, ...],
                         n: int) -> np.ndarray:
    # tensor has n leading axes of size 2 (axis j <-> qubit n-1-j) plus any
    # trailing batch axes; u is 2^k x 2^k over the listed qubits.
    k = len(qubits)
    u_t = u.reshape((2,) * (2 * k))
    # u axes (both out and in) run from the local high bit, i.e. qubits[k-1].
    in_axes = list(range(k, 2 * k))
    tensor_axes = [n - 1 - q for q in reversed(qubits)]
    out = np.tensordot(u_t, tensor, axes=(in_axes, tensor_axes))
    return np.moveaxis(out, list(range(k)), tensor_axes)


def apply_gate(state: StateVector, op: Op) -> StateVector:
    """Apply one gate op, returning the evolved state (norm preserved)."""
    if op.is_measurement:
        raise ValueError("apply_gate does not process measurements")
    n = state.n_qubits
    for q in op.qubits:
        if not 0 <= q < n:
            raise ValueError(f"target {q} out of range for {n} qubits")
    u = gate_matrix(op)
    tensor = state.amplitudes.reshape((2,) * n)
    out = _apply_local_unitary(tensor, u, op.qubits, n)
    return StateVector(n, out.reshape(-1))


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Full 2^n x 2^n unitary of the circuit's gate ops (measurements skipped)."""
    n = circuit.n_qubits
    dim = 2**n
    mat = np.eye(dim, dtype=np.complex128)
    tensor = mat.reshape((2,) * n + (dim,))
    for op in circuit.gate_ops:
        tensor = _apply_local_unitary(tensor, gate_matrix(op), op.qubits, n)
    return tensor.reshape(dim, dim)


def measure(state: StateVector, qubits: Iterable[int],
            rng: np.random.Generator) -> tuple[tuple[int, ...], StateVector]:
    """Born-rule measurement of ``qubits``; returns (bits, collapsed state).

    Bits are returned in the order the qubits were given. The collapsed
    state is renormalized with the measured qubits projected onto the
    observed outcome.
    """
    qubits = tuple(int(q) for q in qubits)
    n = state.n_qubits
    if len(set(qubits)) != len(qubits):
        raise ValueError("measured qubits must be distinct")
    for q in qubits:
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range")
    amps = state.amplitudes.copy()
    bits = []
    for q in qubits:
        probs = np.abs(amps) ** 2
        total = probs.sum()
        if total <= 0.0:
            raise RuntimeError("state norm vanished during measurement")
        mask = (np.arange(amps.size) >> q) & 1
        p1 = probs[mask == 1].sum() / total
        bit = 1 if rng.random() < p1 else 0
        amps[mask != bit] = 0.0
        bits.append(bit)
    norm = np.sqrt(np.sum(np.abs(amps) ** 2))
    return tuple(bits), StateVector(n, amps / norm)


def equal_up_to_global_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-10) -> bool:
    """True iff ``u == exp(i*phi) * v`` entrywise within ``tol``.

    The phase is read off the largest-magnitude entry of ``v``.
    """
    u = np.asarray(u, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {v.shape}")
    idx = np.unravel_index(np.argmax(np.abs(v)), v.shape) if v.ndim else ()
    pivot = v[idx]
    if abs(pivot) == 0.0:
        return bool(np.max(np.abs(u - v)) <= tol)
    ratio = u[idx] / pivot
    phase = ratio / abs(ratio) if abs(ratio) > 0.0 else 1.0
    return bool(np.max(np.abs(u - phase * v)) <= tol)


# -- device metadata ---------------------------------------------------------

@dataclass(frozen=True)
class Topology:
    """Coupling map: qubit count, undirected edge set, optional hub qubit."""

    n_qubits: int
    edges: frozenset[tuple[int, int]]
    hub: int | None = None

    def __post_init__(self) -> None:
        norm = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b or not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ValueError(f"invalid edge ({a}, {b})")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))
        if self.hub is not None and not 0 <= self.hub < self.n_qubits:
            raise ValueError(f"hub {self.hub} out of range")

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def neighbors(self, q: int) -> tuple[int, ...]:
        out = {b if a == q else a for a, b in self.edges if q in (a, b)}
        return tuple(sorted(out))


def spark_topology() -> Topology:
    """Five-qubit star coupling map: hub qubit 2 linked to 0, 1, 3, 4."""
    return Topology(5, frozenset({(0, 2), (1, 2), (2, 3), (2, 4)}), hub=2)


@dataclass(frozen=True)
class QubitCalibration:
    """Per-qubit readout/gate/coherence figures.

    p01 is Pr(report 0 | true 1), p10 is Pr(report 1 | true 0). T1/T2 are
    carried for completeness but never simulated: the circuits here are a
    handful of gates deep, far below millisecond coherence scales.
    """

    p01: float
    p10: float
    f_1q: float = 1.0
    f_2q: float = 1.0
    t1_ms: float = 1.0
    t2_ms: float = 1.0

    def __post_init__(self) -> None:
        for name in ("p01", "p10", "f_1q", "f_2q"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name}={val} outside [0, 1]")
        for name in ("t1_ms", "t2_ms"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class CalibrationSnapshot:
    """Mapping qubit id -> QubitCalibration. Treat as immutable."""

    qubits: Mapping[int, QubitCalibration] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "qubits", {int(q): c for q, c in dict(self.qubits).items()}
        )

    def __getitem__(self, q: int) -> QubitCalibration:
        try:
            return self.qubits[q]
        except KeyError:
            raise KeyError(f"no calibration entry for qubit {q}") from None

    def __contains__(self, q: int) -> bool:
        return q in self.qubits


_CALIB_FIELDS = ("p01", "p10", "f_1q", "f_2q", "t1_ms", "t2_ms")


def load_calibration(source) -> CalibrationSnapshot:
    """Load a calibration snapshot from a YAML/JSON document or file path.

    Expected layout::

        qubits:
          0: {p01: 0.03, p10: 0.03, f_1q: 0.999, f_2q: 0.99, t1_ms: 0.964, t2_ms: 1.155}
    """
    if hasattr(source, "read"):
        doc = yaml.safe_load(source.read())
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "qubits" not in doc:
        raise ValueError("calibration document must contain a 'qubits' mapping")
    entries = {}
    for q, rec in doc["qubits"].items():
        if not isinstance(rec, dict):
            raise ValueError(f"qubit {q}: expected a field mapping")
        unknown = set(rec) - set(_CALIB_FIELDS)
        if unknown:
            raise ValueError(f"qubit {q}: unknown calibration fields {sorted(unknown)}")
        if "p01" not in rec or "p10" not in rec:
            raise ValueError(f"qubit {q}: p01 and p10 are required")
        entries[int(q)] = QubitCalibration(**{k: float(v) for k, v in rec.items()})
    return CalibrationSnapshot(entries)


def default_calibration() -> CalibrationSnapshot:
    """Packaged snapshot with typical figures for the five-qubit star device."""
    from importlib.resources import files

    with files("qrnglab.data").joinpath("spark_default.yaml").open("r") as fh:
        return load_calibration(fh)
