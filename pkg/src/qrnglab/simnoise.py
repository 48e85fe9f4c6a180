"""Shot execution under a calibrated noise model.

The noise model has three parts:

* per-qubit readout confusion (p01 = Pr(report 0 | true 1),
  p10 = Pr(report 1 | true 0)), applied independently per qubit per
  measurement event;
* optional coherent over-rotation: every Rx/Ry angle shifted by a fixed
  per-gate-kind epsilon;
* optional depolarizing noise as stochastic Pauli insertion after each
  gate, per touched qubit, per shot.

Execution is exact rather than per-shot: the circuit is expanded once
into a tree of collapse branches (one level per measurement event), and
shots are drawn from the resulting distributions with a counter-style
generator keyed by (seed, shot index, event). Identical inputs produce
bit-identical tables no matter how shots are batched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .families import CircuitSpec
from .qcore import Circuit, CalibrationSnapshot, _apply_local_unitary, _rx, _ry, _CZ

__all__ = [
    "ReadoutError",
    "NoiseProfile",
    "ShotTable",
    "run",
    "derive_seed",
    "predicted_distribution",
    "outcome_distribution",
    "write_shot_table",
]

_CHUNK = 1 << 16       # shots per sampling chunk; bounds peak memory
_PRUNE = 1e-24         # probabilities below this are exact zeros numerically
_MAX_NODES = 4096

# Distinct tag ranges keep the per-(seed, shot) random streams for event
# sampling, readout flips, and Pauli insertion from colliding.
_TAG_EVENT = 0
_TAG_FLIP = 1_000
_TAG_PAULI = 100_000

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)


@dataclass(frozen=True)
class ReadoutError:
    """Confusion entries for one qubit."""

    p01: float = 0.0
    p10: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.p01 <= 1.0 and 0.0 <= self.p10 <= 1.0):
            raise ValueError(f"confusion probabilities outside [0,1]: {self}")

    def matrix(self) -> np.ndarray:
        # column = true bit, row = reported bit
        return np.array(
            [[1.0 - self.p10, self.p01], [self.p10, 1.0 - self.p01]], dtype=np.float64
        )


@dataclass(frozen=True)
class NoiseProfile:
    """Readout confusion per qubit, angle offsets per gate kind, depolarizing p."""

    readout: Mapping[int, ReadoutError] = field(default_factory=dict)
    gate_angle_error: Mapping[str, float] = field(default_factory=dict)
    depolarizing_p: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "readout", dict(self.readout))
        object.__setattr__(self, "gate_angle_error", dict(self.gate_angle_error))
        for name, eps in self.gate_angle_error.items():
            if name not in ("RX", "RY"):
                raise ValueError(f"angle error applies to RX/RY only, got {name!r}")
            if not np.isfinite(eps):
                raise ValueError("angle error must be finite")
        if not 0.0 <= self.depolarizing_p <= 1.0:
            raise ValueError("depolarizing_p outside [0,1]")

    def readout_for(self, qubit: int) -> ReadoutError:
        return self.readout.get(qubit, ReadoutError())

    @staticmethod
    def ideal() -> "NoiseProfile":
        return NoiseProfile()

    @classmethod
    def from_calibration(cls, calib: CalibrationSnapshot, *,
                         gate_angle_error: Mapping[str, float] | None = None,
                         depolarizing_p: float = 0.0) -> "NoiseProfile":
        readout = {q: ReadoutError(c.p01, c.p10) for q, c in calib.qubits.items()}
        return cls(readout, dict(gate_angle_error or {}), depolarizing_p)


@dataclass(frozen=True)
class ShotTable:
    """Reported bits for every shot, one row per shot.

    ``events`` lists the measured qubits of each measurement event in
    circuit order; a row concatenates the event records in that order.
    ``data[s, i]`` is the i-th reported bit of shot ``s``.
    """

    events: tuple[tuple[int, ...], ...]
    data: np.ndarray
    seed: int
    spec: CircuitSpec | None = None

    def __post_init__(self) -> None:
        data = np.ascontiguousarray(self.data, dtype=np.uint8)
        width = sum(len(e) for e in self.events)
        if data.ndim != 2 or data.shape[1] != width:
            raise ValueError(f"data shape {data.shape} does not match events {self.events}")
        if data.size and data.max() > 1:
            raise ValueError("bits must be 0/1")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "events", tuple(tuple(e) for e in self.events))

    @property
    def shots(self) -> int:
        return self.data.shape[0]

    @property
    def qubit_order(self) -> tuple[int, ...]:
        return tuple(q for event in self.events for q in event)

    def event_columns(self, index: int) -> np.ndarray:
        """The (shots, k) bit block of measurement event ``index``."""
        start = sum(len(e) for e in self.events[:index])
        return self.data[:, start:start + len(self.events[index])]


# -- counter-style random streams -------------------------------------------

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= _M1
    x ^= x >> np.uint64(27)
    x *= _M2
    x ^= x >> np.uint64(31)
    return x


def _uniforms(seed: int, shot_ids: np.ndarray, tag: int) -> np.ndarray:
    """U[0,1) per shot id, reproducible for any partition of the id range."""
    base = np.uint64((seed & 0xFFFFFFFFFFFFFFFF) ^ 0xD1B54A32D192ED03)
    salt = np.uint64((tag * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF)
    h = _mix(shot_ids.astype(np.uint64) * _GOLDEN + base)
    h = _mix(h + salt)
    return (h >> np.uint64(11)) * (2.0**-53)


def derive_seed(base: int, index: int) -> int:
    """Independent child seed ``index`` of ``base`` (same mixing family)."""
    if index < 0:
        raise ValueError("index must be >= 0")
    mixed = (base + (index + 1) * 0x9E3779B97F4A7C15) % (1 << 64)
    return int(_mix(np.array([mixed], dtype=np.uint64))[0])


# -- branch-tree expansion ---------------------------------------------------

class _Node:
    __slots__ = ("state", "cdf", "children")

    def __init__(self, state: np.ndarray):
        self.state = state          # amplitudes, full register
        self.cdf = None             # inclusive cdf over the next event's outcomes
        self.children = None        # child node index per outcome (next level)


def _gate_unitary(op, noise: NoiseProfile) -> np.ndarray:
    if op.name == "RX":
        return _rx(op.theta + noise.gate_angle_error.get("RX", 0.0))
    if op.name == "RY":
        return _ry(op.theta + noise.gate_angle_error.get("RY", 0.0))
    if op.name == "CZ":
        return _CZ
    raise ValueError(f"non-native gate {op.name} in execution path")


def _expand(circuit: Circuit, noise: NoiseProfile,
            insertions: Mapping[int, list] | None = None):
    """Expand the circuit into per-event branch levels.

    ``insertions`` maps gate index -> [(qubit, pauli index)] applied right
    after that gate (depolarizing realization for one shot group).
    Returns (events, levels) where levels[e] is the node list whose cdf /
    children describe measurement event e.
    """
    n = circuit.n_qubits
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[0] = 1.0
    nodes = [_Node(amps)]
    events: list[tuple[int, ...]] = []
    levels: list[list[_Node]] = []
    gate_index = 0
    idx = np.arange(2**n)
    for op in circuit.ops:
        if not op.is_measurement:
            u = _gate_unitary(op, noise)
            for node in nodes:
                t = _apply_local_unitary(node.state.reshape((2,) * n), u, op.qubits, n)
                node.state = t.reshape(-1)
            if insertions and gate_index in insertions:
                for qubit, pauli in insertions[gate_index]:
                    p = _PAULI[pauli]
                    for node in nodes:
                        t = _apply_local_unitary(
                            node.state.reshape((2,) * n), p, (qubit,), n)
                        node.state = t.reshape(-1)
            gate_index += 1
            continue
        # measurement event: split every live node over the 2^k outcomes
        qubits = op.qubits
        k = len(qubits)
        key = np.zeros(2**n, dtype=np.int64)
        for j, q in enumerate(qubits):
            key |= ((idx >> q) & 1) << j
        next_nodes: list[_Node] = []
        for node in nodes:
            probs = np.bincount(key, weights=np.abs(node.state) ** 2,
                                minlength=2**k)
            probs[probs < _PRUNE] = 0.0
            probs /= probs.sum()
            cdf = np.cumsum(probs)
            cdf[-1] = 1.0
            children = np.zeros(2**k, dtype=np.int32)
            for outcome in np.nonzero(probs)[0]:
                child_amps = np.where(key == outcome, node.state, 0.0)
                child_amps /= np.linalg.norm(child_amps)
                children[outcome] = len(next_nodes)
                next_nodes.append(_Node(child_amps))
            node.cdf = cdf
            node.children = children
        if len(next_nodes) > _MAX_NODES:
            raise RuntimeError("measurement branch count exploded")
        events.append(tuple(qubits))
        levels.append(nodes)
        nodes = next_nodes
    return tuple(events), levels


def _sample_tree(events, levels, seed: int, shot_ids: np.ndarray) -> np.ndarray:
    """True (pre-readout) bits for the given absolute shot ids."""
    total_bits = sum(len(e) for e in events)
    out = np.empty((shot_ids.size, total_bits), dtype=np.uint8)
    for lo in range(0, shot_ids.size, _CHUNK):
        sids = shot_ids[lo:lo + _CHUNK]
        cur = np.zeros(sids.size, dtype=np.int32)
        col = 0
        for e, (event, nodes) in enumerate(zip(events, levels)):
            cdfs = np.stack([node.cdf for node in nodes])
            childtab = np.stack([node.children for node in nodes])
            u = _uniforms(seed, sids, _TAG_EVENT + e)
            outcome = (u[:, None] >= cdfs[cur]).sum(axis=1)
            for j in range(len(event)):
                out[lo:lo + sids.size, col + j] = (outcome >> j) & 1
            cur = childtab[cur, outcome]
            col += len(event)
    return out


def _apply_readout(bits: np.ndarray, events, noise: NoiseProfile, seed: int,
                   shot_ids: np.ndarray) -> np.ndarray:
    """Flip each reported bit per its qubit's confusion entries (in place)."""
    col = 0
    for e, event in enumerate(events):
        for j, q in enumerate(event):
            err = noise.readout_for(q)
            if err.p01 == 0.0 and err.p10 == 0.0:
                col += 1
                continue
            u = _uniforms(seed, shot_ids, _TAG_FLIP + 16 * e + j)
            b = bits[:, col]
            flip_prob = np.where(b == 1, err.p01, err.p10)
            bits[:, col] = b ^ (u < flip_prob)
            col += 1
    return bits


def _depolarizing_slots(circuit: Circuit) -> list[tuple[int, int]]:
    slots = []
    g = 0
    for op in circuit.ops:
        if op.is_measurement:
            continue
        for q in op.qubits:
            slots.append((g, q))
        g += 1
    return slots


def run(circuit: Circuit, shots: int, noise: NoiseProfile, seed: int, *,
        spec: CircuitSpec | None = None, shot_offset: int = 0) -> ShotTable:
    """Execute ``shots`` shots of a native circuit under ``noise``.

    ``shot_offset`` shifts the absolute shot indices used for random-stream
    derivation; run(N) equals the concatenation of run(N1, offset 0) and
    run(N2, offset N1) for any split N1+N2=N.
    """
    if not circuit.native_only:
        raise ValueError("run() requires a transpiled (native-only) circuit")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    shot_ids = np.arange(shot_offset, shot_offset + shots, dtype=np.uint64)

    if noise.depolarizing_p == 0.0:
        events, levels = _expand(circuit, noise)
        bits = _sample_tree(events, levels, seed, shot_ids)
    else:
        slots = _depolarizing_slots(circuit)
        p = noise.depolarizing_p
        choices = np.zeros((shots, len(slots)), dtype=np.uint8)
        for s in range(len(slots)):
            u = _uniforms(seed, shot_ids, _TAG_PAULI + s)
            hit = u < p
            # conditional on a hit, u/p is U[0,1): pick X/Y/Z uniformly
            choices[:, s] = np.where(hit, 1 + np.minimum((u / p * 3).astype(np.uint8), 2), 0)
        patterns, inverse = np.unique(choices, axis=0, return_inverse=True)
        events = None
        bits = None
        for pi, pattern in enumerate(patterns):
            insertions: dict[int, list] = {}
            for s, choice in enumerate(pattern):
                if choice:
                    g, q = slots[s]
                    insertions.setdefault(g, []).append((q, choice - 1))
            ev, levels = _expand(circuit, noise, insertions or None)
            sel = np.nonzero(inverse == pi)[0]
            sub = _sample_tree(ev, levels, seed, shot_ids[sel])
            if bits is None:
                events = ev
                bits = np.empty((shots, sub.shape[1]), dtype=np.uint8)
            bits[sel] = sub

    _apply_readout(bits, events, noise, seed, shot_ids)
    return ShotTable(events, bits, seed, spec=spec)


# -- exact distributions -----------------------------------------------------

def outcome_distribution(circuit: Circuit, noise: NoiseProfile | None = None) -> np.ndarray:
    """Exact pre-readout distribution over concatenated measurement records.

    Entry ``v`` is the probability that the shot's record bits, read
    LSB-first in record order, encode the integer ``v``. Gate-angle noise
    is included; readout confusion and depolarizing are not (push the
    result through predicted_distribution for readout).
    """
    noise = noise or NoiseProfile.ideal()
    events, levels = _expand(circuit, noise)
    total_bits = sum(len(e) for e in events)
    dist = np.zeros(2**total_bits, dtype=np.float64)

    def descend(level: int, node_idx: int, prob: float, value: int, offset: int):
        if level == len(levels):
            dist[value] += prob
            return
        node = levels[level][node_idx]
        probs = np.diff(node.cdf, prepend=0.0)
        for outcome in np.nonzero(probs > 0)[0]:
            descend(level + 1, int(node.children[outcome]),
                    prob * float(probs[outcome]),
                    value | int(outcome) << offset,
                    offset + len(events[level]))

    descend(0, 0, 1.0, 0, 0)
    return dist


def predicted_distribution(ideal: np.ndarray, noise: NoiseProfile,
                           qubits: tuple[int, ...]) -> np.ndarray:
    """Push a distribution through the per-qubit readout confusion matrices.

    ``ideal`` is indexed LSB-first by the bits of ``qubits`` (slot j of
    ``qubits`` is bit j). Qubits may repeat (multi-event records): flips
    are independent per slot.
    """
    k = len(qubits)
    p = np.asarray(ideal, dtype=np.float64)
    if p.shape != (2**k,):
        raise ValueError(f"distribution length {p.shape} does not match {k} qubits")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("input distribution must sum to 1")
    tensor = p.reshape((2,) * k)
    for j, q in enumerate(qubits):
        c = noise.readout_for(q).matrix()
        axis = k - 1 - j
        tensor = np.moveaxis(
            np.tensordot(c, tensor, axes=([1], [axis])), 0, axis)
    return tensor.reshape(-1)


def write_shot_table(table: ShotTable, sink) -> None:
    """Dump: header comment naming the qubit order, then one line per shot
    with event records separated by spaces."""
    layout = "; ".join(
        f"event {i}: " + " ".join(f"q{q}" for q in event)
        for i, event in enumerate(table.events)
    )
    sink.write(f"# {layout}\n")
    widths = [len(e) for e in table.events]
    for row in table.data:
        parts = []
        col = 0
        for w in widths:
            parts.append("".join(str(b) for b in row[col:col + w]))
            col += w
        sink.write(" ".join(parts) + "\n")
