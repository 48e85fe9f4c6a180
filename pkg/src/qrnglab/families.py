"""Construction of the C1-C5 circuit families and native-gate transpilation.

Five families, each instantiated with one of three superposition gates
(H, Rx(pi/2), Ry(pi/2)):

* C1 - one qubit: prepare superposition, measure.
* C2 - several qubits prepared and measured together in one shot.
* C3 - GHZ state: superposition on a source qubit fanned out with CX to
  every other qubit in the subset, then measure all.
* C4 - NOT before the superposition gate on one qubit.
* C5 - repeated prepare/measure on the same qubit without reset.

Transpilation rewrites abstract H / X / CX into the native {Rx, Ry, CZ}
set and enforces the coupling map; it never routes (no SWAP insertion).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .qcore import Circuit, Op, Topology

__all__ = [
    "FAMILIES",
    "GATE_CHOICES",
    "CircuitSpec",
    "NotConnectable",
    "NoRoute",
    "build",
    "transpile",
    "c3_source",
    "enumerate_c3_subsets",
    "enumerate_paper_grid",
    "format_circuit",
]

FAMILIES = ("C1", "C2", "C3", "C4", "C5")
GATE_CHOICES = ("H", "Rx", "Ry")

_HALF_PI = math.pi / 2.0


class NotConnectable(ValueError):
    """C3 qubit subset admits no source adjacent to every other member."""


class NoRoute(ValueError):
    """Two-qubit gate requested on a pair that is not a coupling-map edge."""


@dataclass(frozen=True)
class CircuitSpec:
    """One grid entry: family, gate choice, qubit subset, C5 repetition count."""

    family: str
    gate: str
    qubits: tuple[int, ...]
    repetitions: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.gate not in GATE_CHOICES:
            raise ValueError(f"unknown gate choice {self.gate!r}")
        if not self.qubits or len(set(self.qubits)) != len(self.qubits):
            raise ValueError("qubits must be a nonempty set of distinct ids")
        if self.family in ("C1", "C4", "C5") and len(self.qubits) != 1:
            raise ValueError(f"{self.family} uses exactly one qubit")
        if self.family == "C3" and len(self.qubits) < 2:
            raise ValueError("C3 needs at least two qubits")
        if self.family == "C5":
            reps = 2 if self.repetitions is None else int(self.repetitions)
            if reps < 2:
                raise ValueError("C5 repetitions must be >= 2")
            object.__setattr__(self, "repetitions", reps)
        elif self.repetitions is not None:
            raise ValueError(f"repetitions only applies to C5, not {self.family}")

    def label(self) -> str:
        """Short unique name, e.g. C3-Ry-q024 or C5-H-q1-r2. Used for file names."""
        tag = f"{self.family}-{self.gate}-q{''.join(str(q) for q in sorted(self.qubits))}"
        if self.family == "C5":
            tag += f"-r{self.repetitions}"
        return tag

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "gate": self.gate,
            "qubits": list(self.qubits),
            "repetitions": self.repetitions,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CircuitSpec":
        unknown = set(doc) - {"family", "gate", "qubits", "repetitions"}
        if unknown:
            raise ValueError(f"unknown CircuitSpec fields {sorted(unknown)}")
        return cls(
            family=doc["family"],
            gate=doc["gate"],
            qubits=tuple(doc["qubits"]),
            repetitions=doc.get("repetitions"),
        )


def _prep_op(gate: str, qubit: int) -> Op:
    if gate == "H":
        return Op("H", (qubit,))
    if gate == "Rx":
        return Op("RX", (qubit,), _HALF_PI)
    return Op("RY", (qubit,), _HALF_PI)


def c3_source(qubits: tuple[int, ...], topology: Topology) -> int:
    """The GHZ source: a subset member adjacent to every other member.

    Prefers the topology hub when it qualifies, else the lowest qualifying
    id. Raises NotConnectable when no member reaches all the others.
    """
    members = sorted(set(qubits))
    candidates = [
        q for q in members
        if all(topology.has_edge(q, other) for other in members if other != q)
    ]
    if not candidates:
        raise NotConnectable(f"no source qubit for subset {members}")
    if topology.hub in candidates:
        return topology.hub
    return candidates[0]


def build(spec: CircuitSpec, topology: Topology) -> Circuit:
    """Construct the abstract (untranspiled) circuit for ``spec``."""
    for q in spec.qubits:
        if not 0 <= q < topology.n_qubits:
            raise ValueError(f"qubit {q} outside the {topology.n_qubits}-qubit device")
    qubits = tuple(sorted(spec.qubits))
    ops: list[Op] = []
    if spec.family == "C1":
        (q,) = qubits
        ops = [_prep_op(spec.gate, q), Op("M", (q,))]
    elif spec.family == "C2":
        ops = [_prep_op(spec.gate, q) for q in qubits]
        ops.append(Op("M", qubits))
    elif spec.family == "C3":
        source = c3_source(qubits, topology)
        ops = [_prep_op(spec.gate, source)]
        ops += [Op("CX", (source, q)) for q in qubits if q != source]
        ops.append(Op("M", qubits))
    elif spec.family == "C4":
        (q,) = qubits
        ops = [Op("X", (q,)), _prep_op(spec.gate, q), Op("M", (q,))]
    else:  # C5
        (q,) = qubits
        for _ in range(spec.repetitions):
            ops += [_prep_op(spec.gate, q), Op("M", (q,))]
    return Circuit(topology.n_qubits, tuple(ops), native_only=False)


# Native rewrites. H is two pulses (Ry then Rx); CX conjugates CZ with the
# same pair on the target. Sequences are in circuit order, first op first.
def _rewrite(op: Op, topology: Topology) -> list[Op]:
    if op.is_measurement or op.is_native:
        if op.name == "CZ" and not topology.has_edge(*op.qubits):
            raise NoRoute(f"CZ on non-edge {op.qubits}")
        return [op]
    if op.name == "H":
        (q,) = op.qubits
        return [Op("RY", (q,), _HALF_PI), Op("RX", (q,), math.pi)]
    if op.name == "X":
        (q,) = op.qubits
        return [Op("RX", (q,), math.pi)]
    if op.name == "CX":
        control, target = op.qubits
        if not topology.has_edge(control, target):
            raise NoRoute(f"CX on non-edge {op.qubits}")
        half = [Op("RY", (target,), _HALF_PI), Op("RX", (target,), math.pi)]
        return half + [Op("CZ", (control, target))] + half
    raise ValueError(f"cannot transpile op {op.name}")


def transpile(circuit: Circuit, topology: Topology) -> Circuit:
    """Rewrite to the native gate set; unitary preserved up to global phase."""
    ops: list[Op] = []
    for op in circuit.ops:
        ops += _rewrite(op, topology)
    return Circuit(circuit.n_qubits, tuple(ops), native_only=True)


def enumerate_c3_subsets(topology: Topology) -> list[tuple[int, ...]]:
    """All hub-plus-neighbor subsets, ordered by size then lexicographically."""
    if topology.hub is None:
        raise ValueError("topology has no hub")
    hub = topology.hub
    leaves = topology.neighbors(hub)
    subsets = []
    for mask in range(1, 2 ** len(leaves)):
        chosen = [leaves[i] for i in range(len(leaves)) if mask >> i & 1]
        subsets.append(tuple(sorted(chosen + [hub])))
    subsets.sort(key=lambda s: (len(s), s))
    return subsets


def enumerate_paper_grid(topology: Topology) -> list[CircuitSpec]:
    """The full 105-spec evaluation grid on the five-qubit star device.

    Per gate choice: C1/C2/C4/C5 over each single qubit (C2 entries are the
    per-qubit instances of the simultaneous all-qubit variant) and C3 over
    every hub-anchored subset. 3 gates x (5+5+15+5+5) = 105 specs.
    """
    if topology.n_qubits != 5 or topology.hub is None:
        raise ValueError("paper grid is defined on the 5-qubit star topology")
    if len(topology.neighbors(topology.hub)) != topology.n_qubits - 1:
        raise ValueError("paper grid needs a full star around the hub")
    all_qubits = range(topology.n_qubits)
    c3_subsets = enumerate_c3_subsets(topology)
    grid: list[CircuitSpec] = []
    for family in FAMILIES:
        for gate in GATE_CHOICES:
            if family == "C3":
                grid += [CircuitSpec(family, gate, s) for s in c3_subsets]
            elif family == "C5":
                grid += [CircuitSpec(family, gate, (q,), 2) for q in all_qubits]
            else:
                grid += [CircuitSpec(family, gate, (q,)) for q in all_qubits]
    return grid


def format_circuit(circuit: Circuit) -> str:
    """One op per line: ``GATE(theta) q...`` for rotations, ``GATE q...``/``M q...`` else."""
    lines = []
    for op in circuit.ops:
        targets = " ".join(f"q{q}" for q in op.qubits)
        if op.theta is not None:
            lines.append(f"{op.name}({op.theta!r}) {targets}")
        else:
            lines.append(f"{op.name} {targets}")
    return "\n".join(lines) + "\n"
