"""Execution backends: in-process simulator and the remote-device client.

The remote wire schema (shared with the bundled service):

request::

    POST {endpoint}/v1/run
    {"ops": [{"gate": "RY", "angle": 1.5708, "qubits": [2]},
             {"gate": "CZ", "qubits": [2, 3]},
             {"gate": "M", "qubits": [2, 3]}],
     "shots": 1000,
     "qubit_order": [2, 3]}

``ops`` is the native circuit in order; ``angle`` appears on RX/RY only.
``qubit_order`` is the concatenated measurement order the client expects,
one entry per record bit.

response::

    {"shots": [[[0, 1]], [[1, 1]], ...]}

One element per shot; each shot lists its measurement events in circuit
order, each event the reported bits in the event's qubit order.

Remote execution mimics hardware: the server draws its own randomness, so
the client's seed is not transmitted and the returned table records seed
-1. Reproducibility guarantees apply to the local backend only.
"""

from __future__ import annotations

import numpy as np

from ..qcore import Circuit
from ..families import CircuitSpec
from ..simnoise import NoiseProfile, ShotTable, run

__all__ = [
    "LocalBackend",
    "RemoteBackend",
    "MalformedResponse",
    "circuit_to_wire",
    "submit_remote",
    "table_from_wire",
]

_WIRE_GATES = ("RX", "RY", "CZ", "M")


class MalformedResponse(RuntimeError):
    """Remote reply violates the wire schema."""


class LocalBackend:
    """Runs circuits on the in-process noisy simulator."""

    name = "local"

    def __init__(self, noise: NoiseProfile | None = None):
        self.noise = noise or NoiseProfile.ideal()

    def execute(self, circuit: Circuit, shots: int, *, seed: int,
                spec: CircuitSpec | None = None, shot_offset: int = 0) -> ShotTable:
        return run(circuit, shots, self.noise, seed, spec=spec, shot_offset=shot_offset)


def circuit_to_wire(circuit: Circuit, shots: int) -> dict:
    """Serialize a native circuit into a run request document."""
    if not circuit.native_only:
        raise ValueError("remote submission requires a transpiled (native-only) circuit")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    ops = []
    order: list[int] = []
    for op in circuit.ops:
        if op.name not in _WIRE_GATES:
            raise ValueError(f"gate {op.name} has no wire encoding")
        entry: dict = {"gate": op.name, "qubits": list(op.qubits)}
        if op.theta is not None:
            entry["angle"] = float(op.theta)
        ops.append(entry)
        if op.is_measurement:
            order += list(op.qubits)
    return {"ops": ops, "shots": int(shots), "qubit_order": order}


def table_from_wire(doc, circuit: Circuit, shots: int,
                    spec: CircuitSpec | None = None) -> ShotTable:
    """Validate a run response and reassemble the shot table."""
    if not isinstance(doc, dict) or "shots" not in doc:
        raise MalformedResponse("response missing 'shots'")
    rows = doc["shots"]
    if not isinstance(rows, list) or len(rows) != shots:
        got = len(rows) if isinstance(rows, list) else type(rows).__name__
        raise MalformedResponse(f"expected {shots} shots, response carries {got}")
    events = tuple(op.qubits for op in circuit.measure_ops)
    width = sum(len(e) for e in events)
    data = np.empty((shots, width), dtype=np.uint8)
    for s, shot in enumerate(rows):
        if not isinstance(shot, list) or len(shot) != len(events):
            raise MalformedResponse(f"shot {s}: expected {len(events)} measurement events")
        flat: list[int] = []
        for e, record in enumerate(shot):
            if not isinstance(record, list) or len(record) != len(events[e]):
                raise MalformedResponse(
                    f"shot {s} event {e}: expected {len(events[e])} bits")
            flat += record
        if any(b not in (0, 1) for b in flat):
            raise MalformedResponse(f"shot {s}: bits must be 0 or 1")
        data[s] = flat
    return ShotTable(events, data, seed=-1, spec=spec)


class RemoteBackend:
    """Submits circuits to a wire-schema service over HTTP.

    ``client`` takes any httpx.Client-compatible object (tests inject one
    bound to an in-process ASGI app). A fresh transport failure is retried
    once before surfacing.
    """

    name = "remote"

    def __init__(self, endpoint: str, *, timeout: float = 60.0, client=None,
                 retries: int = 1):
        if not endpoint:
            raise ValueError("remote backend needs an endpoint")
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = int(retries)
        self._client = client

    def _post(self, payload: dict):
        import httpx

        if self._client is not None:
            # an injected client owns its own transport/timeout policy
            return self._client.post(f"{self.endpoint}/v1/run", json=payload)
        last = None
        for _ in range(self.retries + 1):
            try:
                with httpx.Client(timeout=self.timeout) as client:
                    return client.post(f"{self.endpoint}/v1/run", json=payload)
            except httpx.TransportError as exc:
                last = exc
        raise last

    def execute(self, circuit: Circuit, shots: int, *, seed: int,
                spec: CircuitSpec | None = None, shot_offset: int = 0) -> ShotTable:
        # seed and shot_offset stay client-side; the device service owns
        # its randomness
        payload = circuit_to_wire(circuit, shots)
        response = self._post(payload)
        if response.status_code != 200:
            raise MalformedResponse(
                f"service returned {response.status_code}: {response.text[:200]}")
        try:
            doc = response.json()
        except ValueError as exc:
            raise MalformedResponse("response is not a JSON document") from exc
        return table_from_wire(doc, circuit, shots, spec=spec)


def submit_remote(circuit: Circuit, shots: int, endpoint: str, **kwargs) -> ShotTable:
    """One-shot remote submission; kwargs reach the RemoteBackend."""
    return RemoteBackend(endpoint, **kwargs).execute(circuit, shots, seed=-1)
