"""HTTP execution service speaking the remote-backend wire format.

Runs circuits on the in-process noisy simulator. The service draws its
own seeds (one child seed per request off a base seed), so callers see
hardware-like behaviour: identical requests give fresh samples, while a
fixed base seed makes a whole service session reproducible.
"""

from __future__ import annotations

import secrets
import threading
from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from .. import __version__
from ..qcore import Circuit, Op, Topology, default_calibration, spark_topology
from ..simnoise import NoiseProfile, derive_seed, run

__all__ = ["MAX_SHOTS", "RunRequest", "RunResponse", "WireOp", "create_app"]

# refuse oversized requests outright instead of soaking up memory
MAX_SHOTS = 1 << 21


class WireOp(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gate: Literal["RX", "RY", "CZ", "M"]
    angle: float | None = None
    qubits: list[int] = Field(min_length=1)


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ops: list[WireOp] = Field(min_length=1)
    shots: int = Field(ge=1, le=MAX_SHOTS)
    qubit_order: list[int] = Field(min_length=1)


class RunResponse(BaseModel):
    # shots[s][e] is the bit record of measurement event e in shot s
    shots: list[list[list[int]]]


def _to_circuit(request: RunRequest, topology: Topology) -> Circuit:
    ops = []
    for wire in request.ops:
        if wire.gate == "CZ" and not topology.has_edge(*wire.qubits[:2]):
            raise HTTPException(
                status_code=422,
                detail=f"CZ on {wire.qubits} is not an edge of this device",
            )
        try:
            ops.append(Op(wire.gate, tuple(wire.qubits), wire.angle))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
    try:
        circuit = Circuit(topology.n_qubits, tuple(ops), native_only=True)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    order = [q for op in circuit.measure_ops for q in op.qubits]
    if order != request.qubit_order:
        raise HTTPException(
            status_code=422,
            detail=f"qubit_order {request.qubit_order} does not match "
                   f"measurements {order}",
        )
    return circuit


def create_app(
    noise: NoiseProfile | None = None,
    base_seed: int | None = None,
    topology: Topology | None = None,
) -> FastAPI:
    """Build the service around one noise profile and one coupling map."""
    if noise is None:
        noise = NoiseProfile.from_calibration(default_calibration())
    if base_seed is None:
        base_seed = secrets.randbits(63)
    if topology is None:
        topology = spark_topology()

    app = FastAPI(title="qrnglab execution service", version=__version__)
    app.state.noise = noise
    app.state.base_seed = base_seed
    app.state.topology = topology
    app.state.counter = 0
    app.state.lock = threading.Lock()

    @app.get("/v1/health")
    def health() -> dict:
        return {
            "status": "ok",
            "version": __version__,
            "qubits": topology.n_qubits,
        }

    @app.post("/v1/run", response_model=RunResponse)
    def run_circuit(request: RunRequest) -> RunResponse:
        circuit = _to_circuit(request, app.state.topology)
        with app.state.lock:
            index = app.state.counter
            app.state.counter += 1
        seed = derive_seed(app.state.base_seed, index)
        table = run(circuit, request.shots, app.state.noise, seed)
        blocks = [table.event_columns(i).tolist() for i in range(len(table.events))]
        shots = [[block[s] for block in blocks] for s in range(table.shots)]
        return RunResponse(shots=shots)

    return app
