"""Experiment driver: generate per-spec bitstreams, then score them.

``run_experiment`` walks a grid of circuit specs, executes each on the
configured backend, extracts the family's bitstream, and writes packed
bit files plus a JSON manifest. ``evaluate`` replays a manifest through
one of the three scoring stacks.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ..biasfit import chi2_fit, expected_ones_fraction, frequency_summary
from ..bits import extract, ones_fraction, read_packed, write_packed
from ..ent90b import ABBREVIATIONS, ESTIMATOR_ORDER, assess
from ..families import build, c3_source, transpile
from ..qcore import (
    CalibrationSnapshot,
    QubitCalibration,
    default_calibration,
    load_calibration,
    spark_topology,
)
from ..simnoise import (
    NoiseProfile,
    derive_seed,
    outcome_distribution,
    predicted_distribution,
)
from ..sts22 import HEATMAP_FAMILIES, run_battery
from .backends import LocalBackend, RemoteBackend
from .config import ExperimentConfig
from .manifest import ManifestEntry, RunManifest, file_digest

__all__ = ["DEFAULT_POLICIES", "run_experiment", "evaluate"]

DEFAULT_POLICIES = {
    "C1": "SingleQubit",
    "C2": "Flatten",
    "C3": "C3Majority",
    "C4": "SingleQubit",
    "C5": "C5TimeOrder",
}

# widest measurement record worth tabulating into an outcome histogram
_HISTOGRAM_MAX_BITS = 8

_CALIB_FIELDS = ("p01", "p10", "f_1q", "f_2q", "t1_ms", "t2_ms")


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _resolve_calibration(config: ExperimentConfig) -> tuple[CalibrationSnapshot, dict]:
    """Load the configured snapshot and build its manifest record.

    The record embeds the full per-qubit figures so a manifest can be
    re-evaluated without the original calibration file.
    """
    if config.calibration == "ideal":
        n = spark_topology().n_qubits
        calib = CalibrationSnapshot({q: QubitCalibration(0.0, 0.0) for q in range(n)})
        record: dict = {"source": "ideal", "digest": None}
    elif config.calibration is None:
        calib = default_calibration()
        record = {"source": "default", "digest": None}
    else:
        calib = load_calibration(config.calibration)
        record = {"source": str(config.calibration),
                  "digest": file_digest(config.calibration)}
    record["qubits"] = {
        str(q): {name: getattr(c, name) for name in _CALIB_FIELDS}
        for q, c in sorted(calib.qubits.items())
    }
    if record["digest"] is None:
        canon = json.dumps(record["qubits"], sort_keys=True).encode()
        record["digest"] = hashlib.sha256(canon).hexdigest()
    record["gate_angle_error"] = dict(config.gate_angle_error)
    record["depolarizing_p"] = config.depolarizing_p
    return calib, record


def _snapshot_from_record(record: dict) -> CalibrationSnapshot:
    return CalibrationSnapshot({
        int(q): QubitCalibration(**{k: float(v) for k, v in vals.items()})
        for q, vals in record["qubits"].items()
    })


def _run_one(index, spec, config, backend, topology, out_dir: Path) -> ManifestEntry:
    seed = derive_seed(config.seed, index)
    shots = config.spec_shots(spec)
    started = _utcnow()
    circuit = transpile(build(spec, topology), topology)
    table = backend.execute(circuit, shots, seed=seed, spec=spec)
    source = c3_source(spec.qubits, topology) if spec.family == "C3" else None
    stream = extract(table, DEFAULT_POLICIES[spec.family], source_qubit=source)
    name = f"{spec.label()}.bits"
    write_packed(stream, out_dir / name)
    histogram = None
    width = table.data.shape[1]
    if width <= _HISTOGRAM_MAX_BITS:
        weights = 1 << np.arange(width, dtype=np.int64)
        ints = table.data.astype(np.int64) @ weights
        histogram = np.bincount(ints, minlength=1 << width).tolist()
    return ManifestEntry(
        spec=spec,
        path=name,
        length=len(stream),
        seed=seed,
        shots=shots,
        ones_fraction=ones_fraction(stream),
        started=started,
        finished=_utcnow(),
        outcome_histogram=histogram,
    )


def run_experiment(config: ExperimentConfig) -> RunManifest:
    """Generate every spec in the grid and write bit files plus manifest.

    Specs run concurrently up to the worker limit; each draws an
    independent seed from the run seed, so results do not depend on the
    worker count or completion order. Failures are recorded per spec and
    leave the other entries intact.
    """
    topology = spark_topology()
    calib, record = _resolve_calibration(config)
    if config.backend == "remote":
        backend = RemoteBackend(config.endpoint)
    else:
        backend = LocalBackend(NoiseProfile.from_calibration(
            calib,
            gate_angle_error=config.gate_angle_error,
            depolarizing_p=config.depolarizing_p,
        ))
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    slots: list[ManifestEntry | None] = [None] * len(config.grid)
    errors: list[dict] = []
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [
            (i, spec, pool.submit(_run_one, i, spec, config, backend, topology, out_dir))
            for i, spec in enumerate(config.grid)
        ]
        for i, spec, future in futures:
            try:
                slots[i] = future.result()
            except Exception as exc:
                errors.append({
                    "spec": spec.to_dict(),
                    "error": f"{type(exc).__name__}: {exc}",
                })

    manifest = RunManifest(
        seed=config.seed,
        backend=backend.name,
        calibration=record,
        entries=[e for e in slots if e is not None],
        errors=errors,
        created=_utcnow(),
    )
    manifest.save(out_dir / "manifest.json")
    return manifest


def _load_streams(manifest: RunManifest, base_dir: Path):
    ordered = []
    seen = set()
    for entry in manifest.entries:
        label = entry.spec.label()
        if label in seen:
            raise ValueError(f"manifest lists {label} twice")
        seen.add(label)
        ordered.append((label, entry, read_packed(base_dir / entry.path, entry.length)))
    return ordered


def evaluate(manifest, which: str, *, base_dir=None) -> dict:
    """Score a run's bit files; ``which`` is sts22, ent90b or biasfit.

    ``manifest`` may be a RunManifest or a path to one. Files are first
    checked against their declared lengths; a mismatch aborts the whole
    evaluation rather than scoring stale data.
    """
    if not isinstance(manifest, RunManifest):
        path = Path(manifest)
        if base_dir is None:
            base_dir = path.parent
        manifest = RunManifest.load(path)
    if base_dir is None:
        base_dir = Path(".")
    base_dir = Path(base_dir)
    if which not in ("sts22", "ent90b", "biasfit"):
        raise ValueError(f"unknown evaluation {which!r}")
    manifest.verify(base_dir)
    streams = _load_streams(manifest, base_dir)
    if which == "sts22":
        return _evaluate_sts22(streams)
    if which == "ent90b":
        return _evaluate_ent90b(streams)
    return _evaluate_biasfit(manifest, streams)


def _evaluate_sts22(streams) -> dict:
    docs = {}
    rows = []
    for label, _entry, stream in streams:
        report = run_battery(stream.bits)
        docs[label] = report.to_document()
        rows.append({
            "label": label,
            "cells": [report.family_worst_p(fam) for fam, _ in HEATMAP_FAMILIES],
        })
    columns = [abbrev for _, abbrev in HEATMAP_FAMILIES]
    return {"which": "sts22",
            "heatmap": {"columns": columns, "rows": rows},
            "streams": docs}


def _evaluate_ent90b(streams) -> dict:
    docs = {}
    rows = []
    for label, _entry, stream in streams:
        doc = assess(stream.bits).to_document()
        docs[label] = doc
        cells = [doc.get(ABBREVIATIONS[name]) for name in ESTIMATOR_ORDER]
        cells.append(doc["minE"])
        rows.append({"label": label, "cells": cells})
    columns = [ABBREVIATIONS[name] for name in ESTIMATOR_ORDER] + ["minE"]
    return {"which": "ent90b",
            "heatmap": {"columns": columns, "rows": rows},
            "streams": docs}


def _evaluate_biasfit(manifest: RunManifest, streams) -> dict:
    record = manifest.calibration
    calib = _snapshot_from_record(record)
    readout_noise = NoiseProfile.from_calibration(
        calib, gate_angle_error=dict(record.get("gate_angle_error", {})))
    gate_noise = NoiseProfile({}, dict(record.get("gate_angle_error", {})), 0.0)
    topology = spark_topology()
    results = []
    fits = []
    for label, entry, _stream in streams:
        results.append((entry.spec, entry.ones_fraction))
        row = {
            "label": label,
            "ones_fraction": entry.ones_fraction,
            "expected_fraction": expected_ones_fraction(calib, entry.spec),
            "fit": None,
        }
        if entry.outcome_histogram is not None:
            circuit = transpile(build(entry.spec, topology), topology)
            ideal = outcome_distribution(circuit, gate_noise)
            order = tuple(q for op in circuit.measure_ops for q in op.qubits)
            predicted = predicted_distribution(ideal, readout_noise, order)
            row["fit"] = chi2_fit(entry.outcome_histogram, predicted).to_dict()
        fits.append(row)
    return {"which": "biasfit",
            "summary": frequency_summary(results),
            "fits": fits}
