"""Run manifests: what was generated, from which seeds, into which files."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .. import __version__
from ..families import CircuitSpec

__all__ = ["ManifestEntry", "RunManifest", "ManifestMismatch", "file_digest"]


class ManifestMismatch(RuntimeError):
    """A bit file disagrees with its manifest entry."""


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class ManifestEntry:
    """One generated bitstream. ``path`` is relative to the manifest."""

    spec: CircuitSpec
    path: str
    length: int
    seed: int
    shots: int
    ones_fraction: float
    started: str
    finished: str
    # outcome pattern counts (record bits LSB-first), kept for goodness-of-fit
    # checks; omitted when the record is too wide to tabulate
    outcome_histogram: list[int] | None = None

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "path": self.path,
            "length": self.length,
            "seed": self.seed,
            "shots": self.shots,
            "ones_fraction": self.ones_fraction,
            "started": self.started,
            "finished": self.finished,
            "outcome_histogram": self.outcome_histogram,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ManifestEntry":
        return cls(
            spec=CircuitSpec.from_dict(doc["spec"]),
            path=doc["path"],
            length=int(doc["length"]),
            seed=int(doc["seed"]),
            shots=int(doc["shots"]),
            ones_fraction=float(doc["ones_fraction"]),
            started=doc["started"],
            finished=doc["finished"],
            outcome_histogram=doc.get("outcome_histogram"),
        )


@dataclass
class RunManifest:
    """Index of one experiment's outputs plus enough context to re-check them."""

    seed: int
    backend: str
    calibration: dict
    entries: list[ManifestEntry] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    version: str = __version__
    created: str = ""

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "created": self.created,
            "seed": self.seed,
            "backend": self.backend,
            "calibration": self.calibration,
            "entries": [e.to_dict() for e in self.entries],
            "errors": self.errors,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunManifest":
        return cls(
            seed=int(doc["seed"]),
            backend=doc["backend"],
            calibration=dict(doc["calibration"]),
            entries=[ManifestEntry.from_dict(e) for e in doc["entries"]],
            errors=list(doc.get("errors", [])),
            version=doc.get("version", "unknown"),
            created=doc.get("created", ""),
        )

    def save(self, path) -> None:
        """Serialize to JSON; written atomically (tmp file + rename)."""
        path = Path(path)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(self.to_dict(), fh, indent=1)
                fh.write("\n")
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except FileNotFoundError:
                pass
            raise

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def verify(self, base_dir) -> None:
        """Every listed file must exist with the byte size its length implies."""
        base = Path(base_dir)
        for entry in self.entries:
            target = base / entry.path
            if not target.is_file():
                raise ManifestMismatch(f"{entry.path}: file missing")
            need = (entry.length + 7) // 8
            have = target.stat().st_size
            if have != need:
                raise ManifestMismatch(
                    f"{entry.path}: {have} bytes on disk, manifest says "
                    f"{entry.length} bits ({need} bytes)")
