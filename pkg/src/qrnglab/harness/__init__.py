"""Experiment harness: configuration, backends, manifests, and the driver."""

from .backends import LocalBackend, MalformedResponse, RemoteBackend, submit_remote
from .config import ConfigError, ExperimentConfig, bits_per_shot, load_config_file
from .manifest import ManifestEntry, ManifestMismatch, RunManifest, file_digest
from .runner import DEFAULT_POLICIES, evaluate, run_experiment

__all__ = [
    "ConfigError",
    "DEFAULT_POLICIES",
    "ExperimentConfig",
    "LocalBackend",
    "MalformedResponse",
    "ManifestEntry",
    "ManifestMismatch",
    "RemoteBackend",
    "RunManifest",
    "bits_per_shot",
    "evaluate",
    "file_digest",
    "load_config_file",
    "run_experiment",
    "submit_remote",
]
