"""File formats: headerless CSV matrices (17 significant digits, so values
round-trip exactly), a one-column kinds sidecar, and JSON run manifests.
"""

from __future__ import annotations

import hashlib
import json
import os
from importlib.metadata import PackageNotFoundError, version as _pkg_version

import numpy as np

from .errors import SchemaError
from .types import OutcomeKind, parse_kinds

FLOAT_FMT = "%.17g"


def package_version() -> str:
    try:
        return _pkg_version("mixedssl")
    except PackageNotFoundError:
        return "0.0.0+local"


def write_matrix(path, arr) -> None:
    arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    np.savetxt(path, arr, fmt=FLOAT_FMT, delimiter=",")


def read_matrix(path, name: str | None = None) -> np.ndarray:
    name = name or os.path.basename(str(path))
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2)
    except (ValueError, OSError) as exc:
        raise SchemaError(f"{name}: cannot parse as numeric CSV ({exc})") from None
    if arr.size == 0:
        raise SchemaError(f"{name}: file is empty")
    return arr


def write_kinds(path, kinds) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for kind in kinds:
            fh.write(kind.value + "\n")


def read_kinds(path) -> list[OutcomeKind]:
    with open(path, "r", encoding="utf-8") as fh:
        names = [line.strip() for line in fh if line.strip()]
    if not names:
        raise SchemaError(f"{os.path.basename(str(path))}: no outcome kinds found")
    try:
        return parse_kinds(names)
    except Exception as exc:
        raise SchemaError(str(exc)) from None


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, command: str, config: dict, inputs: dict | None = None,
                   extra: dict | None = None) -> dict:
    """Deterministic run manifest: resolved configuration, seed, version, and
    input digests. Wall-clock timings are written to a separate timings file
    so re-running a manifest reproduces every data output byte for byte.
    """
    manifest = {
        "command": command,
        "version": package_version(),
        "config": config,
        "inputs": {
            key: {"path": str(p), "sha256": sha256_file(p)}
            for key, p in (inputs or {}).items()
        },
    }
    if extra:
        manifest.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def read_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"manifest {path}: invalid JSON ({exc})") from None


def write_timings(path, timings: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(timings, fh, indent=2, sort_keys=True)
        fh.write("\n")


def format_metric(value) -> str:
    """Metric cell: absent values render as NaN, mirroring undefined ratios."""
    if value is None:
        return "NaN"
    return FLOAT_FMT % value
