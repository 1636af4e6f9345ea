"""Binary field snapshots and the run manifest.

Snapshot layout (all integers little-endian):

    bytes 0-3    magic ``KSPM``
    bytes 4-7    format version (uint32, currently 1)
    bytes 8-11   nx (uint32)
    bytes 12-15  ny (uint32)
    bytes 16-    nx * ny float64 cell values, row-major (y fastest)

The manifest is a JSON sidecar listing every output file with its byte
length, the verbatim config text, the effective CLI overrides, seeds, and
wall-clock timing: enough to regenerate each output bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import SnapshotFormatError

MAGIC = b"KSPM"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_snapshot(path, values):
    """Write one field to ``path`` in the snapshot format."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"snapshot payload must be a 2-D field, got shape {values.shape}")
    if not np.isfinite(values).all():
        raise ValueError("refusing to write a snapshot with non-finite values")
    nx, ny = values.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, nx, ny))
        fh.write(values.astype("<f8", copy=False).tobytes(order="C"))


def read_snapshot(path):
    """Read a snapshot back as an ``(nx, ny)`` float64 array.

    Raises
    ------
    SnapshotFormatError
        On a wrong magic, an unsupported version, or a payload whose length
        disagrees with the header dimensions.
    """
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise SnapshotFormatError(f"{path}: truncated header ({len(header)} bytes)")
        magic, version, nx, ny = _HEADER.unpack(header)
        if magic != MAGIC:
            raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise SnapshotFormatError(f"{path}: unsupported format version {version}")
        payload = fh.read()
    expected = nx * ny * 8
    if len(payload) != expected:
        raise SnapshotFormatError(
            f"{path}: payload is {len(payload)} bytes, header promises {expected}"
        )
    return np.frombuffer(payload, dtype="<f8").reshape(nx, ny).astype(np.float64)


@dataclass
class Manifest:
    """Reproducibility record for one CLI run."""

    command: str
    package_version: str
    backend: str
    config_text: str
    overrides: dict
    grid: tuple
    seed: int
    num_paths: int
    method: str
    wall_clock_s: float
    outputs: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def add_output(self, name, path):
        data = open(path, "rb").read()
        self.outputs.append(
            {"name": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()}
        )


def write_manifest(path, manifest):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path):
    with open(path, encoding="utf-8") as fh:
        return Manifest(**json.load(fh))
