"""Binary checkpoints and deterministic CSV / JSON writers."""

import csv
import hashlib
import json
import math
import struct
from pathlib import Path

import numpy as np

from .gauge import GaugeField
from .lattice import GeometryError, build_torus

MAGIC = b"YMCK"
VERSION = 1
_HEAD = struct.Struct("<4sB")
_GEOM = struct.Struct("<IIddId")  # n, N, L, tau, order, time
_SUM = 8


class CheckpointError(Exception):
    pass


class CheckpointIOError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointChecksumError(CheckpointError):
    pass


def _digest(data):
    return hashlib.blake2b(data, digest_size=_SUM).digest()


def encode_checkpoint(time, field):
    g = field.geom
    body = (_HEAD.pack(MAGIC, VERSION)
            + _GEOM.pack(g.n, g.N, g.L, g.tau, g.order, float(time))
            + np.ascontiguousarray(field.a, dtype="<f8").tobytes())
    return body + _digest(body)


def decode_checkpoint(data):
    if len(data) < _HEAD.size:
        raise CheckpointChecksumError("file shorter than its header")
    magic, version = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointIOError("not a checkpoint file (bad magic)")
    if version != VERSION:
        raise CheckpointVersionError(f"checkpoint version {version}, expected {VERSION}")
    if len(data) < _HEAD.size + _GEOM.size + _SUM or _digest(data[:-_SUM]) != data[-_SUM:]:
        raise CheckpointChecksumError("checksum mismatch")
    n, N, L, tau, order, time = _GEOM.unpack_from(data, _HEAD.size)
    try:
        geom = build_torus(n, N, L, tau, order)
    except GeometryError as err:
        raise CheckpointIOError(f"invalid geometry in checkpoint: {err}") from err
    start = _HEAD.size + _GEOM.size
    payload = data[start:-_SUM]
    if len(payload) != geom.size * n * 3 * 8:
        raise CheckpointIOError("payload size does not match the geometry")
    a = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(geom.shape + (n, 3))
    return time, GaugeField(geom, a)


def save_checkpoint(path, time, field):
    try:
        Path(path).write_bytes(encode_checkpoint(time, field))
    except OSError as err:
        raise CheckpointIOError(str(err)) from err


def load_checkpoint(path):
    try:
        data = Path(path).read_bytes()
    except OSError as err:
        raise CheckpointIOError(str(err)) from err
    return decode_checkpoint(data)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, columns, rows):
    """columns: list of (name, unit); every row is written with repr-exact floats."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{name} [{unit}]" for name, unit in columns])
        for row in rows:
            if len(row) != len(columns):
                raise ValueError("row length does not match the header")
            w.writerow([_fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    return rows[0], [[float(v) for v in r] for r in rows[1:] if r]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
