"""Checksummed single-file container for arrays + JSON metadata.

Deliberately not npz: zip archives embed timestamps, and re-running an
experiment from its manifest must reproduce output files byte for byte.

Layout:
    line 1   : b"d3pinn/v1 <kind> <sha256 of payload>\\n"
    payload  : u64-le header length, JSON header, raw little-endian array data

The JSON header holds user metadata and array descriptors (name, dtype,
shape, byte offset), serialized with sorted keys so identical content always
produces identical bytes.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

_FORMAT = "d3pinn/v1"


class StorageError(ValueError):
    """Unreadable, corrupt, or wrong-kind container file."""


def _payload(meta: dict, arrays: dict) -> bytes:
    descriptors = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        raw = a.astype(a.dtype.newbyteorder("<")).tobytes()
        descriptors.append(
            {"name": name, "dtype": a.dtype.str.replace(">", "<"), "shape": list(a.shape), "offset": offset}
        )
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"meta": meta, "arrays": descriptors}, sort_keys=True).encode()
    return len(header).to_bytes(8, "little") + header + b"".join(blobs)


def save_bundle(path, kind: str, meta: dict, arrays: dict) -> None:
    payload = _payload(meta, arrays)
    digest = hashlib.sha256(payload).hexdigest()
    with open(path, "wb") as fh:
        fh.write(f"{_FORMAT} {kind} {digest}\n".encode())
        fh.write(payload)


def load_bundle(path, kind: str):
    """Return (meta, arrays); refuses wrong format/kind or checksum mismatch."""
    with open(path, "rb") as fh:
        first = fh.readline()
        payload = fh.read()
    parts = first.decode(errors="replace").split()
    if len(parts) != 3 or parts[0] != _FORMAT:
        raise StorageError(f"{path}: not a {_FORMAT} container")
    if parts[1] != kind:
        raise StorageError(f"{path}: container kind {parts[1]!r}, expected {kind!r}")
    if hashlib.sha256(payload).hexdigest() != parts[2]:
        raise StorageError(f"{path}: checksum mismatch, file is corrupt")
    hlen = int.from_bytes(payload[:8], "little")
    header = json.loads(payload[8 : 8 + hlen].decode())
    data = payload[8 + hlen :]
    arrays = {}
    for d in header["arrays"]:
        dt = np.dtype(d["dtype"])
        count = int(np.prod(d["shape"])) if d["shape"] else 1
        start = d["offset"]
        a = np.frombuffer(data, dtype=dt, count=count, offset=start).reshape(d["shape"])
        arrays[d["name"]] = a.copy()
    return header["meta"], arrays


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
