"""Binary tensor container used for models and dataset tensors.

Layout (all integers little-endian):

    bytes 0..5   magic ``b"RPTC01"`` (format name + 2-digit version)
    bytes 6..13  uint64 length of the JSON header in bytes
    header       UTF-8 JSON: {"meta": {...}, "arrays": [{name, dtype,
                 shape, offset, nbytes}, ...]} with sorted keys
    payload      raw C-order array bytes, little-endian, packed in the
                 order listed in the header

Writing the same arrays and meta twice produces byte-identical files,
so container bytes can be hashed for provenance tracking.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"RPTC01"

# dtypes permitted in the payload; everything is normalised to
# little-endian on write and read back exactly as stored.
_ALLOWED = {"<f4", "<f8", "<i8"}


class ContainerError(ValueError):
    """Raised for malformed or unsupported container files."""


def _canonical_dtype(arr: np.ndarray) -> str:
    kind = arr.dtype.kind + str(arr.dtype.itemsize)
    mapping = {"f4": "<f4", "f8": "<f8", "i8": "<i8"}
    if kind not in mapping:
        raise ContainerError(f"unsupported array dtype {arr.dtype}")
    return mapping[kind]


def pack_arrays(arrays: dict[str, np.ndarray], meta: dict | None = None) -> bytes:
    """Serialize named arrays plus a JSON-able meta dict to bytes."""
    meta = {} if meta is None else meta
    entries = []
    chunks = []
    offset = 0
    for name in sorted(arrays):
        arr = np.asarray(arrays[name])
        shape = list(arr.shape)  # before ascontiguousarray, which promotes 0-d to 1-d
        arr = np.ascontiguousarray(arr)
        dtype = _canonical_dtype(arr)
        raw = arr.astype(dtype, copy=False).tobytes(order="C")
        entries.append(
            {
                "name": name,
                "dtype": dtype,
                "shape": shape,
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps(
        {"meta": meta, "arrays": entries}, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    return MAGIC + struct.pack("<Q", len(header)) + header + b"".join(chunks)


def unpack_arrays(blob: bytes) -> tuple[dict[str, np.ndarray], dict]:
    """Inverse of :func:`pack_arrays`; round-trips bit-exactly."""
    if blob[:6] != MAGIC:
        raise ContainerError("bad magic; not a tensor container")
    (hlen,) = struct.unpack("<Q", blob[6:14])
    header = json.loads(blob[14 : 14 + hlen].decode("utf-8"))
    payload = blob[14 + hlen :]
    arrays = {}
    for ent in header["arrays"]:
        if ent["dtype"] not in _ALLOWED:
            raise ContainerError(f"unsupported dtype {ent['dtype']} in header")
        raw = payload[ent["offset"] : ent["offset"] + ent["nbytes"]]
        if len(raw) != ent["nbytes"]:
            raise ContainerError("truncated payload")
        arr = np.frombuffer(raw, dtype=ent["dtype"]).reshape(ent["shape"])
        arrays[ent["name"]] = arr.copy()
    return arrays, header["meta"]


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    Path(path).write_bytes(pack_arrays(arrays, meta))


def load_arrays(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    return unpack_arrays(Path(path).read_bytes())
