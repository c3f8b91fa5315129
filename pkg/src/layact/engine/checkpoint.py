"""Binary container for named float64 arrays.

Layout (all integers little-endian):

    magic   4 bytes  b"LACT"
    version u32      currently 1
    meta    u64 length + UTF-8 JSON object (arbitrary run metadata)
    count   u64
    entry*  u16 name length, UTF-8 name,
            u8 ndim, u64 per-dim extents,
            raw little-endian float64 data (row-major)

Round-trips are bit-exact. The same container doubles as a feature store
(entries keyed by video id) and as a model checkpoint (entries keyed by
parameter name).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError

MAGIC = b"LACT"
VERSION = 1


def save_container(path, entries, meta: dict | None = None) -> None:
    """Write named arrays. `entries` is a dict or iterable of (name, array)."""
    if isinstance(entries, dict):
        entries = entries.items()
    items = [(name, np.asarray(arr, dtype=np.float64)) for name, arr in entries]
    meta_bytes = json.dumps(meta or {}, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(meta_bytes)))
        f.write(meta_bytes)
        f.write(struct.pack("<Q", len(items)))
        for name, arr in items:
            nb = name.encode()
            if len(nb) > 0xFFFF:
                raise DataError(f"entry name too long: {name[:40]}...")
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<B", arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<Q", d))
            f.write(arr.astype("<f8").tobytes(order="C"))


def load_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read (meta, entries). Raises DataError on malformed files."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise DataError(f"{path}: not a layact container (bad magic)")
    off = 4
    (version,) = struct.unpack_from("<I", raw, off)
    off += 4
    if version != VERSION:
        raise DataError(f"{path}: unsupported container version {version}")
    (meta_len,) = struct.unpack_from("<Q", raw, off)
    off += 8
    try:
        meta = json.loads(raw[off : off + meta_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: bad metadata block: {exc}") from exc
    off += meta_len
    (count,) = struct.unpack_from("<Q", raw, off)
    off += 8
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off : off + name_len].decode()
        off += name_len
        (ndim,) = struct.unpack_from("<B", raw, off)
        off += 1
        shape = []
        for _ in range(ndim):
            (d,) = struct.unpack_from("<Q", raw, off)
            off += 8
            shape.append(d)
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=n, offset=off).reshape(shape)
        off += n * 8
        entries[name] = arr.astype(np.float64)  # decouple from the file buffer
    if off != len(raw):
        raise DataError(f"{path}: trailing bytes after last entry")
    return meta, entries
