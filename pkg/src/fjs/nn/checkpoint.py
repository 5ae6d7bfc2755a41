"""Binary checkpoint serialization.

Layout: magic "EMARM\\0", u32 version=1, u32 tensor count; per tensor
u16 name length, UTF-8 name, u8 rank, u64 per dimension, then raw C
order little-endian float32 data.  Tensors are emitted in mapping
order, so identical parameter dicts produce identical bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .autodiff import Tensor

MAGIC = b"EMARM\x00"
VERSION = 1


def save_checkpoint(path, tensors: dict) -> None:
    """tensors maps name -> Tensor or ndarray; values stored as float32."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, t in tensors.items():
        arr = np.asarray(t.data if isinstance(t, Tensor) else t, dtype=np.float32)
        if arr.ndim and not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        if np.little_endian:
            parts.append(arr.tobytes())
        else:
            parts.append(arr.byteswap().tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path) -> dict:
    """Returns name -> float32 ndarray in file order."""
    blob = Path(path).read_bytes()
    if blob[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    off = len(MAGIC)
    version, count = struct.unpack_from("<II", blob, off)
    off += 8
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    out: dict = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, off)
        off += 2
        name = blob[off : off + name_len].decode("utf-8")
        off += name_len
        (rank,) = struct.unpack_from("<B", blob, off)
        off += 1
        shape = struct.unpack_from(f"<{rank}Q", blob, off)
        off += 8 * rank
        n = int(np.prod(shape, dtype=np.int64)) if rank else 1
        arr = np.frombuffer(blob, dtype="<f4", count=n, offset=off).reshape(shape)
        off += 4 * n
        if name in out:
            raise ValueError(f"{path}: duplicate tensor name {name!r}")
        out[name] = arr.astype(np.float32)
    if off != len(blob):
        raise ValueError(f"{path}: {len(blob) - off} trailing bytes")
    return out
