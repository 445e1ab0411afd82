"""Stage weight container and its binary serialization.

File layout (all little-endian):
  magic "LFWT" | version u32 = 1 | stage-name len u16 + utf-8 bytes |
  entry count u32 | per entry: name len u16 + utf-8 bytes, rank u8,
  dims u32 each, then float32 payload.
Optimizer state is runtime-only and never serialized.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .numcore import Tensor, new_adam_state, wrap

_MAGIC = b"LFWT"
_VERSION = 1
STAGES = ("ahqrg", "ttsr", "lfrefine")


def conv_entry(entries: dict, rng, name: str, co: int, ci: int, *k: int) -> None:
    """Fan-in-scaled uniform init for one conv layer (weight + bias)."""
    fan_in = ci * int(np.prod(k))
    bound = 1.0 / np.sqrt(fan_in)
    entries[f"{name}.weight"] = Tensor(rng.uniform(-bound, bound, size=(co, ci, *k)))
    entries[f"{name}.bias"] = Tensor(rng.uniform(-bound, bound, size=(co,)))


def zero_entry(entries: dict, name: str, co: int, ci: int, *k: int) -> None:
    entries[f"{name}.weight"] = Tensor(np.zeros((co, ci, *k)))
    entries[f"{name}.bias"] = Tensor(np.zeros(co))


class StageWeights:
    """Named, ordered parameter tensors for one pipeline stage."""

    def __init__(self, stage: str, entries: dict[str, Tensor], optimizer_state: dict | None = None):
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}, expected one of {STAGES}")
        for name, t in entries.items():
            if not np.all(np.isfinite(t.data)):
                raise ValueError(f"entry {name!r} contains non-finite values")
        self.stage = stage
        self.entries = dict(entries)
        self.optimizer_state = optimizer_state if optimizer_state is not None else new_adam_state()

    def __repr__(self):
        n = sum(t.data.size for t in self.entries.values())
        return f"StageWeights({self.stage!r}, {len(self.entries)} entries, {n} params)"


def save_weights(weights: StageWeights, path) -> None:
    path = Path(path)
    blob = bytearray()
    blob += _MAGIC
    blob += struct.pack("<I", _VERSION)
    stage_b = weights.stage.encode("utf-8")
    blob += struct.pack("<H", len(stage_b)) + stage_b
    blob += struct.pack("<I", len(weights.entries))
    for name, t in weights.entries.items():
        name_b = name.encode("utf-8")
        blob += struct.pack("<H", len(name_b)) + name_b
        blob += struct.pack("<B", t.data.ndim)
        for d in t.data.shape:
            blob += struct.pack("<I", d)
        blob += np.ascontiguousarray(t.data, dtype="<f4").tobytes()
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(bytes(blob))
    tmp.replace(path)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.buf):
            raise FormatError(f"truncated weight file: needed {n} bytes at offset {self.off}")
        out = self.buf[self.off : self.off + n]
        self.off += n
        return out

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_weights(path) -> StageWeights:
    buf = Path(path).read_bytes()
    r = _Reader(buf)
    if r.take(4) != _MAGIC:
        raise FormatError(f"bad magic in {path}, not a weight file")
    version = r.u32()
    if version != _VERSION:
        raise FormatError(f"unsupported weight format version {version}, expected {_VERSION}")
    stage = r.take(r.u16()).decode("utf-8")
    entries: dict[str, Tensor] = {}
    for _ in range(r.u32()):
        name = r.take(r.u16()).decode("utf-8")
        rank = r.u8()
        shape = tuple(r.u32() for _ in range(rank))
        n = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(r.take(4 * n), dtype="<f4").reshape(shape)
        entries[name] = wrap(data.astype(np.float32), taped=False)
    if r.off != len(buf):
        raise FormatError(f"{len(buf) - r.off} trailing bytes in {path}")
    return StageWeights(stage, entries)
