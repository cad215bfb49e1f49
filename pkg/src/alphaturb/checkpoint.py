"""Binary checkpoint files.

Layout (all little-endian)::

    header   magic  b"ATCKPT01"           8 bytes
             version        uint16        currently 1
             kind           uint16        0 state, 1 force, 2 residual run
             grid_m         uint32
             kmax           uint32
             nfields        uint32
             n              uint64        step index
             nu             float64
             dt             float64
             force_seed     int64         -1 when not applicable
             ensemble_seed  int64         -1 when not applicable
             member         int64         -1 when not applicable
             history_rows   uint64
             history_cols   uint32
    labels   nfields x 32 bytes, ASCII, NUL padded
    payload  nfields x (2K+1)(K+1) complex128, each field in half-spectrum
             order: row k1 = -K..K, column k2 = 0..K, row-major
    history  history_rows x history_cols float64, row-major

Reading checks the magic, version and that the file length matches the
header exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"ATCKPT01"
VERSION = 1
KINDS = {"state": 0, "force": 1, "residual": 2}
_HEADER = struct.Struct("<8sHHIIIQddqqqQI")
_LABEL_BYTES = 32


class CheckpointError(IOError):
    pass


@dataclass
class Checkpoint:
    kind: str
    grid_m: int
    kmax: int
    n: int
    nu: float
    dt: float
    fields: dict[str, np.ndarray]
    force_seed: int = -1
    ensemble_seed: int = -1
    member: int = -1
    history: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def field_shape(self) -> tuple[int, int]:
        return (2 * self.kmax + 1, self.kmax + 1)


def to_bytes(ck: Checkpoint) -> bytes:
    if ck.kind not in KINDS:
        raise ValueError(f"unknown checkpoint kind {ck.kind!r}")
    shape = ck.field_shape()
    hist = np.asarray(ck.history, dtype="<f8")
    if hist.ndim != 2:
        raise ValueError("history must be a 2D array")
    parts = [_HEADER.pack(MAGIC, VERSION, KINDS[ck.kind], ck.grid_m, ck.kmax, len(ck.fields), ck.n,
                          ck.nu, ck.dt, ck.force_seed, ck.ensemble_seed, ck.member,
                          hist.shape[0], hist.shape[1])]
    for label in ck.fields:
        raw = label.encode("ascii")
        if len(raw) > _LABEL_BYTES:
            raise ValueError(f"label {label!r} longer than {_LABEL_BYTES} bytes")
        parts.append(raw.ljust(_LABEL_BYTES, b"\0"))
    for label, arr in ck.fields.items():
        arr = np.asarray(arr)
        if arr.shape != shape:
            raise ValueError(f"field {label!r} has shape {arr.shape}, expected {shape}")
        parts.append(np.ascontiguousarray(arr, dtype="<c16").tobytes())
    parts.append(np.ascontiguousarray(hist).tobytes())
    return b"".join(parts)


def from_bytes(data: bytes) -> Checkpoint:
    if len(data) < _HEADER.size:
        raise CheckpointError("file shorter than checkpoint header")
    (magic, version, kind, grid_m, kmax, nfields, n, nu, dt, fseed, eseed, member,
     hrows, hcols) = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    kinds = {v: k for k, v in KINDS.items()}
    if kind not in kinds:
        raise CheckpointError(f"unknown checkpoint kind code {kind}")
    nmodes = (2 * kmax + 1) * (kmax + 1)
    expected = _HEADER.size + nfields * (_LABEL_BYTES + 16 * nmodes) + 8 * hrows * hcols
    if len(data) != expected:
        raise CheckpointError(f"checkpoint size {len(data)} does not match header (expected {expected})")
    off = _HEADER.size
    labels = []
    for _ in range(nfields):
        labels.append(data[off:off + _LABEL_BYTES].rstrip(b"\0").decode("ascii"))
        off += _LABEL_BYTES
    fields = {}
    for label in labels:
        arr = np.frombuffer(data, dtype="<c16", count=nmodes, offset=off)
        fields[label] = arr.astype(complex).reshape(2 * kmax + 1, kmax + 1)
        off += 16 * nmodes
    hist = np.frombuffer(data, dtype="<f8", count=hrows * hcols, offset=off).astype(float)
    return Checkpoint(kinds[kind], grid_m, kmax, n, nu, dt, fields, fseed, eseed, member,
                      hist.reshape(hrows, hcols))


def write_checkpoint(path, ck: Checkpoint) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(to_bytes(ck))
    tmp.replace(path)


def read_checkpoint(path) -> Checkpoint:
    return from_bytes(Path(path).read_bytes())
