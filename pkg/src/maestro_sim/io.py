"""File formats for samples, matrices and model weights.

All binary layouts are little-endian.

Complex samples (no header)
    C32: 4 bytes per sample, FP16 real then FP16 imaginary.
    C64: 8 bytes per sample, FP32 real then FP32 imaginary.
    CSV: one ``re,im`` line per sample, values printed with ``repr``.

Matrices
    16-byte header ``b"MSMX"``, u16 version (1), u16 format code,
    u32 rows, u32 cols; then rows*cols elements row-major in the tagged
    format. CSV: one line per row.

Model weights
    ``b"MSWT"``, u16 version (1), u16 tensor count, then per tensor:
    u16 name length, name bytes (UTF-8), u8 ndim, ndim * u32 dims.
    The payload follows the table: every tensor as FP16 row-major, in
    table order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fft.twiddle import PART_FORMAT, normalize_width
from .mpfloat import FloatFormat, decode, encode, get_format

FORMAT_CODES = {"FP8E4M3": 1, "FP8E5M2": 2, "BF16": 3, "FP16": 4, "FP32": 5, "FP64": 6}
_CODE_NAMES = {v: k for k, v in FORMAT_CODES.items()}

MATRIX_MAGIC = b"MSMX"
WEIGHTS_MAGIC = b"MSWT"
VERSION = 1


class FormatError(ValueError):
    """Malformed or unsupported file contents."""


def _le(fmt: FloatFormat) -> np.dtype:
    return np.dtype(fmt.uint_dtype).newbyteorder("<")


# complex samples

def samples_to_bytes(x, width: str) -> bytes:
    fmt = PART_FORMAT[normalize_width(width)]
    x = np.asarray(x, dtype=np.complex128).reshape(-1)
    inter = np.empty(2 * x.size, dtype=_le(fmt))
    inter[0::2] = encode(x.real, fmt)
    inter[1::2] = encode(x.imag, fmt)
    return inter.tobytes()


def samples_from_bytes(data: bytes, width: str) -> np.ndarray:
    fmt = PART_FORMAT[normalize_width(width)]
    step = 2 * fmt.width // 8
    if len(data) % step:
        raise FormatError(f"{len(data)} bytes is not a whole number of {width} samples")
    raw = np.frombuffer(data, dtype=_le(fmt))
    return decode(raw[0::2], fmt) + 1j * decode(raw[1::2], fmt)


def samples_to_csv(x) -> str:
    x = np.asarray(x, dtype=np.complex128).reshape(-1)
    return "".join(f"{float(v.real)!r},{float(v.imag)!r}\n" for v in x)


def samples_from_csv(text: str) -> np.ndarray:
    vals = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise FormatError(f"line {n}: expected 're,im'")
        vals.append(complex(float(parts[0]), float(parts[1])))
    return np.array(vals, dtype=np.complex128)


# matrices

def matrix_to_bytes(a, fmt) -> bytes:
    fmt = get_format(fmt)
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    if a.ndim != 2:
        raise FormatError("matrix must be 2-D")
    head = MATRIX_MAGIC + struct.pack("<HHII", VERSION, FORMAT_CODES[fmt.name], *a.shape)
    return head + encode(a, fmt).astype(_le(fmt)).tobytes()


def matrix_from_bytes(data: bytes) -> tuple[np.ndarray, FloatFormat]:
    if len(data) < 16 or data[:4] != MATRIX_MAGIC:
        raise FormatError("not a matrix file")
    version, code, rows, cols = struct.unpack_from("<HHII", data, 4)
    if version != VERSION or code not in _CODE_NAMES:
        raise FormatError(f"unsupported matrix version {version} / format code {code}")
    fmt = get_format(_CODE_NAMES[code])
    body = np.frombuffer(data, dtype=_le(fmt), offset=16)
    if body.size != rows * cols:
        raise FormatError(f"payload holds {body.size} elements, header says {rows}x{cols}")
    return decode(body, fmt).reshape(rows, cols), fmt


def matrix_to_csv(a) -> str:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in a)


def matrix_from_csv(text: str) -> np.ndarray:
    rows = [[float(t) for t in line.split(",")] for line in text.splitlines() if line.strip()]
    if len({len(r) for r in rows}) > 1:
        raise FormatError("ragged CSV matrix")
    return np.array(rows, dtype=np.float64)


# model weights

def weights_to_bytes(tensors: dict) -> bytes:
    fmt = get_format("fp16")
    table = [WEIGHTS_MAGIC, struct.pack("<HH", VERSION, len(tensors))]
    payload = []
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype=np.float64)
        key = name.encode("utf-8")
        table.append(struct.pack("<H", len(key)) + key)
        table.append(struct.pack(f"<B{arr.ndim}I", arr.ndim, *arr.shape))
        payload.append(encode(arr, fmt).astype("<u2").tobytes())
    return b"".join(table + payload)


def weights_from_bytes(data: bytes) -> dict:
    fmt = get_format("fp16")
    try:
        if data[:4] != WEIGHTS_MAGIC:
            raise FormatError("not a weights file")
        version, count = struct.unpack_from("<HH", data, 4)
        if version != VERSION:
            raise FormatError(f"unsupported weights version {version}")
        pos = 8
        entries = []
        for _ in range(count):
            (ln,) = struct.unpack_from("<H", data, pos)
            name = data[pos + 2:pos + 2 + ln].decode("utf-8")
            pos += 2 + ln
            (ndim,) = struct.unpack_from("<B", data, pos)
            dims = struct.unpack_from(f"<{ndim}I", data, pos + 1)
            pos += 1 + 4 * ndim
            entries.append((name, dims))
        out = {}
        for name, dims in entries:
            size = int(np.prod(dims, dtype=np.int64))
            raw = np.frombuffer(data, dtype="<u2", count=size, offset=pos)
            out[name] = decode(raw, fmt).reshape(dims)
            pos += 2 * size
    except (struct.error, UnicodeDecodeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"truncated or corrupt weights file: {exc}") from None
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after weights payload")
    return out


def write_bytes(path, data: bytes) -> None:
    Path(path).write_bytes(data)
