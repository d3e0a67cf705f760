"""Scalar front end: the arithmetic primitives on :class:`PackedScalar` values.

Thin wrappers over the vectorized datapath; engines call :mod:`.vec`
directly on whole arrays.
"""

from __future__ import annotations

import numpy as np

from . import oracle, vec
from .formats import FloatFormat, PackedScalar, decode, encode
from .vec import DotpAccFormat, SAME_FP16, SAME_FP32


def _val(x: PackedScalar) -> np.ndarray:
    return decode(np.array([x.bits], dtype=np.uint64), x.fmt)


def _pack(v: np.ndarray, fmt: FloatFormat) -> PackedScalar:
    return PackedScalar(int(encode(v, fmt)[0]), fmt)


def _same(*xs: PackedScalar) -> FloatFormat:
    fmt = xs[0].fmt
    if any(x.fmt != fmt for x in xs):
        raise ValueError("operands must share one format")
    return fmt


def round_from_exact(value, fmt: FloatFormat) -> PackedScalar:
    """Correctly rounded (RNE) encoding of an exact rational, int, or inf/nan marker."""
    return PackedScalar(oracle.round_from_exact(value, fmt), fmt)


def fp_add(a: PackedScalar, b: PackedScalar) -> PackedScalar:
    fmt = _same(a, b)
    return _pack(vec.fp_add(_val(a), _val(b), fmt), fmt)


def fp_sub(a: PackedScalar, b: PackedScalar) -> PackedScalar:
    fmt = _same(a, b)
    return _pack(vec.fp_sub(_val(a), _val(b), fmt), fmt)


def fp_mul(a: PackedScalar, b: PackedScalar) -> PackedScalar:
    fmt = _same(a, b)
    return _pack(vec.fp_mul(_val(a), _val(b), fmt), fmt)


def fp_fma(a: PackedScalar, b: PackedScalar, c: PackedScalar) -> PackedScalar:
    fmt = _same(a, b, c)
    return _pack(vec.fp_fma(_val(a), _val(b), _val(c), fmt), fmt)


def cast(x: PackedScalar, to: FloatFormat) -> PackedScalar:
    return _pack(vec.cast(_val(x), to), to)


def _default_pair(fmt: FloatFormat) -> DotpAccFormat:
    if fmt.name == "FP16":
        return SAME_FP16
    if fmt.name == "FP32":
        return SAME_FP32
    raise ValueError(f"no same-format dot-product unit for {fmt}")


def do_sdotp(a: PackedScalar, b: PackedScalar, c: PackedScalar, d: PackedScalar,
             e: PackedScalar, mod_flag: int = 0,
             fmt_pair: DotpAccFormat | None = None) -> tuple[PackedScalar, PackedScalar]:
    """``(e + (a*b +- c*d), e - (a*b +- c*d))``, each rounded once.

    ``mod_flag`` negates the c*d product. Without ``fmt_pair`` all five
    operands must share FP16 or FP32.
    """
    in_fmt = _same(a, b, c, d)
    pair = fmt_pair or _default_pair(in_fmt)
    if in_fmt != pair.input_format or e.fmt != pair.accumulate_format:
        raise ValueError(f"operand formats do not match {pair}")
    s, t = vec.do_sdotp(_val(a), _val(b), _val(c), _val(d), _val(e), mod_flag, pair)
    acc = pair.accumulate_format
    return _pack(s, acc), _pack(t, acc)
