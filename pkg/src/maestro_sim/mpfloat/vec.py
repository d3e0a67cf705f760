"""Vectorized single-rounding arithmetic on float64 carrier arrays.

The datapath keeps every intermediate exact: products of two inputs of at
most 24-bit precision fit a float64 significand, and the three-term sums
are carried as error-free expansions. The exact sum is then collapsed to
53 bits with round-to-odd, which makes the final round-to-nearest-even into
any format of at most 51 bits equal to a single rounding of the exact value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formats import BF16, FP16, FP32, FP64, FP8E4M3, FP8E5M2, FloatFormat, quantize

__all__ = [
    "DotpAccFormat",
    "SAME_FP16",
    "SAME_FP32",
    "G8_16",
    "G8E5_16",
    "G16_32",
    "fp_add",
    "fp_sub",
    "fp_mul",
    "fp_fma",
    "fp_div",
    "fp_sqrt",
    "do_sdotp",
    "cast",
    "exact_sum3",
]

_NEG_ZERO = -0.0


@dataclass(frozen=True)
class DotpAccFormat:
    """Input/accumulator format pair accepted by the dot-product units."""

    input_format: FloatFormat
    accumulate_format: FloatFormat

    def __post_init__(self):
        if (self.input_format, self.accumulate_format) not in _VALID_PAIRS:
            raise ValueError(
                f"unsupported dot-product pair {self.input_format}->{self.accumulate_format}"
            )

    @property
    def widening(self) -> bool:
        return self.input_format != self.accumulate_format


_VALID_PAIRS = {
    (FP16, FP16),
    (FP32, FP32),
    (FP8E4M3, FP16),
    (FP8E5M2, FP16),
    (FP16, FP32),
}

SAME_FP16 = DotpAccFormat(FP16, FP16)
SAME_FP32 = DotpAccFormat(FP32, FP32)
G8_16 = DotpAccFormat(FP8E4M3, FP16)
G8E5_16 = DotpAccFormat(FP8E5M2, FP16)
G16_32 = DotpAccFormat(FP16, FP32)


def _check_fmt(fmt: FloatFormat) -> None:
    # products must stay exact in float64 and the round-to-odd trick needs
    # two spare bits below the target precision
    if fmt is FP64:
        raise ValueError("FP64 arithmetic is reference-only; use the exact oracle")


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def exact_sum3(a, b, c) -> np.ndarray:
    """Round-to-odd float64 of the exact sum a + b + c (finite inputs).

    Non-finite lanes get the plain IEEE sum. An exactly-zero result is -0
    only when every term is -0, matching sequential IEEE addition.
    """
    a, b, c = np.broadcast_arrays(
        np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64),
        np.asarray(c, dtype=np.float64))
    with np.errstate(invalid="ignore", over="ignore"):
        s, t = _two_sum(b, c)
        h, u = _two_sum(a, s)
        v, w = _two_sum(u, t)
        z, y = _two_sum(h, v)
        resid = np.where(y != 0, y, w)
        collapsed = z == 0
        z = np.where(collapsed, w, z)
        resid = np.where(collapsed, 0.0, resid)
        even = (z.view(np.int64) & 1) == 0
        bump = (resid != 0) & even
        z = np.where(bump, np.nextafter(z, np.copysign(np.inf, resid)), z)

        all_neg_zero = ((a == 0) & np.signbit(a) & (b == 0) & np.signbit(b)
                        & (c == 0) & np.signbit(c))
        z = np.where(z == 0, np.where(all_neg_zero, _NEG_ZERO, 0.0), z)

        special = ~(np.isfinite(a) & np.isfinite(b) & np.isfinite(c))
        if special.any():
            z = np.where(special, a + (b + c), z)
    return z


def exact_sum2(a, b) -> np.ndarray:
    """Round-to-odd float64 of the exact sum a + b.

    Plain float64 addition already gives IEEE zero signs and specials.
    """
    with np.errstate(invalid="ignore", over="ignore"):
        s, err = _two_sum(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
        bump = (err != 0) & np.isfinite(err) & ((s.view(np.int64) & 1) == 0)
        if bump.any():
            s = np.where(bump, np.nextafter(s, np.copysign(np.inf, err)), s)
    return s


def fp_add(a, b, fmt: FloatFormat) -> np.ndarray:
    _check_fmt(fmt)
    return quantize(exact_sum2(a, b), fmt)


def fp_sub(a, b, fmt: FloatFormat) -> np.ndarray:
    return fp_add(a, np.negative(b), fmt)


def fp_mul(a, b, fmt: FloatFormat) -> np.ndarray:
    _check_fmt(fmt)
    with np.errstate(invalid="ignore"):
        return quantize(np.multiply(a, b, dtype=np.float64), fmt)


def fp_fma(a, b, c, fmt: FloatFormat) -> np.ndarray:
    """a*b + c with one rounding into ``fmt`` (``c`` may be wider than ``a``, ``b``)."""
    _check_fmt(fmt)
    with np.errstate(invalid="ignore"):
        p = np.multiply(a, b, dtype=np.float64)
    return quantize(exact_sum2(c, p), fmt)


def fp_div(a, b, fmt: FloatFormat) -> np.ndarray:
    # float64 quotient then narrowing is innocuous double rounding (53 >= 2p + 2)
    _check_fmt(fmt)
    with np.errstate(divide="ignore", invalid="ignore"):
        return quantize(np.divide(a, b, dtype=np.float64), fmt)


def fp_sqrt(a, fmt: FloatFormat) -> np.ndarray:
    _check_fmt(fmt)
    with np.errstate(invalid="ignore"):
        return quantize(np.sqrt(np.asarray(a, dtype=np.float64)), fmt)


def cast(x, to: FloatFormat) -> np.ndarray:
    return quantize(x, to)


def do_sdotp(a, b, c, d, e, mod=0, pair: DotpAccFormat = SAME_FP16):
    """Dual-output sum of dot products.

    Returns ``(e + s, e - s)`` with ``s = a*b + c*d`` (``a*b - c*d`` where
    ``mod`` is set), each output rounded exactly once into the accumulator
    format. ``mod`` may be a scalar or an array.
    """
    fmt = pair.accumulate_format
    _check_fmt(fmt)
    with np.errstate(invalid="ignore"):
        p1 = np.multiply(a, b, dtype=np.float64)
        p2 = np.multiply(c, d, dtype=np.float64)
    p2 = np.where(np.asarray(mod, dtype=bool), -p2, p2)
    total = quantize(exact_sum3(e, p1, p2), fmt)
    diff = quantize(exact_sum3(e, -p1, -p2), fmt)
    return total, diff


def unfused_sdotp(a, b, c, d, e, mod=0, pair: DotpAccFormat = SAME_FP16):
    """Conventional datapath: c*d rounded, fma for a*b, then add/sub into ``e``."""
    fmt = pair.accumulate_format
    cd = fp_mul(c, d, fmt)
    cd = np.where(np.asarray(mod, dtype=bool), -cd, cd)
    s = fp_fma(a, b, cd, fmt)
    return fp_add(e, s, fmt), fp_sub(e, s, fmt)


def supported_formats() -> tuple[FloatFormat, ...]:
    return (FP8E4M3, FP8E5M2, BF16, FP16, FP32)
