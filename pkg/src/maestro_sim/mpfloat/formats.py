"""Binary floating-point formats and bit-level encode/decode.

Values travel through the simulator as float64 "carrier" arrays: every
element is exactly representable in its tagged format, so decoding is
lossless and all formats up to FP64 share one numpy dtype. Bit patterns
appear only at I/O boundaries and in the exact oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "FloatFormat",
    "PackedScalar",
    "FP8E4M3",
    "FP8E5M2",
    "BF16",
    "FP16",
    "FP32",
    "FP64",
    "FORMATS",
    "get_format",
    "decode",
    "encode",
    "quantize",
]


@dataclass(frozen=True)
class FloatFormat:
    name: str
    exp_bits: int
    man_bits: int
    # E4M3 style: no infinity, only the all-ones pattern is NaN, overflow saturates
    ieee_specials: bool = True

    @property
    def width(self) -> int:
        return 1 + self.exp_bits + self.man_bits

    @property
    def bias(self) -> int:
        return (1 << (self.exp_bits - 1)) - 1

    @property
    def precision(self) -> int:
        return self.man_bits + 1

    @property
    def emin(self) -> int:
        return 1 - self.bias

    @property
    def emax(self) -> int:
        top = (1 << self.exp_bits) - 1
        return (top - 1 if self.ieee_specials else top) - self.bias

    @property
    def max_finite(self) -> float:
        if self.ieee_specials:
            frac = 2.0 - 2.0 ** -self.man_bits
        else:
            # all-ones mantissa at the top exponent is reserved for NaN
            frac = 2.0 - 2.0 ** (1 - self.man_bits)
        return frac * 2.0 ** self.emax

    @property
    def min_subnormal(self) -> float:
        return 2.0 ** (self.emin - self.man_bits)

    @property
    def quiet_nan(self) -> int:
        exp_all = ((1 << self.exp_bits) - 1) << self.man_bits
        if self.ieee_specials:
            return exp_all | (1 << (self.man_bits - 1))
        return exp_all | ((1 << self.man_bits) - 1)

    @property
    def uint_dtype(self):
        return {8: np.uint8, 16: np.uint16, 32: np.uint32, 64: np.uint64}[self.width]

    def __str__(self) -> str:
        return self.name


FP8E4M3 = FloatFormat("FP8E4M3", 4, 3, ieee_specials=False)
FP8E5M2 = FloatFormat("FP8E5M2", 5, 2)
BF16 = FloatFormat("BF16", 8, 7)
FP16 = FloatFormat("FP16", 5, 10)
FP32 = FloatFormat("FP32", 8, 23)
FP64 = FloatFormat("FP64", 11, 52)

FORMATS = {f.name: f for f in (FP8E4M3, FP8E5M2, BF16, FP16, FP32, FP64)}
_ALIASES = {"E4M3": FP8E4M3, "FP8": FP8E4M3, "E5M2": FP8E5M2, "FP8_E4M3": FP8E4M3,
            "FP8_E5M2": FP8E5M2, "HALF": FP16, "SINGLE": FP32, "DOUBLE": FP64}


def get_format(name: str | FloatFormat) -> FloatFormat:
    if isinstance(name, FloatFormat):
        return name
    key = name.upper()
    if key in FORMATS:
        return FORMATS[key]
    if key in _ALIASES:
        return _ALIASES[key]
    raise ValueError(f"unknown float format {name!r}")


def decode(bits, fmt: FloatFormat) -> np.ndarray:
    """Bit patterns -> float64 carrier values (exact)."""
    bits = np.asarray(bits).astype(np.uint64)
    if fmt is FP64:
        return bits.view(np.float64).copy()
    if fmt is FP32:
        with np.errstate(invalid="ignore"):
            return bits.astype(np.uint32).view(np.float32).astype(np.float64)
    sign = (bits >> np.uint64(fmt.width - 1)) & np.uint64(1)
    expf = ((bits >> np.uint64(fmt.man_bits)) & np.uint64((1 << fmt.exp_bits) - 1)).astype(np.int64)
    mant = (bits & np.uint64((1 << fmt.man_bits) - 1)).astype(np.int64)
    sub = expf == 0
    sig = np.where(sub, mant, mant + (1 << fmt.man_bits)).astype(np.float64)
    exp = np.where(sub, fmt.emin, expf - fmt.bias) - fmt.man_bits
    mag = np.ldexp(sig, exp)
    top = (1 << fmt.exp_bits) - 1
    if fmt.ieee_specials:
        mag = np.where((expf == top) & (mant == 0), np.inf, mag)
        mag = np.where((expf == top) & (mant != 0), np.nan, mag)
    else:
        mag = np.where((expf == top) & (mant == (1 << fmt.man_bits) - 1), np.nan, mag)
    return np.where(sign == 1, -mag, mag)


def quantize(x, fmt: FloatFormat) -> np.ndarray:
    """Round float64 values to ``fmt`` (round-to-nearest-even), returning carriers.

    Overflow goes to infinity, except E4M3 which saturates finite values at
    the largest finite magnitude and maps infinities to NaN.
    """
    x = np.asarray(x, dtype=np.float64)
    if fmt is FP64:
        return x.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        if fmt is FP32:
            return x.astype(np.float32).astype(np.float64)
        if fmt is FP16:
            return x.astype(np.float16).astype(np.float64)
        return _quantize_generic(x, fmt)


def _quantize_generic(x: np.ndarray, fmt: FloatFormat) -> np.ndarray:
    ax = np.abs(x)
    finite = np.isfinite(ax)
    safe = np.where(finite, ax, 0.0)
    _, e = np.frexp(safe)
    q = np.maximum(e - 1, fmt.emin) - fmt.man_bits
    n = np.rint(np.ldexp(safe, -q))
    r = np.ldexp(n, q)
    over = r > fmt.max_finite
    if fmt.ieee_specials:
        r = np.where(over, np.inf, r)
        r = np.where(finite, r, ax)
    else:
        r = np.where(over, fmt.max_finite, r)
        r = np.where(finite, r, np.nan)
    return np.copysign(r, x)


def encode(x, fmt: FloatFormat) -> np.ndarray:
    """Float64 carriers -> bit patterns. Values are rounded first; NaNs become canonical."""
    v = quantize(x, fmt)
    if fmt is FP64:
        out = v.view(np.uint64).copy()
        out[np.isnan(v)] = fmt.quiet_nan
        return out
    if fmt is FP32:
        out = v.astype(np.float32).view(np.uint32).copy()
        out[np.isnan(v)] = fmt.quiet_nan
        return out
    if fmt is FP16:
        out = v.astype(np.float16).view(np.uint16).copy()
        out[np.isnan(v)] = fmt.quiet_nan
        return out
    sign = np.signbit(v).astype(np.uint64)
    av = np.abs(v)
    finite = np.isfinite(av)
    safe = np.where(finite, av, 0.0)
    _, e = np.frexp(safe)
    normal = (e - 1 >= fmt.emin) & (safe > 0)
    q = np.maximum(e - 1, fmt.emin) - fmt.man_bits
    n = np.ldexp(safe, -q).astype(np.uint64)
    expf = np.where(normal, (e - 1 + fmt.bias), 0).astype(np.uint64)
    mant = np.where(normal, n - np.uint64(1 << fmt.man_bits), n)
    out = (sign << np.uint64(fmt.width - 1)) | (expf << np.uint64(fmt.man_bits)) | mant
    top = np.uint64((1 << fmt.exp_bits) - 1) << np.uint64(fmt.man_bits)
    out = np.where(np.isinf(av), (sign << np.uint64(fmt.width - 1)) | top, out)
    out = np.where(np.isnan(av), np.uint64(fmt.quiet_nan), out)
    return out.astype(fmt.uint_dtype)


@dataclass(frozen=True)
class PackedScalar:
    """One encoded value tagged with its format."""

    bits: int
    fmt: FloatFormat

    def __post_init__(self):
        if not 0 <= self.bits < (1 << self.fmt.width):
            raise ValueError(f"bit pattern {self.bits:#x} does not fit {self.fmt}")

    @classmethod
    def from_float(cls, value: float, fmt: FloatFormat) -> PackedScalar:
        return cls(int(encode(np.array([value]), fmt)[0]), fmt)

    @classmethod
    def from_value(cls, value: float, fmt: FloatFormat) -> PackedScalar:
        """Like ``from_float`` but rejects values that would need rounding."""
        p = cls.from_float(value, fmt)
        back = p.to_float()
        if not (back == value or (np.isnan(back) and np.isnan(value))):
            raise ValueError(f"{value!r} is not representable in {fmt}")
        return p

    def to_float(self) -> float:
        return float(decode(np.array([self.bits], dtype=np.uint64), self.fmt)[0])

    def to_fraction(self) -> Fraction:
        v = self.to_float()
        if not np.isfinite(v):
            raise ValueError("non-finite value has no exact rational form")
        return Fraction(v)

    @property
    def is_nan(self) -> bool:
        return bool(np.isnan(self.to_float()))

    @property
    def sign(self) -> int:
        return self.bits >> (self.fmt.width - 1)

    def __repr__(self) -> str:
        digits = (self.fmt.width + 3) // 4
        return f"PackedScalar({self.fmt.name}, 0x{self.bits:0{digits}X} = {self.to_float()!r})"
