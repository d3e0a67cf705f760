"""Multi-precision software floating point with a fused dual-output dot product."""

from .formats import (BF16, FORMATS, FP16, FP32, FP64, FP8E4M3, FP8E5M2, FloatFormat,
                      PackedScalar, decode, encode, get_format, quantize)
from .ops import cast, do_sdotp, fp_add, fp_fma, fp_mul, fp_sub, round_from_exact
from .vec import G8_16, G8E5_16, G16_32, SAME_FP16, SAME_FP32, DotpAccFormat

__all__ = [
    "BF16", "FORMATS", "FP16", "FP32", "FP64", "FP8E4M3", "FP8E5M2", "FloatFormat",
    "PackedScalar", "decode", "encode", "get_format", "quantize",
    "cast", "do_sdotp", "fp_add", "fp_fma", "fp_mul", "fp_sub", "round_from_exact",
    "G8_16", "G8E5_16", "G16_32", "SAME_FP16", "SAME_FP32", "DotpAccFormat",
]
