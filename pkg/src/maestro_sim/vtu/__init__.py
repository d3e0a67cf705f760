"""Unified vector-tensor unit: GEMM dataflow, VRF arbitration, buffers, VRF layout."""

from .arbiter import VAU, VLSU, VSLDU, VTU, Grants, Request, VrfArbiter, vrf_arbitrate
from .buffers import ORIGINAL, REDUCED, BufferSpec, buffer_accounting
from .gemm import (CE_ARRAY, CeArraySpec, GemmCycleTrace, GemmShape, ShapeMismatch,
                   UnsupportedFormat, VauTiming, VtuTiming, reference_gemm, vau_gemm,
                   vau_timing, vtu_gemm, vtu_timing)
from .vrf import DEFAULT_LAYOUT, TileTooLarge, VrfLayout, hex_dump, parse_hex_dump, vrf_pack, vrf_unpack

__all__ = [
    "VAU", "VLSU", "VSLDU", "VTU", "Grants", "Request", "VrfArbiter", "vrf_arbitrate",
    "ORIGINAL", "REDUCED", "BufferSpec", "buffer_accounting",
    "CE_ARRAY", "CeArraySpec", "GemmCycleTrace", "GemmShape", "ShapeMismatch",
    "UnsupportedFormat", "VauTiming", "VtuTiming", "reference_gemm", "vau_gemm", "vau_timing",
    "vtu_gemm", "vtu_timing", "DEFAULT_LAYOUT", "TileTooLarge", "VrfLayout", "hex_dump",
    "parse_hex_dump", "vrf_pack", "vrf_unpack",
]
