"""Mixed-precision radix-2 FFT accelerator model."""

from .cycles import FftCycleTrace, fft_cycle_model
from .engine import (FORWARD, INVERSE, ComplexSample, FftJob, FftResult, InvalidLength,
                     bit_reverse_indices, butterfly_r2, fft, fft_forward, fft_inverse,
                     quantize_complex)
from .twiddle import C32, C64, MAX_POINTS, PART_FORMAT, TwiddleTable, twiddle_table_build

__all__ = [
    "FftCycleTrace", "fft_cycle_model", "FORWARD", "INVERSE", "ComplexSample", "FftJob",
    "FftResult", "InvalidLength", "bit_reverse_indices", "butterfly_r2", "fft", "fft_forward",
    "fft_inverse", "quantize_complex", "C32", "C64", "MAX_POINTS", "PART_FORMAT",
    "TwiddleTable", "twiddle_table_build",
]
