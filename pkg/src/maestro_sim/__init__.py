"""Functional and cycle-level model of a RISC-V vector-tensor SoC with an FFT accelerator."""

__version__ = "0.1.0"
