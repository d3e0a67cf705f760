"""Wearable-ultrasound gesture pipeline on the simulated engines."""

from .cnn import (CnnModel, ConvBlock, Dense, GestureResult, cnn_infer, random_model,
                  reference_infer, softmax_fp32)
from .frames import (DEFAULT_SCENARIO, SILENT_SCENARIO, EchoFrame, Scenario,
                     synthesize_echo)
from .pipeline import FrameRun, oracle_errors, run_frame, run_seed
from .preproc import (DEFAULT_PREPROC, PreprocConfig, gaussian_filter, hilbert_envelope,
                      log_compress, preprocess, tgc)
from .stages import StageTrace, VectorOpTrace

__all__ = [
    "CnnModel", "ConvBlock", "Dense", "GestureResult", "cnn_infer", "random_model",
    "reference_infer", "softmax_fp32", "DEFAULT_SCENARIO", "SILENT_SCENARIO", "EchoFrame",
    "Scenario", "synthesize_echo", "FrameRun", "oracle_errors", "run_frame", "run_seed",
    "DEFAULT_PREPROC", "PreprocConfig", "gaussian_filter", "hilbert_envelope", "log_compress",
    "preprocess", "tgc", "StageTrace", "VectorOpTrace",
]
