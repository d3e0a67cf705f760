"""End-to-end frame processing: synthesize, preprocess, classify."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .cnn import CnnModel, GestureResult, cnn_infer, reference_infer
from .frames import DEFAULT_SCENARIO, EchoFrame, Scenario, synthesize_echo
from .preproc import DEFAULT_PREPROC, PreprocConfig, preprocess
from .reference import ref_preprocess, rel_l2

STAGE_KEYS = ("tgc", "filtered", "spectrum", "envelope", "compressed")


@dataclass
class FrameRun:
    frame: EchoFrame
    image: np.ndarray
    result: GestureResult
    intermediates: dict = field(repr=False, default_factory=dict)
    preproc_stages: list = field(default_factory=list)

    @property
    def stages(self):
        return self.preproc_stages + self.result.stages

    @property
    def cycles(self) -> int:
        return sum(s.cycles for s in self.stages)

    @property
    def flops(self) -> int:
        return sum(s.flops for s in self.stages)

    def digest(self) -> str:
        """Hash of the bit patterns of every stage output and the result."""
        h = hashlib.sha256()
        for key in STAGE_KEYS:
            h.update(np.ascontiguousarray(self.intermediates[key]).tobytes())
        h.update(self.result.probabilities.tobytes())
        h.update(self.result.logits.tobytes())
        return h.hexdigest()


def run_frame(frame: EchoFrame, model: CnnModel, cfg: PreprocConfig = DEFAULT_PREPROC) -> FrameRun:
    image, inter, stages = preprocess(frame, cfg)
    result = cnn_infer(image, model)
    return FrameRun(frame, image, result, inter, stages)


def run_seed(seed: int, model: CnnModel, scenario: Scenario = DEFAULT_SCENARIO,
             cfg: PreprocConfig = DEFAULT_PREPROC) -> FrameRun:
    return run_frame(synthesize_echo(seed, scenario), model, cfg)


def oracle_errors(run: FrameRun, model: CnnModel | None = None,
                  cfg: PreprocConfig = DEFAULT_PREPROC) -> dict:
    """Relative L2 error of every stage against the FP64 pipeline on the same frame.

    The CNN entries compare against an FP64 forward pass fed with the FP64
    preprocessing output, so they carry the whole upstream error.
    """
    ref = ref_preprocess(run.frame.data, cfg)
    errs = {k: rel_l2(run.intermediates[k], ref[k]) for k in STAGE_KEYS}
    if model is not None:
        logits, probs = reference_infer(ref["compressed"], model)
        errs["logits"] = rel_l2(run.result.logits, logits)
        errs["probabilities"] = rel_l2(run.result.probabilities, probs)
        errs["argmax_match"] = float(int(np.argmax(probs)) == run.result.label)
    return errs
