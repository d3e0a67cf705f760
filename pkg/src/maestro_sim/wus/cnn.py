"""Gesture CNN: three conv blocks, global average pool, FC, softmax.

Conv and batch norm are stored already fused (one weight tensor and one
bias per block). Convolutions are lowered with im2col to ``Z = X W + Y``
on the VTU, with the bias broadcast as ``Y``. ReLU, max-pool and global
average pooling run on the vector FPUs; both fully connected layers use
the VAU outer-product GEMM. Everything runs in FP16 except the softmax,
which runs in FP32.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..mpfloat import FP16, FP32, quantize
from ..mpfloat import vec
from ..vtu.gemm import GemmShape, ShapeMismatch, vau_gemm, vtu_gemm
from .frames import CHANNELS, SAMPLES
from .stages import StageTrace, vector_op

FEATURE_DIM = 128
DEFAULT_CHANNELS = (32, 64, 128)
DEFAULT_CLASSES = 10


@dataclass
class ConvBlock:
    weight: np.ndarray    # (cout, cin, kh, kw), BN scale folded in
    bias: np.ndarray      # (cout,), BN shift folded in
    pool: tuple[int, int] = (1, 4)

    def __post_init__(self):
        self.weight = quantize(np.asarray(self.weight, dtype=np.float64), FP16)
        self.bias = quantize(np.asarray(self.bias, dtype=np.float64), FP16)
        if self.weight.ndim != 4 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeMismatch(f"conv weight {self.weight.shape} / bias {self.bias.shape}")
        kh, kw = self.weight.shape[2:]
        if kh % 2 == 0 or kw % 2 == 0:
            raise ShapeMismatch("same padding needs odd kernel sizes")

    @property
    def cout(self) -> int:
        return self.weight.shape[0]

    @property
    def cin(self) -> int:
        return self.weight.shape[1]


@dataclass
class Dense:
    weight: np.ndarray    # (out, in)
    bias: np.ndarray      # (out,)

    def __post_init__(self):
        self.weight = quantize(np.asarray(self.weight, dtype=np.float64), FP16)
        self.bias = quantize(np.asarray(self.bias, dtype=np.float64), FP16)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeMismatch(f"dense weight {self.weight.shape} / bias {self.bias.shape}")


@dataclass
class CnnModel:
    blocks: list[ConvBlock]
    fc: Dense              # features -> features, BN folded, ReLU after
    out: Dense             # features -> classes
    input_shape: tuple[int, int] = (CHANNELS, SAMPLES)

    def __post_init__(self):
        if not self.blocks:
            raise ShapeMismatch("model needs at least one conv block")
        cin = 1
        h, w = self.input_shape
        for i, b in enumerate(self.blocks):
            if b.cin != cin:
                raise ShapeMismatch(f"block {i} expects {b.cin} input channels, gets {cin}")
            ph, pw = b.pool
            if h % ph or w % pw:
                raise ShapeMismatch(f"block {i} pool {b.pool} does not divide {h}x{w}")
            h, w = h // ph, w // pw
            cin = b.cout
        if self.fc.weight.shape != (cin, cin):
            raise ShapeMismatch(f"fc weight {self.fc.weight.shape}, expected {(cin, cin)}")
        if self.out.weight.shape[1] != cin:
            raise ShapeMismatch(f"output weight {self.out.weight.shape} does not take {cin} features")

    @property
    def feature_dim(self) -> int:
        return self.blocks[-1].cout

    @property
    def n_classes(self) -> int:
        return self.out.weight.shape[0]

    def to_tensors(self) -> dict:
        t = {}
        for i, b in enumerate(self.blocks):
            t[f"block{i}.weight"] = b.weight
            t[f"block{i}.bias"] = b.bias
            t[f"block{i}.pool"] = np.array(b.pool, dtype=np.float64)
        t["fc.weight"], t["fc.bias"] = self.fc.weight, self.fc.bias
        t["out.weight"], t["out.bias"] = self.out.weight, self.out.bias
        return t

    @classmethod
    def from_tensors(cls, t: dict, input_shape=(CHANNELS, SAMPLES)) -> "CnnModel":
        try:
            n = 0
            blocks = []
            while f"block{n}.weight" in t:
                pool = tuple(int(v) for v in t.get(f"block{n}.pool", (1, 4)))
                blocks.append(ConvBlock(t[f"block{n}.weight"], t[f"block{n}.bias"], pool))
                n += 1
            fc = Dense(t["fc.weight"], t["fc.bias"])
            out = Dense(t["out.weight"], t["out.bias"])
        except KeyError as exc:
            raise ShapeMismatch(f"missing tensor {exc}") from None
        return cls(blocks, fc, out, tuple(input_shape))


def random_model(seed: int, channels=DEFAULT_CHANNELS, n_classes: int = DEFAULT_CLASSES,
                 kernel=(3, 3), pool=(1, 4), input_shape=(CHANNELS, SAMPLES)) -> CnnModel:
    """He-initialised model with random folded batch-norm parameters."""
    rng = np.random.default_rng(seed)
    blocks = []
    cin = 1
    for cout in channels:
        fan_in = cin * kernel[0] * kernel[1]
        w = rng.normal(0, np.sqrt(2.0 / fan_in), (cout, cin, *kernel))
        scale = rng.uniform(0.8, 1.2, cout)
        shift = rng.normal(0, 0.1, cout)
        blocks.append(ConvBlock(w * scale[:, None, None, None], shift, pool))
        cin = cout
    fc_scale = rng.uniform(0.8, 1.2, cin)
    fc = Dense(rng.normal(0, np.sqrt(2.0 / cin), (cin, cin)) * fc_scale[:, None],
               rng.normal(0, 0.1, cin))
    out = Dense(rng.normal(0, np.sqrt(1.0 / cin), (n_classes, cin)), rng.normal(0, 0.1, n_classes))
    return CnnModel(blocks, fc, out, tuple(input_shape))


@dataclass
class GestureResult:
    probabilities: np.ndarray
    label: int
    logits: np.ndarray
    features: np.ndarray
    stages: list[StageTrace] = field(default_factory=list)

    @property
    def cycles(self) -> int:
        return sum(s.cycles for s in self.stages)

    @property
    def flops(self) -> int:
        return sum(s.flops for s in self.stages)

    def to_dict(self) -> dict:
        return {"label": self.label,
                "probabilities": [float(p) for p in self.probabilities],
                "logits": [float(v) for v in self.logits],
                "cycles": self.cycles, "flops": self.flops,
                "stages": [s.to_dict() for s in self.stages]}


def im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """(C, H, W) -> (H*W, C*kh*kw) patches with zero same-padding."""
    c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)))
    cols = np.empty((c, kh, kw, h, w))
    for i in range(kh):
        for j in range(kw):
            cols[:, i, j] = xp[:, i:i + h, j:j + w]
    return cols.reshape(c * kh * kw, h * w).T


def _maxpool(x: np.ndarray, pool) -> np.ndarray:
    c, h, w = x.shape
    ph, pw = pool
    return x.reshape(c, h // ph, ph, w // pw, pw).max(axis=(2, 4))


def softmax_fp32(logits) -> np.ndarray:
    z = quantize(np.asarray(logits, dtype=np.float64), FP32)
    d = vec.fp_sub(z, z.max(), FP32)
    e = quantize(np.exp(d), FP32)
    total = np.float64(0.0)
    for v in e:
        total = vec.fp_add(total, v, FP32)
    return vec.fp_div(e, total, FP32)


def conv_block(x: np.ndarray, block: ConvBlock, stage: StageTrace) -> np.ndarray:
    c, h, w = x.shape
    kh, kw = block.weight.shape[2:]
    cols = im2col(x, kh, kw)
    wmat = block.weight.reshape(block.cout, -1).T
    ymat = np.broadcast_to(block.bias, (h * w, block.cout))
    z, trace = vtu_gemm(cols, wmat, ymat, GemmShape(h * w, block.cout, wmat.shape[0]))
    stage.add(trace)
    y = np.maximum(z, 0.0).T.reshape(block.cout, h, w)
    stage.add(vector_op("relu", y.size, FP16))
    if tuple(block.pool) != (1, 1):
        stage.add(vector_op("maxpool", y.size, FP16, flops=0))
        y = _maxpool(y, block.pool)
    return y


def global_avg_pool(x: np.ndarray, stage: StageTrace) -> np.ndarray:
    c = x.shape[0]
    flat = x.reshape(c, -1)
    acc = np.zeros(c)
    for j in range(flat.shape[1]):
        acc = vec.fp_add(acc, flat[:, j], FP16)
    stage.add(vector_op("gap_sum", flat.size, FP16))
    stage.add(vector_op("gap_scale", c, FP16))
    return vec.fp_div(acc, float(flat.shape[1]), FP16)


def _dense(x: np.ndarray, layer: Dense, stage: StageTrace) -> np.ndarray:
    n_out, n_in = layer.weight.shape
    z, trace = vau_gemm(x[None, :], layer.weight.T, layer.bias[None, :], GemmShape(1, n_out, n_in))
    stage.add(trace)
    return z[0]


def cnn_infer(image, model: CnnModel) -> GestureResult:
    x = quantize(np.asarray(image, dtype=np.float64), FP16)
    if x.shape != tuple(model.input_shape):
        raise ShapeMismatch(f"input {x.shape} does not match model input {model.input_shape}")
    stages = []
    x = x[None]
    for i, block in enumerate(model.blocks):
        st = StageTrace(f"conv{i}")
        x = conv_block(x, block, st)
        stages.append(st)
    st = StageTrace("gap")
    feats = global_avg_pool(x, st)
    stages.append(st)
    st = StageTrace("fc")
    h = np.maximum(_dense(feats, model.fc, st), 0.0)
    st.add(vector_op("relu", h.size, FP16))
    logits = _dense(h, model.out, st)
    stages.append(st)
    st = StageTrace("softmax")
    probs = softmax_fp32(logits)
    st.add(vector_op("softmax", probs.size, FP32, ops=4, flops=4))
    stages.append(st)
    return GestureResult(probs, int(np.argmax(probs)), logits, feats, stages)


def reference_infer(image, model: CnnModel) -> tuple[np.ndarray, np.ndarray]:
    """FP64 forward pass over the same (FP16-valued) weights: ``(logits, probs)``."""
    x = np.asarray(image, dtype=np.float64)[None]
    for b in model.blocks:
        c, h, w = x.shape
        kh, kw = b.weight.shape[2:]
        z = im2col(x, kh, kw) @ b.weight.reshape(b.cout, -1).T + b.bias
        x = np.maximum(z, 0.0).T.reshape(b.cout, h, w)
        x = _maxpool(x, b.pool)
    feats = x.reshape(x.shape[0], -1).mean(axis=1)
    hdn = np.maximum(model.fc.weight @ feats + model.fc.bias, 0.0)
    logits = model.out.weight @ hdn + model.out.bias
    e = np.exp(logits - logits.max())
    return logits, e / e.sum()
