"""Work attribution for pipeline stages."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..fft import FftCycleTrace
from ..mpfloat import FloatFormat
from ..vtu.gemm import VAU_FPUS, VAU_LANE_BITS, GemmCycleTrace


@dataclass
class VectorOpTrace:
    """Elementwise or reduction work on the vector FPUs."""

    name: str
    elements: int
    fmt_bits: int
    ops_per_element: int = 1
    flops_per_element: int = 1

    @property
    def lanes(self) -> int:
        return VAU_FPUS * VAU_LANE_BITS // self.fmt_bits

    @property
    def total_cycles(self) -> int:
        return self.ops_per_element * -(-self.elements // self.lanes)

    @property
    def flops(self) -> int:
        return self.flops_per_element * self.elements

    def to_dict(self) -> dict:
        return {"name": self.name, "elements": self.elements, "fmt_bits": self.fmt_bits,
                "ops_per_element": self.ops_per_element,
                "flops_per_element": self.flops_per_element,
                "total_cycles": self.total_cycles, "flops": self.flops}


def vector_op(name: str, elements: int, fmt: FloatFormat, ops: int = 1, flops: int = 1) -> VectorOpTrace:
    return VectorOpTrace(name, int(elements), fmt.width, ops, flops)


def engine_of(trace) -> str:
    if isinstance(trace, FftCycleTrace):
        return "fft"
    if isinstance(trace, GemmCycleTrace):
        return trace.engine
    return "vu"


@dataclass
class StageTrace:
    """Engine traces consumed by one pipeline stage."""

    name: str
    traces: list = field(default_factory=list)

    def add(self, trace, count: int = 1) -> None:
        self.traces.extend([trace] * count)

    @property
    def cycles(self) -> int:
        return sum(t.total_cycles for t in self.traces)

    @property
    def flops(self) -> int:
        return sum(t.flops for t in self.traces)

    def by_engine(self) -> dict:
        out: dict = {}
        for t in self.traces:
            e = out.setdefault(engine_of(t), {"cycles": 0, "flops": 0, "jobs": 0})
            e["cycles"] += t.total_cycles
            e["flops"] += t.flops
            e["jobs"] += 1
        return out

    def to_dict(self) -> dict:
        return {"name": self.name, "cycles": self.cycles, "flops": self.flops,
                "engines": self.by_engine()}
