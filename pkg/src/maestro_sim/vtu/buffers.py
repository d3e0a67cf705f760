"""Tensor-unit buffer capacity accounting (original vs VRF-fed design)."""

from __future__ import annotations

from dataclasses import dataclass

ORIGINAL = "original"
REDUCED = "reduced"


@dataclass(frozen=True)
class BufferSpec:
    x_queue_slots: int
    x_sync_slots: int
    ces: int = 48
    rows: int = 12
    cols: int = 4
    x_hold_cycles: int = 16
    element_bits: int = 16

    @property
    def x_bytes(self) -> int:
        return (self.x_sync_slots + self.x_queue_slots) * self.ces * self.element_bits // 8

    @property
    def y_bytes(self) -> int:
        # Z/Y buffer: one tile row of outputs per CE row
        return self.rows * self.x_hold_cycles * self.element_bits // 8

    @property
    def w_bytes(self) -> int:
        # one shift register per CE column
        return self.cols * self.x_hold_cycles * self.element_bits // 8

    @property
    def total_bytes(self) -> int:
        return self.x_bytes + self.y_bytes + self.w_bytes

    def as_dict(self) -> dict:
        return {"X": self.x_bytes, "Y": self.y_bytes, "W": self.w_bytes, "Total": self.total_bytes}


VARIANTS = {
    ORIGINAL: BufferSpec(x_queue_slots=4, x_sync_slots=2),
    REDUCED: BufferSpec(x_queue_slots=2, x_sync_slots=1),
}


def reduction_pct(before: int, after: int) -> float:
    return round(100.0 * (after - before) / before, 1)


def buffer_accounting(spec_variant: str | None = None) -> dict:
    """Capacities in bytes per buffer, and the per-row change when no variant is named."""
    if spec_variant is not None:
        return VARIANTS[spec_variant].as_dict()
    orig = VARIANTS[ORIGINAL].as_dict()
    red = VARIANTS[REDUCED].as_dict()
    return {
        name: {ORIGINAL: orig[name], REDUCED: red[name],
               "reduction_pct": reduction_pct(orig[name], red[name])}
        for name in orig
    }


def _pct(p: float) -> str:
    if p == 0:
        return "0%"
    return f"{'−' if p < 0 else '+'}{abs(p):g}%"


def format_table(report: dict) -> str:
    lines = [f"{'buffer':<8}{'original':>10}{'reduced':>10}{'change':>9}"]
    for name, row in report.items():
        lines.append(f"{name:<8}{row[ORIGINAL]:>8} B{row[REDUCED]:>8} B{_pct(row['reduction_pct']):>9}")
    lines.append("")
    for name, row in report.items():
        label = "totals" if name == "Total" else f"{name} buffer"
        lines.append(f"{label} {row[ORIGINAL]} → {row[REDUCED]} ({_pct(row['reduction_pct'])})")
    return "\n".join(lines)
