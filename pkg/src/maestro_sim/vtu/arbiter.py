"""Per-bank VRF port arbitration.

Each of the four banks has three 256-bit read ports and one write port.
Fixed priorities per port::

    read 0  VAU (vs2)  > VLSU (vs2)
    read 1  VAU (vs1)  > VSLDU (vs2)    VTU borrows the VAU vs1 slot
    read 2  VAU (vd)   > VLSU (vd)
    write   VAU = VTU  > VLSU > VSLDU   VAU wins a VAU/VTU tie

A request that loses stalls for the cycle and is presented again on the
next cycle by :class:`VrfArbiter`.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass, field

VAU, VTU, VLSU, VSLDU = "VAU", "VTU", "VLSU", "VSLDU"
UNITS = (VAU, VTU, VLSU, VSLDU)
N_BANKS = 4
READ_PORTS = ("read0", "read1", "read2")
WRITE_PORT = "write"

Request = namedtuple("Request", "unit bank operand")

# (unit, operand) -> (port, priority rank; lower wins)
ROUTES = {
    (VAU, "vs2"): ("read0", 0),
    (VLSU, "vs2"): ("read0", 1),
    (VAU, "vs1"): ("read1", 0),
    (VTU, "vs1"): ("read1", 1),
    (VSLDU, "vs2"): ("read1", 2),
    (VAU, "vd"): ("read2", 0),
    (VLSU, "vd"): ("read2", 1),
    (VAU, "wr"): ("write", 0),
    (VTU, "wr"): ("write", 1),
    (VLSU, "wr"): ("write", 2),
    (VSLDU, "wr"): ("write", 3),
}


def route(req: Request) -> tuple[str, int]:
    try:
        return ROUTES[(req.unit, req.operand)]
    except KeyError:
        raise ValueError(f"{req.unit} has no {req.operand!r} path to the VRF") from None


@dataclass
class Grants:
    granted: list = field(default_factory=list)
    stalled: list = field(default_factory=list)
    # (bank, port) -> winning request
    ports: dict = field(default_factory=dict)


def vrf_arbitrate(requests) -> Grants:
    """Resolve one cycle of port requests."""
    out = Grants()
    best: dict = {}
    for req in dict.fromkeys(requests):
        if not 0 <= req.bank < N_BANKS:
            raise ValueError(f"bank {req.bank} out of range")
        port, rank = route(req)
        key = (req.bank, port)
        if key not in best or rank < best[key][0]:
            best[key] = (rank, req)
    winners = {r for _, r in best.values()}
    for req in dict.fromkeys(requests):
        (out.granted if req in winners else out.stalled).append(req)
    out.ports = {k: r for k, (_, r) in best.items()}
    return out


class VrfArbiter:
    """Cycle-stepped arbiter: stalled requests are re-presented next cycle."""

    def __init__(self):
        self.pending: list = []
        self.cycle = 0
        self.wait: dict = {}

    def step(self, new_requests=()) -> Grants:
        reqs = list(dict.fromkeys([*self.pending, *new_requests]))
        g = vrf_arbitrate(reqs)
        for r in g.granted:
            self.wait.pop(r, None)
        for r in g.stalled:
            self.wait[r] = self.wait.get(r, 0) + 1
        self.pending = g.stalled
        self.cycle += 1
        return g
