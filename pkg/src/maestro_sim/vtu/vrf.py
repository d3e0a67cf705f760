"""VRF image of one VTU tile.

The register file is 32 registers of 512 bits, viewed as 256-bit words
(two per register). With LMUL=8 a logical register Vg spans registers
g..g+7, i.e. 16 words; word ``w`` of a group lives in bank ``w % 4``.
Each word carries 16 elements of 16 bits.

Roles and word contents (FP16 elements, element 0 first):

* V0  (X): word ``3*kg + rg`` holds ``X[4*rg + i, 4*kg + j]`` at element
  ``4*i + j``, i.e. the X values for CE rows 4*rg .. 4*rg+3 and the k
  values fed to the four CE columns. X0 fills CE0,0..CE3,3, X1 fills
  CE4,0..CE7,3, X2 fills CE8,0..CE11,3, then the next k group.
* V8  (Y): word ``r`` holds row ``r`` of Y (16 columns).
* V16 (W): word ``k`` holds row ``k`` of W (16 columns).
* V24 (Z): reserved for results, zero after packing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mpfloat import FP16, FloatFormat, decode, encode

N_REGS = 32
REG_BITS = 512
WORD_BITS = 256
N_BANKS = 4
ELEM_BITS = 16
WORD_ELEMS = WORD_BITS // ELEM_BITS
GROUP_WORDS = 8 * REG_BITS // WORD_BITS


class TileTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class VrfLayout:
    lmul: int = 8
    x_reg: int = 0
    y_reg: int = 8
    w_reg: int = 16
    z_reg: int = 24
    read_ports_per_bank: int = 3
    write_ports_per_bank: int = 1

    def __post_init__(self):
        for r in (self.x_reg, self.y_reg, self.w_reg, self.z_reg):
            if r % self.lmul:
                raise ValueError(f"role register v{r} is not {self.lmul}-aligned")


DEFAULT_LAYOUT = VrfLayout()


def word_location(group_reg: int, word: int) -> tuple[int, int, int]:
    """(register, half, bank) of a word within an LMUL=8 group."""
    return group_reg + word // 2, word % 2, word % N_BANKS


def _check(x, w, y):
    m, k = x.shape
    if m > 12 or k > 16 or w.shape[0] != k or w.shape[1] > 16 or y.shape != (m, w.shape[1]):
        raise TileTooLarge(
            f"tile X{x.shape} W{w.shape} Y{y.shape} exceeds one 12x16x16 LMUL=8 tile")


def vrf_pack(x, w, y, layout: VrfLayout = DEFAULT_LAYOUT, fmt: FloatFormat = FP16) -> np.ndarray:
    """Pack a tile into a (32 registers, 32 elements) uint16 image."""
    if fmt.width != ELEM_BITS:
        raise ValueError("the VRF tile image holds 16-bit elements")
    x, w, y = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in (x, w, y))
    _check(x, w, y)
    img = np.zeros((N_REGS, REG_BITS // ELEM_BITS), dtype=np.uint16)
    xb = np.zeros((12, 16), dtype=np.uint16)
    xb[:x.shape[0], :x.shape[1]] = encode(x, fmt)
    for kg in range(4):
        for rg in range(3):
            words = xb[4 * rg:4 * rg + 4, 4 * kg:4 * kg + 4].reshape(-1)
            _put(img, layout.x_reg, 3 * kg + rg, words)
    for r in range(y.shape[0]):
        row = np.zeros(WORD_ELEMS, dtype=np.uint16)
        row[:y.shape[1]] = encode(y[r], fmt)
        _put(img, layout.y_reg, r, row)
    for kk in range(w.shape[0]):
        row = np.zeros(WORD_ELEMS, dtype=np.uint16)
        row[:w.shape[1]] = encode(w[kk], fmt)
        _put(img, layout.w_reg, kk, row)
    return img


def vrf_unpack(img: np.ndarray, m: int, n: int, k: int, layout: VrfLayout = DEFAULT_LAYOUT,
               fmt: FloatFormat = FP16):
    """Inverse of :func:`vrf_pack` for an ``m x k`` X, ``k x n`` W, ``m x n`` Y tile."""
    xb = np.zeros((12, 16), dtype=np.uint16)
    for kg in range(4):
        for rg in range(3):
            xb[4 * rg:4 * rg + 4, 4 * kg:4 * kg + 4] = _get(img, layout.x_reg, 3 * kg + rg).reshape(4, 4)
    y = np.stack([_get(img, layout.y_reg, r)[:n] for r in range(m)])
    w = np.stack([_get(img, layout.w_reg, kk)[:n] for kk in range(k)])
    return decode(xb[:m, :k], fmt), decode(w, fmt), decode(y, fmt)


def _put(img, group_reg, word, values):
    reg, half, _ = word_location(group_reg, word)
    img[reg, half * WORD_ELEMS:(half + 1) * WORD_ELEMS] = values


def _get(img, group_reg, word):
    reg, half, _ = word_location(group_reg, word)
    return img[reg, half * WORD_ELEMS:(half + 1) * WORD_ELEMS]


def hex_dump(img: np.ndarray) -> str:
    """One line per 256-bit word: ``v03.1 b3: e0 e1 ... e15`` (4 hex digits each)."""
    lines = []
    for reg in range(N_REGS):
        for half in range(2):
            word = 2 * (reg % 8) + half
            vals = img[reg, half * WORD_ELEMS:(half + 1) * WORD_ELEMS]
            lines.append(f"v{reg:02d}.{half} b{word % N_BANKS}: " + " ".join(f"{v:04x}" for v in vals))
    return "\n".join(lines) + "\n"


def parse_hex_dump(text: str) -> np.ndarray:
    img = np.zeros((N_REGS, REG_BITS // ELEM_BITS), dtype=np.uint16)
    for line in text.strip().splitlines():
        head, body = line.split(":")
        reg, half = head.split()[0][1:].split(".")
        vals = [int(t, 16) for t in body.split()]
        img[int(reg), int(half) * WORD_ELEMS:(int(half) + 1) * WORD_ELEMS] = vals
    return img
