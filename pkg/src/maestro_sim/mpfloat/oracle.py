"""Exact-then-round-once reference arithmetic on raw bit patterns.

Pure Python integers throughout: every operand is split into
``(-1)**sign * sig * 2**exp``, products are formed at double width, terms
are aligned to the smallest exponent and summed exactly, and the single
rounding happens in :func:`round_exact`. Independent of the float64
expansion datapath in :mod:`maestro_sim.mpfloat.vec`, which it checks.
"""

from __future__ import annotations

from fractions import Fraction

from .formats import FloatFormat

# term kinds
_FIN, _INF, _NAN = 0, 1, 2


def split(bits: int, fmt: FloatFormat) -> tuple[int, int, int, int]:
    """Return ``(kind, sign, sig, exp)`` for a bit pattern."""
    man_mask = (1 << fmt.man_bits) - 1
    top = (1 << fmt.exp_bits) - 1
    sign = bits >> (fmt.width - 1)
    expf = (bits >> fmt.man_bits) & top
    mant = bits & man_mask
    if expf == top:
        if fmt.ieee_specials:
            return (_INF if mant == 0 else _NAN), sign, 0, 0
        if mant == man_mask:
            return _NAN, sign, 0, 0
    if expf == 0:
        return _FIN, sign, mant, fmt.emin - fmt.man_bits
    return _FIN, sign, mant | (1 << fmt.man_bits), expf - fmt.bias - fmt.man_bits


def round_exact(sign: int, n: int, e: int, fmt: FloatFormat) -> int:
    """Bits of RNE((-1)**sign * n * 2**e) in ``fmt``; ``n`` >= 0."""
    sbit = sign << (fmt.width - 1)
    if n == 0:
        return sbit
    man = fmt.man_bits
    lead = e + n.bit_length() - 1
    q = max(lead, fmt.emin) - man
    if q <= e:
        m = n << (e - q)
    else:
        shift = q - e
        m = n >> shift
        rem = n & ((1 << shift) - 1)
        half = 1 << (shift - 1)
        if rem > half or (rem == half and m & 1):
            m += 1
        if m >> (man + 1):
            m >>= 1
            q += 1
    if m >> man == 0:
        return sbit | m  # subnormal, q == emin - man
    expf = q + man + fmt.bias
    mant = m - (1 << man)
    top = (1 << fmt.exp_bits) - 1
    if fmt.ieee_specials:
        if expf >= top:
            return sbit | (top << man)
    elif expf > top or (expf == top and mant == (1 << man) - 1):
        # saturate at the largest finite magnitude
        return sbit | (top << man) | ((1 << man) - 2)
    return sbit | (expf << man) | mant


def round_from_exact(value, fmt: FloatFormat) -> int:
    """Bits of the RNE rounding of an exact rational (``Fraction`` or int).

    Accepts ``float('inf')``/``float('nan')`` markers as well.
    """
    if isinstance(value, float):
        if value != value:
            return fmt.quiet_nan
        if value in (float("inf"), float("-inf")):
            return _special_bits(_INF, int(value < 0), fmt)
        value = Fraction(value)
    value = Fraction(value)
    sign = int(value < 0)
    num, den = abs(value.numerator), value.denominator
    if num == 0:
        return 0
    if den & (den - 1) == 0:
        return round_exact(sign, num, -(den.bit_length() - 1), fmt)
    # general rational: scale so the quotient carries more than enough bits,
    # with a sticky bit standing in for the discarded remainder
    extra = max(0, fmt.man_bits + 4 + den.bit_length() - num.bit_length())
    quo, rem = divmod(num << extra, den)
    quo = (quo << 1) | (1 if rem else 0)
    return round_exact(sign, quo, -extra - 1, fmt)


def _special_bits(kind: int, sign: int, fmt: FloatFormat) -> int:
    if kind == _NAN or not fmt.ieee_specials:
        return fmt.quiet_nan
    top = (1 << fmt.exp_bits) - 1
    return (sign << (fmt.width - 1)) | (top << fmt.man_bits)


def _mul_term(x, y):
    kx, sx, mx, ex = x
    ky, sy, my, ey = y
    s = sx ^ sy
    if kx == _NAN or ky == _NAN:
        return _NAN, 0, 0, 0
    if kx == _INF or ky == _INF:
        if (kx == _FIN and mx == 0) or (ky == _FIN and my == 0):
            return _NAN, 0, 0, 0
        return _INF, s, 0, 0
    return _FIN, s, mx * my, ex + ey


def _neg(t):
    return t[0], t[1] ^ 1, t[2], t[3]


def _sum_terms(terms, fmt: FloatFormat) -> int:
    """Exact sum of split terms, rounded once into ``fmt``."""
    if any(t[0] == _NAN for t in terms):
        return fmt.quiet_nan
    infs = {t[1] for t in terms if t[0] == _INF}
    if len(infs) == 2:
        return fmt.quiet_nan
    if infs:
        return _special_bits(_INF, infs.pop(), fmt)
    emin = min(t[3] for t in terms)
    acc = 0
    for _, s, m, e in terms:
        v = m << (e - emin)
        acc += -v if s else v
    if acc == 0:
        all_neg = all(t[1] == 1 and t[2] == 0 for t in terms)
        return (1 << (fmt.width - 1)) if all_neg else 0
    return round_exact(int(acc < 0), abs(acc), emin, fmt)


def exact_do_sdotp(a, b, c, d, e, mod: int, in_fmt: FloatFormat, acc_fmt: FloatFormat):
    """Reference DO-SDOTP on bit patterns -> ``(sum_bits, diff_bits)``."""
    p1 = _mul_term(split(a, in_fmt), split(b, in_fmt))
    p2 = _mul_term(split(c, in_fmt), split(d, in_fmt))
    if mod:
        p2 = _neg(p2)
    te = split(e, acc_fmt)
    return (_sum_terms((te, p1, p2), acc_fmt),
            _sum_terms((te, _neg(p1), _neg(p2)), acc_fmt))


def exact_fma(a, b, c, in_fmt: FloatFormat, acc_fmt: FloatFormat | None = None) -> int:
    acc_fmt = acc_fmt or in_fmt
    p = _mul_term(split(a, in_fmt), split(b, in_fmt))
    return _sum_terms((split(c, acc_fmt), p), acc_fmt)


def exact_add(a, b, fmt: FloatFormat) -> int:
    return _sum_terms((split(a, fmt), split(b, fmt)), fmt)


def exact_mul(a, b, fmt: FloatFormat) -> int:
    return _sum_terms((_mul_term(split(a, fmt), split(b, fmt)),), fmt)


def exact_cast(x: int, src: FloatFormat, dst: FloatFormat) -> int:
    kind, s, m, e = split(x, src)
    if kind != _FIN:
        return _special_bits(kind, s, dst)
    return round_exact(s, m, e, dst) if m else s << (dst.width - 1)


def to_fraction(bits: int, fmt: FloatFormat) -> Fraction:
    kind, s, m, e = split(bits, fmt)
    if kind != _FIN:
        raise ValueError("non-finite pattern")
    v = Fraction(m) * Fraction(2) ** e
    return -v if s else v
