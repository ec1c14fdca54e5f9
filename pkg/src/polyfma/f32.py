"""Bit-exact IEEE 754 binary32 arithmetic over exact rationals.

A binary32 value is carried as a Python ``float`` (binary64) that is
guaranteed to be exactly representable in binary32; every constructor and
operation in this module preserves that invariant.  Rationals are carried
as ``fractions.Fraction`` and all conversions between the two are exact in
both directions: no operation here ever rounds silently.

Rounding is round-to-nearest, ties to even, everywhere.  Subnormals are
fully supported.  Overflow to infinity and non-finite inputs are treated
as errors (`F32RangeError`): the programs this package reasons about never
legitimately leave the finite range.

The module also provides the total-order `ordinal` bijection used for
binary search and exhaustive enumeration, C99-style hexfloat I/O, closed
intervals of binary32 values, and exact inversion of the fused
multiply-add along one operand (`invert_fma_monotone`).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

MANT_BITS = 23
EMIN = -126  # smallest normal exponent
EMAX = 127

#: Largest finite binary32 value, as a float and as an exact rational.
MAX_FINITE = float.fromhex("0x1.fffffep+127")
MAX_FINITE_Q = Fraction((2**24 - 1) * 2**104)

#: Smallest positive (subnormal) binary32 value.
MIN_SUBNORMAL = float.fromhex("0x1p-149")
MIN_SUBNORMAL_Q = Fraction(1, 2**149)


class F32RangeError(ArithmeticError):
    """An operation left the finite binary32 range or saw a non-finite input."""


# ---------------------------------------------------------------------------
# Bit-pattern plumbing


def bits_of(x: float) -> int:
    """Return the 32-bit pattern of ``x``, which must be binary32-representable."""
    try:
        packed = struct.pack("<f", x)
    except OverflowError:
        raise F32RangeError(f"{x!r} out of binary32 range") from None
    (back,) = struct.unpack("<f", packed)
    if back != x and not (math.isnan(back) and math.isnan(x)):
        raise ValueError(f"{x!r} is not exactly representable in binary32")
    return struct.unpack("<I", packed)[0]


def from_bits(b: int) -> float:
    """Return the float whose binary32 bit pattern is ``b``."""
    if not 0 <= b <= 0xFFFFFFFF:
        raise ValueError(f"bit pattern out of range: {b:#x}")
    return struct.unpack("<f", struct.pack("<I", b))[0]


def is_f32(x: float) -> bool:
    """True if ``x`` is a finite, exactly binary32-representable float."""
    if not math.isfinite(x):
        return False
    try:
        packed = struct.pack("<f", x)
    except OverflowError:
        return False
    return struct.unpack("<f", packed)[0] == x


def check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise F32RangeError(f"non-finite operand {v!r}")
        if not is_f32(v):
            raise ValueError(f"{v!r} is not a binary32 value")


# ---------------------------------------------------------------------------
# Ordinals: a monotone bijection between finite binary32 values and integers.
#
# Convention: ordinal(+0.0) = 0 and ordinal(-0.0) = -1, so the two zeros get
# distinct adjacent ordinals and the map is strictly increasing in the
# sign-magnitude total order.

ORD_MAX = 0x7F7FFFFF  # ordinal of +MAX_FINITE
ORD_MIN = -0x7F800000  # ordinal of -MAX_FINITE


def ordinal(x: float) -> int:
    b = bits_of(x)
    mag = b & 0x7FFFFFFF
    if mag > 0x7F7FFFFF:
        raise F32RangeError(f"no ordinal for non-finite {x!r}")
    return mag if b < 0x80000000 else -1 - mag


def from_ordinal(n: int) -> float:
    if not ORD_MIN <= n <= ORD_MAX:
        raise ValueError(f"ordinal out of finite range: {n}")
    return from_bits(n) if n >= 0 else from_bits(0x80000000 | (-1 - n))


def next_up(x: float) -> float:
    n = ordinal(x)
    if n >= ORD_MAX:
        raise F32RangeError("next_up past the largest finite value")
    return from_ordinal(n + 1)


def next_down(x: float) -> float:
    n = ordinal(x)
    if n <= ORD_MIN:
        raise F32RangeError("next_down past the most negative finite value")
    return from_ordinal(n - 1)


# ---------------------------------------------------------------------------
# Exact conversions between binary32 and rationals.


def rational_of_f32(x: float) -> Fraction:
    """Exact rational value of a finite binary32 float."""
    check_finite(x)
    return Fraction(x)


def round_to_f32(q: Fraction) -> float:
    """Nearest binary32 value to ``q``, ties to even.  Raises on overflow."""
    r = _round_to_f32_core(q)
    if r is None:
        raise F32RangeError(f"{q} rounds outside the finite binary32 range")
    return r


def round_to_f32_extended(q: Fraction) -> float:
    """Like `round_to_f32` but returns ±inf instead of raising on overflow.

    Used by monotone searches that probe past the representable range.
    """
    r = _round_to_f32_core(q)
    if r is None:
        return math.inf if q > 0 else -math.inf
    return r


def _round_to_f32_core(q: Fraction) -> Optional[float]:
    num, den = q.numerator, q.denominator
    if num == 0:
        return 0.0
    sign = num < 0
    if sign:
        num = -num

    # e = floor(log2(num/den)); bit_length gives it up to an off-by-one.
    e = num.bit_length() - den.bit_length()
    if (num >> e if e >= 0 else num << -e) < den:
        e -= 1

    shift = 149 if e < EMIN else MANT_BITS - e
    if shift >= 0:
        n2, d2 = num << shift, den
    else:
        n2, d2 = num, den << -shift
    ip, rem = divmod(n2, d2)
    rem2 = rem * 2
    if rem2 > d2 or (rem2 == d2 and ip & 1):
        ip += 1

    val = math.ldexp(float(ip), -shift)  # exact: ip <= 2**24
    if val > MAX_FINITE:
        return None
    return -val if sign else val


def floor_f32(q: Fraction) -> float:
    """Largest binary32 value <= q."""
    r = round_to_f32_extended(q)
    if r == math.inf:
        return MAX_FINITE
    if r == -math.inf:
        raise F32RangeError(f"no binary32 value <= {q}")
    return next_down(r) if Fraction(r) > q else r


def ceil_f32(q: Fraction) -> float:
    """Smallest binary32 value >= q."""
    r = round_to_f32_extended(q)
    if r == -math.inf:
        return -MAX_FINITE
    if r == math.inf:
        raise F32RangeError(f"no binary32 value >= {q}")
    return next_up(r) if Fraction(r) < q else r


def ulp_of_real(x: Fraction) -> Fraction:
    """Gap between the largest binary32 value <= |x| and the next one above.

    Applied to the magnitude so that ulp(-x) == ulp(x); this is the spacing
    convention used throughout for error measurement.  Requires |x| <= the
    largest finite value.
    """
    m = abs(Fraction(x))
    if m > MAX_FINITE_Q:
        raise F32RangeError(f"{x} beyond the finite range")
    if m == MAX_FINITE_Q:
        # The bracket above the largest finite value is the last finite gap.
        return Fraction(2) ** (EMAX - MANT_BITS)
    f = floor_f32(m)
    return Fraction(next_up(f)) - Fraction(f)


# ---------------------------------------------------------------------------
# Correctly-rounded binary32 multiplication and fused multiply-add.
#
# The product of two binary32 values is exact in binary64 (48 significand
# bits), so one float cast performs the single correct rounding.  The FMA is
# emulated with exact integer arithmetic: the product and addend are aligned
# on a common power of two, summed exactly, and rounded once.


def f32_mul(a: float, b: float) -> float:
    check_finite(a, b)
    p = a * b  # exact in binary64
    try:
        packed = struct.pack("<f", p)
    except OverflowError:
        raise F32RangeError(f"product {a!r}*{b!r} overflows binary32") from None
    r = struct.unpack("<f", packed)[0]
    if math.isinf(r):
        raise F32RangeError(f"product {a!r}*{b!r} overflows binary32")
    return r


def _decompose(x: float) -> tuple[int, int]:
    # x = m * 2**e with integer m; exact for any finite float.
    m, e = math.frexp(x)
    return int(m * (1 << 53)), e - 53


def f32_fma(a: float, b: float, c: float) -> float:
    """The binary32 value nearest a*b + c (one rounding, ties to even)."""
    check_finite(a, b, c)
    r = _fma_core(a, b, c)
    if r is None:
        raise F32RangeError(f"fma({a!r}, {b!r}, {c!r}) overflows binary32")
    return r


def _fma_extended(a: float, b: float, c: float) -> float:
    r = _fma_core(a, b, c)
    if r is None:
        s = Fraction(a) * Fraction(b) + Fraction(c)
        return math.inf if s > 0 else -math.inf
    return r


def _fma_core(a: float, b: float, c: float) -> Optional[float]:
    if a == 0.0 or b == 0.0:
        if c != 0.0:
            return c
        # 0 + 0: equal signs keep the sign, unequal signs give +0 under RNE.
        product_negative = (math.copysign(1.0, a) * math.copysign(1.0, b)) < 0
        addend_negative = math.copysign(1.0, c) < 0
        return -0.0 if (product_negative and addend_negative) else 0.0
    ma, ea = _decompose(a)
    mb, eb = _decompose(b)
    pm, pe = ma * mb, ea + eb
    if c == 0.0:
        sig, exp = pm, pe
    else:
        mc, ec = _decompose(c)
        exp = min(pe, ec)
        sig = (pm << (pe - exp)) + (mc << (ec - exp))
    if sig == 0:
        return 0.0  # exact cancellation of nonzero terms is +0 under RNE
    q = Fraction(sig) * (Fraction(2) ** exp if exp >= 0 else Fraction(1, 2 ** -exp))
    return _round_to_f32_core(q)


# ---------------------------------------------------------------------------
# Hexfloat I/O (C99 hexadecimal floating-point constants), bit-exact.


def hexfloat(x: float, suffix: bool = False) -> str:
    """Format a binary32 value as a C99 hexfloat, e.g. ``-0x1.5554d8p-2``.

    Trailing zero hex digits of the significand are trimmed; subnormals are
    written with a ``0x0.`` prefix and exponent -126.  Round-trips exactly
    through `parse_hexfloat`.
    """
    b = bits_of(x)
    if not math.isfinite(x):
        raise F32RangeError(f"cannot format non-finite {x!r}")
    sign = "-" if b >> 31 else ""
    e = (b >> 23) & 0xFF
    m = b & 0x7FFFFF
    tail = "f" if suffix else ""
    if e == 0 and m == 0:
        return f"{sign}0x0p+0{tail}"
    digits = f"{m << 1:06x}".rstrip("0")
    if e == 0:
        frac = f".{digits}" if digits else ""
        return f"{sign}0x0{frac}p-126{tail}"
    frac = f".{digits}" if digits else ""
    return f"{sign}0x1{frac}p{e - 127:+d}{tail}"


def parse_hexfloat(text: str) -> float:
    """Parse a C99 hexfloat (optional ``f`` suffix) into an exact binary32 value.

    Rejects literals that are not exactly representable in binary32.
    """
    s = text.strip()
    if s and s[-1] in "fF":
        s = s[:-1]
    try:
        v = float.fromhex(s)
    except ValueError:
        raise ValueError(f"not a hexfloat: {text!r}") from None
    if not is_f32(v):
        raise ValueError(f"{text!r} is not exactly representable in binary32")
    return v


# ---------------------------------------------------------------------------
# Closed intervals of binary32 values.


@dataclass(frozen=True)
class F32Interval:
    """Closed interval [lo, hi] of finite binary32 values (endpoints included).

    Membership compares by value, so -0.0 and +0.0 are interchangeable.
    """

    lo: float
    hi: float

    def __post_init__(self) -> None:
        check_finite(self.lo, self.hi)
        if not self.lo <= self.hi:
            raise ValueError(f"interval endpoints out of order: {self.lo!r} > {self.hi!r}")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def intersect(self, other: "F32Interval") -> Optional["F32Interval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return F32Interval(lo, hi) if lo <= hi else None

    def width_ordinals(self) -> int:
        return ordinal(self.hi) - ordinal(self.lo)

    def __str__(self) -> str:
        return f"[{hexfloat(self.lo)}, {hexfloat(self.hi)}]"


FULL_FINITE = F32Interval(-MAX_FINITE, MAX_FINITE)


# ---------------------------------------------------------------------------
# Monotone searches.


def lowest_ordinal_where(pred: Callable[[int], bool], lo: int, hi: int) -> Optional[int]:
    """Smallest ordinal n in [lo, hi] with pred(n), assuming pred is monotone
    (False then True).  None if pred never holds."""
    if not pred(hi):
        return None
    if pred(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def highest_ordinal_where(pred: Callable[[int], bool], lo: int, hi: int) -> Optional[int]:
    """Largest ordinal n in [lo, hi] with pred(n), assuming pred is monotone
    (True then False).  None if pred never holds."""
    if not pred(lo):
        return None
    if pred(hi):
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def invert_fma_monotone(
    varying: int,
    fixed: tuple[float, float],
    target: F32Interval,
) -> Optional[F32Interval]:
    """Exact preimage of ``target`` under the FMA along one operand.

    ``varying`` selects the free operand position: 1 for fma(v, b, c) with
    fixed=(b, c), 2 for fma(a, v, c) with fixed=(a, c), 3 for fma(a, b, v)
    with fixed=(a, b).  Returns the (possibly empty -> None) interval of all
    finite binary32 values v whose FMA result lands inside ``target``; the
    set is an interval because the FMA is monotone in each operand.

    When the co-multiplicand of a varying multiplicand is zero the map is
    constant: the result is the full finite range if that constant lies in
    ``target``, else None.
    """
    if varying not in (1, 2, 3):
        raise ValueError("varying operand index must be 1, 2, or 3")
    u, w = fixed
    check_finite(u, w)

    if varying == 3:
        g = lambda v: _fma_extended(u, w, v)
        increasing = True
    else:
        # fma(v, m, c) with multiplier m and addend c.
        m, c = u, w
        if m == 0.0:
            const = _fma_extended(0.0, 0.0, c)
            return FULL_FINITE if target.contains(const) else None
        g = lambda v: _fma_extended(v, m, c)
        increasing = m > 0.0

    def gv(n: int) -> float:
        return g(from_ordinal(n))

    lo_t, hi_t = target.lo, target.hi
    if increasing:
        left = lowest_ordinal_where(lambda n: gv(n) >= lo_t, ORD_MIN, ORD_MAX)
        right = highest_ordinal_where(lambda n: gv(n) <= hi_t, ORD_MIN, ORD_MAX)
    else:
        left = lowest_ordinal_where(lambda n: gv(n) <= hi_t, ORD_MIN, ORD_MAX)
        right = highest_ordinal_where(lambda n: gv(n) >= lo_t, ORD_MIN, ORD_MAX)
    if left is None or right is None or left > right:
        return None
    # Monotonicity puts every point between the edges inside the bracket,
    # but the edges themselves must each satisfy *both* bounds.
    for edge in (left, right):
        r = gv(edge)
        if not (lo_t <= r <= hi_t):
            return None
    return F32Interval(from_ordinal(left), from_ordinal(right))
