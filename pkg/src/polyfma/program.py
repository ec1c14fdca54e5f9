"""Straight-line Horner/FMA program model.

A `HornerSkeleton` is one of three restricted shapes, each a chain (never a
DAG) so that backward interval propagation is well defined:

* ``odd``            s = a*a; Horner in s over the coefficients;
                     acc = acc*s; result = fma(acc, a, a)
* ``even_plus_one``  s = a*a; Horner in s; acc = acc*s (no final fma by a)
* ``plain``          direct Horner in a

Coefficients are listed highest degree first; the first one seeds the
accumulator and each following one is folded in with a fused multiply-add.
Plain multiplications are modelled as fma(x, y, 0) for error analysis and
inversion.

Four views of a program are provided: bit-exact binary32 evaluation with a
stage trace, exact rational evaluation against the *machine* value of s
(which makes the result linear in the coefficients), the explicit linear
form of that value, forward roundoff-error budgets over coefficient boxes,
and exact backward propagation of an acceptable output interval through the
stages whose coefficients are already fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Union

from . import f32
from .f32 import F32Interval, F32RangeError

FORMS = ("odd", "even_plus_one", "plain")


@dataclass(frozen=True)
class Fixed:
    """A coefficient pinned to a representable binary32 value."""

    value: float

    def __post_init__(self) -> None:
        f32.check_finite(self.value)


@dataclass(frozen=True)
class Boxed:
    """A coefficient known only to lie in a finite rational box [lo, hi]."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise ValueError(f"empty coefficient box [{self.lo}, {self.hi}]")


CoefficientSpec = Union[Fixed, Boxed, float]
CoefficientAssignment = Mapping[str, CoefficientSpec]


def _as_spec(v: CoefficientSpec) -> Union[Fixed, Boxed]:
    if isinstance(v, (Fixed, Boxed)):
        return v
    return Fixed(float(v))


@dataclass(frozen=True)
class Stage:
    kind: str  # 'square' | 'init' | 'fma' | 'mul_s' | 'recon'
    label: str  # trace label: 's', 'r5', ... 'r1'
    coeff: Optional[str] = None  # coefficient consumed, if any


@dataclass(frozen=True)
class HornerSkeleton:
    form: str
    coefficients: tuple[str, ...]  # highest degree first

    def __post_init__(self) -> None:
        if self.form not in FORMS:
            raise ValueError(f"unknown skeleton form {self.form!r}")
        if not self.coefficients:
            raise ValueError("a skeleton needs at least one coefficient")
        if len(set(self.coefficients)) != len(self.coefficients):
            raise ValueError("duplicate coefficient names")
        object.__setattr__(self, "coefficients", tuple(self.coefficients))

    def stages(self) -> tuple[Stage, ...]:
        names = self.coefficients
        arith: list[tuple[str, Optional[str]]] = []  # (kind, coeff)
        for c in names[1:]:
            arith.append(("fma", c))
        if self.form in ("odd", "even_plus_one"):
            arith.append(("mul_s", None))
        if self.form == "odd":
            arith.append(("recon", None))

        out: list[Stage] = []
        if self.form in ("odd", "even_plus_one"):
            out.append(Stage("square", "s"))
        if arith:
            out.append(Stage("init", f"r{len(arith) + 1}", names[0]))
            for i, (kind, c) in enumerate(arith):
                out.append(Stage(kind, f"r{len(arith) - i}", c))
        else:
            out.append(Stage("init", "r1", names[0]))
        return tuple(out)

    def multiplier_is_s(self) -> bool:
        return self.form in ("odd", "even_plus_one")


EvalTrace = tuple[tuple[str, float], ...]


def _fixed_values(skeleton: HornerSkeleton, coeffs: CoefficientAssignment) -> dict[str, float]:
    vals: dict[str, float] = {}
    for name in skeleton.coefficients:
        spec = _as_spec(coeffs[name])
        if not isinstance(spec, Fixed):
            raise ValueError(f"coefficient {name} is not fixed")
        vals[name] = spec.value
    return vals


def eval_f32(
    skeleton: HornerSkeleton, coeffs: CoefficientAssignment, a: float
) -> tuple[float, EvalTrace]:
    """Bit-exact binary32 evaluation; returns the result and the stage trace."""
    f32.check_finite(a)
    vals = _fixed_values(skeleton, coeffs)
    trace: list[tuple[str, float]] = []
    s = a
    acc = 0.0
    for st in skeleton.stages():
        if st.kind == "square":
            s = f32.f32_mul(a, a)
            trace.append((st.label, s))
        elif st.kind == "init":
            acc = vals[st.coeff]
            if st.label == "r1":  # degree-0 program: the constant is the result
                trace.append((st.label, acc))
        elif st.kind == "fma":
            acc = f32.f32_fma(acc, s, vals[st.coeff])
            trace.append((st.label, acc))
        elif st.kind == "mul_s":
            acc = f32.f32_mul(acc, s)
            trace.append((st.label, acc))
        elif st.kind == "recon":
            acc = f32.f32_fma(acc, a, a)
            trace.append((st.label, acc))
    return acc, tuple(trace)


def eval_exact(
    skeleton: HornerSkeleton,
    coeffs: Mapping[str, Union[Fraction, int, float]],
    a: float,
) -> Fraction:
    """Exact rational value of the program, using the machine value of s.

    Only the squaring step is rounded (it is an actual machine value shared
    by every later stage); everything after it is exact arithmetic, which
    makes the result linear in the coefficient values.
    """
    const, grads = linear_form(skeleton, a)
    total = const
    for name, g in grads.items():
        total += g * Fraction(coeffs[name])
    return total


def linear_form(
    skeleton: HornerSkeleton, a: float, through: Optional[str] = None
) -> tuple[Fraction, dict[str, Fraction]]:
    """Exact linear form (constant, gradients) of a stage output in the coefficients.

    ``through`` names the trace label whose output to describe; the default
    is the final program output.  Identically, for every coefficient vector
    c: exact_value = constant + sum(gradients[name] * c[name]).
    """
    f32.check_finite(a)
    aq = Fraction(a)
    sq = aq
    const = Fraction(0)
    grads: dict[str, Fraction] = {}
    stages = skeleton.stages()
    if through is not None and all(st.label != through for st in stages):
        raise ValueError(f"no stage labelled {through!r}")
    for st in stages:
        if st.kind == "square":
            sq = Fraction(f32.f32_mul(a, a))
        elif st.kind == "init":
            const, grads = Fraction(0), {st.coeff: Fraction(1)}
        elif st.kind == "fma":
            m = sq if skeleton.multiplier_is_s() else aq
            const = const * m
            grads = {k: v * m for k, v in grads.items()}
            grads[st.coeff] = Fraction(1)
        elif st.kind == "mul_s":
            const = const * sq
            grads = {k: v * sq for k, v in grads.items()}
        elif st.kind == "recon":
            const = const * aq + aq
            grads = {k: v * aq for k, v in grads.items()}
        if st.label == through:
            break
    return const, grads


def coefficient_row(
    skeleton: HornerSkeleton, a: float
) -> tuple[dict[str, Fraction], Fraction]:
    """Gradient vector and constant of the full program's exact value."""
    const, grads = linear_form(skeleton, a)
    return grads, const


@dataclass(frozen=True)
class ErrorBudget:
    """Forward roundoff bounds for a program over coefficient boxes.

    ``magnitudes[label]`` bounds |machine value| at that stage (deviation
    included); ``deviations[label]`` bounds |machine - exact| there.  The
    final deviation window is [delta_lo, delta_hi] = [-D, D]: the analysis
    is symmetric because it bounds magnitudes.
    """

    magnitudes: dict[str, Fraction]
    deviations: dict[str, Fraction]
    delta_lo: Fraction
    delta_hi: Fraction


def forward_error_bounds(
    skeleton: HornerSkeleton,
    coeffs: CoefficientAssignment,
    a: float,
    through: Optional[str] = None,
) -> ErrorBudget:
    """Propagate |machine - exact| bounds stage by stage.

    At each fused stage the new deviation is half an ulp of the largest
    possible |product + addend| plus the incoming deviation scaled by the
    multiplier; coefficients contribute no deviation of their own (fixed
    ones are exact machine numbers, boxed ones are exact unknowns).
    """
    f32.check_finite(a)

    def coeff_interval(name: str) -> tuple[Fraction, Fraction]:
        spec = _as_spec(coeffs[name])
        if isinstance(spec, Fixed):
            q = Fraction(spec.value)
            return q, q
        return spec.lo, spec.hi

    magnitudes: dict[str, Fraction] = {}
    deviations: dict[str, Fraction] = {}
    lo = hi = Fraction(0)  # exact-value interval of the accumulator
    dev = Fraction(0)
    sq = Fraction(a)
    stages = skeleton.stages()
    if through is not None and all(st.label != through for st in stages):
        raise ValueError(f"no stage labelled {through!r}")
    for st in stages:
        if st.kind == "square":
            sq = Fraction(f32.f32_mul(a, a))
            magnitudes[st.label] = abs(sq)
            deviations[st.label] = Fraction(0)
        elif st.kind == "init":
            lo, hi = coeff_interval(st.coeff)
            dev = Fraction(0)
            if st.label == "r1":
                magnitudes[st.label] = max(abs(lo), abs(hi))
                deviations[st.label] = dev
        else:
            if st.kind == "fma":
                m = sq if skeleton.multiplier_is_s() else Fraction(a)
                add_lo, add_hi = coeff_interval(st.coeff)
            elif st.kind == "mul_s":
                m = sq
                add_lo = add_hi = Fraction(0)
            else:  # recon
                m = Fraction(a)
                add_lo = add_hi = Fraction(a)
            # range of machine_acc * m + addend over boxes and deviation
            mlo, mhi = lo - dev, hi + dev
            p1, p2 = mlo * m, mhi * m
            j_lo = min(p1, p2) + add_lo
            j_hi = max(p1, p2) + add_hi
            mag_in = max(abs(j_lo), abs(j_hi))
            if mag_in > f32.MAX_FINITE_Q:
                raise F32RangeError(f"magnitude interval overflows at stage {st.label}")
            dev = f32.ulp_of_real(mag_in) / 2 + abs(m) * dev
            # exact-value interval of the new accumulator
            p1, p2 = lo * m, hi * m
            lo = min(p1, p2) + add_lo
            hi = max(p1, p2) + add_hi
            magnitudes[st.label] = max(abs(lo - dev), abs(hi + dev))
            deviations[st.label] = dev
        if st.label == through:
            break
    del aq
    return ErrorBudget(magnitudes, deviations, -dev, dev)


def backward_chain(
    skeleton: HornerSkeleton,
    coeffs: CoefficientAssignment,
    a: float,
    acceptable: F32Interval,
) -> Optional[list[tuple[str, F32Interval]]]:
    """Invert the output interval through every stage whose coefficient is fixed.

    Walks from the program output toward the input, stopping before the
    first stage that consumes an unfixed coefficient (or at the seeding
    assignment).  Returns the derived acceptable intervals, one per stage
    output passed, e.g. [("r2", ...), ("r3", ...)]; None as soon as some
    inversion is empty.  An empty list means no stage could be inverted:
    ``acceptable`` itself constrains the program output.
    """
    f32.check_finite(a)
    stages = skeleton.stages()
    target = acceptable
    derived: list[tuple[str, F32Interval]] = []
    s = f32.f32_mul(a, a) if skeleton.multiplier_is_s() else a

    for i in range(len(stages) - 1, 0, -1):
        st = stages[i]
        if st.kind == "recon":
            nxt = f32.invert_fma_monotone(1, (a, a), target)
        elif st.kind == "mul_s":
            nxt = f32.invert_fma_monotone(1, (s, 0.0), target)
        elif st.kind == "fma":
            spec = _as_spec(coeffs[st.coeff])
            if not isinstance(spec, Fixed):
                break
            m = s if skeleton.multiplier_is_s() else a
            nxt = f32.invert_fma_monotone(1, (m, spec.value), target)
        else:
            break
        if nxt is None:
            return None
        target = nxt
        derived.append((stages[i - 1].label, target))
    return derived


def backward_propagate(
    skeleton: HornerSkeleton,
    coeffs: CoefficientAssignment,
    a: float,
    acceptable: F32Interval,
) -> Optional[F32Interval]:
    """Acceptable interval for the accumulator at the first unfixed stage.

    Exactly the set of binary32 values for that accumulator from which the
    remaining, fully determined stages land inside ``acceptable``; None if
    no value does.  With nothing to invert, returns ``acceptable``.
    """
    chain = backward_chain(skeleton, coeffs, a, acceptable)
    if chain is None:
        return None
    return chain[-1][1] if chain else acceptable
