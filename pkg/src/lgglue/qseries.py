"""Exact truncated Laurent series in q_1, ..., q_n and a unit variable z.

Coefficients are arbitrary-precision rationals.  The exponent of each q_k
lives on the lattice (1/D)Z and is bounded below by a floor F; the z
exponent is an integer.  A series is a finite map from exponent keys to
nonzero coefficients and represents its value exactly modulo terms of
weight > N, where

    weight(q_1^{e_1} ... q_n^{e_n} z^j) = e_1 + ... + e_n.

Truncation is by weight, not by powers of the product q = q_1 ... q_n, so
mixed monomials such as q_2 z^2 (weight one) are handled uniformly; q
itself has weight n.

The operations are tailored to three jobs:

* products of infinitely many factors (1 + monomial) whose weights grow
  without bound, cut off exactly at the truncation order;
* lattice sums sum_k q^{m(k+a)^2/2} y^{k+a}, the formal expansions of
  theta functions with characteristic (a, 0) in the variable z;
* recognising when two series agree up to a single monomial unit, which
  is how automorphy factors and normalisation discrepancies are measured.

Everything here is exact rational arithmetic; no floating point enters
this module.  All values are immutable once constructed and all functions
are pure, so sharing across threads is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence, Union

from .errors import (
    FloorViolation,
    LatticeViolation,
    NonTerminating,
    NotInvertible,
    NotProportional,
    NotQuasiPeriodic,
    RingMismatch,
)

RatLike = Union[int, Fraction]

# Internal representation: a term key is a flat tuple of ints, the scaled
# q-exponents (numerators on the 1/D grid) followed by the z exponent.
ScaledKey = tuple


@dataclass(frozen=True, order=True)
class ExponentKey:
    """Exponent vector of a monomial: rational q-exponents plus a z-exponent.

    The dataclass ordering (lexicographic on qexp, then zexp) is the
    canonical term order used for serialisation and first-discrepancy
    reporting.
    """

    qexp: tuple[Fraction, ...]
    zexp: int

    @property
    def weight(self) -> Fraction:
        return sum(self.qexp, Fraction(0))


@dataclass(frozen=True)
class Monomial:
    """A single exact term coeff * q^qexp * z^zexp with coeff != 0."""

    coeff: Fraction
    key: ExponentKey

    def __post_init__(self):
        if self.coeff == 0:
            raise ValueError("monomial coefficient must be nonzero")

    @property
    def qexp(self) -> tuple[Fraction, ...]:
        return self.key.qexp

    @property
    def zexp(self) -> int:
        return self.key.zexp

    @property
    def weight(self) -> Fraction:
        return self.key.weight

    def is_one(self) -> bool:
        return self.coeff == 1 and self.zexp == 0 and not any(self.key.qexp)

    def inverse(self) -> "Monomial":
        return Monomial(
            Fraction(1) / self.coeff,
            ExponentKey(tuple(-e for e in self.qexp), -self.zexp),
        )

    def __mul__(self, other: "Monomial") -> "Monomial":
        if not isinstance(other, Monomial):
            return NotImplemented
        return Monomial(
            self.coeff * other.coeff,
            ExponentKey(
                tuple(a + b for a, b in zip(self.qexp, other.qexp)),
                self.zexp + other.zexp,
            ),
        )

    def __pow__(self, k: int) -> "Monomial":
        return Monomial(
            self.coeff**k,
            ExponentKey(tuple(e * k for e in self.qexp), self.zexp * k),
        )

    def __str__(self) -> str:
        return format_monomial(self)


def monomial(coeff: RatLike, qexp: Sequence[RatLike], zexp: int = 0) -> Monomial:
    """Build a monomial from loose rational data."""
    return Monomial(
        Fraction(coeff), ExponentKey(tuple(Fraction(e) for e in qexp), int(zexp))
    )


def format_exponent(e: Fraction) -> str:
    return str(e.numerator) if e.denominator == 1 else f"{e.numerator}/{e.denominator}"


def format_monomial(m: Monomial) -> str:
    """Render a monomial as e.g. ``-3/4 q1^-1/4 q2^1/4 z^2`` (``1`` if trivial)."""
    parts = [
        f"q{i + 1}^{format_exponent(e)}" for i, e in enumerate(m.qexp) if e != 0
    ]
    if m.zexp:
        parts.append(f"z^{m.zexp}")
    if not parts:
        return str(m.coeff)
    if m.coeff == 1:
        return " ".join(parts)
    return str(m.coeff) + " " + " ".join(parts)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of an exact comparison.

    ``passed`` is true exactly when ``first_discrepancy`` is absent.  For
    series comparisons the discrepancy is ``(key, lhs_coeff, rhs_coeff)``
    at the canonically first key where the two sides differ.
    """

    passed: bool
    first_discrepancy: Optional[tuple] = None
    detail: str = ""

    def __post_init__(self):
        if self.passed != (self.first_discrepancy is None):
            raise ValueError("passed must mirror the absence of a discrepancy")


@dataclass(frozen=True)
class SeriesRing:
    """Meta data of a truncated series ring: (n, D, F) plus the order N."""

    nvars: int = 2
    denom: int = 4
    floor: int = -8
    order: int = 16

    def __post_init__(self):
        if self.nvars < 1 or self.denom < 1:
            raise ValueError("need at least one variable and a positive lattice denominator")

    # -- scaled-key plumbing -------------------------------------------------

    @property
    def _cap(self) -> int:
        return self.order * self.denom

    @property
    def _floor_scaled(self) -> int:
        return self.floor * self.denom

    def _scale_exponent(self, e: Fraction) -> int:
        scaled = e * self.denom
        if scaled.denominator != 1:
            raise LatticeViolation(
                f"exponent {e} is not on the 1/{self.denom} lattice"
            )
        return scaled.numerator

    def _scale_key(self, key: ExponentKey) -> ScaledKey:
        if len(key.qexp) != self.nvars:
            raise RingMismatch(
                f"key has {len(key.qexp)} q-exponents, ring has {self.nvars}"
            )
        return tuple(self._scale_exponent(e) for e in key.qexp) + (key.zexp,)

    def _unscale_key(self, skey: ScaledKey) -> ExponentKey:
        return ExponentKey(
            tuple(Fraction(v, self.denom) for v in skey[:-1]), skey[-1]
        )

    def _admit(self, skey: ScaledKey) -> bool:
        """True if the key survives truncation; raise if it breaks the floor."""
        fl = self._floor_scaled
        for v in skey[:-1]:
            if v < fl:
                raise FloorViolation(
                    f"q-exponent {Fraction(v, self.denom)} below floor {self.floor}"
                )
        return sum(skey[:-1]) <= self._cap

    # -- constructors ---------------------------------------------------------

    def zero(self) -> "TruncatedSeries":
        return TruncatedSeries(self, {})

    def one(self) -> "TruncatedSeries":
        return self.constant(1)

    def constant(self, c: RatLike) -> "TruncatedSeries":
        c = Fraction(c)
        if c == 0:
            return self.zero()
        return TruncatedSeries(self, {(0,) * self.nvars + (0,): c})

    def monomial(self, coeff: RatLike, qexp: Sequence[RatLike], zexp: int = 0) -> Monomial:
        m = monomial(coeff, qexp, zexp)
        self._scale_key(m.key)  # lattice validation
        return m

    def q(self, k: int) -> Monomial:
        """The variable q_k, 1-indexed."""
        if not 1 <= k <= self.nvars:
            raise RingMismatch(f"q_{k} does not exist in a ring with n={self.nvars}")
        return monomial(1, [1 if i == k - 1 else 0 for i in range(self.nvars)], 0)

    def q_all(self, power: RatLike = 1) -> Monomial:
        """The product q = q_1 ... q_n raised to ``power``."""
        return monomial(1, [Fraction(power)] * self.nvars, 0)

    def z(self, power: int = 1) -> Monomial:
        return monomial(1, [0] * self.nvars, power)

    def from_monomials(self, monos: Iterable[Monomial]) -> "TruncatedSeries":
        acc: dict = {}
        for m in monos:
            skey = self._scale_key(m.key)
            if not self._admit(skey):
                continue
            c = acc.get(skey, _ZERO) + m.coeff
            if c:
                acc[skey] = c
            else:
                acc.pop(skey, None)
        return TruncatedSeries(self, acc)


_ZERO = Fraction(0)


class TruncatedSeries:
    """A finite, canonical term map over a :class:`SeriesRing`.

    Two series are equal exactly when their rings and term maps agree.
    Instances are immutable; arithmetic returns new objects.
    """

    __slots__ = ("ring", "_terms")

    def __init__(self, ring: SeriesRing, terms: dict):
        self.ring = ring
        self._terms = terms

    # -- views ---------------------------------------------------------------

    def items(self) -> Iterator[tuple[ExponentKey, Fraction]]:
        """Terms in canonical (lexicographic) order."""
        for skey in sorted(self._terms):
            yield self.ring._unscale_key(skey), self._terms[skey]

    def term_map(self) -> dict[ExponentKey, Fraction]:
        return {self.ring._unscale_key(k): c for k, c in self._terms.items()}

    def coeff(self, key: ExponentKey) -> Fraction:
        return self._terms.get(self.ring._scale_key(key), _ZERO)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def min_weight(self) -> Optional[Fraction]:
        if not self._terms:
            return None
        return Fraction(min(sum(k[:-1]) for k in self._terms), self.ring.denom)

    def z_span(self) -> tuple[int, int]:
        """Smallest and largest z-exponent of the stored terms (0, 0 if empty)."""
        if not self._terms:
            return (0, 0)
        zs = [k[-1] for k in self._terms]
        return (min(zs), max(zs))

    def leading(self) -> Monomial:
        """The canonically first stored term."""
        if not self._terms:
            raise NotInvertible("zero series has no leading term")
        skey = min(self._terms)
        return Monomial(self._terms[skey], self.ring._unscale_key(skey))

    # -- arithmetic ------------------------------------------------------------

    def _check_ring(self, other: "TruncatedSeries"):
        if self.ring != other.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.ring == other.ring and self._terms == other._terms

    __hash__ = None  # type: ignore[assignment]

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries(self.ring, {k: -c for k, c in self._terms.items()})

    def __add__(self, other) -> "TruncatedSeries":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        self._check_ring(other)
        acc = dict(self._terms)
        for k, c in other._terms.items():
            s = acc.get(k, _ZERO) + c
            if s:
                acc[k] = s
            else:
                acc.pop(k, None)
        return TruncatedSeries(self.ring, acc)

    __radd__ = __add__

    def __sub__(self, other) -> "TruncatedSeries":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "TruncatedSeries":
        return (-self) + other

    def __mul__(self, other) -> "TruncatedSeries":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        self._check_ring(other)
        terms = _mul_scaled(self.ring, self._terms, other._terms, self.ring._cap)
        return TruncatedSeries(self.ring, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "TruncatedSeries":
        if k < 0:
            raise ValueError("negative powers via series_invert_unit")
        out = self.ring.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def _coerce(self, other):
        if isinstance(other, TruncatedSeries):
            return other
        if isinstance(other, Monomial):
            return self.ring.from_monomials([other])
        if isinstance(other, (int, Fraction)):
            return self.ring.constant(other)
        return NotImplemented

    def truncate_to(self, order: int) -> "TruncatedSeries":
        """Forget terms of weight > order; the result lives at the new order."""
        new_ring = replace(self.ring, order=order)
        cap = new_ring._cap
        return TruncatedSeries(
            new_ring, {k: c for k, c in self._terms.items() if sum(k[:-1]) <= cap}
        )

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        bits = [format_monomial(Monomial(c, k)) for k, c in self.items()]
        return " + ".join(bits[:14]) + (" + ..." if len(bits) > 14 else "")

    __repr__ = __str__


def _mul_scaled(ring: SeriesRing, a: dict, b: dict, cap: int) -> dict:
    """Exact product of two scaled term maps, truncated at scaled weight cap."""
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    fl = ring._floor_scaled
    n = ring.nvars
    b_min = min(sum(k[:-1]) for k in b)
    acc: dict = {}
    for ka, ca in a.items():
        wa = sum(ka[:-1])
        if wa + b_min > cap:
            continue
        for kb, cb in b.items():
            key = tuple(ka[i] + kb[i] for i in range(n)) + (ka[-1] + kb[-1],)
            w = wa + sum(kb[:-1])
            if w > cap:
                continue
            for v in key[:-1]:
                if v < fl:
                    raise FloorViolation(
                        f"q-exponent {Fraction(v, ring.denom)} below floor {ring.floor}"
                    )
            c = acc.get(key, _ZERO) + ca * cb
            if c:
                acc[key] = c
            else:
                acc.pop(key, None)
    return acc


# ---------------------------------------------------------------------------
# spec-level operations
# ---------------------------------------------------------------------------


def series_combine(f: TruncatedSeries, g: TruncatedSeries, op: str) -> TruncatedSeries:
    """Add or multiply two series sharing ring meta and order."""
    if op == "add":
        return f + g
    if op == "mul":
        return f * g
    raise ValueError(f"unknown op {op!r}")


def series_invert_unit(f: TruncatedSeries) -> TruncatedSeries:
    """Invert a series whose lowest-weight part is a single monomial.

    Writing f = u (1 - r) with u the lowest-weight monomial and r of
    strictly positive weight, the inverse is u^{-1} sum_k r^k.  The
    geometric sum is accumulated at an extended internal order so that the
    returned series is the exact truncation of the true inverse.
    """
    ring = f.ring
    if f.is_zero():
        raise NotInvertible("zero series")
    wmin_scaled = min(sum(k[:-1]) for k in f._terms)
    lows = [k for k in f._terms if sum(k[:-1]) == wmin_scaled]
    if len(lows) != 1:
        raise NotInvertible(
            f"lowest-weight part has {len(lows)} monomials, need exactly one"
        )
    ukey = lows[0]
    ucoeff = f._terms[ukey]
    n = ring.nvars
    uinv_key = tuple(-v for v in ukey[:-1]) + (-ukey[-1],)
    fl = ring._floor_scaled
    for v in uinv_key[:-1]:
        if v < fl:
            raise FloorViolation("inverse of the unit part breaks the floor")

    # r = 1 - f/u, every term of strictly positive weight
    r: dict = {}
    for k, c in f._terms.items():
        if k == ukey:
            continue
        key = tuple(k[i] - ukey[i] for i in range(n)) + (k[-1] - ukey[-1],)
        r[key] = -c / ucoeff
    cap_ext = ring._cap + max(0, wmin_scaled)
    one_key = (0,) * n + (0,)
    acc = {one_key: Fraction(1)}
    power = dict(r)
    while power:
        for k, c in power.items():
            s = acc.get(k, _ZERO) + c
            if s:
                acc[k] = s
            else:
                acc.pop(k, None)
        power = _mul_scaled(ring, power, r, cap_ext)

    out: dict = {}
    cap = ring._cap
    inv_c = Fraction(1) / ucoeff
    for k, c in acc.items():
        key = tuple(k[i] + uinv_key[i] for i in range(n)) + (k[-1] + uinv_key[-1],)
        if sum(key[:-1]) > cap:
            continue
        for v in key[:-1]:
            if v < fl:
                raise FloorViolation("inverse breaks the floor")
        out[key] = c * inv_c
    return TruncatedSeries(ring, out)


def substitute_monomial(f: TruncatedSeries, m: Monomial) -> TruncatedSeries:
    """Apply the ring map z -> m (a monomial, possibly involving z and the q_k).

    This is a ring homomorphism on exact data.  When m shifts weights the
    reliable order of the image drops for terms of signed z-exponent; the
    callers that care (automorphy extraction) account for this.
    """
    ring = f.ring
    mq = ring._scale_key(m.key)[:-1]
    mz = m.zexp
    fl = ring._floor_scaled
    cap = ring._cap
    n = ring.nvars
    out: dict = {}
    for k, c in f._terms.items():
        j = k[-1]
        key = tuple(k[i] + j * mq[i] for i in range(n)) + (j * mz,)
        if sum(key[:-1]) > cap:
            continue
        for v in key[:-1]:
            if v < fl:
                raise FloorViolation(
                    f"substitution drives a q-exponent below floor {ring.floor}"
                )
        coeff = c * m.coeff**j
        s = out.get(key, _ZERO) + coeff
        if s:
            out[key] = s
        else:
            out.pop(key, None)
    return TruncatedSeries(ring, out)


def truncated_product(ring: SeriesRing, factors: Iterable[Monomial]) -> TruncatedSeries:
    """Product of a stream of factors (1 + m_i), exact modulo weight > N.

    The stream's monomial weights must be eventually nondecreasing and
    unbounded; consumption stops at the first factor that cannot touch the
    truncated result any more (its weight exceeds N minus the lowest
    accumulated weight).
    """
    acc = ring.one()
    min_acc = 0  # scaled minimal weight of acc
    cap = ring._cap
    for count, m in enumerate(factors):
        if count >= 10**6:
            raise NonTerminating("consumed 1e6 factors without exceeding the weight bound")
        skey = ring._scale_key(m.key)
        w = sum(skey[:-1])
        if w > cap - min(0, min_acc):
            break
        acc = acc * (ring.one() + ring.from_monomials([m]))
        if not acc.is_zero():
            min_acc = min(sum(k[:-1]) for k in acc._terms)
    return acc


def _theta_like(ring: SeriesRing, a: Fraction, m: int, y: Monomial) -> TruncatedSeries:
    """The lattice sum sum_{k in Z} q^{m(k+a)^2/2} y^{k+a}, truncated at N.

    q is the full product q_1 ... q_n.  Requires y.coeff = 1 unless a is an
    integer, and an integral z-exponent y.zexp * a, so that every term is a
    genuine monomial of the ring.
    """
    a = Fraction(a)
    if m < 1:
        raise ValueError("modulus multiplier m must be a positive integer")
    if y.coeff != 1 and a.denominator != 1:
        raise LatticeViolation("fractional power of a non-unit coefficient")
    if (y.zexp * a).denominator != 1:
        raise LatticeViolation("z-exponent would leave the integer lattice")

    n = ring.nvars
    wy = float(y.weight)
    cap = ring.order
    # n*m/2 * x^2 + wy * x <= N  bounds the contributing x = k + a
    disc = math.sqrt(max(wy * wy + 2.0 * n * m * max(cap, 1), 0.0))
    span = (abs(wy) + disc) / (n * m)
    k_lo = math.floor(-span - float(a)) - 2
    k_hi = math.ceil(span - float(a)) + 2

    monos = []
    for k in range(k_lo, k_hi + 1):
        x = k + a
        qpow = Fraction(m) * x * x / 2
        qexp = tuple(qpow + e * x for e in y.qexp)
        coeff = Fraction(y.coeff) ** int(x) if x.denominator == 1 else Fraction(1)
        key = ExponentKey(qexp, int(Fraction(y.zexp) * x))
        if sum(qexp) <= cap:
            monos.append(Monomial(coeff, key))
    return ring.from_monomials(monos)


def theta_series(
    ring: SeriesRing,
    a: RatLike,
    alpha: int,
    shift: Union[Monomial, ExponentKey],
    m: int,
) -> TruncatedSeries:
    """Formal expansion of a theta function with characteristic (a, 0).

    Computes sum_{k in Z} q^{m(k+a)^2/2} (z^alpha * shift)^{k+a}, the series
    of theta_{a,0}(alpha*zeta + sigma, m*tau) under z = e^{2 pi i zeta} and
    e^{2 pi i sigma} = shift.
    """
    if isinstance(shift, ExponentKey):
        shift = Monomial(Fraction(1), shift)
    a = Fraction(a)
    if (alpha * a).denominator != 1:
        raise LatticeViolation("alpha * a must be an integer")
    base = Monomial(
        shift.coeff, ExponentKey(shift.qexp, shift.zexp + alpha)
    )
    return _theta_like(ring, a, m, base)


def lattice_sum(ring: SeriesRing, y: Monomial) -> TruncatedSeries:
    """The two-sided sum sum_{l in Z} q^{l^2} y^l, truncated at N."""
    return _theta_like(ring, Fraction(0), 2, y)


def euler_factor_stream(ring: SeriesRing) -> Iterator[Monomial]:
    """Factors -q^{2m}, m = 1, 2, ..., for the product prod (1 - q^{2m})."""
    mm = 1
    while True:
        yield monomial(-1, [2 * mm] * ring.nvars, 0)
        mm += 1


def euler_product(ring: SeriesRing) -> TruncatedSeries:
    """prod_{m >= 1} (1 - q^{2m}) truncated at the ring order."""
    return truncated_product(ring, euler_factor_stream(ring))


def jtp_factor_stream(ring: SeriesRing, y: Monomial) -> list[Monomial]:
    """All weight-relevant factors of prod (1-q^{2m})(1+q^{2m-1}y)(1+q^{2m-1}/y).

    Returned sorted by weight so that consumers may stop at the first factor
    beyond the truncation order even when y itself has large weight.
    """
    n = ring.nvars
    wy = y.weight
    cap = ring.order
    out = []
    mm = 1
    while True:
        block = [
            monomial(-1, [2 * mm] * n, 0),
            monomial(
                y.coeff, [2 * mm - 1 + e for e in y.qexp], y.zexp
            ),
            monomial(
                Fraction(1) / y.coeff,
                [2 * mm - 1 - e for e in y.qexp],
                -y.zexp,
            ),
        ]
        block_min = min(float(b.weight) for b in block)
        if block_min > cap:
            break
        out.extend(block)
        mm += 1
        if mm > 10**6:
            raise NonTerminating("triple-product stream did not terminate")
    out.sort(key=lambda b: (b.weight, b.key))
    return out


def jtp_check(ring: SeriesRing, y: Monomial) -> CheckResult:
    """Verify the triple-product identity for the monomial y, exactly mod > N.

    Left side: prod_{m>=1} (1 - q^{2m}) (1 + q^{2m-1} y) (1 + q^{2m-1} y^{-1}).
    Right side: sum_{l in Z} q^{l^2} y^l.
    """
    lhs = truncated_product(ring, jtp_factor_stream(ring, y))
    rhs = lattice_sum(ring, y)
    return compare_series(lhs, rhs)


def compare_series(
    f: TruncatedSeries, g: TruncatedSeries, up_to: Optional[RatLike] = None
) -> CheckResult:
    """Exact comparison of term maps, optionally only up to a weight bound."""
    f._check_ring(g)
    ring = f.ring
    cap = ring._cap if up_to is None else int(Fraction(up_to) * ring.denom)
    diffs = []
    for k in set(f._terms) | set(g._terms):
        if sum(k[:-1]) > cap:
            continue
        cf = f._terms.get(k, _ZERO)
        cg = g._terms.get(k, _ZERO)
        if cf != cg:
            diffs.append((k, cf, cg))
    if not diffs:
        return CheckResult(True, None, "term maps identical")
    k, cf, cg = min(diffs)
    return CheckResult(
        False,
        (ring._unscale_key(k), cf, cg),
        f"{len(diffs)} differing coefficients",
    )


def extract_unit(
    f: TruncatedSeries,
    g: TruncatedSeries,
    reliable_weight: Optional[RatLike] = None,
) -> Monomial:
    """Return the unique monomial u with f = u * g, exactly mod truncation.

    ``reliable_weight`` caps the weight up to which f is known to be exact
    (it defaults to the ring order); the comparison additionally discounts
    the weight of u itself when u has negative weight, since then u * g is
    only trustworthy below order + weight(u).
    """
    f._check_ring(g)
    ring = f.ring
    if g.is_zero() or f.is_zero():
        raise NotProportional("cannot divide with a zero series")
    cap0 = ring._cap if reliable_weight is None else int(
        Fraction(reliable_weight) * ring.denom
    )
    f_keys = [k for k in f._terms if sum(k[:-1]) <= cap0]
    if not f_keys:
        raise NotProportional("no reliable terms to anchor the division")
    ka = min(f_keys)
    kg = min(g._terms)
    n = ring.nvars
    ukey = tuple(ka[i] - kg[i] for i in range(n)) + (ka[-1] - kg[-1],)
    ucoeff = f._terms[ka] / g._terms[kg]
    wu = sum(ukey[:-1])
    cap = min(cap0, ring._cap + min(0, wu))
    prod = _mul_scaled(ring, {ukey: ucoeff}, g._terms, cap)
    bad = []
    for k in set(prod) | set(f._terms):
        if sum(k[:-1]) > cap:
            continue
        if prod.get(k, _ZERO) != f._terms.get(k, _ZERO):
            bad.append(k)
    if bad:
        k = min(bad)
        raise NotProportional(
            f"first obstruction at {format_monomial(Monomial(Fraction(1), ring._unscale_key(k)))}: "
            f"{f._terms.get(k, _ZERO)} vs {prod.get(k, _ZERO)}"
        )
    return Monomial(ucoeff, ring._unscale_key(ukey))


def automorphy_of(f: TruncatedSeries) -> Monomial:
    """The monomial u with f(qz) = u(z) f(z), measured by exact division.

    Substituting z -> qz moves a term of z-exponent j by weight n*j, so the
    image of the stored truncation is only exact below
    order + n * min(0, j_min); the division is performed on that range.
    """
    ring = f.ring
    if f.is_zero():
        raise NotQuasiPeriodic("zero series")
    qz = monomial(1, [1] * ring.nvars, 1)
    jmin, jmax = f.z_span()
    shift = ring.nvars * min(0, jmin, jmax)
    reliable = ring.order + shift
    image = substitute_monomial(f, qz)
    try:
        return extract_unit(image, f, reliable_weight=reliable)
    except NotProportional as exc:
        raise NotQuasiPeriodic(str(exc)) from exc
