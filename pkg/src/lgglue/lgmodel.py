"""Complexified Kahler data, affine gluing, and the annulus Landau-Ginzburg family.

The base of the construction is a pair of complexified Kahler parameters
tau_1, tau_2 in the upper half plane with

    q_k = e^{2 pi i tau_k},    tau = tau_1 + tau_2,    q = q_1 q_2.

Two affine intervals B_1 = [0, Im tau_1] and B_2 = [-Im tau_2, 0] are glued
end to end into a circle of circumference Im tau; on the mirror side this
is the multiplicative gluing z ~ qz of annuli inside C^x.  The dictionary
between the two pictures is the tropicalization map

    Trop(z) = -log|z| / (2 pi),    annulus_for([lo, hi]) = A(e^{-2 pi hi}, e^{-2 pi lo}).

The indexed family of local models is generated by the coordinate
recursion q z_{i+2} = z_i together with q_1 z_2 = z_1 and z_1 = z.  Odd
index models carry W(u) = u + q_1/u on A(|q_1|, 1), even index models
W(u) = u + q_2/u on A(|q_2|, 1), and in the global z-plane the annuli of
consecutive indices tile C^x with exactly one shared boundary circle.

Note on labels: the recursion is taken as the source of truth.  Under it
the z-plane annulus of index 2i+1 is A(|q^i q_1|, |q^i|), increasing the
index moves inward, and the mirror convention z_{j+2} = q z_j produces the
same family with j replaced by -j.  The paired-superpotential identity
checked by :func:`product_formula_check` is stated in that mirror labeling,
where its constant is q_k q^j.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

from . import qseries
from .errors import DomainError, InconsistentRelation, OutsideDomain
from .qseries import CheckResult, Monomial, SeriesRing, monomial

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class KahlerParams:
    """Complexified Kahler parameters of the two components and derived data."""

    tau1: complex
    tau2: complex
    tau: complex
    q1: complex
    q2: complex
    q: complex

    @property
    def taus(self) -> tuple[complex, complex]:
        return (self.tau1, self.tau2)


def make_params(tau1: complex, tau2: complex) -> KahlerParams:
    """Build KahlerParams from upper half plane tau_1, tau_2."""
    tau1 = complex(tau1)
    tau2 = complex(tau2)
    if tau1.imag <= 0 or tau2.imag <= 0:
        raise DomainError("tau_1 and tau_2 must have positive imaginary part")
    tau = tau1 + tau2
    q1 = cmath.exp(2j * math.pi * tau1)
    q2 = cmath.exp(2j * math.pi * tau2)
    q = cmath.exp(2j * math.pi * tau)
    if abs(q - q1 * q2) > 1e-14 * abs(q):
        raise DomainError("q = q1 q2 failed beyond roundoff; tau out of range")
    return KahlerParams(tau1, tau2, tau, q1, q2, q)


@dataclass(frozen=True)
class AffineInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"degenerate interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class GluedCircle:
    """The base circle obtained by gluing two intervals by a shift."""

    circumference: float
    shift: float

    def __post_init__(self):
        if self.circumference != self.shift:
            raise DomainError("glued circumference must equal the gluing shift")


@dataclass(frozen=True)
class Annulus:
    r_in: float
    r_out: float

    def __post_init__(self):
        if not 0 < self.r_in < self.r_out:
            raise DomainError(f"degenerate annulus ({self.r_in}, {self.r_out})")

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        r = abs(z)
        return self.r_in * (1 + margin) < r < self.r_out * (1 - margin)


def glue_intervals(params: KahlerParams) -> tuple[AffineInterval, AffineInterval, GluedCircle]:
    """The two base intervals and the circle they glue into.

    B_1 = [0, Im tau_1] and B_2 = [-Im tau_2, 0] share the endpoint 0; the
    outer endpoints are identified by the shift Im tau, so the circle has
    circumference Im tau_1 + Im tau_2.
    """
    b1 = AffineInterval(0.0, params.tau1.imag)
    b2 = AffineInterval(-params.tau2.imag, 0.0)
    total = params.tau1.imag + params.tau2.imag
    return b1, b2, GluedCircle(total, total)


def tropicalize(z: complex) -> float:
    """-log|z| / (2 pi); sends an annulus to its affine base interval."""
    if z == 0:
        raise DomainError("tropicalization undefined at z = 0")
    return -math.log(abs(z)) / TWO_PI


def annulus_for(interval: AffineInterval) -> Annulus:
    """Inverse of tropicalize on moduli: [lo, hi] -> A(e^{-2 pi hi}, e^{-2 pi lo})."""
    return Annulus(math.exp(-TWO_PI * interval.hi), math.exp(-TWO_PI * interval.lo))


@dataclass(frozen=True)
class HolonomyData:
    """A flat U(1) holonomy angle, canonically in [0, 2 pi)."""

    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", self.angle % TWO_PI)


def semiflat_coordinate(area: float, hol: HolonomyData) -> complex:
    """Semi-flat complex coordinate exp(-2 pi area) * e^{i angle}."""
    return math.exp(-TWO_PI * area) * cmath.exp(1j * hol.angle)


def mirror_swap(a: float, b: float) -> tuple[float, float]:
    """Swap complex-affine and symplectic-affine lengths of the base circle.

    For the flat torus of complex-affine length a and symplectic area b the
    mirror is the torus with the two lengths exchanged.
    """
    if a <= 0 or b <= 0:
        raise DomainError("affine lengths must be positive")
    return (b, a)


# ---------------------------------------------------------------------------
# the indexed family of local models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LGModelSpec:
    """One local model of the family, with its chart to the global z-plane.

    ``chart`` is the exact monomial expressing the local coordinate in
    terms of the global one, z_index = chart(z); ``parameter`` is 1 or 2
    according to which q_k the superpotential u + q_k/u uses.
    """

    index: int
    parameter: int
    q_value: complex
    chart: Monomial
    local_annulus: Annulus
    zplane_annulus: Annulus

    def to_local(self, z: complex, params: KahlerParams) -> complex:
        e1, e2 = self.chart.qexp
        scale = cmath.exp(2j * math.pi * (complex(e1) * params.tau1 + complex(e2) * params.tau2))
        return float(self.chart.coeff) * scale * z

    def to_global(self, u: complex, params: KahlerParams) -> complex:
        e1, e2 = self.chart.qexp
        scale = cmath.exp(2j * math.pi * (complex(e1) * params.tau1 + complex(e2) * params.tau2))
        return u / (float(self.chart.coeff) * scale)


def lg_family(index: int, params: KahlerParams) -> LGModelSpec:
    """The local model of the given index.

    Charts follow z_1 = z, q_1 z_2 = z_1 and q z_{i+2} = z_i, giving
    z_{2i+1} = q^{-i} z and z_{2i} = q_1^{-i} q_2^{1-i} z.  In the z-plane
    the odd annuli are A(|q^i q_1|, |q^i|) and the even ones
    A(|q^i|, |q^i / q_2|); increasing the index by 2 multiplies by q.
    """
    aq1, aq2, aq = abs(params.q1), abs(params.q2), abs(params.q)
    if index % 2:
        i = (index - 1) // 2
        chart = monomial(1, [-i, -i], 1)
        local = Annulus(aq1, 1.0)
        zplane = Annulus(aq**i * aq1, aq**i)
        k, qv = 1, params.q1
    else:
        i = index // 2
        chart = monomial(1, [-i, 1 - i], 1)
        local = Annulus(aq2, 1.0)
        zplane = Annulus(aq**i, aq**i / aq2)
        k, qv = 2, params.q2
    return LGModelSpec(index, k, qv, chart, local, zplane)


def superpotential_eval(spec: LGModelSpec, point: complex) -> complex:
    """Value u + q_k/u of the local superpotential at a point of its annulus."""
    if not spec.local_annulus.contains(point):
        raise OutsideDomain(
            f"|u| = {abs(point):.6g} outside ({spec.local_annulus.r_in:.6g}, "
            f"{spec.local_annulus.r_out:.6g})"
        )
    return point + spec.q_value / point

def critical_points(spec: LGModelSpec) -> tuple[complex, complex]:
    """Both square roots of q_k, the critical points of u + q_k/u."""
    r = cmath.sqrt(spec.q_value)
    return (r, -r)


# ---------------------------------------------------------------------------
# disc-count superpotential
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscClass:
    """A disc class: its complexified area int (B + i omega) and count."""

    label: str
    area: complex
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise DomainError("disc counts are nonnegative")
        if self.area.imag <= 0:
            raise DomainError("nonconstant discs have positive symplectic area")


def disc_superpotential(
    discs: list[DiscClass], total: complex | None = None
) -> dict[int, complex]:
    """The weighted disc count as a Laurent polynomial in z.

    For a single class the potential is count * z.  For two classes whose
    boundary sum is the full fiber class, the coordinates obey
    z_{b1} z_{b2} = q with q = e^{2 pi i (area_1 + area_2)}, and in the
    coordinate z = z_{b1} the potential is n_1 z + n_2 q / z.  When the
    expected total area is supplied, a mismatch beyond 1e-10 raises.

    Returns a map from z-exponent to coefficient.
    """
    if not discs:
        return {}
    if len(discs) == 1:
        return {1: complex(discs[0].count)}
    if len(discs) != 2:
        raise InconsistentRelation("expected one or two disc classes")
    area_sum = discs[0].area + discs[1].area
    q = cmath.exp(2j * math.pi * area_sum)
    if total is not None:
        q_expected = cmath.exp(2j * math.pi * total)
        if abs(q - q_expected) > 1e-10 * max(abs(q_expected), 1e-300):
            raise InconsistentRelation(
                f"disc areas sum to {area_sum}, expected {total}"
            )
    return {1: complex(discs[0].count), -1: discs[1].count * q}


def eval_laurent(coeffs: dict[int, complex], z: complex) -> complex:
    if z == 0:
        raise DomainError("Laurent evaluation at z = 0")
    return sum(c * z**k for k, c in coeffs.items())


# ---------------------------------------------------------------------------
# exact identities
# ---------------------------------------------------------------------------


def _display_chart(j: int) -> Monomial:
    """Chart of index j in the mirror labeling z_{j+2} = q z_j (see module note).

    Odd j = 2i+1 gives z_j = q^i z; even j = 2i gives z_j = q^{i-1} z / q_1.
    """
    if j % 2:
        i = (j - 1) // 2
        return monomial(1, [i, i], 1)
    i = j // 2
    return monomial(1, [i - 1, i], 1)


def product_formula_check(j: int, k: int) -> CheckResult:
    """Exact check of the paired-superpotential identity

        (z_j + q_k/z_j)(z_{-j} + q_k/z_{-j})
            = q_k q^j (1 + q_k/z_j^2)(1 + z_{-j}^2/q_k),

    with z_{+-j} substituted as monomials in the global z (mirror labeling,
    under which z_{-j} = q^{-j} z_j and the displayed constant is q_k q^j).
    """
    if k not in (1, 2):
        raise DomainError("k must be 1 or 2")
    ring = SeriesRing(nvars=2, denom=1, floor=-64, order=256)
    zj = _display_chart(j)
    zmj = _display_chart(-j)
    qk = monomial(1, [1, 0] if k == 1 else [0, 1], 0)
    qj = monomial(1, [j, j], 0)

    def w(zc: Monomial):
        return ring.from_monomials([zc, qk * zc.inverse()])

    lhs = w(zj) * w(zmj)
    rhs = (
        ring.from_monomials([qk * qj])
        * (ring.one() + ring.from_monomials([qk * (zj**2).inverse()]))
        * (ring.one() + ring.from_monomials([(zmj**2) * qk.inverse()]))
    )
    return qseries.compare_series(lhs, rhs)


def _reduce_z_power(k: int) -> tuple[Fraction, int]:
    """Reduce z^k by the relation z^2 = q to (q-power, z-power in {0, 1})."""
    qpow = Fraction(k - (k % 2), 2)
    return qpow, k % 2


def jacobian_vs_qh() -> CheckResult:
    """Structure constants of C[z^{+-1}]/(z^2 - q) against C[H]/(H^2 - q).

    The first ring is the Jacobian ring of W = z + q/z (the relation is
    W'(z) = 1 - q/z^2 = 0), the second the quantum cohomology of the
    projective line; both are written on the basis {1, generator} with an
    exact formal q.
    """
    jac: dict[tuple[int, int], tuple[Fraction, int]] = {}
    for a in (0, 1):
        for b in (0, 1):
            jac[(a, b)] = _reduce_z_power(a + b)
    qh = {
        (0, 0): (Fraction(0), 0),
        (0, 1): (Fraction(0), 1),
        (1, 0): (Fraction(0), 1),
        (1, 1): (Fraction(1), 0),
    }
    diffs = sorted(key for key in qh if jac[key] != qh[key])
    if not diffs:
        return CheckResult(True, None, "structure constants agree on {1, z} vs {1, H}")
    key = diffs[0]
    return CheckResult(False, (key, jac[key], qh[key]), "structure constants differ")
