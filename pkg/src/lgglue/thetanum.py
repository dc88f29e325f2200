"""Numerical evaluation of theta functions, eta, and the section products.

Everything here is IEEE binary64 complex arithmetic.  Each evaluator
returns an :class:`EvalResult` whose ``error_bound`` is a rigorous bound
for the truncation tail of the defining sum or product (geometric-series
estimates), plus a crude allowance for roundoff.  The decay is brutal for
the moduli of interest (|q| <= e^{-pi}), so binary64 with tails cut at
1e-14 relative leaves orders of magnitude of headroom for the 1e-8..1e-10
tolerances used by the verification layer.

Derivatives of theta are always term-wise derivatives of the lattice sum,
never finite differences; finite differences appear only in tests as an
independent oracle.

Also provided: an argument-principle zero counter on a fundamental
annulus of z ~ qz, and the Newton search for the ramification points of
the degree-two map assembled from the two theta sections.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import ContourFailure, ConvergenceFailure, DomainError
from .lgmodel import KahlerParams
from .qseries import TruncatedSeries

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class EvalResult:
    value: complex
    error_bound: float

    def __post_init__(self):
        v = self.value
        if not (math.isfinite(v.real) and math.isfinite(v.imag) and math.isfinite(self.error_bound)):
            raise DomainError("non-finite evaluation result")


def _theta_raw(a: float, b: float, w: complex, tau_p: complex, order: int) -> EvalResult:
    """Lattice sum sum_n e^{pi i (n+a)^2 tau'} e^{2 pi i (n+a)(w+b)},
    term-wise differentiated ``order`` times in w.

    The summation window is widened until the first excluded terms are
    below 1e-16 of the partial sum; the reported bound dominates both
    geometric tails.
    """
    if tau_p.imag <= 0:
        raise DomainError("theta modulus must lie in the upper half plane")
    t = tau_p.imag
    # |term(n)| = exp(-pi t (n+a)^2 - 2 pi (n+a) Im(w+b)); the magnitude peaks
    # near x0 and decays with geometric ratio beyond the window edges.
    x0 = -(w.imag + 0.0) / t
    half = 3.0 + math.sqrt((30.0 + abs(order) * 5.0) / (math.pi * t)) + abs(x0 - (-a))
    n_lo = math.floor(-a + x0 - half) - 2
    n_hi = math.ceil(-a + x0 + half) + 2

    total = 0j
    scale = 0.0
    for n in range(n_lo, n_hi + 1):
        x = n + a
        term = cmath.exp(1j * math.pi * x * x * tau_p + TWO_PI * 1j * x * (w + b))
        if order:
            term *= (TWO_PI * 1j * x) ** order
        total += term
        scale = max(scale, abs(term))

    def tail(x_next: float, direction: int) -> float:
        mag = math.exp(-math.pi * t * x_next * x_next - TWO_PI * x_next * w.imag)
        if order:
            mag *= (TWO_PI * (abs(x_next) + 1.0)) ** order
        ratio = math.exp(-math.pi * t * (2.0 * abs(x_next) + 1.0) + TWO_PI * abs(w.imag))
        if order:
            ratio *= ((abs(x_next) + 2.0) / (abs(x_next) + 1.0)) ** order
        if ratio >= 0.5:
            return math.inf
        return mag / (1.0 - ratio)

    bound = tail(n_hi + 1 + a, +1) + tail(-(n_lo - 1 + a), -1)
    if not math.isfinite(bound):
        # widen once; the window above is generous so this is defensive
        raise DomainError("theta tail bound failed; modulus too close to the real axis")
    roundoff = 1e-15 * (n_hi - n_lo + 1) * max(scale, abs(total))
    return EvalResult(total, bound + roundoff)


def theta_num(a: float, b: float, w: complex, tau_p: complex, derivative: bool = False) -> EvalResult:
    """theta_{a,b}(w, tau') or its first w-derivative, with a tail bound."""
    return _theta_raw(a, b, w, tau_p, 1 if derivative else 0)


def eta_num(tau: complex) -> EvalResult:
    """Dedekind eta, e^{pi i tau / 12} prod (1 - e^{2 pi i tau m}).

    The partial product stops once the geometric tail of sum |x|^m falls
    below 1e-16; the remaining factors differ from 1 by at most
    exp(|x|^{M+1} / (1-|x|)^2) - 1, which is folded into the bound.
    """
    if tau.imag <= 0:
        raise DomainError("eta argument must lie in the upper half plane")
    x = cmath.exp(TWO_PI * 1j * tau)
    ax = abs(x)
    prod = 1 + 0j
    m = 1
    xm = x
    while abs(xm) > 1e-18 and m < 200000:
        prod *= 1 - xm
        xm *= x
        m += 1
    tail_sum = abs(xm) / max(1.0 - ax, 1e-300) ** 2
    value = cmath.exp(1j * math.pi * tau / 12.0) * prod
    bound = abs(value) * (math.expm1(tail_sum) + 1e-15 * m)
    return EvalResult(value, bound)


def inv_even_euler_num(tau: complex) -> EvalResult:
    """prod_{m>=1} (1 - q^{2m})^{-1} with q = e^{2 pi i tau}.

    Identically equal to e^{pi i tau/6} / eta(2 tau); computed directly as
    a product so the exact-series normalisation has an independent twin.
    """
    if tau.imag <= 0:
        raise DomainError("argument must lie in the upper half plane")
    q2 = cmath.exp(2j * TWO_PI * tau)
    prod = 1 + 0j
    m = 1
    t = q2
    while abs(t) > 1e-18 and m < 200000:
        prod *= 1 - t
        t *= q2
        m += 1
    tail = abs(t) / max(1.0 - abs(q2), 1e-300) ** 2
    value = 1.0 / prod
    return EvalResult(value, abs(value) * (math.expm1(tail) + 1e-15 * m))


def _wprime_factors(parity: int, params: KahlerParams) -> Callable[[complex, int], tuple[complex, complex]]:
    """Factor pair (1 + c/z^2 * q^{2i-2}, 1 + d z^2 * q^{2i-2}) of the parity product."""
    if parity == 1:
        c0 = params.q / params.q2  # q^{2i-1} / q2 at i = 1, i.e. q1
        d0 = params.q * params.q2
    elif parity == 2:
        c0 = params.q * params.q1
        d0 = params.q / params.q1
    else:
        raise DomainError("parity must be 1 or 2")

    def factors(z: complex, i: int) -> tuple[complex, complex]:
        g = params.q ** (2 * (i - 1))
        return (1 + g * c0 / (z * z), 1 + g * d0 * z * z)

    return factors


def wprime_num(parity: int, z: complex, params: KahlerParams, tol: float = 1e-12) -> EvalResult:
    """The infinite product section of the given parity at z.

    Parity 1: prod_{i>=1} (1 + q^{2i-1}/(q2 z^2)) (1 + q^{2i-1} q2 z^2).
    Parity 2: prod_{i>=1} (1 + q^{2i-1} q1 / z^2) (1 + q^{2i-1} z^2 / q1).

    Factors are consumed until every remaining one deviates from 1 by less
    than tol * 1e-2; the tail contributes exp(sum |deviation|) - 1 to the
    bound.
    """
    if z == 0:
        raise DomainError("sections are defined on C^x")
    if abs(params.q) >= 1:
        raise DomainError("|q| must be below one")
    factors = _wprime_factors(parity, params)
    prod = 1 + 0j
    i = 1
    dev = math.inf
    while True:
        fa, fb = factors(z, i)
        prod *= fa * fb
        dev = abs(fa - 1) + abs(fb - 1)
        i += 1
        if dev < tol * 1e-2 and abs(params.q) ** 2 < 0.5:
            break
        if i > 100000:
            raise DomainError("product did not settle; |q| too close to one")
    # remaining deviations decay by |q|^2 per step
    tail_sum = dev * abs(params.q) ** 2 / (1.0 - abs(params.q) ** 2)
    bound = abs(prod) * (math.expm1(tail_sum) + 1e-15 * i) + tail_sum * 1e-300
    return EvalResult(prod, bound)


def evaluate_series(
    series: TruncatedSeries, taus: Sequence[complex], z: complex
) -> complex:
    """Numeric value of an exact series at q_k = e^{2 pi i tau_k} and z.

    Fractional exponents are resolved through the tau parameters, so no
    branch choices enter: q_k^e := e^{2 pi i tau_k e}.
    """
    if len(taus) != series.ring.nvars:
        raise DomainError("tau list does not match the ring variables")
    if z == 0:
        raise DomainError("evaluation at z = 0")
    total = 0j
    for key, coeff in series.items():
        expo = sum(complex(e) * t for e, t in zip(key.qexp, taus))
        total += float(coeff) * cmath.exp(TWO_PI * 1j * expo) * z**key.zexp
    return total


# ---------------------------------------------------------------------------
# contour counting and ramification search
# ---------------------------------------------------------------------------


def _winding(f: Callable[[complex], complex], r: float, samples: int) -> tuple[float, float]:
    """(winding number estimate, min |f| on the contour) along |z| = r."""
    vals = []
    for j in range(samples):
        z = r * cmath.exp(2j * math.pi * j / samples)
        vals.append(f(z))
    lo = min(abs(v) for v in vals)
    total = 0.0
    max_step = 0.0
    for j in range(samples):
        step = cmath.phase(vals[(j + 1) % samples] / vals[j]) if vals[j] != 0 else math.nan
        if math.isnan(step):
            return math.nan, 0.0
        max_step = max(max_step, abs(step))
        total += step
    if max_step > 0.5 * math.pi:
        return math.nan, lo  # caller refines
    return total / TWO_PI, lo


def count_zeros(f: Callable[[complex], complex], params: KahlerParams, r_out: float = 1.0) -> int:
    """Zeros of f in the fundamental annulus {|q| r_out < |z| <= r_out}.

    By the argument principle this is the winding of f along the outer
    circle minus the winding along the inner circle (radius ratio |q|).
    Contours are nudged radially, keeping the ratio, when a zero sits too
    close; both windings must round to integers with residual < 0.1.
    """
    aq = abs(params.q)
    for attempt in range(8):
        r = r_out * math.exp(math.log(aq) * 0.011 * attempt)
        wins = []
        ok = True
        for radius in (r, aq * r):
            samples = 1024
            w, lo = math.nan, 0.0
            while samples <= 16384:
                w, lo = _winding(f, radius, samples)
                if not math.isnan(w):
                    break
                samples *= 2
            if math.isnan(w) or lo < 1e-9 or abs(w - round(w)) > 0.1:
                ok = False
                break
            wins.append(round(w))
        if ok:
            return wins[0] - wins[1]
    raise ContourFailure("no stable pair of contours after 8 radial nudges")


def reduce_mod_q(z: complex, q: complex) -> complex:
    """Representative of z in the fundamental annulus {|q| < |z| <= 1}."""
    if z == 0:
        raise DomainError("z = 0 has no representative")
    t = math.log(abs(z)) / math.log(abs(q))
    k = math.floor(t)
    w = z * q ** (-k)
    # guard the half-open boundary against roundoff
    if abs(w) > 1.0 + 1e-12:
        w *= q
    elif abs(w) <= abs(q) * (1 + 1e-12):
        w /= q
    return w


def _wronskian(params: KahlerParams, z: complex, order: int = 0) -> complex:
    """theta1 d theta2 - theta2 d theta1 at w = 2 zeta - tau1, differentiated
    ``order`` extra times in zeta (0 or 1); zeros are the ramification points."""
    zeta = cmath.log(z) / (TWO_PI * 1j)
    w = 2 * zeta - params.tau1
    tp = 2 * params.tau
    t1 = _theta_raw(0.5, 0.0, w, tp, 0).value
    t2 = _theta_raw(0.0, 0.0, w, tp, 0).value
    d1 = _theta_raw(0.5, 0.0, w, tp, 1).value
    d2 = _theta_raw(0.0, 0.0, w, tp, 1).value
    if order == 0:
        return t1 * d2 - t2 * d1
    dd1 = _theta_raw(0.5, 0.0, w, tp, 2).value
    dd2 = _theta_raw(0.0, 0.0, w, tp, 2).value
    return 2.0 * (t1 * dd2 - t2 * dd1)  # d/d zeta = 2 d/dw; cross terms cancel


def find_ramification(params: KahlerParams, tol: float = 1e-8) -> list[complex]:
    """Ramification points of [theta1 : theta2] in the fundamental annulus.

    Newton iteration on the Wronskian from a fixed 8 x 8 log-polar seed
    grid, with roots reduced modulo q^Z and deduplicated at distance tol.
    The list is sorted by decreasing modulus, then by phase, so the output
    is stable.
    """
    if params.tau1.imag <= 0 or params.tau2.imag <= 0:
        raise DomainError("parameters must lie in the upper half plane")
    aq = abs(params.q)
    roots: list[complex] = []
    for jr in range(8):
        r = math.exp(math.log(aq) * (jr + 0.5) / 8.0)
        for jt in range(8):
            zeta = cmath.log(r * cmath.exp(2j * math.pi * jt / 8.0)) / (TWO_PI * 1j)
            converged = False
            for _ in range(60):
                if not (math.isfinite(zeta.real) and math.isfinite(zeta.imag)) or abs(zeta.imag) > 4.0 * params.tau.imag:
                    break
                z = cmath.exp(TWO_PI * 1j * zeta)
                g = _wronskian(params, z, 0)
                dg = _wronskian(params, z, 1)
                if dg == 0:
                    break
                step = g / dg
                if abs(step) > 1.0:
                    step /= abs(step)
                zeta -= step
                if abs(step) < 1e-14:
                    converged = True
                    break
            if not converged:
                continue
            z = reduce_mod_q(cmath.exp(TWO_PI * 1j * zeta), params.q)
            if abs(_wronskian(params, z, 0)) > tol:
                continue
            if all(_torus_dist(z, r0, params.q) > tol for r0 in roots):
                roots.append(z)
    if len(roots) < 4:
        raise ConvergenceFailure(
            f"found {len(roots)} ramification points, expected at least 4"
        )
    roots.sort(key=lambda p: (-abs(p), cmath.phase(p) % TWO_PI))
    return roots


def _torus_dist(a: complex, b: complex, q: complex) -> float:
    """Distance between points of C^x / q^Z, testing the adjacent sheets."""
    return min(abs(a - b * q**k) for k in (-1, 0, 1))
