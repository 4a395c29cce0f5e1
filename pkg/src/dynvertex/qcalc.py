"""Exact and floating-point kernel for q-special functions.

Every function accepts plain Python scalars. If all inputs are ``int`` or
``fractions.Fraction`` the computation is carried out exactly; if any input
is a ``float`` the computation is done in double precision. The 6j symbol is
float only because of its square roots.

The module also provides :class:`Jet`, a truncated Laurent series in a formal
deformation parameter. Feeding jets through the same formulas lets callers
evaluate removable ``0/0`` singularities exactly by taking the limit of the
constant coefficient.
"""

from __future__ import annotations

import itertools
import math
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence, Union

import gmpy2

Scalar = Union[int, Fraction, float]

__all__ = [
    "DivisionByZero",
    "InvalidBase",
    "NonTerminatingExact",
    "NoConvergence",
    "Jet",
    "HypergeometricSpec",
    "parse_scalar",
    "is_exact",
    "to_exact",
    "q_pochhammer",
    "q_number",
    "q_factorial",
    "q_factorial_ratio",
    "q_binomial",
    "basic_hypergeometric",
    "very_well_poised",
    "racah_wilson",
    "rw_weight",
    "rw_norm",
    "q6j",
    "six_j_racah_wilson_parameters",
    "q6j_racah_wilson",
    "dual_q_krawtchouk",
    "krawtchouk_weight",
    "krawtchouk_norm",
    "rescaled_krawtchouk",
    "q_exp_small",
    "q_exp_big",
]


class DivisionByZero(ZeroDivisionError):
    """A pole of a Pochhammer symbol or series denominator was hit."""


class InvalidBase(ValueError):
    """The base q is 0 or +-1 where a q-number is required."""


class NonTerminatingExact(ValueError):
    """Exact mode was asked to sum a series that does not terminate."""


class NoConvergence(RuntimeError):
    """A float series did not converge within ``max_terms``."""


# ---------------------------------------------------------------------------
# scalar helpers

def parse_scalar(text: Union[str, Scalar]) -> Scalar:
    """Parse ``"p/q"`` or an integer string as a Fraction, anything else as float."""
    if isinstance(text, (int, Fraction, float)):
        return text
    s = str(text).strip()
    try:
        return Fraction(s) if ("/" in s or s.lstrip("+-").isdigit()) else float(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse scalar {text!r}") from exc


def is_exact(*values) -> bool:
    """True when every value is an exact rational (or a jet over rationals)."""
    for v in values:
        if isinstance(v, Jet):
            continue
        if isinstance(v, bool) or not isinstance(v, Rational):
            return False
    return True


def to_exact(x: Scalar) -> Fraction:
    """Convert to Fraction; floats are converted exactly (binary expansion)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(x)


def _is_zero(x) -> bool:
    if isinstance(x, Jet):
        return x.is_zero()
    return x == 0


def _close(a: Scalar, b: Scalar, rtol: float) -> bool:
    if is_exact(a, b):
        return a == b
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


# ---------------------------------------------------------------------------
# truncated Laurent series

_JET_LOCK = threading.RLock()
_ZERO = gmpy2.mpq(0)
_MPQ_TYPE = type(_ZERO)


def _mpq(x):
    if isinstance(x, Fraction):
        return gmpy2.mpq(x.numerator, x.denominator)
    return gmpy2.mpq(x)


def _is_plain_rational(x) -> bool:
    return (isinstance(x, (int, Fraction)) or type(x) is _MPQ_TYPE) and not isinstance(x, bool)


class Jet:
    """Truncated Laurent series ``sum_k c_k eps^(val+k)`` with ``len(coef)`` known terms.

    Coefficients are exact rationals, stored as gmpy2 ``mpq`` for speed;
    :meth:`limit` hands back a Fraction. Products keep the smaller relative
    precision of the two factors and sums keep the smaller absolute precision,
    so cancellations never promote unknown coefficients to known zeros. The
    limit ``eps -> 0`` is :meth:`limit`.
    """

    __slots__ = ("val", "coef")
    prec = 12

    def __init__(self, coef: Sequence, val: int = 0):
        c = [_mpq(x) for x in coef][: self.prec]
        shift = 0
        while shift < len(c) and c[shift] == 0:
            shift += 1
        # an all-zero list means "O(eps^(val+len))": keep it as an empty jet
        self.val = val + shift
        self.coef = c[shift:]

    @classmethod
    def _raw(cls, coef: list, val: int) -> "Jet":
        """Build from mpq coefficients whose leading entry is known to be nonzero."""
        out = object.__new__(cls)
        out.val, out.coef = val, coef
        return out

    @classmethod
    def deformed(cls, c: Scalar, power: int = 1) -> "Jet":
        """The jet of ``c * (1 + eps)**power``."""
        c = _mpq(c)
        return cls([c * _mpq(_gen_binom(power, k)) for k in range(cls.prec)])

    @classmethod
    def monomial(cls, c: Scalar, power: int) -> "Jet":
        """The exact jet ``c * eps**power``."""
        return cls([_mpq(c)] + [_ZERO] * (cls.prec - 1), power)

    @classmethod
    def const(cls, c: Scalar) -> "Jet":
        c = _mpq(c)
        if c == 0:
            return cls([], cls.prec)
        return cls([c] + [_ZERO] * (cls.prec - 1))

    def is_zero(self) -> bool:
        return not self.coef

    @classmethod
    @contextmanager
    def precision(cls, n: int):
        """Temporarily set the number of tracked terms (serialized by a lock)."""
        with _JET_LOCK:
            old = cls.prec
            cls.prec = n
            try:
                yield
            finally:
                cls.prec = old

    def limit(self) -> Fraction:
        """Value at eps = 0; raises if the series has a pole or lost precision."""
        if self.val > 0:
            return Fraction(0)
        if not self.coef:
            raise DivisionByZero("jet lost all precision (cancellation too deep)")
        if self.val < 0:
            raise DivisionByZero("jet has a pole at eps = 0; limit does not exist")
        c = self.coef[0]
        return Fraction(int(c.numerator), int(c.denominator))

    @staticmethod
    def _coerce(other):
        if isinstance(other, Jet):
            return other
        if _is_plain_rational(other):
            return Jet.const(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        top = min(self.val + len(self.coef), o.val + len(o.coef))
        lo = min(self.val, o.val)
        if top <= lo:
            return Jet([], top)
        out = [_ZERO] * (top - lo)
        for src in (self, o):
            for k, c in enumerate(src.coef):
                e = src.val + k
                if e >= top:
                    break
                out[e - lo] += c
        return Jet(out, lo)

    __radd__ = __add__

    def __neg__(self):
        return Jet([-c for c in self.coef], self.val)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o + (-self)

    def __mul__(self, other):
        if _is_plain_rational(other):
            c = _mpq(other)
            if c == 0:
                return Jet([], self.val + len(self.coef))
            return Jet._raw([c * x for x in self.coef], self.val)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        n = min(len(self.coef), len(o.coef))
        if n == 0:
            # unknown times anything: only the valuation bound survives
            return Jet([], min(self.val + o.val + len(self.coef), self.val + o.val + len(o.coef)))
        a, b = self.coef, o.coef
        out = [_ZERO] * n
        for i in range(n):
            if a[i] == 0:
                continue
            for j in range(n - i):
                out[i + j] += a[i] * b[j]
        return Jet(out, self.val + o.val)

    __rmul__ = __mul__

    def _inverse(self) -> "Jet":
        if not self.coef:
            raise DivisionByZero("division by a jet with no known nonzero term")
        a = self.coef
        n = len(a)
        inv = [_ZERO] * n
        inv[0] = 1 / a[0]
        for m in range(1, n):
            s = sum(a[k] * inv[m - k] for k in range(1, m + 1))
            inv[m] = -s * inv[0]
        return Jet(inv, -self.val)

    def __truediv__(self, other):
        if _is_plain_rational(other) and other != 0:
            c = 1 / _mpq(other)
            return Jet._raw([c * x for x in self.coef], self.val)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o._inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self._inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return Jet.const(1) / (self ** (-n))
        out = Jet.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    __hash__ = None

    def __repr__(self):
        terms = [f"{c}*e^{self.val + k}" for k, c in enumerate(self.coef[:4]) if c]
        return "Jet(" + " + ".join(terms) + f" + O(e^{self.val + len(self.coef)}))"


def _gen_binom(n: int, k: int) -> Fraction:
    out = Fraction(1)
    for i in range(k):
        out = out * (n - i) / (i + 1)
    return out


# ---------------------------------------------------------------------------
# Pochhammer symbols, q-numbers, q-factorials

def _one_like(*vals):
    """The number 1 in the arithmetic of ``vals`` (jet, float or Fraction)."""
    for v in vals:
        if isinstance(v, Jet):
            return Jet.const(1)
    for v in vals:
        if isinstance(v, float):
            return 1.0
    return Fraction(1)


def q_pochhammer(a, q, n: int):
    """(a; q)_n for any integer n, with the reciprocal convention for n < 0."""
    if n >= 0:
        out = _one_like(a, q)
        qj = 1
        for _ in range(n):
            out = out * (1 - qj * a)
            qj = qj * q
        return out
    out = _one_like(a, q)
    qinv = 1 / q
    qj = qinv
    for _ in range(-n):
        f = 1 - qj * a
        if _is_zero(f):
            raise DivisionByZero(f"pole of (a; q)_{n} at a = {a!r}")
        out = out / f
        qj = qj * qinv
    return out


def _check_base(q):
    if q == 0 or q == 1 or q == -1:
        raise InvalidBase(f"q = {q} is not an admissible base")


def q_number(n: int, q):
    """The symmetric q-integer [n] = (q^n - q^-n)/(q - q^-1)."""
    _check_base(q)
    return (q ** n - q ** (-n)) / (q - 1 / q)


def q_factorial(n: int, q):
    """[n]! = (q^2; q^2)_n / (q^-1 - q)^n * q^(-n(n+1)/2), n >= 0."""
    if n < 0:
        raise ValueError("q_factorial needs n >= 0")
    _check_base(q)
    return q_pochhammer(q * q, q * q, n) / (1 / q - q) ** n * q ** (-(n * (n + 1) // 2))


def q_factorial_ratio(a, n: int, q):
    """[a+n]!/[a]! = (q^(2(a+1)); q^2)_n / (q^-1 - q)^n * q^(-na - n(n+1)/2).

    ``a`` may be any real (an int or Fraction with even denominator gives an
    exact value only when the powers stay rational; pass an int for exact).
    """
    _check_base(q)
    a = Fraction(a) if not isinstance(a, float) else a
    e_lead = 2 * (a + 1)
    e_tail = -n * a - Fraction(n * (n + 1), 2)
    if isinstance(a, Fraction) and e_lead.denominator == 1 and e_tail.denominator == 1:
        lead, tail = q ** int(e_lead), q ** int(e_tail)
    else:
        q = float(q)
        lead, tail = q ** float(e_lead), q ** float(e_tail)
    return q_pochhammer(lead, q * q, n) / (1 / q - q) ** n * tail


def q_binomial(n: int, k: int, q):
    """Gaussian binomial (q; q)_n / ((q; q)_k (q; q)_{n-k}); zero outside 0..n."""
    if k < 0 or k > n:
        return 0
    return q_pochhammer(q, q, n) / (q_pochhammer(q, q, k) * q_pochhammer(q, q, n - k))


# ---------------------------------------------------------------------------
# basic hypergeometric series

@dataclass
class HypergeometricSpec:
    """Parameters of a _p phi_r series sum_k z^k/(q;q)_k prod(a;q)_k / prod(b;q)_k."""

    upper: list
    lower: list
    base: Scalar
    argument: Scalar
    max_terms: int = 2000
    rtol: float = 1e-10

    def termination_index(self) -> Optional[int]:
        """Smallest n such that some upper parameter equals q^-n, else None."""
        q = self.base
        best = None
        for a in self.upper:
            n = _power_index(a, q, self.max_terms, self.rtol)
            if n is not None and (best is None or n < best):
                best = n
        return best


def _power_index(a, q, max_n: int, rtol: float) -> Optional[int]:
    """Return n >= 0 with a == q^-n (exactly or to rtol), or None."""
    if isinstance(a, Jet):
        return None
    if a == 0:
        return None
    exact = is_exact(a, q)
    if exact:
        qinv = 1 / q
        p = Fraction(1)
        for n in range(max_n + 1):
            if p == a:
                return n
            p *= qinv
            # |q^-n| runs away monotonically when |q| != 1; stop once past |a|
            if abs(q) < 1 and abs(p) > abs(a) and abs(p) > 1:
                break
            if abs(q) > 1 and abs(p) < abs(a) and abs(p) < 1:
                break
        return None
    qf, af = float(q), float(a)
    if af <= 0 and qf > 0:
        return None
    try:
        n = round(-math.log(abs(af)) / math.log(abs(qf)))
    except (ValueError, ZeroDivisionError):
        return None
    if 0 <= n <= max_n and _close(af, qf ** (-n), rtol):
        return n
    return None


def _series_sum(term_ratio, n_terms: Optional[int], exact: bool, max_terms: int, one=1):
    """Sum terms t_0 = 1, t_{k+1} = t_k * term_ratio(k)."""
    total = one
    t = one
    if n_terms is not None:
        for k in range(n_terms):
            t = t * term_ratio(k)
            total = total + t
        return total
    if exact:
        raise NonTerminatingExact("exact mode requires a terminating series")
    for k in range(max_terms):
        t = t * term_ratio(k)
        total = total + t
        if abs(t) <= 1e-16 * abs(total):
            return total
    raise NoConvergence(f"series did not converge in {max_terms} terms")


def basic_hypergeometric(spec: HypergeometricSpec):
    """Sum the _p phi_r series of ``spec``.

    Terminating series are summed exactly up to the termination index; non-
    terminating series are only allowed in float mode.
    """
    q, z = spec.base, spec.argument
    exact = is_exact(q, z, *spec.upper, *spec.lower)
    n_stop = spec.termination_index()
    one = _one_like(q, z, *spec.upper, *spec.lower)
    if _is_zero(z):
        return one

    def ratio(k):
        num = z
        den = 1 - q ** (k + 1)
        for a in spec.upper:
            num = num * (1 - a * q ** k)
        for b in spec.lower:
            den = den * (1 - b * q ** k)
        if _is_zero(den):
            raise DivisionByZero(f"lower parameter pole at term {k + 1}")
        return num / den

    return _series_sum(ratio, n_stop, exact, spec.max_terms, one)


def very_well_poised(a1, rest: Sequence, q, z, max_terms: int = 2000,
                     n_terms: Optional[int] = None):
    """_{r+1}W_r(a1; a4, ..., a_{r+1}; q, z).

    The k-th term is z^k (a1;q)_k/(q;q)_k (1-a1 q^2k)/(1-a1)
    prod_j (a_j;q)_k / (q a1/a_j; q)_k. ``n_terms`` forces the upper summation
    index (used when termination comes from a parameter that the caller knows
    but that is hidden inside a deformed jet).
    """
    if _is_zero(1 - a1):
        raise DivisionByZero("very-well-poised series needs a1 != 1")
    exact = is_exact(a1, q, z, *rest)
    if n_terms is None:
        spec = HypergeometricSpec(list(rest) + [a1], [], q, z, max_terms)
        n_terms = spec.termination_index()
    one = _one_like(a1, q, z, *rest)
    if _is_zero(z):
        return one
    if n_terms is not None:
        total = 0 * one
        t = one
        for k in range(n_terms + 1):
            if k > 0:
                num = z * (1 - a1 * q ** (k - 1))
                den = 1 - q ** k
                for a in rest:
                    num = num * (1 - a * q ** (k - 1))
                    den = den * (1 - q * a1 / a * q ** (k - 1))
                if _is_zero(den):
                    raise DivisionByZero(f"very-well-poised pole at term {k}")
                t = t * num / den
            total = total + t * (1 - a1 * q ** (2 * k)) / (1 - a1)
        return total
    if exact:
        raise NonTerminatingExact("exact mode requires a terminating series")
    total = 0.0
    t = 1.0
    for k in range(max_terms):
        if k > 0:
            num = z * (1 - a1 * q ** (k - 1))
            den = 1 - q ** k
            for a in rest:
                num *= 1 - a * q ** (k - 1)
                den *= 1 - q * a1 / a * q ** (k - 1)
            t = t * num / den
        term = t * (1 - a1 * q ** (2 * k)) / (1 - a1)
        total += term
        if k > 0 and abs(term) <= 1e-16 * abs(total):
            return total
    raise NoConvergence(f"series did not converge in {max_terms} terms")


# ---------------------------------------------------------------------------
# orthogonal polynomials

def racah_wilson(n: int, x: int, alpha, beta, gamma, M: int, q):
    """W_n(x; alpha, beta, gamma, M | q), a terminating 4phi3 at argument q."""
    spec = HypergeometricSpec(
        [q ** (-n), q ** (n + 1) * alpha * beta, q ** (-x), q ** (x - M) * gamma],
        [q * alpha, q * beta * gamma, q ** (-M)],
        q, q)
    return basic_hypergeometric(spec)


def rw_weight(x: int, alpha, beta, gamma, M: int, q):
    """Orthogonality weight w(x) of the Racah-Wilson polynomials."""
    g = q ** (-M) * gamma
    num = (q_pochhammer(g, q, x) * (1 - q ** (2 * x - M) * gamma)
           * q_pochhammer(alpha * q, q, x) * q_pochhammer(beta * gamma * q, q, x)
           * q_pochhammer(q ** (-M), q, x))
    den = (q_pochhammer(q, q, x) * (1 - g) * q_pochhammer(g / alpha, q, x)
           * q_pochhammer(q ** (-M) / beta, q, x) * q_pochhammer(gamma * q, q, x)
           * (alpha * beta * q) ** x)
    return num / den


def rw_norm(n: int, alpha, beta, gamma, M: int, q):
    """Squared norm h_n of W_n against rw_weight.

    The four ratios of infinite products in h_n have arguments differing by
    q^M, so they reduce to finite Pochhammer symbols of length M.
    """
    ab = alpha * beta
    head = (q_pochhammer(q, q, n) * (1 - ab * q) * q_pochhammer(beta * q, q, n)
            * q_pochhammer(alpha / gamma * q, q, n) * q_pochhammer(ab * q ** (M + 2), q, n)
            * (q ** (-M) * gamma) ** n)
    head_den = (q_pochhammer(ab * q, q, n) * (1 - ab * q ** (2 * n + 1))
                * q_pochhammer(alpha * q, q, n) * q_pochhammer(beta * gamma * q, q, n)
                * q_pochhammer(q ** (-M), q, n))
    inf_num = q_pochhammer(q ** (1 - M) * gamma, q, M) * q_pochhammer(q ** (-M - 1) / ab, q, M)
    inf_den = q_pochhammer(q ** (-M) * gamma / alpha, q, M) * q_pochhammer(q ** (-M) / beta, q, M)
    return head / head_den * inf_num / inf_den


def _float_qfact(n: int, q: float) -> float:
    return float(q_factorial(n, float(q)))


def _delta(j1, j2, j3, q: float) -> float:
    a, b, c = -j1 + j2 + j3, j1 - j2 + j3, j1 + j2 - j3
    return math.sqrt(_float_qfact(int(a), q) * _float_qfact(int(b), q) * _float_qfact(int(c), q)
                     / _float_qfact(int(j1 + j2 + j3 + 1), q))


def _triangle_ok(j1, j2, j3) -> bool:
    vals = (-j1 + j2 + j3, j1 - j2 + j3, j1 + j2 - j3)
    return all(v >= 0 and float(v).is_integer() for v in vals)


def q6j(a, b, e, d, c, f, q) -> float:
    """The q-6j symbol {a b e; d c f}_q for half-integer spins (float).

    Returns 0 when any of the four triangle conditions fails.
    """
    a, b, e, d, c, f = (Fraction(v) for v in (a, b, e, d, c, f))
    q = float(q)
    triads = ((a, b, e), (a, c, f), (c, e, d), (d, b, f))
    if not all(_triangle_ok(*t) for t in triads):
        return 0.0
    pref = (-1) ** int(2 * c + 2 * d + 2 * e)
    pref *= math.sqrt(float(q_number(int(2 * e + 1), q) * q_number(int(2 * f + 1), q)))
    for t in triads:
        pref *= _delta(*t, q)
    lo = int(max(0, b + c - e - f, a + d - e - f))
    hi = int(min(c + d - e, b + d - f, a + c - f, a + b - e))
    total = 0.0
    for w in range(lo, hi + 1):
        num = (-1) ** w * _float_qfact(int(a + b + c + d + 1 - w), q)
        den = (_float_qfact(int(c + d - e - w), q) * _float_qfact(int(b + d - f - w), q)
               * _float_qfact(int(a + c - f - w), q) * _float_qfact(int(a + b - e - w), q)
               * _float_qfact(w, q) * _float_qfact(int(w + e + f - b - c), q)
               * _float_qfact(int(w - a - d + e + f), q))
        total += num / den
    return pref * total


def six_j_racah_wilson_parameters(a, b, e, d, c, f, q):
    """Map a 6j sextuple to (n, x, alpha, beta, gamma, M) for base q^2.

    n = a+b-e, x = c+d-e, M = a+b+c+d+1, alpha = q^(2(-a-d+e+f)),
    beta = q^(2(-a-b-c+d-1)), gamma = q^(2(a+e+f-d+1)). With this beta the
    polynomial W_n(x; alpha, beta, gamma, M | q^2) is exactly the 4phi3 that
    the alternating 6j sum collapses to.
    """
    a, b, e, d, c, f = (Fraction(v) for v in (a, b, e, d, c, f))
    n, x, M = a + b - e, c + d - e, a + b + c + d + 1
    ints = [n, x, M, 2 * (-a - d + e + f), 2 * (-a - b - c + d - 1), 2 * (a + e + f - d + 1)]
    if any(v.denominator != 1 for v in ints):
        raise ValueError("sextuple does not give integer Racah-Wilson data")
    n, x, M, ea, eb, eg = (int(v) for v in ints)
    return n, x, q ** ea, q ** eb, q ** eg, M


def _tetrahedral_images(a, b, e, d, c, f):
    """The 24 images of {a b e; d c f} under column permutations and
    upper/lower swaps in pairs of columns."""
    cols = ((a, d), (b, c), (e, f))
    for perm in itertools.permutations(cols):
        for flips in ((0, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1)):
            cs = [(y, x) if fl else (x, y) for (x, y), fl in zip(perm, flips)]
            yield cs[0][0], cs[1][0], cs[2][0], cs[0][1], cs[1][1], cs[2][1]


def _q6j_prefactor(a, b, e, d, c, f, q: float) -> float:
    """The non-symmetric part (-1)^(2c+2d+2e+a+b+c+d) sqrt([2e+1][2f+1]) of q6j."""
    sign = (-1) ** int(2 * c + 2 * d + 2 * e + a + b + c + d)
    return sign * math.sqrt(float(q_number(int(2 * e + 1), q) * q_number(int(2 * f + 1), q)))


def q6j_racah_wilson(a, b, e, d, c, f, q) -> float:
    """The q-6j symbol evaluated through W_n(x; alpha, beta, gamma, M | q^2).

    q6j divided by its prefactor (see ``_q6j_prefactor``) is invariant under
    the tetrahedral symmetries. The sextuple is moved to an image with
    e + f >= b + c and e + f >= a + d, where the alternating sum starts at
    w = 0; there the symbol is the product of the triangle coefficients, the
    leading term of the sum and the Racah-Wilson polynomial.
    """
    a, b, e, d, c, f = (Fraction(v) for v in (a, b, e, d, c, f))
    qf = float(q)
    triads = ((a, b, e), (a, c, f), (c, e, d), (d, b, f))
    if not all(_triangle_ok(*t) for t in triads):
        return 0.0
    image = next(t for t in _tetrahedral_images(a, b, e, d, c, f)
                 if t[2] + t[5] >= t[1] + t[4] and t[2] + t[5] >= t[0] + t[3])
    ta, tb, te, td, tc, tf = image
    n, x, al, be, ga, M = six_j_racah_wilson_parameters(ta, tb, te, td, tc, tf, qf)
    core = 1.0
    for t in ((ta, tb, te), (ta, tc, tf), (tc, te, td), (td, tb, tf)):
        core *= _delta(*t, qf)
    core *= _float_qfact(int(ta + tb + tc + td + 1), qf) / (
        _float_qfact(int(tc + td - te), qf) * _float_qfact(int(tb + td - tf), qf)
        * _float_qfact(int(ta + tc - tf), qf) * _float_qfact(int(ta + tb - te), qf)
        * _float_qfact(int(te + tf - tb - tc), qf) * _float_qfact(int(te + tf - ta - td), qf))
    core *= float(racah_wilson(n, x, al, be, ga, M, qf * qf))
    # the core of the image carries (-1)^(ta+tb+tc+td); strip it
    core *= (-1) ** int(ta + tb + tc + td)
    return _q6j_prefactor(a, b, e, d, c, f, qf) * core


def dual_q_krawtchouk(n: int, x: int, c, N: int, q):
    """K_n(x; c, N | q) = 3phi2(q^-n, q^-x, -c q^(x-N); q^-N, 0; q, q)."""
    spec = HypergeometricSpec([q ** (-n), q ** (-x), -c * q ** (x - N)], [q ** (-N), 0], q, q)
    return basic_hypergeometric(spec)


def krawtchouk_weight(x: int, c, N: int, q):
    """Weight of x in the dual q-Krawtchouk orthogonality relation."""
    num = q_pochhammer(-c * q ** (-N), q, x) * q_pochhammer(q ** (-N), q, x)
    den = q_pochhammer(q, q, x) * q_pochhammer(-c * q, q, x)
    return (num / den * (1 + c * q ** (2 * x - N)) / (1 + c * q ** (-N))
            * (-c) ** (-x) * q ** (x * (2 * N - x)))


def krawtchouk_norm(n: int, c, N: int, q):
    """Right-hand side of the dual q-Krawtchouk orthogonality relation at m = n."""
    return (q_pochhammer(-1 / c, q, N) * q_pochhammer(q, q, n) / q_pochhammer(q ** (-N), q, n)
            * (-c * q ** (-N)) ** n)


def rescaled_krawtchouk(n: int, x: int, rho: int, N: int, q):
    """k(n, x; rho; N, q) = c_k K_n(x; q^(2 rho), N; q^2).

    c_k = (-1)^n q^(-n rho) q^(n(N-1)/2). The half-integer power is exact only
    when n(N-1) is even; otherwise the float square root is used.
    """
    ck = (-1) ** n * q ** (-n * rho)
    e2 = n * (N - 1)
    if e2 % 2 == 0:
        ck = ck * q ** (e2 // 2)
    else:
        ck = float(ck) * float(q) ** (e2 / 2)
    return ck * dual_q_krawtchouk(n, x, q ** (2 * rho), N, q * q)


# ---------------------------------------------------------------------------
# q-exponentials

def q_exp_small(z, q, K: int):
    """Truncation at order K of e_q(z) = sum z^n / (q; q)_n."""
    return sum(z ** n / q_pochhammer(q, q, n) for n in range(K + 1))


def q_exp_big(z, q, K: int):
    """Truncation at order K of E_q(z) = sum q^(n(n-1)/2) z^n / (q; q)_n."""
    return sum(q ** (n * (n - 1) // 2) * z ** n / q_pochhammer(q, q, n) for n in range(K + 1))
