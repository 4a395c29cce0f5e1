"""Duality functions between the dynamic and the reversed non-dynamic models.

Each function is a product over sites of a local factor depending on the
two occupations at that site and on prefix sums to its left. Occupations
and spins are carried by :class:`Configuration`; spins are stored as
capacities 2J. The dynamic parameter enters as ``alpha = e^{-2 pi i lambda}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Tuple

from .qcalc import DivisionByZero, Scalar, q_binomial, q_factorial, q_pochhammer
from .vertex_weights import QParams

__all__ = [
    "Configuration",
    "DomainError",
    "DualityKind",
    "eval_Dc",
    "eval_Dort",
    "eval_Dnew",
    "eval_Dtr",
    "eval_duality",
    "measure_w",
    "measure_W",
    "script_W",
    "ground_state_G",
    "ground_state_G_squared",
    "q_power",
]


class DomainError(ValueError):
    """A parameter lies outside the domain where a formula is real/defined."""


@dataclass(frozen=True)
class Configuration:
    """Occupations mu_1..mu_N with site capacities 2J_1..2J_N."""

    occupations: Tuple[int, ...]
    spins: Tuple[int, ...]
    _prefix: Tuple[int, ...] = field(init=False, repr=False, compare=False)
    _cap_prefix: Tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        occ, caps = tuple(self.occupations), tuple(self.spins)
        if len(occ) != len(caps):
            raise ValueError("occupations and spins differ in length")
        for m, c in zip(occ, caps):
            if c <= 0 or not 0 <= m <= c:
                raise ValueError(f"occupation {m} outside 0..{c}")
        object.__setattr__(self, "occupations", occ)
        object.__setattr__(self, "spins", caps)
        pre, cpre = [0], [0]
        for m, c in zip(occ, caps):
            pre.append(pre[-1] + m)
            cpre.append(cpre[-1] + c)
        object.__setattr__(self, "_prefix", tuple(pre))
        object.__setattr__(self, "_cap_prefix", tuple(cpre))

    def __len__(self):
        return len(self.occupations)

    def N(self, a: int, b: int) -> int:
        """N_{[a,b]} = mu_a + ... + mu_b (1-based, empty range gives 0)."""
        if b < a:
            return 0
        return self._prefix[b] - self._prefix[a - 1]

    def caps(self, a: int, b: int) -> int:
        """Sum of capacities 2J_a + ... + 2J_b."""
        if b < a:
            return 0
        return self._cap_prefix[b] - self._cap_prefix[a - 1]

    def total(self) -> int:
        return self._prefix[-1]


@dataclass(frozen=True)
class DualityKind:
    """One of ``dc`` (with c), ``dort``, ``dnew`` (with c0) or ``dtr``."""

    kind: str
    c: int = 0
    c0: int = 0

    def __post_init__(self):
        if self.kind not in ("dc", "dort", "dnew", "dtr"):
            raise ValueError(f"unknown duality kind {self.kind!r}")

    @property
    def needs_nondynamic(self) -> bool:
        """D_new and D_tr intertwine the alpha = 0 dynamic model."""
        return self.kind in ("dnew", "dtr")


def _check_pair(mu: Configuration, xi: Configuration):
    if mu.spins != xi.spins:
        raise ValueError("mu and xi must live on the same sites")


def q_power(q: Scalar, e) -> Scalar:
    """q**e for integer or half-integer e, exact when sqrt(q) is rational."""
    e = Fraction(e)
    if e.denominator == 1:
        return q ** int(e)
    if isinstance(q, float):
        return q ** float(e)
    q = Fraction(q)
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if e.denominator == 2 and q > 0 and n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d) ** int(2 * e)
    raise ValueError(f"q**{e} is irrational at q = {q}; pass q as a rational square")


@lru_cache(maxsize=1 << 16)
def _balanced_sum(n: int, x: int, cap: int, third, low, qq):
    """(low; q^2)_n * 3phi2(q^{-2n}, q^{-2x}, third; q^{-2 cap}, low; q^2, q^2).

    The prefactor is folded into each term as (low q^{2k}; q^2)_{n-k}, which
    removes the apparent poles of the lower parameter ``low``.
    """
    total = 0
    t = 1  # k-th series coefficient without the lower ``low`` Pochhammer
    a, b, inv = qq ** (-n), qq ** (-x), qq ** (-cap)
    qk = 1
    for k in range(min(n, x) + 1):
        if k:
            t = t * (1 - a * qk) * (1 - b * qk) * (1 - third * qk) / ((1 - inv * qk) * (1 - qq * qk)) * qq
            qk = qk * qq
        total = total + t * q_pochhammer(low * qk, qq, n - k)
    return total


@lru_cache(maxsize=1 << 18)
def _site_factor(kind: str, cap: int, m: int, x: int, nm: int, nx: int, nc: int,
                 const: int, q, a):
    """Local factor of site i given N_{[1,i-1]} of mu, xi and of the capacities.

    ``const`` is c for D_c and C0 for D_new; unused otherwise.
    """
    qq = q * q
    if kind == "dc":
        low = a * q ** (2 * (-const + nm + nx - nc + m - cap))
        third = a * q ** (2 * (2 * nm - nc + m - cap))
        return (_balanced_sum(cap - m, x, cap, third, low, qq)
                * q ** (-2 * cap * nx - 2 * x * (nm + m)))
    if kind == "dnew":
        low = q ** (2 * (const + nm + nx - nc + m - cap))
        return (_balanced_sum(cap - m, x, cap, 0 * q, low, qq)
                * q ** (-2 * cap * nx - 2 * x * (nm + m)))
    if kind == "dort":
        phi = _ort_sum(cap - m, x, cap, a * q ** (2 * (2 * nm - nc + m)), q)
        return phi * q ** (-2 * cap * (nx + x) - 2 * x * nm)
    # dtr
    if m < x:
        return 0 * q
    fac = q_factorial(m, q) * q_factorial(cap - x, q) / q_factorial(m - x, q)
    return fac * q ** (-2 * cap * nx + m * x + 2 * m * nx - cap * x)


def _product(kind: str, mu: Configuration, xi: Configuration, const: int, q, a):
    _check_pair(mu, xi)
    out = 1
    for i in range(1, len(mu) + 1):
        f = _site_factor(kind, mu.spins[i - 1], mu.occupations[i - 1], xi.occupations[i - 1],
                         mu.N(1, i - 1), xi.N(1, i - 1), mu.caps(1, i - 1), const, q, a)
        if f == 0:
            return f
        out = out * f
    return out


def eval_Dc(mu: Configuration, xi: Configuration, c: int, params: QParams):
    """D_c(mu, xi); alpha = e^{-2 pi i lambda} replaces the exponential.

    Per site: (alpha q^{2(-c + N_{[1,i-1]}(mu+xi-2J) + mu_i - 2J_i)}; q^2)_{2J_i-mu_i}
    times the 3phi2 in base q^2 and the monomial
    q^{-4 J_i N_{[1,i-1]}(xi) - 2 xi_i N_{[1,i]}(mu)}.
    """
    return _product("dc", mu, xi, c, params.q, params.alpha)


@lru_cache(maxsize=1 << 16)
def _ort_sum(n: int, x: int, cap: int, third, q):
    """3phi2(q^{2n}, q^{2x}, third; q^{4J}, 0; q^{-2}, q^{-2}) with n = 2J - mu."""
    p = 1 / (q * q)
    a, b, low = p ** (-n), p ** (-x), p ** (-cap)
    total = t = 1
    pk = 1
    for _ in range(min(n, x)):
        t = t * (1 - a * pk) * (1 - b * pk) * (1 - third * pk) / ((1 - low * pk) * (1 - p * pk)) * p
        pk = pk * p
        total = total + t
    return total


def eval_Dort(mu: Configuration, xi: Configuration, params: QParams):
    """D_ort(mu, xi): product of 3phi2 in base q^{-2} times
    q^{-4 J_i N_{[1,i]}(xi) - 2 xi_i N_{[1,i-1]}(mu)}."""
    return _product("dort", mu, xi, 0, params.q, params.alpha)


def eval_Dnew(mu: Configuration, xi: Configuration, C0: int, params: QParams):
    """Non-dynamic duality obtained from D_c as alpha -> 0 with alpha q^{-2c} = q^{2 C0}.

    Per site: (q^{2(C0 + N_{[1,i-1]}(mu+xi-2J) + mu_i - 2J_i)}; q^2)_{2J_i - mu_i}
    times 3phi2(q^{-2(2J_i-mu_i)}, q^{-2 xi_i}, 0; q^{-4J_i}, same; q^2, q^2)
    times the monomial of D_c.
    """
    return _product("dnew", mu, xi, C0, params.q, 0 * params.q)


def eval_Dtr(mu: Configuration, xi: Configuration, params: QParams):
    """Triangular duality: prod 1_{mu_i >= xi_i} [mu_i]! [2J_i - xi_i]! / [mu_i - xi_i]!
    q^{-4 J_i N_{[1,i-1]}(xi) + mu_i xi_i + 2 mu_i N_{[1,i-1]}(xi) - 2 J_i xi_i}."""
    return _product("dtr", mu, xi, 0, params.q, 0 * params.q)


def eval_duality(mu: Configuration, xi: Configuration, kind: DualityKind, params: QParams):
    if kind.kind == "dc":
        return eval_Dc(mu, xi, kind.c, params)
    if kind.kind == "dort":
        return eval_Dort(mu, xi, params)
    if kind.kind == "dnew":
        return eval_Dnew(mu, xi, kind.c0, params)
    return eval_Dtr(mu, xi, params)


# ---------------------------------------------------------------------------
# reversible measures

def _sym_binomial(n: int, k: int, q):
    """[n choose k] built from the symmetric q-factorials [n]!."""
    return q_factorial(n, q) / (q_factorial(k, q) * q_factorial(n - k, q))


def measure_w(xi: Configuration, params: QParams):
    """Reversible measure w(xi) on the non-dynamic side, normalized so that
    sum_mu D_ort(mu, xi) D_ort(mu, xi') W(mu) = delta / w(xi) holds exactly.

    It is the product of q-binomials [2J_i choose xi_i] (symmetric q-factorials)
    times q^{sum_i xi_i (2J_i + 2 N_{[i+1,N]}(2J))} and the particle-number
    factor (-q^{2 C + 1} / alpha)^{|xi|}, C = N_{[1,N]}(2J).
    """
    q, a = params.q, params.alpha
    if a == 0:
        raise DomainError("w needs alpha != 0")
    n = len(xi)
    C = xi.caps(1, n)
    e = 0
    out = 1
    for i in range(1, n + 1):
        cap, x = xi.spins[i - 1], xi.occupations[i - 1]
        e += x * (cap + 2 * xi.caps(i + 1, n))
        out = out * _sym_binomial(cap, x, q)
    return out * q ** e * (-q ** (2 * C + 1) / a) ** xi.total()


def _script_W_power(x: int, N: int, R, q):
    """script W with q^{2 rho} passed as R."""
    q2 = q * q
    qN = q ** (-2 * N)
    return ((1 + R * qN * q ** (4 * x)) / (1 + R * qN)
            * q_pochhammer(-R * qN, q2, x) / q_pochhammer(-R * q2, q2, x)
            * R ** (-x) * q ** (-x * (1 + x - 2 * N))
            / q_pochhammer(-1 / R, q2, N)
            * q_binomial(N, x, q2))


def script_W(x: int, N: int, rho, q):
    """The weight script-W(x; q, N, rho) entering the measure W."""
    R = q ** (2 * rho)
    return _script_W_power(x, N, R, q)


def measure_W(mu: Configuration, params: QParams):
    """W(mu; q, J, lambda); requires -alpha > 0."""
    q, a = params.q, params.alpha
    if not -a > 0:
        raise DomainError("W needs -alpha > 0")
    out = 1
    for i in range(1, len(mu) + 1):
        cap, m = mu.spins[i - 1], mu.occupations[i - 1]
        s_m = 2 * mu.N(1, i - 1) - mu.caps(1, i - 1)
        # base q^{-1}: (q^{-1})^{2 rho} = -alpha q^{4 N_{[1,i-1]}(mu - J)}
        R = -a * q ** (2 * s_m)
        out = out * _script_W_power(cap - m, cap, R, 1 / q)
    return out


# ---------------------------------------------------------------------------
# ground-state transformation

def ground_state_G_squared(mu: Configuration, params: QParams):
    """<mu|G(lambda)|mu>^2, rational in q, alpha."""
    q, a = params.q, params.alpha
    out = 1
    for i in range(1, len(mu) + 1):
        cap, m = mu.spins[i - 1], mu.occupations[i - 1]
        s_m = 2 * mu.N(1, i) - mu.caps(1, i)
        num = q ** (2 * cap * mu.N(1, i - 1) + cap * m)
        den = (q_factorial(m, q) * q_factorial(cap - m, q)
               * q_pochhammer(a * q ** (2 + 2 * s_m), q * q, cap - m) ** 2)
        if den == 0:
            raise DivisionByZero("pole of the ground-state transformation")
        out = out * num / den
    return out


def ground_state_G(mu: Configuration, params: QParams) -> float:
    """<mu|G(lambda)|mu> in floating point."""
    q, a = float(params.q), float(params.alpha)
    out = 1.0
    for i in range(1, len(mu) + 1):
        cap, m = mu.spins[i - 1], mu.occupations[i - 1]
        s_m = 2 * mu.N(1, i) - mu.caps(1, i)
        num = q ** (cap * mu.N(1, i - 1) + cap * m / 2)
        den = (math.sqrt(q_factorial(m, q) * q_factorial(cap - m, q))
               * q_pochhammer(a * q ** (2 + 2 * s_m), q * q, cap - m))
        if den == 0:
            raise DivisionByZero("pole of the ground-state transformation")
        out *= num / den
    return out
