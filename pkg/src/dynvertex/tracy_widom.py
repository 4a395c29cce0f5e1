"""Tracy-Widom GUE distribution F2 as a Fredholm determinant of the Airy kernel.

Ai is evaluated by its Maclaurin series for |x| <= 8 (in extended precision,
since the two series cancel strongly for positive x) and by the standard
asymptotic expansions beyond. F2(s) = det(I - K_Ai) on (s, inf) is computed
by Nystrom discretisation with Gauss-Legendre nodes on a finite interval,
and every value is checked by doubling the quadrature order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Tuple

import mpmath
import numpy as np

__all__ = [
    "NotConverged",
    "F2Evaluator",
    "airy",
    "airy_prime",
    "airy_pair",
    "airy_series",
    "airy_asymptotic",
    "f2_cdf",
    "SERIES_RADIUS",
]

SERIES_RADIUS = 8.0
_SERIES_DPS = 40
# number of asymptotic terms; the expansions are used only for |x| > 7
_ASYM_TERMS = 24


class NotConverged(RuntimeError):
    """The quadrature-order doubling test failed at the maximal order."""


# ---------------------------------------------------------------------------
# Airy function

@lru_cache(maxsize=None)
def _airy_constants():
    with mpmath.workdps(_SERIES_DPS):
        c1 = 1 / (mpmath.power(3, mpmath.mpf(2) / 3) * mpmath.gamma(mpmath.mpf(2) / 3))
        c2 = 1 / (mpmath.power(3, mpmath.mpf(1) / 3) * mpmath.gamma(mpmath.mpf(1) / 3))
    return c1, c2


def airy_series(x: float) -> Tuple[float, float]:
    """(Ai(x), Ai'(x)) from the Maclaurin series Ai = c1 f - c2 g.

    f = sum 3^k (1/3)_k x^{3k}/(3k)!, g = sum 3^k (2/3)_k x^{3k+1}/(3k+1)!;
    summed in 40-digit arithmetic so that the cancellation for x > 0 is harmless.
    """
    c1, c2 = _airy_constants()
    with mpmath.workdps(_SERIES_DPS):
        X = mpmath.mpf(x)
        x3 = X ** 3
        eps = mpmath.mpf(10) ** (-_SERIES_DPS)
        # term recursions: f_k = x^{3k} / ((2*3)(5*6)...((3k-1)3k)), g_k similarly
        f = df = g = dg = mpmath.mpf(0)
        tf = mpmath.mpf(1)  # x^{3k} prod 1/((3j-1)(3j))
        tg = X              # x^{3k+1} prod 1/((3j)(3j+1))
        k = 0
        while True:
            f += tf
            g += tg
            if k > 0:
                df += tf * 3 * k / X if X != 0 else 0
            dg += tg * (3 * k + 1) / X if X != 0 else (1 if k == 0 else 0)
            k += 1
            tf = tf * x3 / ((3 * k - 1) * (3 * k))
            tg = tg * x3 / ((3 * k) * (3 * k + 1))
            if abs(tf) + abs(tg) < eps * (abs(f) + abs(g) + 1) and k > 3:
                break
        ai = c1 * f - c2 * g
        aip = c1 * df - c2 * dg
    return float(ai), float(aip)


@lru_cache(maxsize=None)
def _asym_coefficients(n: int):
    """u_k and v_k of the Airy asymptotic expansions."""
    u = [1.0]
    v = [1.0]
    for k in range(1, n):
        uk = u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
        u.append(uk)
        v.append(-uk * (6 * k + 1) / (6 * k - 1))
    return u, v


def airy_asymptotic(x: float) -> Tuple[float, float]:
    """(Ai(x), Ai'(x)) from the large-|x| asymptotic expansions."""
    u, v = _asym_coefficients(_ASYM_TERMS)
    if x > 0:
        zeta = 2.0 / 3.0 * x ** 1.5
        s_u = s_v = 0.0
        best = math.inf
        for k in range(_ASYM_TERMS):
            tu = (-1) ** k * u[k] / zeta ** k
            if abs(tu) > best:
                break
            best = abs(tu)
            s_u += tu
            s_v += (-1) ** k * v[k] / zeta ** k
        pref = math.exp(-zeta) / (2.0 * math.sqrt(math.pi))
        return pref * x ** -0.25 * s_u, -pref * x ** 0.25 * s_v
    y = -x
    zeta = 2.0 / 3.0 * y ** 1.5
    pu = qu = pv = qv = 0.0
    for k in range(_ASYM_TERMS // 2):
        z2k = zeta ** (2 * k)
        pu += (-1) ** k * u[2 * k] / z2k
        qu += (-1) ** k * u[2 * k + 1] / (z2k * zeta)
        pv += (-1) ** k * v[2 * k] / z2k
        qv += (-1) ** k * v[2 * k + 1] / (z2k * zeta)
    th = zeta + math.pi / 4
    rp = 1.0 / math.sqrt(math.pi)
    ai = rp * y ** -0.25 * (math.sin(th) * pu - math.cos(th) * qu)
    aip = -rp * y ** 0.25 * (math.cos(th) * pv + math.sin(th) * qv)
    return ai, aip


@lru_cache(maxsize=1 << 16)
def airy_pair(x: float) -> Tuple[float, float]:
    """(Ai(x), Ai'(x)) for finite x."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("Airy argument must be finite")
    if abs(x) <= SERIES_RADIUS:
        return airy_series(x)
    return airy_asymptotic(x)


def airy(x: float) -> float:
    return airy_pair(x)[0]


def airy_prime(x: float) -> float:
    return airy_pair(x)[1]


# ---------------------------------------------------------------------------
# F2

@dataclass
class F2Evaluator:
    """Gauss-Legendre Nystrom evaluator of det(I - K_Ai) on (s, inf).

    The half-line is cut at max(s, 0) + ``cutoff``; the Airy kernel there is
    below 1e-20. ``order`` is the starting number of nodes; each evaluation
    compares orders n and 2n and doubles n until the two agree to ``tol``.
    """

    order: int = 32
    cutoff: float = 12.0
    max_order: int = 512
    tol: float = 1e-9
    _nodes: Dict[int, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict, repr=False)

    def nodes(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        if n not in self._nodes:
            self._nodes[n] = np.polynomial.legendre.leggauss(n)
        return self._nodes[n]

    def determinant(self, s: float, n: int) -> float:
        lo = float(s)
        hi = max(lo, 0.0) + self.cutoff
        t, w = self.nodes(n)
        x = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * w
        pairs = np.array([airy_pair(float(v)) for v in x])
        a, ap = pairs[:, 0], pairs[:, 1]
        dx = x[:, None] - x[None, :]
        np.fill_diagonal(dx, 1.0)
        K = (np.outer(a, ap) - np.outer(ap, a)) / dx
        np.fill_diagonal(K, ap ** 2 - x * a ** 2)
        sw = np.sqrt(w)
        A = np.eye(n) - sw[:, None] * K * sw[None, :]
        return float(np.linalg.det(A))

    def evaluate(self, s: float) -> Tuple[float, int, float]:
        """(F2(s), order used, doubling difference)."""
        n = self.order
        prev = self.determinant(s, n)
        while 2 * n <= self.max_order:
            cur = self.determinant(s, 2 * n)
            diff = abs(cur - prev)
            if diff < self.tol:
                return min(max(cur, 0.0), 1.0), 2 * n, diff
            n, prev = 2 * n, cur
        raise NotConverged(f"F2({s}) did not converge up to order {self.max_order}")


_DEFAULT = F2Evaluator()


def f2_cdf(s: float, ev: F2Evaluator | None = None) -> float:
    """Tracy-Widom GUE distribution function F2(s)."""
    ev = _DEFAULT if ev is None else ev
    s = float(s)
    if s >= 40.0:
        return 1.0
    return ev.evaluate(s)[0]
