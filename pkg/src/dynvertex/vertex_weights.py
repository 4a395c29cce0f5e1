"""Vertex weights of the dynamic stochastic vertex models.

Conventions used throughout the package:

* ``q`` is the asymmetry parameter of the stochastic weights and ``z`` the
  spectral parameter; the fused weights :func:`fused_psi` are written in
  their own base, and :func:`s_weight` evaluates them at base ``q**2``.
* The dynamic parameter is carried as ``alpha = exp(-2 pi i lambda)``;
  ``alpha = 0`` is the non-dynamic limit.
* Spins are half-integers; a site of spin ``J`` carries ``0..2J`` arrows.
* An arrow configuration ``(i1, j1; i2, j2)`` lists vertical-in,
  horizontal-in, vertical-out and horizontal-out arrow counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from .qcalc import DivisionByZero, Jet, Scalar, is_exact, parse_scalar, q_pochhammer, very_well_poised

__all__ = [
    "QParams",
    "ArrowConfig",
    "borodin_weight",
    "fused_psi",
    "s_weight",
    "s_weight_table",
    "spin_half_S_matrix",
    "spin_half_T_rev_matrix",
    "pi_matrix",
    "two_spin",
]


def two_spin(spin) -> int:
    """Return the capacity 2J of a (half-)integer spin J."""
    t = Fraction(spin) * 2
    if t.denominator != 1 or t < 0:
        raise ValueError(f"spin {spin} is not a nonnegative half-integer")
    return int(t)


@dataclass(frozen=True)
class QParams:
    """Parameter bundle (q, z, alpha) plus the numeric mode.

    In exact mode all three values are Fractions. ``from_base_Q`` builds the
    bundle from Q = sqrt(q), which keeps half-integer powers of q rational.
    """

    q: Scalar
    z: Scalar
    alpha: Scalar = Fraction(0)
    mode: str = "exact"

    def __post_init__(self):
        if self.mode not in ("exact", "float"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "exact":
            for name in ("q", "z", "alpha"):
                v = getattr(self, name)
                if isinstance(v, float):
                    raise ValueError(f"exact mode needs rational {name}, got float {v}")
                object.__setattr__(self, name, Fraction(v))
        else:
            for name in ("q", "z", "alpha"):
                object.__setattr__(self, name, float(getattr(self, name)))
        if self.q in (0, 1, -1):
            raise ValueError("q must not be 0 or +-1")
        if self.z == 0:
            raise ValueError("z must be nonzero")

    @classmethod
    def from_base_Q(cls, Q, z, alpha=0, mode="exact") -> "QParams":
        return cls(Q * Q, z, alpha, mode)

    @classmethod
    def parse(cls, q: str, z: str, alpha: str = "0", mode: Optional[str] = None) -> "QParams":
        vals = [parse_scalar(v) for v in (q, z, alpha)]
        if mode is None:
            mode = "exact" if is_exact(*vals) else "float"
        return cls(*vals, mode=mode)

    def with_alpha(self, alpha) -> "QParams":
        return QParams(self.q, self.z, alpha, self.mode)

    @property
    def exact(self) -> bool:
        return self.mode == "exact"


@dataclass(frozen=True)
class ArrowConfig:
    i1: int
    j1: int
    i2: int
    j2: int

    def conserved(self) -> bool:
        return self.i1 + self.j1 == self.i2 + self.j2

    def key(self) -> str:
        return f"{self.i1},{self.j1},{self.i2},{self.j2}"


# ---------------------------------------------------------------------------
# six-vertex weights

def borodin_weight(kind: str, q, lambda_exp, w):
    """Dynamic stochastic six-vertex weight; ``lambda_exp`` is e^{2 pi i lambda}.

    ``w`` enters only through q^{1/2} w and q^{-1/2} w, so callers pass
    ``w`` together with a ``q`` that has a rational square root when they
    want exact output. Here ``q`` is passed as a pair ``(q, sqrt_q)`` or a
    plain float.
    """
    if isinstance(q, tuple):
        q, rq = q
    else:
        rq = math.sqrt(q)
    e = lambda_exp
    if kind in ("a0", "d1"):
        return 1 + 0 * e
    lo = 1 - w / rq
    if lo == 0 or e == 1:
        raise DivisionByZero("pole of the six-vertex weights")
    if kind == "a1":
        return (1 - rq * w) / lo * (1 / q - e) / (1 - e)
    if kind == "b0":
        return (1 - 1 / q) / lo * (rq * w - e) / (1 - e)
    if kind == "c1":
        return (rq - 1 / rq) * w / lo * (1 / (rq * w) - e) / (1 - e)
    if kind == "d0":
        return (1 / q - w / rq) / lo * (q - e) / (1 - e)
    raise ValueError(f"unknown weight kind {kind!r}")


# ---------------------------------------------------------------------------
# fused weights

def _psi_core(i1, j1, i2, j2, cap_v, cap_h, u, q, s, alpha, X, v):
    """The fused weight with q^{i1} -> X and q^{cap_h} -> v made explicit.

    ``alpha`` is e^{-2 pi i lambda}; kappa = q^{2 j1 - J} alpha with J the
    horizontal capacity, so 1/kappa = v q^{-2 j1} / alpha.
    """
    kinv = v * q ** (-2 * j1) / alpha
    J = cap_h
    poch = q_pochhammer
    pre = v ** j2 / X ** J * (u / s) ** j1
    num = (poch(X * q ** (1 - j2), q, j2) * poch(q ** j2 / v, q, j1)
           * poch(s * u * v, q, i1 - j2) * poch(s * s * X * q ** (-j2), q, j1))
    den = (poch(s * u, q, i1 + j1) * poch(q, q, j2) * poch(q ** j2 / v, q, j1 - j2))
    num2 = (poch(u / s * kinv / X, q, j2) * poch(q / (X * v * u * s) * kinv, q, j1)
            * poch(q * kinv, q, j1) * poch(q ** (j2 + 1) / (X * X * s * s) * kinv, q, i1 - j2))
    den2 = (poch(q ** (1 - j2) * kinv, q, j1)
            * poch(q ** (j2 + 1) / (X * v * s * s) * kinv, q, j1)
            * poch(q ** j2 / (X * X * v * s * s) * kinv, q, j2)
            * poch(q ** (2 * j2 + 1) / (X * X * v * s * s) * kinv, q, i1 - j2))
    a1 = q ** (-j2) * kinv
    rest = [q ** (-j1), q ** (-j2), q ** j1 / v * kinv, q / (X * s * s) * kinv,
            s / u * X * q ** (1 - j2), u * s * X * q ** (-j2) * v, kinv / X]
    w = very_well_poised(a1, rest, q, q, n_terms=min(j1, j2))
    return pre * num / den * num2 / den2 * w


def _psi_exact(i1, j1, i2, j2, cap_v, cap_h, u, q, s, alpha) -> Fraction:
    """Exact fused weight, resolving removable singularities by a limit.

    The closed form has 0/0 factors at integer data (for example a vanishing
    (q^{i1-j2+1}; q)_{j2} against a pole of the very-well-poised series). The
    weight is a rational function of X = q^{i1} and v = q^J, so these are
    deformed to X (1+eps), v (1+eps) and the limit eps -> 0 is taken. In the
    non-dynamic case alpha = 0 the same limit is taken with alpha = eps^2.
    """
    if alpha != 0:
        try:
            return _psi_core(i1, j1, i2, j2, cap_v, cap_h, u, q, s, alpha, q ** i1, q ** cap_h)
        except ZeroDivisionError:
            pass
    # the pole order is small for small spins: start cheap, refine on failure.
    # A nonzero alpha can itself sit on a removable singularity (e.g. alpha = u);
    # the last pass deforms it too.
    passes = [(p, False) for p in (4, 8, 16, 32)]
    if alpha != 0:
        passes += [(16, True), (32, True)]
    for n, (prec, move_alpha) in enumerate(passes):
        with Jet.precision(prec):
            if alpha == 0:
                aj = Jet.monomial(1, 2)
            elif move_alpha:
                aj = Jet.deformed(alpha, 3)
            else:
                aj = alpha
            X = Jet.deformed(q ** i1)
            v = Jet.deformed(q ** cap_h)
            try:
                return _psi_core(i1, j1, i2, j2, cap_v, cap_h, u, q, s, aj, X, v).limit()
            except DivisionByZero:
                if n == len(passes) - 1:
                    raise


def _exact_sqrt(x: Fraction) -> Optional[Fraction]:
    x = Fraction(x)
    if x < 0:
        return None
    n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if n * n == x.numerator and d * d == x.denominator:
        return Fraction(n, d)
    return None


def fused_psi(cfg: ArrowConfig, Lambda, J, u, params: QParams):
    """Fused weight psi_{Lambda, J, u, lambda}(i1, j1; i2, j2) at base ``params.q``.

    ``Lambda`` and ``J`` are the vertical and horizontal spins; the formula's
    s is q^{-Lambda}, so for half-integer Lambda the base must be a rational
    square in exact mode. ``params.alpha`` is e^{-2 pi i lambda}; ``z`` is not
    used (the spectral parameter is ``u``).
    """
    cap_v, cap_h = two_spin(Lambda), two_spin(J)
    i1, j1, i2, j2 = cfg.i1, cfg.j1, cfg.i2, cfg.j2
    if not cfg.conserved():
        return 0 if params.exact else 0.0
    if not (0 <= i1 <= cap_v and 0 <= i2 <= cap_v and 0 <= j1 <= cap_h and 0 <= j2 <= cap_h):
        raise ValueError(f"arrow configuration {cfg} exceeds spin capacities")
    q = Fraction(params.q)
    root = _exact_sqrt(q)
    if cap_v % 2 == 0:
        s = q ** (-(cap_v // 2))
    elif root is not None:
        s = root ** (-cap_v)
    elif params.exact:
        raise ValueError("half-integer vertical spin needs a base with a rational square root")
    else:
        s = None
    if s is None:
        # float mode with an irrational sqrt(q): the float value of s is used
        s = Fraction(float(q) ** (-cap_v / 2))
    val = _psi_cached(i1, j1, i2, j2, cap_v, cap_h, Fraction(u), q, s, Fraction(params.alpha))
    return val if params.exact else float(val)


@lru_cache(maxsize=None)
def _psi_cached(i1, j1, i2, j2, cap_v, cap_h, u, q, s, alpha):
    return _psi_exact(i1, j1, i2, j2, cap_v, cap_h, u, q, s, alpha)


def s_weight(cfg: ArrowConfig, I, J, params: QParams):
    """Stochastic weight S(i1, j1; i2, j2): psi at base q^2 with u = s/z.

    ``I`` is the vertical spin (arrow counts i1, i2 up to 2I) and ``J`` the
    horizontal spin. With s = q^{-2I} this gives u = 1/(z q^2) at I = 1.
    """
    cap_v = two_spin(I)
    q = Fraction(params.q)
    s = q ** (-cap_v)
    z = Fraction(params.z)
    qq = q * q
    i1, j1, i2, j2 = cfg.i1, cfg.j1, cfg.i2, cfg.j2
    if not cfg.conserved():
        return 0 if params.exact else 0.0
    cap_h = two_spin(J)
    if not (0 <= i1 <= cap_v and 0 <= i2 <= cap_v and 0 <= j1 <= cap_h and 0 <= j2 <= cap_h):
        raise ValueError(f"arrow configuration {cfg} exceeds spin capacities")
    val = _psi_cached(i1, j1, i2, j2, cap_v, cap_h, s / z, qq, s, Fraction(params.alpha))
    return val if params.exact else float(val)


def s_weight_table(I, J, params: QParams) -> Dict[ArrowConfig, Scalar]:
    """All conserved S weights for spins (I, J), keyed by ArrowConfig."""
    cap_v, cap_h = two_spin(I), two_spin(J)
    out = {}
    for i1 in range(cap_v + 1):
        for j1 in range(cap_h + 1):
            for i2 in range(cap_v + 1):
                j2 = i1 + j1 - i2
                if 0 <= j2 <= cap_h:
                    cfg = ArrowConfig(i1, j1, i2, j2)
                    out[cfg] = s_weight(cfg, I, J, params)
    return out


# ---------------------------------------------------------------------------
# spin-1/2 two-site blocks

def _matrix(rows, exact):
    if exact:
        return [list(r) for r in rows]
    return np.array(rows, dtype=float)


def spin_half_S_matrix(params: QParams):
    """4x4 stochastic matrix S over the basis (00, 01, 10, 11).

    A basis label ``ij`` lists the vertical and horizontal arrow counts, so
    the row index is (i1, j1) and the column index is (i2, j2).
    """
    half = Fraction(1, 2)
    basis = [(0, 0), (0, 1), (1, 0), (1, 1)]
    rows = []
    for (i1, j1) in basis:
        rows.append([s_weight(ArrowConfig(i1, j1, i2, j2), half, half, params)
                     for (i2, j2) in basis])
    return _matrix(rows, params.exact)


def spin_half_T_rev_matrix(params: QParams):
    """Two-site reversed non-dynamic transfer matrix over (00, 01, 10, 11).

    It is the S matrix with q -> 1/q, z -> 1/z, alpha = 0, followed by the
    swap of the two middle columns (the permutation P of the two sites).
    """
    flipped = QParams(1 / params.q, 1 / params.z, 0 * params.alpha, params.mode)
    S = spin_half_S_matrix(flipped)
    perm = [0, 2, 1, 3]
    rows = [[S[r][perm[c]] for c in range(4)] for r in range(4)]
    return _matrix(rows, params.exact)


def pi_matrix(twoJ: int):
    """Anti-diagonal permutation <b|Pi|a> = 1 if b = 2J - a."""
    n = twoJ + 1
    return [[1 if b == twoJ - a else 0 for a in range(n)] for b in range(n)]
