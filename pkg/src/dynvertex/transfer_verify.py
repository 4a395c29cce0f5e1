"""Finite-lattice transfer matrices and exact checks of the duality relation.

Matrices are stored sparsely as ``{row_index: {col_index: value}}`` and are
converted to dense lists or numpy arrays on request. Row-stochastic
convention: entry (mu, mu') is the probability of moving from mu to mu'.

The dynamic transfer matrix is the product of two-site blocks swept from the
right end to the left end; the reversed non-dynamic one is swept from the
left end to the right end. A two-site block exchanges the spins of its two
sites, so with mixed spins a full sweep maps the spin pattern (J_1..J_N) to
its cyclic shift, and the duality relation pairs the two spin patterns:

    T_{J -> J'} D_{J'} = D_J (Trev_{J' -> J})^T.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import gmpy2
import numpy as np

from .duality_functions import Configuration, DualityKind, eval_duality
from .vertex_weights import ArrowConfig, QParams, s_weight

__all__ = [
    "ConfigurationSpace",
    "DimensionMismatch",
    "TransferMatrix",
    "build_dynamic_transfer",
    "build_reversed_nondynamic_transfer",
    "build_duality_matrix",
    "intertwining_residual",
    "mc_duality_expectation_check",
    "check_intertwining",
    "IntertwiningReport",
    "dense",
]

Sparse = Dict[int, Dict[int, object]]


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ConfigurationSpace:
    """All occupation vectors for capacities ``spins``, in colexicographic order.

    Colexicographic means the last site is the most significant digit, so
    index(mu) = sum_i mu_i * prod_{k<i} (2J_k + 1).
    """

    spins: Tuple[int, ...]
    _strides: Tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "spins", tuple(int(c) for c in self.spins))
        if not self.spins or any(c <= 0 for c in self.spins):
            raise ValueError("spins must be positive capacities 2J")
        strides, s = [], 1
        for c in self.spins:
            strides.append(s)
            s *= c + 1
        object.__setattr__(self, "_strides", tuple(strides))

    def __len__(self):
        n = 1
        for c in self.spins:
            n *= c + 1
        return n

    def index(self, occ: Sequence[int]) -> int:
        return sum(m * s for m, s in zip(occ, self._strides))

    def occupations(self, idx: int) -> Tuple[int, ...]:
        out = []
        for c in self.spins:
            idx, m = divmod(idx, c + 1)
            out.append(m)
        return tuple(out)

    def configurations(self) -> List[Configuration]:
        return [Configuration(self.occupations(k), self.spins) for k in range(len(self))]

    def label(self, idx: int) -> str:
        return "".join(str(m) for m in self.occupations(idx))


def _rotate(spins, steps):
    n = len(spins)
    steps %= n
    return tuple(spins[-steps:] + spins[:-steps]) if steps else tuple(spins)


@dataclass
class TransferMatrix:
    """Sparse transfer matrix from ``source`` to ``target`` configuration space."""

    entries: Sparse
    source: ConfigurationSpace
    target: ConfigurationSpace
    params: QParams
    direction: str

    def dense(self):
        return dense(self.entries, len(self.source), len(self.target), self.params.exact)

    def row_sums(self):
        return [sum(self.entries.get(r, {}).values()) for r in range(len(self.source))]


def dense(entries: Sparse, n_rows: int, n_cols: int, exact: bool = True):
    zero = Fraction(0) if exact else 0.0
    out = [[zero] * n_cols for _ in range(n_rows)]
    for r, row in entries.items():
        for c, v in row.items():
            out[r][c] = v
    if exact:
        return out
    return np.array(out, dtype=float)


# ---------------------------------------------------------------------------
# two-site blocks

def _block_table(cap_v: int, cap_h: int, params: QParams, cache: dict):
    """S(i1, j1; ., .) as {(i1, j1): [(i2, j2, weight), ...]}."""
    key = (cap_v, cap_h, params)
    if key in cache:
        return cache[key]
    I, J = Fraction(cap_v, 2), Fraction(cap_h, 2)
    table = {}
    for i1 in range(cap_v + 1):
        for j1 in range(cap_h + 1):
            outs = []
            for i2 in range(cap_v + 1):
                j2 = i1 + j1 - i2
                if 0 <= j2 <= cap_h:
                    w = s_weight(ArrowConfig(i1, j1, i2, j2), I, J, params)
                    if w != 0:
                        outs.append((i2, j2, w))
            table[(i1, j1)] = outs
    cache[key] = table
    return table


def _sweep(start_occ, start_caps, blocks):
    """Push a point mass through a sequence of two-site blocks.

    ``blocks`` is a list of (i, update) with ``update(occ, caps, i)`` returning
    a list of (new_occ, new_caps, weight).
    """
    dist = {(tuple(start_occ), tuple(start_caps)): 1}
    for i, update in blocks:
        nxt = {}
        for (occ, caps), p in dist.items():
            for occ2, caps2, w in update(occ, caps, i):
                k = (occ2, caps2)
                nxt[k] = nxt.get(k, 0) + p * w
        dist = nxt
    return dist


# exponent k of the dynamic shift alpha_i = alpha q^{k * 2 N_{[1,i-1]}(mu - J)}
DYNAMIC_SHIFT = 2


def build_dynamic_transfer(space: ConfigurationSpace, params: QParams,
                           shift: Optional[int] = None) -> TransferMatrix:
    """Dynamic transfer matrix with drift to the left.

    The block on sites (i, i+1) reads i1 = mu_{i+1} with the spin of site
    i+1 as vertical spin and j1 = mu_i as horizontal input, writes i2 to site
    i and j2 to site i+1, and uses the dynamic parameter shifted by the
    occupation of sites 1..i-1.
    """
    k = DYNAMIC_SHIFT if shift is None else shift
    n = len(space.spins)
    cache: dict = {}
    q = params.q

    def update(occ, caps, i):
        # i is 0-based left site of the pair
        s = 2 * sum(occ[:i]) - sum(caps[:i])
        local = params.with_alpha(params.alpha * q ** (k * s))
        tab = _block_table(caps[i + 1], caps[i], local, cache)
        out = []
        new_caps = caps[:i] + (caps[i + 1], caps[i]) + caps[i + 2:]
        for i2, j2, w in tab[(occ[i + 1], occ[i])]:
            out.append((occ[:i] + (i2, j2) + occ[i + 2:], new_caps, w))
        return out

    target = ConfigurationSpace(_rotate(space.spins, 1))
    blocks = [(i, update) for i in range(n - 2, -1, -1)]
    entries: Sparse = {}
    for r in range(len(space)):
        dist = _sweep(space.occupations(r), space.spins, blocks)
        row = {}
        for (occ, caps), w in dist.items():
            if w != 0:
                row[target.index(occ)] = w
        entries[r] = row
    return TransferMatrix(entries, space, target, params, "dynamic-left")


def build_reversed_nondynamic_transfer(space: ConfigurationSpace,
                                       params: QParams) -> TransferMatrix:
    """Reversed non-dynamic transfer matrix (drift to the right).

    Each block is S with q -> 1/q, z -> 1/z and alpha = 0, reading
    i1 = mu_i (vertical spin of site i) and j1 = mu_{i+1}, and writing j2 to
    site i and i2 to site i+1. Blocks act from the left end to the right end.
    """
    n = len(space.spins)
    cache: dict = {}
    flipped = QParams(1 / params.q, 1 / params.z, 0 * params.alpha, params.mode)

    def update(occ, caps, i):
        tab = _block_table(caps[i], caps[i + 1], flipped, cache)
        out = []
        new_caps = caps[:i] + (caps[i + 1], caps[i]) + caps[i + 2:]
        for i2, j2, w in tab[(occ[i], occ[i + 1])]:
            out.append((occ[:i] + (j2, i2) + occ[i + 2:], new_caps, w))
        return out

    target = ConfigurationSpace(_rotate(space.spins, -1))
    blocks = [(i, update) for i in range(n - 1)]
    entries: Sparse = {}
    for r in range(len(space)):
        dist = _sweep(space.occupations(r), space.spins, blocks)
        entries[r] = {target.index(occ): w for (occ, caps), w in dist.items() if w != 0}
    return TransferMatrix(entries, space, target, params, "nondynamic-right-reversed")


# ---------------------------------------------------------------------------
# duality matrices and checks

def build_duality_matrix(space_mu: ConfigurationSpace, space_xi: ConfigurationSpace,
                         kind: DualityKind, params: QParams):
    """Dense matrix D[mu][xi] of the chosen duality function."""
    if space_mu.spins != space_xi.spins:
        raise DimensionMismatch("mu and xi spaces must carry the same spins")
    mus = space_mu.configurations()
    xis = space_xi.configurations()
    rows = [[eval_duality(m, x, kind, params) for x in xis] for m in mus]
    if params.exact:
        return rows
    return np.array(rows, dtype=float)


def _sparse_times_dense(A: Sparse, B, n_rows: int, n_cols: int):
    zero = B[0][0] * 0 if n_cols else 0
    out = []
    for r in range(n_rows):
        acc = [zero] * n_cols
        for k, a in A.get(r, {}).items():
            bk = B[k]
            for c in range(n_cols):
                acc[c] = acc[c] + a * bk[c]
        out.append(acc)
    return out


def _dense_times_sparse_T(B, A: Sparse, n_rows: int, n_cols: int):
    """B @ A^T where A is sparse with n_cols rows."""
    zero = B[0][0] * 0 if n_rows else 0
    out = [[zero] * n_cols for _ in range(n_rows)]
    for c in range(n_cols):
        row = A.get(c, {})
        for r in range(n_rows):
            br = B[r]
            acc = zero
            for k, a in row.items():
                acc = acc + br[k] * a
            out[r][c] = acc
    return out


def _fast(x):
    """Fractions become gmpy2 rationals for the matrix products."""
    if isinstance(x, Fraction):
        return gmpy2.mpq(x.numerator, x.denominator)
    if isinstance(x, int):
        return gmpy2.mpq(x)
    return x


def _slow(x):
    if isinstance(x, type(gmpy2.mpq())):
        return Fraction(int(x.numerator), int(x.denominator))
    return x


def _fast_sparse(A: Sparse) -> Sparse:
    return {r: {c: _fast(v) for c, v in row.items()} for r, row in A.items()}


def _fast_dense(B):
    return [[_fast(v) for v in row] for row in B]


def intertwining_residual(T: TransferMatrix, D_target, Trev: TransferMatrix, D_source=None):
    """max |T D' - D Trev^T| with D' on T's target spins and D on its source.

    For equal spins pass one duality matrix; for mixed spins pass the matrix
    on the shifted spin pattern as ``D_target`` and the one on the original
    pattern as ``D_source``. Returns an exact 0 when the identity holds in
    exact mode; in float mode the residual is divided by max(1, max |entry|).
    Complex parameters are not supported, so the adjoint is the
    plain transpose.
    """
    D_source = D_target if D_source is None else D_source
    n, m = len(T.source), len(T.target)
    if (Trev.source.spins != T.target.spins or Trev.target.spins != T.source.spins
            or len(D_target) != m or len(D_source) != n):
        raise DimensionMismatch("incompatible transfer and duality matrices")
    cols = len(D_target[0])
    if cols != len(Trev.source) or len(D_source[0]) != len(Trev.target):
        raise DimensionMismatch("duality matrix columns do not match Trev")
    exact = T.params.exact
    if exact:
        lhs = _sparse_times_dense(_fast_sparse(T.entries), _fast_dense(D_target), n, cols)
        rhs = _dense_times_sparse_T(_fast_dense(D_source), _fast_sparse(Trev.entries), n, cols)
        return _slow(max(abs(a - b) for ra, rb in zip(lhs, rhs) for a, b in zip(ra, rb)))
    lhs = dense(T.entries, n, m, False) @ np.asarray(D_target, dtype=float)
    rhs = np.asarray(D_source, dtype=float) @ dense(Trev.entries, len(Trev.source),
                                                    len(Trev.target), False).T
    # duality entries grow like powers of 1/q, so the float residual is relative
    scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
    return float(np.max(np.abs(lhs - rhs))) / scale


def mc_duality_expectation_check(space_mu: ConfigurationSpace, space_xi: ConfigurationSpace,
                                 kind: DualityKind, params: QParams, t: int):
    """Both sides of E_mu[D(mu(t), xi)] = E_xi[D(mu, xi(t))] for all start pairs.

    Uses dense powers of the one-step matrices; requires equal spins on all
    sites so that the spaces are closed under the sweep.
    """
    if not 0 <= t <= 5:
        raise ValueError("t must be in 0..5")
    if len(set(space_mu.spins)) != 1 or space_mu.spins != space_xi.spins:
        raise DimensionMismatch("expectation check needs uniform, matching spins")
    dyn = params.with_alpha(0) if kind.needs_nondynamic else params
    T = build_dynamic_transfer(space_mu, dyn)
    R = build_reversed_nondynamic_transfer(space_xi, params)
    D = build_duality_matrix(space_mu, space_xi, kind, params)
    n, m = len(space_mu), len(space_xi)
    left = [list(r) for r in D]
    right = [list(r) for r in D]
    for _ in range(t):
        left = _sparse_times_dense(T.entries, left, n, m)
        right = _dense_times_sparse_T(right, R.entries, n, m)
    return left, right


@dataclass
class IntertwiningReport:
    spins: Tuple[int, ...]
    kind: DualityKind
    residual: object
    holds: bool


def check_intertwining(spins: Sequence[int], kind: DualityKind, params: QParams,
                       T: Optional[TransferMatrix] = None,
                       Trev: Optional[TransferMatrix] = None,
                       tol: float = 1e-10) -> IntertwiningReport:
    """Verify T D' = D Trev^T on capacities ``spins`` for one duality kind.

    ``T`` (built at alpha = 0 for D_new and D_tr) and ``Trev`` may be passed
    in to share them between kinds. In exact mode the identity must hold with
    residual exactly 0; in float mode up to ``tol``.
    """
    space = ConfigurationSpace(tuple(spins))
    target = ConfigurationSpace(_rotate(space.spins, 1))
    if T is None:
        dyn = params.with_alpha(0) if kind.needs_nondynamic else params
        T = build_dynamic_transfer(space, dyn)
    if Trev is None:
        Trev = build_reversed_nondynamic_transfer(target, params)
    D_target = build_duality_matrix(target, target, kind, params)
    D_source = D_target if target == space else build_duality_matrix(space, space, kind, params)
    r = intertwining_residual(T, D_target, Trev, D_source)
    holds = r == 0 if params.exact else r < tol
    return IntertwiningReport(space.spins, kind, r, holds)
