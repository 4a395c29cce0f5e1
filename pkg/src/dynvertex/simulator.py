"""Monte Carlo simulation of the dynamic stochastic six-vertex model (spin 1/2).

Two row updates are provided.

``step``: the vertex model on columns 1, 2, ... swept from left to right.
A vertex reads the vertical arrow (particle) i1 of its column and the
horizontal arrow j1 coming from the left, and draws (i2, j2) from the
spin-1/2 weight S(i1, j1; i2, j2) at its local dynamic parameter. One
horizontal arrow enters column 1 on every row. The dynamic parameter is
alpha0 q^k with k read off the arrows: reading i1 at a column multiplies it
by q^{-2(2 i1 - 1)}, and each row starts from the previous row's start value
times q^{2(2 j_in - 1)}, j_in being the arrow entering column 1. Before any
arrow is read the value is alpha0.

``closed``: the one-row transfer dynamics of :mod:`transfer_verify` on M
sites, mirrored so that arrows travel to the right. Column 1 seeds the
travelling arrow, the block at column x (x = 2..M) reads it together with
the occupation of column x at alpha0 q^{2 sum_{k>x}(2 eta_k - 1)}, writes its
site output to column x - 1, and the travelling arrow ends in column M.

The height N_y(t) is the number of empty columns in [1, y] after t rows;
with the step boundary its mean is m_nu L at y = nu L, t = L.

The inner loops are compiled with numba. Uniforms come from a counter-based
Philox stream per replica, keyed by (seed, replica), so results do not depend
on the number of worker threads.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .duality_functions import DomainError

__all__ = [
    "ResourceLimit",
    "EmptySample",
    "WeightOutOfRange",
    "SimConfig",
    "LatticeRow",
    "ReplicaStats",
    "spin_half_probabilities",
    "parameters_from_b",
    "scaling_constants",
    "step_row",
    "closed_row_sampler",
    "run",
    "two_sample_ks",
    "cdf_distance",
]

log = logging.getLogger(__name__)

BOUNDARIES = ("closed", "step")
DEFAULT_BUDGET = 5 * 10 ** 11
# alpha0 q^k below this is replaced by the alpha = 0 weights
_ALPHA_FLOOR = 1e-18
_BUFFER = 1 << 16


class ResourceLimit(RuntimeError):
    """The requested lattice exceeds the configured work budget."""


class EmptySample(ValueError):
    """A statistic was requested for an empty sample."""


class WeightOutOfRange(ValueError):
    """A vertex weight left [0, 1] at a dynamic parameter actually reached."""


# ---------------------------------------------------------------------------
# parameters

def spin_half_probabilities(q: float, z: float, alpha: float) -> Tuple[float, float, float, float]:
    """Spin-1/2 weights (S(0,1;0,1), S(0,1;1,0), S(1,0;1,0), S(1,0;0,1)).

    Closed forms of the two-by-two block of S at base q^2 (checked against
    vertex_weights.s_weight in the tests).
    """
    qq = q * q
    den = (1.0 - z * qq) * (1.0 - alpha)
    p01 = (1.0 - z) * (1.0 - alpha * qq) / den
    r01 = (1.0 - qq) * (z - alpha) / den
    p10 = (1.0 - z) * (qq - alpha) / den
    r10 = (1.0 - qq) * (1.0 - alpha * z) / den
    return p01, r01, p10, r10


def parameters_from_b(b1: float, b2: float, lambda_exp: float) -> Tuple[float, float, float]:
    """(q, z, alpha0) from the staying probabilities b1, b2 and lambda_exp = e^{2 pi i lambda}.

    At alpha = 0 the two random blocks of S are b1 = S(0,1;0,1) and
    b2 = S(1,0;1,0), giving q^2 = b2/b1 and z = (1 - b1)/(1 - b2).
    alpha = e^{-2 pi i lambda} = 1/lambda_exp; lambda_exp = 0 is mapped to the
    non-dynamic model alpha0 = 0.
    """
    if not (0 < b2 < b1 < 1):
        raise DomainError("need 0 < b2 < b1 < 1")
    q = math.sqrt(b2 / b1)
    z = (1.0 - b1) / (1.0 - b2)
    alpha0 = 0.0 if lambda_exp == 0 else 1.0 / lambda_exp
    return q, z, alpha0


def scaling_constants(nu: float, z: float) -> Tuple[float, float]:
    """(m_nu, sigma_nu) of the Tracy-Widom limit."""
    if not 0 < z < 1:
        raise DomainError("need 0 < z < 1")
    if not z <= nu <= 1 / z:
        raise DomainError(f"nu = {nu} outside [z, 1/z]")
    m = (math.sqrt(nu) - math.sqrt(z)) ** 2 / (1 - z)
    inner = (1 - math.sqrt(nu * z)) * (math.sqrt(nu / z) - 1)
    sigma = math.sqrt(z) * nu ** (-1 / 6) / (1 - z) * max(inner, 0.0) ** (2 / 3)
    return m, sigma


@dataclass
class SimConfig:
    M: int
    T: int
    q: float
    z: float
    alpha0: float = 0.0
    boundary: str = "step"
    seed: int = 0
    replicas: int = 1
    probes: Tuple[Tuple[int, int], ...] = ()
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        self.q, self.z, self.alpha0 = float(self.q), float(self.z), float(self.alpha0)
        if self.boundary not in BOUNDARIES:
            raise DomainError(f"boundary must be one of {BOUNDARIES}")
        if not 0 < self.q < 1:
            raise DomainError("need 0 < q < 1")
        if not 0 < self.z < 1:
            raise DomainError("need 0 < z < 1")
        if not 0 <= self.alpha0 <= 1:
            raise DomainError("need alpha0 in [0, 1]")
        if self.M < 1 or self.T < 0 or self.replicas < 1:
            raise DomainError("need M >= 1, T >= 0, replicas >= 1")
        if self.boundary == "step" and self.M < math.ceil(self.T / self.z):
            raise DomainError("step boundary needs M >= ceil(T / z)")
        self.probes = tuple((int(y), int(t)) for y, t in self.probes)
        for y, t in self.probes:
            if not (1 <= y <= self.M and 0 <= t <= self.T):
                raise DomainError(f"probe ({y}, {t}) outside the lattice")

    @property
    def width(self) -> int:
        """Columns that must be simulated.

        Vertices are updated left to right and only read arrows from their
        left, so columns beyond the rightmost probe never influence it.
        """
        if self.boundary == "step" and self.probes:
            return max(y for y, _ in self.probes)
        return self.M


@dataclass
class LatticeRow:
    """Occupation of columns 1..M and the dynamic-parameter exponent.

    ``alpha_power`` is k with the current dynamic parameter alpha0 q^k; for
    the step boundary it is the value before column 1 is read.
    """

    occupancy: np.ndarray
    alpha_power: int = 0
    row_index: int = 0

    @classmethod
    def empty(cls, M: int) -> "LatticeRow":
        return cls(np.zeros(M, dtype=np.int8))

    @classmethod
    def from_bits(cls, bits: Sequence[int], alpha_power: int = 0) -> "LatticeRow":
        return cls(np.asarray(bits, dtype=np.int8).copy(), alpha_power)

    def alpha_field(self, cfg: SimConfig) -> float:
        return cfg.alpha0 * cfg.q ** self.alpha_power

    def holes(self, y: int) -> int:
        return int(y - self.occupancy[:y].sum())


# ---------------------------------------------------------------------------
# probability tables keyed by the integer exponent k

@dataclass
class _Tables:
    k_lo: int
    p01: np.ndarray
    p10: np.ndarray
    ok: np.ndarray


def _tables(q: float, z: float, alpha0: float, k_lo: int, k_hi: int) -> _Tables:
    if alpha0 > 0:
        top = int(math.ceil(math.log(_ALPHA_FLOOR / alpha0) / math.log(q))) + 1
        k_hi = min(k_hi, max(top, k_lo))
    ks = np.arange(k_lo, k_hi + 1)
    n = len(ks)
    p01 = np.empty(n)
    p10 = np.empty(n)
    ok = np.ones(n, dtype=np.bool_)
    for idx, k in enumerate(ks):
        a = alpha0 * q ** float(k)
        if a < _ALPHA_FLOOR:
            a = 0.0
        if a == 1.0:
            ok[idx] = False
            p01[idx] = p10[idx] = 0.5
            continue
        s01, r01, s10, r10 = spin_half_probabilities(q, z, a)
        for stay, move in ((s01, r01), (s10, r10)):
            if abs(stay + move - 1.0) > 1e-9:
                log.warning("weights at alpha=%g sum to %r; renormalising", a, stay + move)
        s01 /= s01 + r01
        s10 /= s10 + r10
        if not (0.0 <= s01 <= 1.0 and 0.0 <= s10 <= 1.0):
            ok[idx] = False
        p01[idx] = s01
        p10[idx] = s10
    return _Tables(k_lo, p01, p10, ok)


def _table_range(cfg: SimConfig) -> Tuple[int, int]:
    if cfg.boundary == "closed":
        return -2 * cfg.M, 2 * cfg.M
    # k >= 0 everywhere in the step model, and at most 2T + 2M
    return -2, 2 * cfg.T + 2 * cfg.M + 2


# ---------------------------------------------------------------------------
# compiled kernels

@njit(cache=True, nogil=True)
def _step_rows(occ, k_row, n_rows, width, u, pos, k_lo, p01, p10, ok, front):
    """Advance the step-boundary model by up to n_rows rows.

    Returns (rows done, new k_row, new pos, new front, error exponent or
    a sentinel). Stops early when fewer than ``width`` uniforms remain.
    """
    n_tab = p01.shape[0]
    done = 0
    while done < n_rows:
        if u.shape[0] - pos < width:
            break
        k = k_row
        c = 1
        x = 0
        while x < width:
            s = occ[x]
            k -= 2 * (2 * s - 1)
            if s == c:
                if c == 0 and x > front:
                    break
                x += 1
                continue
            idx = k - k_lo
            if idx >= n_tab:
                idx = n_tab - 1
            if idx < 0 or not ok[idx]:
                return done, k_row, pos, front, k
            r = u[pos]
            pos += 1
            if s == 0:
                if r >= p01[idx]:
                    occ[x] = 1
                    c = 0
                    if x > front:
                        front = x
            else:
                if r >= p10[idx]:
                    occ[x] = 0
                    c = 1
            x += 1
        k_row += 2
        done += 1
    return done, k_row, pos, front, -(1 << 62)


@njit(cache=True, nogil=True)
def _closed_row(occ, u, pos, k_lo, p01, p10, ok):
    """One closed-boundary row (mirrored transfer dynamics), in place."""
    M = occ.shape[0]
    n_tab = p01.shape[0]
    tail = 0
    for x in range(1, M):
        tail += 2 * occ[x] - 1
    c = occ[0]
    for x in range(1, M):
        s = occ[x]
        tail -= 2 * s - 1
        k = 2 * tail
        if c == s:
            occ[x - 1] = s
            continue
        idx = k - k_lo
        if idx >= n_tab:
            idx = n_tab - 1
        if idx < 0 or not ok[idx]:
            return pos, k
        r = u[pos]
        pos += 1
        if c == 0:
            # (i1, j1) = (0, 1): stay with S(0,1;0,1)
            if r < p01[idx]:
                occ[x - 1] = 1
            else:
                occ[x - 1] = 0
                c = 1
        else:
            # (i1, j1) = (1, 0): stay with S(1,0;1,0)
            if r < p10[idx]:
                occ[x - 1] = 0
            else:
                occ[x - 1] = 1
                c = 0
    occ[M - 1] = c
    return pos, -(1 << 62)


_NO_ERROR = -(1 << 62)


def _raise_range(cfg: SimConfig, k: int):
    raise WeightOutOfRange(
        f"spin-1/2 weights leave [0, 1] at alpha = alpha0 q^{k} = "
        f"{cfg.alpha0 * cfg.q ** k:.6g} (q={cfg.q}, z={cfg.z})")


# ---------------------------------------------------------------------------
# public operations

def _stream(seed: int, replica: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(replica,))
    return np.random.Generator(np.random.Philox(ss))


def step_row(state: LatticeRow, cfg: SimConfig, rng: np.random.Generator,
             tables: Optional[_Tables] = None) -> LatticeRow:
    """One full row update; returns a new LatticeRow."""
    tab = tables if tables is not None else _tables(cfg.q, cfg.z, cfg.alpha0, *_table_range(cfg))
    occ = state.occupancy.astype(np.int8, copy=True)
    M = occ.shape[0]
    u = rng.random(M)
    if cfg.boundary == "closed":
        _, err = _closed_row(occ, u, 0, tab.k_lo, tab.p01, tab.p10, tab.ok)
        if err != _NO_ERROR:
            _raise_range(cfg, err)
        return LatticeRow(occ, state.alpha_power, state.row_index + 1)
    nz = np.flatnonzero(occ)
    front = int(nz[-1]) if nz.size else -1
    done, k_row, _, _, err = _step_rows(occ, state.alpha_power, 1, M, u, 0,
                                        tab.k_lo, tab.p01, tab.p10, tab.ok, front)
    if err != _NO_ERROR:
        _raise_range(cfg, err)
    return LatticeRow(occ, k_row, state.row_index + done)


def closed_row_sampler(cfg: SimConfig) -> Callable[[np.ndarray, np.random.Generator, int], np.ndarray]:
    """Vectorised helper: sample many one-row updates of one closed initial row.

    Returns f(bits, rng, n) -> array (n, M) of outcomes.
    """
    tab = _tables(cfg.q, cfg.z, cfg.alpha0, *_table_range(cfg))

    def sample(bits, rng, n):
        bits = np.asarray(bits, dtype=np.int8)
        M = bits.shape[0]
        u = rng.random(n * M)
        out = np.empty((n, M), dtype=np.int8)
        _closed_many(bits, u, out, tab.k_lo, tab.p01, tab.p10, tab.ok)
        return out

    return sample


@njit(cache=True, nogil=True)
def _closed_many(bits, u, out, k_lo, p01, p10, ok):
    n, M = out.shape
    for r in range(n):
        occ = bits.copy()
        _, err = _closed_row(occ, u, r * M, k_lo, p01, p10, ok)
        out[r, :] = occ
        if err != -(1 << 62):
            out[r, :] = -1


@dataclass
class ReplicaStats:
    probes: Tuple[Tuple[int, int], ...]
    heights: np.ndarray  # shape (replicas, len(probes))
    config: Optional[SimConfig] = field(default=None, repr=False)

    @property
    def mean(self) -> np.ndarray:
        return self.heights.mean(axis=0)

    @property
    def variance(self) -> np.ndarray:
        return self.heights.var(axis=0, ddof=1) if len(self.heights) > 1 else np.zeros(len(self.probes))

    def rescaled(self, probe: int, nu: float, L: float, z: float) -> np.ndarray:
        """(N_y - m_nu L) / (sigma_nu L^{1/3}) for one probe column."""
        m, sigma = scaling_constants(nu, z)
        return (self.heights[:, probe] - m * L) / (sigma * L ** (1 / 3))

    @staticmethod
    def ecdf(sample: np.ndarray):
        xs = np.sort(np.asarray(sample, dtype=float))
        if xs.size == 0:
            raise EmptySample("empty sample")
        return xs, np.arange(1, xs.size + 1) / xs.size


def _run_replica(cfg: SimConfig, replica: int, tables: _Tables,
                 initial: Optional[np.ndarray]) -> np.ndarray:
    rng = _stream(cfg.seed, replica)
    width = cfg.width
    occ = (np.zeros(width, dtype=np.int8) if initial is None
           else np.asarray(initial, dtype=np.int8)[:width].copy())
    times = sorted({t for _, t in cfg.probes})
    record = {}
    t = 0
    k_row = 0
    nz = np.flatnonzero(occ)
    front = int(nz[-1]) if nz.size else -1
    u = np.empty(0)
    pos = 0
    for target in times:
        while t < target:
            if cfg.boundary == "closed":
                if u.shape[0] - pos < width:
                    u, pos = rng.random(max(_BUFFER, width)), 0
                pos, err = _closed_row(occ, u, pos, tables.k_lo, tables.p01, tables.p10, tables.ok)
                if err != _NO_ERROR:
                    _raise_range(cfg, err)
                t += 1
                continue
            if u.shape[0] - pos < width:
                u, pos = rng.random(max(_BUFFER, 4 * width)), 0
            done, k_row, pos, front, err = _step_rows(
                occ, k_row, target - t, width, u, pos,
                tables.k_lo, tables.p01, tables.p10, tables.ok, front)
            if err != _NO_ERROR:
                _raise_range(cfg, err)
            t += done
        csum = np.concatenate(([0], np.cumsum(occ, dtype=np.int64)))
        record[target] = csum
    out = np.empty(len(cfg.probes), dtype=np.int64)
    for j, (y, tt) in enumerate(cfg.probes):
        out[j] = y - record[tt][y]
    return out


def run(cfg: SimConfig, threads: Optional[int] = None,
        initial: Optional[Sequence[int]] = None) -> ReplicaStats:
    """Independent replicas; replica r uses the Philox stream keyed by (seed, r)."""
    if not cfg.probes:
        raise DomainError("run needs at least one (y, t) probe")
    work = cfg.width * max(cfg.T, 1) * cfg.replicas
    if work > cfg.budget:
        raise ResourceLimit(f"work {work} exceeds budget {cfg.budget}")
    init = None
    if initial is not None:
        init = np.asarray(initial, dtype=np.int8)
        if init.shape != (cfg.M,):
            raise DomainError("initial row must have length M")
    elif cfg.boundary == "closed":
        raise DomainError("closed boundary needs an initial row")
    tables = _tables(cfg.q, cfg.z, cfg.alpha0, *_table_range(cfg))
    n_threads = threads or int(os.environ.get("VD_THREADS", 0)) or os.cpu_count() or 1
    reps = range(cfg.replicas)
    if n_threads == 1 or cfg.replicas == 1:
        rows = [_run_replica(cfg, r, tables, init) for r in reps]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            rows = list(pool.map(lambda r: _run_replica(cfg, r, tables, init), reps))
    return ReplicaStats(cfg.probes, np.vstack(rows), cfg)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov distances

def two_sample_ks(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise EmptySample("KS distance of an empty sample")
    grid = np.concatenate((a, b))
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def cdf_distance(sample: Sequence[float], cdf: Callable[[float], float]) -> float:
    """sup |F_n - F| over the jump points of the empirical CDF (both one-sided limits)."""
    xs = np.sort(np.asarray(sample, dtype=float))
    if xs.size == 0:
        raise EmptySample("KS distance of an empty sample")
    uniq, counts = np.unique(xs, return_counts=True)
    upper = np.cumsum(counts) / xs.size
    lower = upper - counts / xs.size
    F = np.array([cdf(float(v)) for v in uniq])
    return float(max(np.max(np.abs(upper - F)), np.max(np.abs(F - lower))))
