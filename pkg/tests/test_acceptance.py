"""Acceptance suite: one test per criterion, each recording a pass/fail line.

The lines are repeated in an "acceptance criteria" section of the pytest
terminal summary. Criteria 3, 8 and 9 are checked as stated even though
they cannot be met at the stated sizes or against the reference data (see the
README); each has a companion diagnostic test showing what does hold.
"""

import itertools
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from dynvertex.duality_functions import (Configuration, DualityKind, eval_Dort, measure_w,
                                         measure_W)
from dynvertex.qcalc import (DivisionByZero, dual_q_krawtchouk, krawtchouk_norm,
                             krawtchouk_weight, q6j, q6j_racah_wilson, q_exp_big, q_exp_small,
                             racah_wilson, rw_norm, rw_weight)
from dynvertex.simulator import (SimConfig, cdf_distance, closed_row_sampler, parameters_from_b,
                                 run, scaling_constants, two_sample_ks)
from dynvertex.tracy_widom import F2Evaluator, f2_cdf
from dynvertex.transfer_verify import (ConfigurationSpace, build_duality_matrix,
                                       build_dynamic_transfer, build_reversed_nondynamic_transfer,
                                       check_intertwining)
from dynvertex.vertex_weights import ArrowConfig, QParams, fused_psi, s_weight
from reference_tables import (LEX_BASIS, SECTOR, TRANSPOSED_PAIR, D_c, D_new, D_tr, S_spin_one,
                              T_rev, T_stoch)

F = Fraction
pytestmark = pytest.mark.acceptance


def _lex(matrix, space):
    perm = [space.index(o) for o in LEX_BASIS]
    return [[matrix[a][b] for b in perm] for a in perm]


def _rand_frac(rng, lo, hi):
    while True:
        x = F(rng.randint(1, 12), rng.randint(1, 12))
        if lo < x < hi and x != 1:
            return x


# ---------------------------------------------------------------------------

def test_criterion_1_reference_matrices(criterion):
    start = time.perf_counter()
    Q = F(2, 3)
    q, z, a, c, C0 = Q * Q, F(2, 7), F(1, 3), 2, 3
    p = QParams(q, z, a)
    space = ConfigurationSpace((1, 1))
    checks = {
        "T_stoch": _lex(build_dynamic_transfer(space, p).dense(), space) == T_stoch(q, z, a),
        "T_rev": _lex(build_reversed_nondynamic_transfer(space, p).dense(), space) == T_rev(q, z),
        "D_c": _lex(build_duality_matrix(space, space, DualityKind("dc", c=c), p), space) == D_c(q, a, c),
        "D_new": _lex(build_duality_matrix(space, space, DualityKind("dnew", c0=C0), p), space)
        == D_new(q, C0),
    }
    G = _lex(build_duality_matrix(space, space, DualityKind("dtr"), p), space)
    P = D_tr(Q)
    ratios, same_zeros = {}, True
    for i, j in itertools.product(range(4), repeat=2):
        same_zeros &= (G[i][j] == 0) == (P[i][j] == 0)
        if P[i][j] != 0:
            ratios.setdefault((SECTOR[i], SECTOR[j]), set()).add(G[i][j] / P[i][j])
    checks["D_tr (one constant per sector)"] = same_zeros and all(len(v) == 1 for v in ratios.values())
    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 1.0
    failed = [k for k, v in checks.items() if not v]
    criterion(1, ok, f"reference 4x4 matrices reproduced exactly; failed={failed}; {elapsed:.2f}s")
    assert ok


PATTERNS = [(1, 1), (2, 2), (1, 2), (1, 1, 1), (2, 2, 2), (1, 2, 1),
            (1, 1, 1, 1), (2, 2, 2, 2), (1, 2, 1, 2)]


def test_criterion_2_intertwining(criterion):
    start = time.perf_counter()
    rng = random.Random(20240601)
    checked, nonzero, draws = 0, 0, 0
    while draws < 20:
        q, z = _rand_frac(rng, 0, 1), _rand_frac(rng, 0, 5)
        a = _rand_frac(rng, 0, 3) * rng.choice((1, -1))
        c, c0 = rng.randint(-2, 3), rng.randint(1, 4)
        p = QParams(q, z, a)
        kinds = (DualityKind("dc", c=c), DualityKind("dort"), DualityKind("dnew", c0=c0),
                 DualityKind("dtr"))
        try:
            results = []
            for spins in PATTERNS:
                space = ConfigurationSpace(spins)
                T = build_dynamic_transfer(space, p)
                T0 = build_dynamic_transfer(space, p.with_alpha(0))
                shifted = ConfigurationSpace(spins[-1:] + spins[:-1])
                R = build_reversed_nondynamic_transfer(shifted, p)
                for kind in kinds:
                    rep = check_intertwining(spins, kind, p, T=T0 if kind.needs_nondynamic else T,
                                             Trev=R)
                    results.append(rep.residual)
        except (DivisionByZero, ZeroDivisionError):
            continue  # a pole of the weights: not an admissible draw
        draws += 1
        checked += len(results)
        nonzero += sum(r != 0 for r in results)
    elapsed = time.perf_counter() - start
    ok = nonzero == 0 and elapsed < 120
    criterion(2, ok, f"{checked} exact checks (20 draws x 9 spin patterns x 4 kinds), "
                     f"{nonzero} nonzero residuals; {elapsed:.1f}s")
    assert ok


def _stochasticity_draws(n, seed):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        r = F(rng.randint(1, 8), rng.randint(2, 9))
        if r >= 1:
            continue
        u = F(rng.randint(1, 12), rng.randint(1, 12))
        if any(u == r ** k for k in range(-8, 9)):
            continue  # u on the q-lattice hits poles of the fused weights
        a = F(rng.randint(-9, 9), rng.randint(1, 9))
        if a != 1:
            out.append((r * r, u, a))
    return out


def _row_sums_hold(q, u, a):
    p = QParams(q, F(1, 2), a)
    for cv, ch in itertools.product((1, 2, 3), repeat=2):
        for i1, j1 in itertools.product(range(cv + 1), range(ch + 1)):
            total = sum(fused_psi(ArrowConfig(i1, j1, i2, i1 + j1 - i2), F(cv, 2), F(ch, 2), u, p)
                        for i2 in range(cv + 1) if 0 <= i1 + j1 - i2 <= ch)
            if total != 1:
                return False
    return True


TABLE_POINTS = [(F(3, 5), F(2, 7), F(1, 3)), (F(1, 2), F(1, 3), F(-2, 5)), (F(2, 3), F(3, 4), F(5, 7)),
                (F(1, 4), F(1, 9), F(-3)), (F(5, 7), F(4, 3), F(2, 9)), (F(3, 8), F(1, 2), F(7, 5)),
                (F(4, 9), F(5, 6), F(-1, 6)), (F(6, 7), F(1, 5), F(3, 8)), (F(2, 5), F(7, 3), F(-5, 4)),
                (F(7, 9), F(2, 11), F(4, 3))]


def test_criterion_3_stochasticity_and_spin_one_table(criterion):
    start = time.perf_counter()
    draws = _stochasticity_draws(50, 3)
    sums_ok = sum(_row_sums_hold(*d) for d in draws)
    mismatched = set()
    for q, z, a in TABLE_POINTS:
        p = QParams(q, z, a)
        for key, value in S_spin_one(q, z, a).items():
            if s_weight(ArrowConfig(*key), 1, 1, p) != value:
                mismatched.add(key)
    elapsed = time.perf_counter() - start
    ok = sums_ok == 50 and not mismatched and elapsed < 60
    criterion(3, ok, f"row sums exact in {sums_ok}/50 draws over all 2Lambda,2J <= 3; "
                     f"spin-1 table entries differing from the closed form: {sorted(mismatched)}; "
                     f"{elapsed:.1f}s")
    assert ok


def test_criterion_3_diagnostic_table_with_pair_exchanged():
    """The 17 other entries match at all 10 points; the reference pair is exchanged."""
    first, second = TRANSPOSED_PAIR
    for q, z, a in TABLE_POINTS:
        p = QParams(q, z, a)
        table = S_spin_one(q, z, a)
        fixed = dict(table)
        fixed[first], fixed[second] = table[second], table[first]
        for key, value in fixed.items():
            assert s_weight(ArrowConfig(*key), 1, 1, p) == value, key


def _configs(caps):
    return [Configuration(o, caps) for o in itertools.product(*[range(c + 1) for c in caps])]


def test_criterion_4_orthogonality(criterion):
    start = time.perf_counter()
    patterns = [caps for n in (1, 2, 3) for caps in itertools.product((1, 2), repeat=n)]
    bad = 0
    for q, a in [(F(2, 3), F(-1, 2)), (F(1, 3), F(-5, 3))]:
        p = QParams(q, F(2, 7), a)
        for caps in patterns:
            cs = _configs(caps)
            D = [[eval_Dort(m, x, p) for x in cs] for m in cs]
            W = [measure_W(m, p) for m in cs]
            w = [measure_w(x, p) for x in cs]
            n = len(cs)
            for i, j in itertools.product(range(n), repeat=2):
                s_xi = sum(D[k][i] * D[k][j] * W[k] for k in range(n))
                s_mu = sum(D[i][k] * D[j][k] * w[k] for k in range(n))
                bad += s_xi != (1 / w[i] if i == j else 0)
                bad += s_mu != (1 / W[i] if i == j else 0)
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 60
    criterion(4, ok, f"both double sums over {len(patterns)} spin patterns x 2 points, "
                     f"{bad} entries off the Kronecker delta; {elapsed:.1f}s")
    assert ok


def test_criterion_5_special_functions(criterion):
    start = time.perf_counter()
    bad = []
    q, al, be, ga = F(1, 2), F(1, 3), F(1, 5), F(1, 7)
    for M in range(1, 5):
        for m, n in itertools.product(range(M + 1), repeat=2):
            s = sum(racah_wilson(m, x, al, be, ga, M, q) * racah_wilson(n, x, al, be, ga, M, q)
                    * rw_weight(x, al, be, ga, M, q) for x in range(M + 1))
            if s != (rw_norm(n, al, be, ga, M, q) if m == n else 0):
                bad.append(("rw", M, m, n))
    for qk, c in [(F(1, 2), F(3)), (F(2, 3), F(1, 5))]:
        for N in range(1, 5):
            for m, n in itertools.product(range(N + 1), repeat=2):
                s = sum(dual_q_krawtchouk(m, x, c, N, qk) * dual_q_krawtchouk(n, x, c, N, qk)
                        * krawtchouk_weight(x, c, N, qk) for x in range(N + 1))
                if s != (krawtchouk_norm(n, c, N, qk) if m == n else 0):
                    bad.append(("krawtchouk", N, m, n))
    spins = [F(k, 2) for k in range(4)]
    worst_6j = max(abs(q6j(*six, 0.7) - q6j_racah_wilson(*six, 0.7))
                   for six in itertools.product(spins, repeat=6))
    residual = abs(float(q_exp_small(F(1, 10), F(1, 2), 8) * q_exp_big(F(-1, 10), F(1, 2), 8)) - 1)
    elapsed = time.perf_counter() - start
    ok = not bad and worst_6j < 1e-9 and residual < 1e-8 and elapsed < 30
    criterion(5, ok, f"orthogonality failures {bad}; 6j vs RW max diff {worst_6j:.1e}; "
                     f"q-exp residual {residual:.1e} (q=1/2, z=1/10, K=8); {elapsed:.1f}s")
    assert ok


def test_criterion_6_simulator_matches_transfer_matrix(criterion):
    start = time.perf_counter()
    q, z, a = F(1, 2), F(1, 2), F(1, 100)
    cfg = SimConfig(M=4, T=1, q=float(q), z=float(z), alpha0=float(a), boundary="closed")
    space = ConfigurationSpace((1,) * 4)
    T = build_dynamic_transfer(space, QParams(q, z, a))
    sample = closed_row_sampler(cfg)
    rng = np.random.default_rng(6)
    n = 10 ** 6
    weights = np.array([8, 4, 2, 1])  # mirrored: column 1 of the sampler is site 4
    worst = 0.0
    for r in range(len(space)):
        occ = space.occupations(r)
        out = sample(np.array(occ[::-1]), rng, n)
        emp = np.bincount(out @ weights, minlength=16) / n
        exact = np.zeros(16)
        for col, w in T.entries[r].items():
            exact[int(np.dot(T.target.occupations(col), weights[::-1]))] = float(w)
        worst = max(worst, 0.5 * float(np.abs(emp - exact).sum()))
    elapsed = time.perf_counter() - start
    ok = worst < 0.005 and elapsed < 60
    criterion(6, ok, f"max total variation over all 16 initial rows {worst:.5f} at 1e6 samples; "
                     f"{elapsed:.1f}s")
    assert ok


def test_criterion_7_law_of_large_numbers(criterion):
    start = time.perf_counter()
    L, q, z, nu = 2000, 0.25, 0.25, 1.0
    m = scaling_constants(nu, z)[0]
    ratios = []
    for a0 in (0.0, 1 / 1.05):
        cfg = SimConfig(M=4 * L, T=L, q=q, z=z, alpha0=a0, seed=7, replicas=200,
                        probes=((int(nu * L), L),))
        ratios.append(float(run(cfg).mean[0]) / L)
    rel = [abs(r - m) / m for r in ratios]
    elapsed = time.perf_counter() - start
    ok = max(rel) < 0.02
    criterion(7, ok, f"mean N/L = {ratios[0]:.4f} (alpha0=0), {ratios[1]:.4f} (alpha0=1/1.05) "
                     f"vs m = {m:.4f}; max relative error {max(rel):.4f}; {elapsed:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def tw_sample():
    L = 10 ** 4
    cfg = SimConfig(M=4 * L, T=L, q=0.25, z=0.25, seed=2024, replicas=500, probes=((L, L),))
    start = time.perf_counter()
    stats = run(cfg)
    return stats.rescaled(0, 1.0, L, 0.25), time.perf_counter() - start


def test_criterion_8_tracy_widom_shape(criterion, tw_sample):
    x, elapsed = tw_sample
    ks = cdf_distance(x, f2_cdf)
    ok = ks < 0.1
    criterion(8, ok, f"KS of (N - mL)/(sigma L^(1/3)) vs F2 = {ks:.3f} at L=1e4, 500 replicas "
                     f"(sample mean {x.mean():.2f}, sd {x.std():.2f}); {elapsed:.0f}s")
    assert ok


def test_criterion_8_diagnostic_reflected_statistic(tw_sample):
    """(mL - N)/(sigma L^(1/3)) is the statistic whose law approaches F2 with this N."""
    x, _ = tw_sample
    assert cdf_distance(-x, f2_cdf) < 0.1


def test_criterion_9_dynamic_parameter_irrelevance(criterion):
    start = time.perf_counter()
    L = 1000
    samples = []
    for lam in (1.05, 0.0):
        q, z, a0 = parameters_from_b(0.55, 0.5, lam)
        cfg = SimConfig(M=int(np.ceil(L / z)), T=L, q=q, z=z, alpha0=a0, seed=99, replicas=4000,
                        probes=((L, L),))
        samples.append(run(cfg).rescaled(0, 1.0, L, z))
    ks = two_sample_ks(*samples)
    elapsed = time.perf_counter() - start
    ok = ks < 0.05
    criterion(9, ok, f"two-sample KS (alpha0=1/1.05 vs 0) = {ks:.4f} at L=1000, 4000 replicas; "
                     f"{elapsed:.0f}s")
    assert ok


def test_criterion_9_diagnostic_shift_vanishes_with_alpha0():
    """The alpha0 = 0 limit is continuous: a tiny alpha0 is indistinguishable from 0,
    while alpha0 = 1/1.05 shifts the height by an O(1) amount set in the first rows."""
    L = 250
    q, z, _ = parameters_from_b(0.55, 0.5, 0.0)

    def heights(a0, seed):
        cfg = SimConfig(M=int(np.ceil(L / z)), T=L, q=q, z=z, alpha0=a0, seed=seed, replicas=4000,
                        probes=((L, L),))
        return run(cfg).heights[:, 0]

    base = heights(0.0, 5)
    assert two_sample_ks(heights(1e-6, 6), base) < 0.05
    assert 1.0 < heights(1 / 1.05, 6).mean() - base.mean() < 3.0


def test_criterion_10_f2_self_consistency(criterion):
    start = time.perf_counter()
    ev = F2Evaluator(tol=1e-8)
    grid = np.linspace(-5.0, 2.0, 200)
    worst, vals = 0.0, []
    for s in grid:
        value, order, diff = ev.evaluate(float(s))
        worst = max(worst, diff)
        vals.append(value)
    monotone = all(b >= a for a, b in zip(vals, vals[1:]))
    in_range = all(0.0 <= v <= 1.0 for v in vals)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and monotone and in_range and elapsed < 60
    criterion(10, ok, f"max order-doubling change {worst:.1e} on 200 points in [-5, 2]; "
                      f"monotone={monotone}, in [0,1]={in_range}; {elapsed:.1f}s")
    assert ok
