import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dynvertex.qcalc import DivisionByZero
from dynvertex.simulator import spin_half_probabilities
from dynvertex.vertex_weights import (ArrowConfig, QParams, borodin_weight, fused_psi, pi_matrix,
                                      s_weight, s_weight_table, spin_half_S_matrix,
                                      spin_half_T_rev_matrix, two_spin)
from reference_tables import TRANSPOSED_PAIR, S_spin_one, T_rev, psi_spin_one

F = Fraction
BASIS = [(0, 0), (0, 1), (1, 0), (1, 1)]
small = st.fractions(F(1, 9), F(8, 9), max_denominator=9)
alphas = st.fractions(F(-2), F(2), max_denominator=7).filter(lambda a: a not in (0, 1))


def mm(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))]
            for i in range(len(A))]


def transpose(A):
    return [list(r) for r in zip(*A)]


def flip_both():
    """Pi tensor Pi on the basis (00, 01, 10, 11)."""
    return [[1 if BASIS[r] == (1 - BASIS[c][0], 1 - BASIS[c][1]) else 0 for c in range(4)]
            for r in range(4)]


def test_two_spin():
    assert two_spin(F(1, 2)) == 1 and two_spin(1) == 2 and two_spin("3/2") == 3
    with pytest.raises(ValueError):
        two_spin(F(1, 3))


def test_qparams_validation():
    with pytest.raises(ValueError):
        QParams(1, F(1, 2))
    with pytest.raises(ValueError):
        QParams(F(1, 2), 0)
    with pytest.raises(ValueError):
        QParams(0.5, F(1, 2))  # float in exact mode
    assert QParams.from_base_Q(F(2, 3), F(1, 2)).q == F(4, 9)
    assert QParams.parse("1/2", "0.3").mode == "float"


# --- Borodin weights ------------------------------------------------------

def test_borodin_trivial_weights():
    for lam, w in [(F(3, 7), F(2, 5)), (F(-2), F(9, 4))]:
        assert borodin_weight("a0", (F(4, 9), F(2, 3)), lam, w) == 1
        assert borodin_weight("d1", (F(4, 9), F(2, 3)), lam, w) == 1


@given(Q=small, lam=alphas, w1=small, w2=small)
@settings(max_examples=60, deadline=None)
def test_borodin_d0_over_a1_is_independent_of_w(Q, lam, w1, w2):
    q = Q * Q
    expected = (q - lam) / (q * (1 / q - lam))
    for w in (w1, w2):
        try:
            ratio = borodin_weight("d0", (q, Q), lam, w) / borodin_weight("a1", (q, Q), lam, w)
        except (DivisionByZero, ZeroDivisionError):
            continue
        assert ratio == expected


def test_borodin_rejects_poles():
    with pytest.raises(DivisionByZero):
        borodin_weight("a1", (F(4, 9), F(2, 3)), F(1), F(1, 2))


@given(q=small, z=small, a=alphas)
@settings(max_examples=60, deadline=None)
def test_borodin_dictionary(q, z, a):
    # q^{1/2} w = 1/z and q -> q^2; e^{2 pi i lambda} = 1/alpha
    p = QParams(q, z, a)
    args = ((q * q, q), 1 / a, 1 / (z * q))
    try:
        expected = {k: borodin_weight(k, *args) for k in ("a0", "a1", "b0", "c1", "d0", "d1")}
        S = spin_half_S_matrix(p)
    except (DivisionByZero, ZeroDivisionError):
        return
    assert S[0][0] == expected["a0"] and S[3][3] == expected["d1"]
    assert S[1][1] == expected["d0"] and S[1][2] == expected["b0"]
    assert S[2][1] == expected["c1"] and S[2][2] == expected["a1"]


# --- fused and stochastic weights -----------------------------------------

def test_psi_trivial_entries():
    p = QParams(F(3, 5), F(1, 2), F(1, 3))
    assert fused_psi(ArrowConfig(0, 0, 0, 0), 1, 1, F(4, 7), p) == 1
    assert fused_psi(ArrowConfig(1, 0, 0, 0), 1, 1, F(4, 7), p) == 0
    with pytest.raises(ValueError):
        fused_psi(ArrowConfig(3, 0, 3, 0), 1, 1, F(4, 7), p)


@given(q=small, u=st.fractions(F(1, 7), F(7), max_denominator=7), a=alphas)
@settings(max_examples=25, deadline=None)
def test_psi_spin_one_rows_sum_to_one(q, u, a):
    # u = 1, q^{+-1}, q^{+-2} are poles of the spin-1 weights
    if u in (1, q, 1 / q, q * q, 1 / (q * q)):
        return
    p = QParams(q, F(1, 2), a)
    for i1, j1 in itertools.product(range(3), repeat=2):
        try:
            total = sum(fused_psi(ArrowConfig(i1, j1, i2, i1 + j1 - i2), 1, 1, u, p)
                        for i2 in range(3) if 0 <= i1 + j1 - i2 <= 2)
        except (DivisionByZero, ZeroDivisionError):
            return
        assert total == 1


@pytest.mark.parametrize("q,u,a", [(F(3, 5), F(4, 7), F(1, 3)), (F(2, 7), F(5, 3), F(-2, 9))])
def test_psi_spin_one_matches_reference_table(q, u, a):
    p = QParams(q, F(1, 2), a)
    table = psi_spin_one(q, u, a)
    for key, value in table.items():
        if key in TRANSPOSED_PAIR:
            continue
        assert fused_psi(ArrowConfig(*key), 1, 1, u, p) == value, key
    first, second = TRANSPOSED_PAIR
    assert fused_psi(ArrowConfig(*first), 1, 1, u, p) == table[second]
    assert fused_psi(ArrowConfig(*second), 1, 1, u, p) == table[first]


def test_s_spin_one_matches_reference_table():
    q, z, a = F(3, 5), F(2, 7), F(1, 3)
    p = QParams(q, z, a)
    table = S_spin_one(q, z, a)
    assert len(table) == 19
    for key, value in table.items():
        if key not in TRANSPOSED_PAIR:
            assert s_weight(ArrowConfig(*key), 1, 1, p) == value, key
    first, second = TRANSPOSED_PAIR
    assert s_weight(ArrowConfig(*first), 1, 1, p) == table[second]
    assert s_weight(ArrowConfig(*second), 1, 1, p) == table[first]
    # the closed form sends a lone arrow straight through with probability 0 at z = 1,
    # like every other single-arrow entry; the transcribed pair would give 1
    one = QParams(q, 1, a)
    assert s_weight(ArrowConfig(*first), 1, 1, one) == 0
    assert S_spin_one(q, F(1), a)[first] == 1


def test_spin_half_S_row_two():
    q, z, a = F(3, 5), F(2, 7), F(1, 3)
    S = spin_half_S_matrix(QParams(q, z, a))
    assert S[1][1] == (z - 1) * (1 - a * q * q) / ((z * q * q - 1) * (1 - a))


def test_spin_half_S_matches_closed_forms_used_by_simulator():
    for q, z, a in [(F(3, 5), F(2, 7), F(1, 3)), (F(1, 4), F(1, 4), F(-1, 2)), (F(1, 2), F(3, 4), 0)]:
        S = spin_half_S_matrix(QParams(q, z, a))
        sim = spin_half_probabilities(float(q), float(z), float(a))
        exact = (S[1][1], S[1][2], S[2][2], S[2][1])
        assert np.allclose(sim, [float(v) for v in exact], rtol=1e-14, atol=0)


def test_T_rev_block_matches_reference():
    q, z = F(3, 5), F(2, 7)
    assert spin_half_T_rev_matrix(QParams(q, z, F(1, 3))) == T_rev(q, z)
    assert spin_half_T_rev_matrix(QParams(q, z))[1][1] == (q * q - 1) / (z * q * q - 1)


def test_alpha_zero_limit_gives_reversed_block_after_substitution():
    # S at alpha = 0 with q -> 1/q, z -> 1/z and the outputs swapped is T_rev
    q, z = F(3, 5), F(2, 7)
    S = spin_half_S_matrix(QParams(1 / q, 1 / z))
    swap = [0, 2, 1, 3]
    assert [[S[r][swap[c]] for c in range(4)] for r in range(4)] == T_rev(q, z)


def test_spin_half_rows_sum_to_one():
    p = QParams(F(3, 5), F(2, 7), F(1, 3))
    for M in (spin_half_S_matrix(p), spin_half_T_rev_matrix(p)):
        assert all(sum(row) == 1 for row in M)


@given(q=small, z=small, a=alphas)
@settings(max_examples=40, deadline=None)
def test_inversion_formula(q, z, a):
    P = flip_both()
    try:
        lhs = mm(mm(P, spin_half_S_matrix(QParams(q, z, a))), P)
        rhs = spin_half_S_matrix(QParams(1 / q, 1 / z, a))
    except (DivisionByZero, ZeroDivisionError):
        return
    assert lhs == rhs


def reference_R(q, z, a):
    d = z * q * q - 1
    return [[1, 0, 0, 0],
            [0, q * (z - 1) / d, (q * q - 1) * (z - a) / (d * (1 - a)), 0],
            [0, (q * q - 1) * (1 - a * z) / (d * (1 - a)),
             (z - 1) * (a * a * q * q - a * q ** 4 - a + q * q) / (q * d * (1 - a) ** 2), 0],
            [0, 0, 0, 1]]


@given(q=small, z=small)
@settings(max_examples=30, deadline=None)
def test_transposition_on_nondynamic_R_block(q, z):
    P = flip_both()
    R = reference_R(q, z, 0)
    assert mm(P, R) == mm(transpose(R), P)


@given(q=small, z=small, a=st.fractions(F(-3), F(0), max_denominator=7))
@settings(max_examples=25, deadline=None)
def test_stochasticity_and_nonnegativity(q, z, a):
    # nonnegative for alpha <= 0 as long as z <= q^{2(2J-1)}, J the horizontal spin
    p = QParams(q, z, a)
    for I, J in [(F(1, 2), F(1, 2)), (1, F(1, 2)), (F(1, 2), 1), (1, 1)]:
        table = s_weight_table(I, J, p)
        rows = {}
        for cfg, v in table.items():
            rows[(cfg.i1, cfg.j1)] = rows.get((cfg.i1, cfg.j1), 0) + v
        assert all(s == 1 for s in rows.values())
        if z <= q ** (2 * (two_spin(J) - 1)):
            assert min(table.values()) >= 0
        else:
            assert min(table.values()) < 0


def test_spin_one_negative_weight_outside_region():
    q, z = F(1, 3), F(1, 2)
    assert s_weight(ArrowConfig(0, 2, 0, 2), 1, 1, QParams(q, z)) < 0


def test_alpha_zero_matches_tiny_alpha():
    base = QParams(F(3, 5), F(2, 7))
    tiny = base.with_alpha(F(1, 10 ** 40))
    W0, W1 = s_weight_table(1, F(3, 2), base), s_weight_table(1, F(3, 2), tiny)
    assert max(abs(W0[k] - W1[k]) for k in W0) < F(1, 10 ** 35)


def test_float_mode_agrees_with_exact():
    exact = s_weight_table(1, 1, QParams(F(3, 5), F(2, 7), F(1, 3)))
    approx = s_weight_table(1, 1, QParams(0.6, 2 / 7, 1 / 3, mode="float"))
    for k in exact:
        assert approx[k] == pytest.approx(float(exact[k]), rel=1e-12)


def test_pi_matrix():
    assert pi_matrix(1) == [[0, 1], [1, 0]]
    for twoJ in range(5):
        P = np.array(pi_matrix(twoJ))
        assert (P @ P == np.eye(twoJ + 1)).all()
        e0 = np.zeros(twoJ + 1)
        e0[0] = 1
        assert (P @ e0)[twoJ] == 1
