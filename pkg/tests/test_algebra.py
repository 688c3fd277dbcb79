import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linsofic.algebra import (
    AlgebraElement,
    AlgebraSpec,
    element_coords,
    enumerate_ball,
    growth_function,
    mul_elements,
    word_length,
)
from linsofic.errors import ConfigError, NonTermination, OutOfBall
from linsofic.fields import GF2, QQ, FieldSpec

KX = AlgebraSpec.polynomial()
KXY = AlgebraSpec.polynomial(2)
KZ = AlgebraSpec.laurent()
KZ2 = AlgebraSpec.laurent(2)
HEIS = AlgebraSpec.heisenberg()

# Integer unipotent matrices with Y X = X Y Z and Z central.
_X = np.array([[1, 0, 0], [0, 1, 1], [0, 0, 1]], dtype=object)
_Y = np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]], dtype=object)
_Z = np.array([[1, 0, 1], [0, 1, 0], [0, 0, 1]], dtype=object)


def _pow(m, e):
    out = np.eye(3, dtype=object).astype(int).astype(object)
    base = m if e >= 0 else np.array([[int(round(x)) for x in row] for row in np.linalg.inv(m.astype(float))], dtype=object)
    for _ in range(abs(e)):
        out = out.dot(base)
    return out


def heis_matrix(w):
    a, b, c = w
    return _pow(_X, a).dot(_pow(_Y, b)).dot(_pow(_Z, c))


class TestWords:
    def test_generators_start_with_unit(self):
        for alg in (KX, KXY, KZ, KZ2, HEIS):
            assert alg.generators()[0] == alg.unit
        assert KZ.generator_names() == ("1", "t", "t^-1")

    def test_heisenberg_relation(self):
        x, xi, y, yi = HEIS.generators()[1:]
        assert HEIS.mul(y, x) == (1, 1, 1)
        assert HEIS.mul(HEIS.mul(x, y), (0, 0, 1)) == (1, 1, 1)
        assert HEIS.mul(x, xi) == HEIS.unit and HEIS.mul(yi, y) == HEIS.unit

    @settings(max_examples=200, deadline=None)
    @given(*[st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-4, 4)) for _ in range(2)])
    def test_heisenberg_matches_matrix_model(self, u, v):
        assert (heis_matrix(HEIS.mul(u, v)) == heis_matrix(u).dot(heis_matrix(v))).all()

    @settings(max_examples=100, deadline=None)
    @given(*[st.tuples(st.integers(-2, 2), st.integers(-2, 2), st.integers(-3, 3)) for _ in range(3)])
    def test_heisenberg_associative(self, u, v, w):
        assert HEIS.mul(HEIS.mul(u, v), w) == HEIS.mul(u, HEIS.mul(v, w))

    def test_normal_form(self):
        # y * x * x^-1 * y^-1 = 1
        assert HEIS.normal_form([3, 1, 2, 4]) == (HEIS.unit, 1)
        assert KXY.normal_form([1, 2, 1]) == ((2, 1), 1)
        with pytest.raises(IndexError):
            KX.normal_form([5])

    def test_json_roundtrip(self):
        for alg in (KX, KXY, KZ2, HEIS):
            assert AlgebraSpec.from_json(alg.to_json()) == alg
        with pytest.raises(ConfigError):
            AlgebraSpec.from_json({"kind": "free"})

    def test_format(self):
        assert KXY.format_word((2, 1)) == "x1^2*x2"
        assert HEIS.format_word((1, 0, -1)) == "x*z^-1"


class TestCustom:
    def test_commutative_rewrite_matches_polynomials(self):
        alg = AlgebraSpec.custom("ab", [("ba", "ab")])
        assert alg.rewrite((1, 0, 1, 0)) == (0, 0, 1, 1)
        sizes = [len(enumerate_ball(alg, r)) for r in range(4)]
        assert sizes == [len(enumerate_ball(KXY, r)) for r in range(4)]

    def test_nonterminating_rules(self):
        alg = AlgebraSpec.custom("a", [("a", "aa")])
        with pytest.raises(NonTermination):
            alg.mul((), (0,))

    def test_unknown_letter(self):
        with pytest.raises(ConfigError):
            AlgebraSpec.custom("ab", [("c", "a")])

    def test_json(self):
        alg = AlgebraSpec.custom("ab", [("ba", "ab")])
        assert AlgebraSpec.from_json(alg.to_json()) == alg
        assert not alg.builtin


class TestBalls:
    def test_sizes(self):
        assert growth_function(KX, 4) == [1, 2, 3, 4, 5]
        assert enumerate_ball(KXY, 2).words == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
        assert len(enumerate_ball(KZ2, 1)) == 5
        assert len(enumerate_ball(KZ2, 2)) == 13
        assert len(enumerate_ball(KZ, 3)) == 7

    def test_heisenberg_ball_matches_matrix_bfs(self):
        gens = [_X, _pow(_X, -1), _Y, _pow(_Y, -1)]
        seen = {tuple(np.eye(3, dtype=int).flatten())}
        frontier = [np.eye(3, dtype=int).astype(object)]
        for r in range(1, 5):
            nxt = []
            for m in frontier:
                for g in gens:
                    p = m.dot(g)
                    key = tuple(int(x) for x in p.flatten())
                    if key not in seen:
                        seen.add(key)
                        nxt.append(p)
            frontier = nxt
            ball = enumerate_ball(HEIS, r)
            assert len(ball) == len(seen)
            assert {tuple(int(x) for x in heis_matrix(w).flatten()) for w in ball.words} == seen

    def test_canonical_order_and_lengths(self):
        ball = enumerate_ball(KZ, 2)
        assert ball.words == ((0,), (1,), (-1,), (2,), (-2,))
        assert ball.lengths[(-2,)] == 2
        assert word_length(HEIS, (1, 1, 1)) == 2
        assert word_length(HEIS, (0, 0, 1)) == 4

    def test_cached(self):
        assert enumerate_ball(KZ2, 3) is enumerate_ball(KZ2, 3)


class TestElements:
    def test_arithmetic(self):
        x = AlgebraElement.word(KX, GF2, (1,))
        one = AlgebraElement.one(KX, GF2)
        assert (x + one) * (x + one) == x * x + one  # characteristic 2
        assert (x - x).is_zero()

    def test_coords(self):
        a = AlgebraElement(KZ, QQ, {(1,): 2, (-1,): -1})
        assert element_coords(a, enumerate_ball(KZ, 1)) == (0, 2, -1)
        with pytest.raises(OutOfBall):
            element_coords(a * a, enumerate_ball(KZ, 1))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2), st.integers(-3, 3)), min_size=1, max_size=4))
    def test_heisenberg_elements_associative(self, terms):
        F = FieldSpec(7)
        a = AlgebraElement(HEIS, F, {t[:3]: t[3] for t in terms})
        b = AlgebraElement(HEIS, F, {(1, 0, 0): 1, (0, -1, 0): 3})
        c = AlgebraElement(HEIS, F, {(0, 1, 0): 2, (0, 0, 0): 1})
        assert mul_elements(mul_elements(a, b), c) == mul_elements(a, mul_elements(b, c))

    def test_mixed_algebras_rejected(self):
        with pytest.raises(ValueError):
            AlgebraElement.one(KX, GF2) + AlgebraElement.one(KZ, GF2)
