import itertools
from fractions import Fraction

import pytest

from linsofic.algebra import AlgebraSpec, enumerate_ball
from linsofic.errors import UnsupportedWindow
from linsofic.folner import FolnerWindow, candidate_window, find_invariant_window, invariance_check

KX = AlgebraSpec.polynomial()
KZ = AlgebraSpec.laurent()
KZ2 = AlgebraSpec.laurent(2)
HEIS = AlgebraSpec.heisenberg()
BUILTINS = [KX, AlgebraSpec.polynomial(2), KZ, KZ2, HEIS]


class TestWindows:
    def test_interval(self):
        W = candidate_window(KX, 8)
        assert W.dim == 8 and set(W.words) == {(i,) for i in range(8)}

    def test_box(self):
        assert candidate_window(KZ2, 3).dim == 49

    def test_heisenberg_count(self):
        W = candidate_window(HEIS, 2)
        brute = {(a, b, c) for a in range(-2, 3) for b in range(-2, 3) for c in range(-4, 5)}
        assert W.dim == 225 and set(W.words) == brute

    def test_custom_needs_words(self):
        with pytest.raises(UnsupportedWindow):
            candidate_window(AlgebraSpec.custom("ab", []), 2)

    def test_validation(self):
        with pytest.raises(ValueError):
            candidate_window(KX, 0)
        with pytest.raises(ValueError):
            FolnerWindow(KX, ((0,), (0,)))

    def test_json(self):
        W = candidate_window(KZ2, 1)
        assert FolnerWindow.from_json(W.to_json()) == W


class TestInvariance:
    def test_unit_acts_trivially(self):
        W = candidate_window(KZ2, 2)
        rep = invariance_check([(0, 0)], W, Fraction(1, 100))
        assert rep.dim_VW == rep.dim_W and rep.holds

    def test_interval_example(self):
        rep = invariance_check(enumerate_ball(KX, 1), candidate_window(KX, 8), Fraction(1, 4))
        assert (rep.dim_W, rep.dim_VW) == (8, 9) and rep.holds

    @pytest.mark.parametrize("n", [2, 4, 8, 16])
    def test_square_cross(self, n):
        W = FolnerWindow.from_words(KZ2, itertools.product(range(n), repeat=2))
        rep = invariance_check(enumerate_ball(KZ2, 1), W, Fraction(1, 4))
        assert rep.dim_VW == n * n + 4 * n
        assert rep.holds == (Fraction(4, n) < Fraction(1, 4))

    def test_boundary_is_strict(self):
        rep = invariance_check(enumerate_ball(KX, 1), candidate_window(KX, 4), Fraction(1, 4))
        assert rep.dim_VW == 5 and not rep.holds  # 5 < 5 fails

    @pytest.mark.parametrize("alg", BUILTINS)
    def test_rank_path_agrees_with_count(self, alg):
        for n in (1, 2):
            W = candidate_window(alg, n)
            V = enumerate_ball(alg, 2)
            a = invariance_check(V, W, 1, method="count")
            b = invariance_check(V, W, 1, method="rank")
            assert a.dim_VW == b.dim_VW

    @pytest.mark.parametrize("alg", BUILTINS)
    def test_monotone_in_V(self, alg):
        W = candidate_window(alg, 2)
        dims = [invariance_check(enumerate_ball(alg, r), W, 1).dim_VW for r in range(3)]
        assert dims == sorted(dims) and dims[0] == W.dim

    @pytest.mark.parametrize("alg", [KX, KZ, KZ2, HEIS])
    def test_ratio_decreases_along_family(self, alg):
        V = enumerate_ball(alg, 1)
        ratios = [invariance_check(V, candidate_window(alg, n), 1).ratio for n in (1, 2, 4, 8)]
        assert all(a >= b for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] > 1

    def test_custom_uses_rank_path(self):
        alg = AlgebraSpec.custom("ab", [("ba", "ab")])
        W = FolnerWindow.from_words(alg, [(), (0,), (1,)])
        rep = invariance_check(enumerate_ball(alg, 1), W, 1)
        assert rep.method == "rank" and rep.dim_VW == 6

    def test_epsilon_positive(self):
        with pytest.raises(ValueError):
            invariance_check(enumerate_ball(KX, 1), candidate_window(KX, 2), 0)

    def test_doubling_search(self):
        W = find_invariant_window(KX, enumerate_ball(KX, 1), Fraction(1, 16))
        assert W.dim == 32
