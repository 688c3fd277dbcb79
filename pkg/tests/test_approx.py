from fractions import Fraction

import numpy as np
import pytest

from linsofic.algebra import AlgebraElement, AlgebraSpec, enumerate_ball
from linsofic.approx import (
    ApproxMap,
    amplification_shape,
    amplified_rank_bound,
    amplify,
    build_d_approximation,
    build_quotient_representation,
    check_d_approximation,
    construction_subspace,
    eval_phi,
    iter_projective,
    min_rank_search,
    mult_subspace,
    projective_vectors,
    verify_multiplicativity,
)
from linsofic.errors import DimensionMismatch, OutOfBall, PreconditionError, UnsupportedAlgebra, UnsupportedSize
from linsofic.fields import GF2, QQ, FieldSpec
from linsofic.folner import FolnerWindow, candidate_window
from linsofic.linalg import Matrix, Subspace, kron_and_pad

KX = AlgebraSpec.polynomial()
KZ = AlgebraSpec.laurent()
KZ2 = AlgebraSpec.laurent(2)
HEIS = AlgebraSpec.heisenberg()


def truncated_shift(field, n):
    rows = [[0] * n for _ in range(n)]
    for i in range(n - 1):
        rows[i + 1][i] = 1
    return Matrix(field, rows)


def shift_map(field=GF2, n=8, d=2):
    return build_d_approximation(KX, candidate_window(KX, n), d, field, check_invariance=False)


class TestBuild:
    def test_shift_table(self):
        phi = shift_map()
        J = truncated_shift(GF2, 8)
        assert phi[(1,)] == J
        assert phi[(0,)] == Matrix.identity(GF2, 8)
        power = Matrix.identity(GF2, 8)
        for j in range(5):
            assert phi[(j,)] == power
            power = power @ J
        assert phi.degree_cap == 4 and set(phi.words()) == {(j,) for j in range(5)}

    def test_laurent_shift_with_corners(self):
        phi = build_d_approximation(KZ, candidate_window(KZ, 8), 2, QQ, check_invariance=False)
        assert phi.n == 17 and phi[(1,)].rank() == 16 and phi[(-1,)].rank() == 16

    def test_precondition_error_carries_report(self):
        with pytest.raises(PreconditionError) as exc:
            build_d_approximation(KX, candidate_window(KX, 8), 2, GF2)
        rep = exc.value.report
        assert rep.dim_W == 8 and not rep.holds

    def test_invariant_window_accepted(self):
        # S^4 has 5 words, so the window needs 4 extra words to stay under 1/10.
        phi = build_d_approximation(KX, candidate_window(KX, 41), 2, GF2)
        assert phi.provenance["invariance"]["holds"]

    def test_validation(self):
        with pytest.raises(ValueError):
            shift_map(d=0)
        with pytest.raises(ValueError):
            build_d_approximation(KX, candidate_window(KZ, 2), 1, GF2)

    def test_table_must_cover_ball(self):
        phi = shift_map()
        table = dict(phi.table)
        table.pop((4,))
        with pytest.raises(OutOfBall):
            ApproxMap(KX, GF2, 8, 4, table, {"kind": "file"})


class TestEval:
    def test_linear_combination(self):
        phi = shift_map(QQ)
        a = AlgebraElement(KX, QQ, {(1,): 2, (0,): 1})
        J = truncated_shift(QQ, 8)
        assert eval_phi(phi, a) == J.scale(2) + Matrix.identity(QQ, 8)
        assert eval_phi(phi, AlgebraElement.zero(KX, QQ)) == Matrix.zeros(QQ, 8, 8)

    def test_out_of_ball(self):
        with pytest.raises(OutOfBall):
            eval_phi(shift_map(), AlgebraElement.word(KX, GF2, (5,)))


class TestSubspaces:
    def test_quotient_rep_full(self):
        psi = build_quotient_representation(KZ, 5, GF2, 4)
        assert mult_subspace(psi, 2) == Subspace.full(GF2, 5)

    def test_construction_subspace_dims(self):
        phi = build_d_approximation(KX, candidate_window(KX, 8), 3, GF2, check_invariance=False)
        assert construction_subspace(phi, 2) == Subspace.coordinate(GF2, 8, range(4))
        assert construction_subspace(phi, 3) == Subspace.coordinate(GF2, 8, range(2))

    def test_truncated_shift_is_multiplicative_on_words(self):
        # Composing truncations on monomials loses nothing: J^a J^b = J^(a+b).
        phi = shift_map()
        assert mult_subspace(phi, 2).dim == 8

    def test_construction_inside_true_kernel(self):
        for alg, n in ((KZ, 4), (KZ2, 2), (HEIS, 1)):
            phi = build_d_approximation(alg, candidate_window(alg, n), 1, GF2, check_invariance=False)
            C, U = construction_subspace(phi, 1), mult_subspace(phi, 1)
            assert C <= U and verify_multiplicativity(phi, 1, U)

    def test_kernel_against_brute_force(self):
        phi = build_d_approximation(KZ2, candidate_window(KZ2, 1), 1, GF2, check_invariance=False)
        U = mult_subspace(phi, 1)
        words = enumerate_ball(KZ2, 1).words
        n = phi.n
        good = 0
        for i in range(2**n):
            v = np.array([(i >> j) & 1 for j in range(n)], dtype=np.int64)
            ok = all(
                not np.any((phi[KZ2.mul(a, b)].data @ v - phi[a].data @ (phi[b].data @ v)) % 2)
                for a in words
                for b in words
            )
            good += ok
            assert ok == U.contains(v.tolist())
        assert good == 2**U.dim

    def test_cap(self):
        with pytest.raises(OutOfBall):
            mult_subspace(shift_map(), 3)


class TestCheck:
    def test_certified_example(self):
        rep = check_d_approximation(shift_map(), 2)
        assert rep.rank_policy["kind"] == "exhaustive" and rep.elements_checked == 7
        assert rep.min_rank_seen == 6 and rep.threshold == 4 and rep.certified

    def test_construction_subspace_certifies_example(self):
        phi = shift_map()
        rep = check_d_approximation(phi, 2, U=construction_subspace(phi, 2))
        assert rep.dim_U == 4 and rep.dim_ok and rep.certified

    def test_d3_not_certified(self):
        phi = build_d_approximation(KX, candidate_window(KX, 8), 3, GF2, check_invariance=False)
        rep = check_d_approximation(phi, 3, U=construction_subspace(phi, 3))
        assert rep.dim_U == 2 and not rep.dim_ok and not rep.certified
        # J^3 has rank 5 < 16/3, so the rank bullet fails as well.
        assert rep.min_rank_seen == 5 and not rep.rank_ok

    def test_zero_map(self):
        table = {w: Matrix.zeros(GF2, 4, 4) for w in enumerate_ball(KX, 4).words}
        phi = ApproxMap(KX, GF2, 4, 4, table, {"kind": "file"})
        for d in (1, 2):
            rep = check_d_approximation(phi, d)
            assert rep.min_rank_seen == 0
            assert rep.certified == (d == 1)

    def test_quotient_m16_gf101(self):
        psi = build_quotient_representation(KZ, 16, FieldSpec(101), 6)
        rep = check_d_approximation(psi, 3, seed=1)
        assert rep.rank_policy["kind"] == "basis-plus-random" and rep.dim_U == 16 and rep.certified

    def test_quotient_m16_gf5_reports_violation(self):
        # (t^2 - 1)(t^4 + 1) divides t^16 - 1 over GF(5), so a degree-3 element has a big kernel.
        psi = build_quotient_representation(KZ, 16, FieldSpec(5), 6)
        rep = check_d_approximation(psi, 3)
        assert rep.rank_policy["kind"] == "exhaustive"
        assert rep.mult_ok and rep.dim_ok and not rep.rank_ok and rep.min_rank_seen == 10

    def test_policies(self):
        phi = shift_map(QQ)
        rep = check_d_approximation(phi, 2, seed=3)
        assert rep.rank_policy == {"kind": "basis-plus-random", "samples": 256, "seed": 3}
        with pytest.raises(UnsupportedSize):
            check_d_approximation(phi, 2, policy="exhaustive")
        with pytest.raises(ValueError):
            min_rank_search(phi, [(0,)], policy="sometimes")

    def test_report_json_is_exact(self):
        js = check_d_approximation(shift_map(), 2).to_json()
        assert js["threshold"] == "4" and js["certified"] is True

    def test_projective_order(self):
        assert projective_vectors(3, 2).tolist() == [[1, 0], [1, 1], [1, 2], [0, 1]]
        assert sum(len(b) for b in iter_projective(2, 5, batch=3)) == 31
        vecs = {tuple(v) for v in projective_vectors(3, 3)}
        assert len(vecs) == 13


class TestQuotient:
    def test_cyclic(self):
        psi = build_quotient_representation(KZ, 4, GF2, 2)
        C = Matrix(GF2, [[0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]])
        assert psi[(1,)] == C
        assert build_quotient_representation(KX, 4, GF2, 2)[(1,)] == C

    def test_heisenberg_m2(self):
        psi = build_quotient_representation(HEIS, 2, GF2, 2)
        X, Y = psi[(1, 0, 0)], psi[(0, 1, 0)]
        Z = psi[(1, 1, 1)] @ (X @ Y).inverse()
        assert psi.n == 8
        assert Y @ X == X @ Y @ Z
        assert Z @ X == X @ Z and Z @ Y == Y @ Z and Z != Matrix.identity(GF2, 8)
        assert mult_subspace(psi, 1).dim == 8

    def test_laurent_rank2(self):
        psi = build_quotient_representation(KZ2, 3, GF2, 2)
        assert psi.n == 9 and mult_subspace(psi, 1).dim == 9

    def test_unsupported(self):
        with pytest.raises(UnsupportedAlgebra):
            build_quotient_representation(AlgebraSpec.polynomial(2), 3, GF2, 2)


class TestAmplify:
    def test_neutral(self):
        psi = build_quotient_representation(KZ, 4, GF2, 2)
        assert amplify(psi, [4])[0].table == psi.table

    def test_block_structure(self):
        table = {w: Matrix(QQ, [[1, 2], [3, 4]]) if w == (1,) else Matrix.identity(QQ, 2) for w in enumerate_ball(KX, 2).words}
        src = ApproxMap(KX, QQ, 2, 2, table, {"kind": "file"})
        rho = amplify(src, [5])[0]
        assert rho.provenance["copies"] == 2 and rho.provenance["pad"] == 1
        assert rho[(1,)] == kron_and_pad(src[(1,)], 2, 1)
        assert rho[(1,)].rank() == 4

    def test_shape(self):
        assert amplification_shape(16, 47) == (2, 15)
        with pytest.raises(DimensionMismatch):
            amplification_shape(16, 15)

    def test_multiplicativity_preserved(self):
        psi = build_quotient_representation(KZ, 3, GF2, 2)
        rho = amplify(psi, [10])[0]
        U = mult_subspace(rho, 1)
        assert U.dim == 10 and verify_multiplicativity(rho, 1, U)

    def test_bound_chain(self):
        chain = amplified_rank_bound(6, 3)
        assert chain["normalized_lower"] == Fraction(5, 6) * Fraction(6, 7)
        assert chain["chain_holds"]
        assert not amplified_rank_bound(1, 3)["chain_holds"]


class TestJson:
    @pytest.mark.parametrize("field", [GF2, QQ, FieldSpec(101)])
    def test_roundtrip(self, field):
        phi = shift_map(field)
        back = ApproxMap.from_json(phi.to_json())
        assert back == phi and back.window == phi.window
        if field.is_prime_field:
            a = check_d_approximation(phi, 2, seed=4).to_json()
            b = check_d_approximation(back, 2, seed=4).to_json()
            assert a == b

    def test_custom_window_roundtrip(self):
        W = FolnerWindow.from_words(KZ, [(-1,), (0,), (1,), (2,)])
        phi = build_d_approximation(KZ, W, 1, GF2, check_invariance=False)
        assert ApproxMap.from_json(phi.to_json()) == phi
