"""Exact finite-stage almost-representations in the rank metric.

Builds matrix approximations of finitely generated algebras from Følner
windows, certifies them, tiles them by root vectors and conjugates pairs of
approximations to each other, all in exact arithmetic over GF(p) or Q.
"""

from .algebra import AlgebraElement, AlgebraSpec, Ball, element_coords, enumerate_ball, mul_elements
from .approx import (
    ApproxMap,
    CertReport,
    amplify,
    build_d_approximation,
    build_quotient_representation,
    check_d_approximation,
    construction_subspace,
    eval_phi,
    mult_subspace,
    verify_multiplicativity,
)
from .errors import *  # noqa: F401,F403
from .fields import GF2, QQ, FieldSpec
from .folner import FolnerWindow, InvarianceReport, candidate_window, invariance_check
from .linalg import Matrix, Subspace, complete_to_basis, kron_and_pad, mat_rank, nullspace, rk_dist
from .lld import LowRankWitness, OperatorFamily, bms_search, is_lld, verify_bms_sweep
from .tiling import (
    ConjugacyResult,
    RootVector,
    Tiling,
    build_conjugator,
    find_root_vector,
    hyperfinite_decompose,
    monotile,
    tile_window,
    verify_conjugacy,
)

__version__ = "0.1.0"
