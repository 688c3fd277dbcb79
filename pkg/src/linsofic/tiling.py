"""Root vectors, linear monotilings and conjugators between approximations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import AlgebraSpec, enumerate_ball
from .approx import (
    ApproxMap,
    build_d_approximation,
    defect_subspace,
    mult_subspace,
    iter_projective,
)
from .errors import DimensionMismatch, PreconditionError, SearchFailure, UnsupportedWindow
from .fields import FieldSpec
from .folner import FolnerWindow, InvarianceReport, candidate_window, invariance_check
from .linalg import (
    Matrix,
    Subspace,
    _Echelon,
    _matmul,
    _rref,
    batched_rank,
    complete_to_basis,
    mat_rank,
    rk_dist,
)

RANDOM_BUDGET = 64
EXHAUSTIVE_BUDGET = 2**20
STRATEGIES = ("basis-first", "random-first")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _window_words(W) -> tuple:
    if isinstance(W, FolnerWindow):
        return W.words
    return tuple(tuple(w) for w in W)


@dataclass(frozen=True)
class RootVector:
    vector: tuple
    window_words: tuple
    images: Matrix = dc_field(repr=False)

    @property
    def span(self) -> Subspace:
        return Subspace.span(self.images.field, self.images.rows, self.images)

    def to_json(self) -> dict:
        fmt = self.images.field.format_scalar
        return {"vector": [fmt(x) for x in self.vector]}


class _RootSearch:
    """Candidate stream for W-root vectors inside a fixed subspace U.

    Candidates come in a fixed order: the canonical basis of U (if the
    strategy asks for it), ``RANDOM_BUDGET`` seeded random elements of U,
    then every projective element of U when that sweep fits the budget.
    Basis vectors that fail once fail forever (E only grows), so a cursor
    skips them on later calls.
    """

    def __init__(self, phi: ApproxMap, words: Sequence, U: Subspace, rng, strategy: str):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        self.field = phi.field
        self.n = phi.n
        self.m = len(words)
        self.T = phi.stack(words)
        self.U = U.row_array()
        self.rng = rng
        self.strategy = strategy
        self.cursor = 0 if strategy == "basis-first" else len(self.U)
        self.chunk = max(1, min(64, (1 << 22) // max(1, self.m * self.n * self.n)))

    def images(self, cand: np.ndarray) -> np.ndarray:
        """``out[b, i] = phi(w_i) cand[b]``."""
        m, n = self.m, self.n
        flat = _matmul(self.field, self.T.reshape(m * n, n), cand.T)
        return flat.reshape(m, n, -1).transpose(2, 0, 1)

    def _good(self, cand: np.ndarray, E: _Echelon) -> np.ndarray:
        X = self.images(cand)
        if E.dim:
            B = X.shape[0]
            coeff = X[:, :, E.pivots].reshape(B * self.m, E.dim)
            X = X - _matmul(self.field, coeff, E.rows).reshape(X.shape)
            X = self.field.canonical(X)
        if self.field.is_prime_field:
            ranks = batched_rank(self.field, X)
        else:
            ranks = np.array([len(_rref(self.field, x)[1]) for x in X])
        return ranks == self.m

    def _first(self, cand: np.ndarray, E: _Echelon):
        for s in range(0, len(cand), self.chunk):
            ok = np.flatnonzero(self._good(cand[s : s + self.chunk], E))
            if ok.size:
                return s + int(ok[0])
        return None

    def next(self, E: _Echelon):
        k = len(self.U)
        if k == 0:
            return None
        while self.cursor < k:
            block = self.U[self.cursor : self.cursor + self.chunk]
            ok = np.flatnonzero(self._good(block, E))
            if ok.size:
                i = int(ok[0])
                self.cursor += i + 1
                return block[i].copy()
            self.cursor += len(block)
        coeffs = self.field.random_array(self.rng, (RANDOM_BUDGET, k), bound=self.n)
        cand = self.field.canonical(_matmul(self.field, coeffs, self.U))
        i = self._first(cand, E)
        if i is not None:
            return cand[i].copy()
        q = self.field.modulus
        if q is not None and q**k <= EXHAUSTIVE_BUDGET:
            for coeffs in iter_projective(q, k):
                cand = _matmul(self.field, coeffs, self.U)
                i = self._first(cand, E)
                if i is not None:
                    return cand[i].copy()
        return None


def window_mult_subspace(phi: ApproxMap, W) -> Subspace:
    """Common kernel of ``phi(s w) - phi(s) phi(w)`` for generators s and w in W."""
    words = _window_words(W)
    gens = phi.algebra.generators()
    return defect_subspace(phi, [(s, w) for s in gens for w in words])


def _root(phi: ApproxMap, words: tuple, vec: np.ndarray) -> RootVector:
    field = phi.field
    cols = [_matmul(field, phi[w].data, vec.reshape(-1, 1))[:, 0] for w in words]
    images = Matrix(field, np.stack(cols, axis=1), _trusted=True)
    return RootVector(tuple(field.scalar(x) for x in vec.tolist()), words, images)


def find_root_vector(
    phi: ApproxMap,
    W,
    E: Subspace,
    d: int,
    seed=0,
    *,
    U: Subspace | None = None,
    strategy: str = "basis-first",
) -> RootVector:
    """A vector u in U whose images ``phi(w) u`` are independent modulo E."""
    words = _window_words(W)
    if U is None:
        U = mult_subspace(phi, d)
    if E.ambient_dim != phi.n:
        raise DimensionMismatch(f"E lives in K^{E.ambient_dim}, map acts on K^{phi.n}")
    ech = _Echelon(phi.field, phi.n)
    if E.dim:
        ech.add_block(E.row_array())
    vec = _RootSearch(phi, words, U, _rng(seed), strategy).next(ech)
    if vec is None:
        raise SearchFailure(f"no root vector found in a subspace of dimension {U.dim}")
    return _root(phi, words, vec)


@dataclass
class Tiling:
    phi: ApproxMap = dc_field(repr=False)
    window_words: tuple
    d: int
    roots: list
    total_span: Subspace = dc_field(repr=False)
    target: Fraction
    dim_U: int

    @property
    def ell(self) -> int:
        return len(self.roots)

    @property
    def dim_W(self) -> int:
        return len(self.window_words)

    @property
    def n(self) -> int:
        return self.phi.n

    @property
    def lemma_bound(self) -> Fraction:
        return (1 - Fraction(2, self.d)) * self.n - self.dim_W

    @property
    def independent(self) -> bool:
        return self.total_span.dim == self.ell * self.dim_W

    @property
    def meets_bound(self) -> bool:
        return self.total_span.dim >= self.lemma_bound

    @property
    def codimension(self) -> int:
        return self.n - self.total_span.dim

    def truncated(self, ell: int) -> Tiling:
        roots = self.roots[:ell]
        span = Subspace.span(self.phi.field, self.n, [c for r in roots for c in r.images.columns()])
        return Tiling(self.phi, self.window_words, self.d, roots, span, self.target, self.dim_U)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "dim_W": self.dim_W,
            "dim_U": self.dim_U,
            "ell": self.ell,
            "dim_total_span": self.total_span.dim,
            "target": str(self.target),
            "lemma_bound": str(self.lemma_bound),
            "independent": self.independent,
            "meets_bound": self.meets_bound,
            "roots": [r.to_json()["vector"] for r in self.roots],
        }


def monotile(
    phi: ApproxMap,
    W,
    d: int,
    seed=0,
    *,
    U: Subspace | None = None,
    target=None,
    maximal: bool = False,
    strategy: str = "basis-first",
) -> Tiling:
    """Greedy linear monotiling of K^n by translates ``phi(W) v_i``.

    Root vectors are added until the tiled span reaches ``target`` (default
    ``(1 - 2/d) n - dim W``). With ``maximal`` the loop continues until the
    search finds no further root vector.
    """
    words = _window_words(W)
    if not words:
        raise ValueError("window must be nonempty")
    if U is None:
        ball = enumerate_ball(phi.algebra, d)
        outside = [w for w in words if w not in ball]
        if outside:
            raise PreconditionError(f"window word {outside[0]} lies outside S^{d}")
        U = mult_subspace(phi, d)
    target = (1 - Fraction(2, d)) * phi.n - len(words) if target is None else Fraction(target)
    search = _RootSearch(phi, words, U, _rng(seed), strategy)
    ech = _Echelon(phi.field, phi.n)
    roots = []
    while maximal or ech.dim < target:
        vec = search.next(ech)
        if vec is None:
            if maximal:
                break
            raise SearchFailure(
                f"root search exhausted after {len(roots)} tiles (span {ech.dim}, target {target})"
            )
        root = _root(phi, words, vec)
        ech.add_block(root.images.data.T)
        roots.append(root)
    span = Subspace(phi.field, phi.n, ech.sorted_rows(), sorted(ech.pivots))
    return Tiling(phi, words, d, roots, span, target, U.dim)


# ---------------------------------------------------------------------------
# conjugators
# ---------------------------------------------------------------------------


@dataclass
class ConjugacyResult:
    M: Matrix = dc_field(repr=False)
    per_generator: dict
    epsilon: Fraction
    details: dict = dc_field(default_factory=dict)

    @property
    def achieved(self) -> Fraction:
        return max(self.per_generator.values(), default=Fraction(0))

    @property
    def success(self) -> bool:
        return self.achieved < self.epsilon

    def to_json(self, include_matrix: bool = True) -> dict:
        out = {
            "epsilon": str(self.epsilon),
            "per_generator": {k: str(v) for k, v in self.per_generator.items()},
            "achieved": str(self.achieved),
            "success": self.success,
        }
        out.update(self.details)
        if include_matrix:
            out["M"] = self.M.to_text()
        return out


def _check_pair(phiA: ApproxMap, phiB: ApproxMap):
    if phiA.algebra != phiB.algebra:
        raise DimensionMismatch("the two maps are defined on different algebras")
    if phiA.field != phiB.field:
        raise DimensionMismatch(f"field {phiA.field} vs {phiB.field}")
    if phiA.n != phiB.n:
        raise DimensionMismatch(f"ambient dimensions differ: {phiA.n} vs {phiB.n}")


def _distances(M: Matrix, Minv: Matrix, phiA: ApproxMap, phiB: ApproxMap) -> dict:
    names = phiA.algebra.generator_names()
    out = {}
    for name, s in zip(names, phiA.algebra.generators()):
        out[name] = rk_dist(M @ phiA[s] @ Minv, phiB[s])
    return out


def verify_conjugacy(M: Matrix, phiA: ApproxMap, phiB: ApproxMap, epsilon) -> ConjugacyResult:
    """Per-generator ``rk(M phiA(s) M^-1 - phiB(s))``."""
    _check_pair(phiA, phiB)
    if M.shape != (phiA.n, phiA.n):
        raise DimensionMismatch(f"conjugator of shape {M.shape} for dimension {phiA.n}")
    Minv = M.inverse()
    return ConjugacyResult(M, _distances(M, Minv, phiA, phiB), Fraction(epsilon))


def proof_bound(epsilon, d: int) -> Fraction:
    """``1 - (1 - eps/4)(1 - 3/(4d))``."""
    epsilon = Fraction(epsilon)
    return 1 - (1 - epsilon / 4) * (1 - Fraction(3, 4 * d))


def default_conjugator_window(alg: AlgebraSpec, epsilon, n: int) -> FolnerWindow:
    """Doubling search for an (S, eps/4)-invariant box window of dimension <= n."""
    gens = enumerate_ball(alg, 1)
    eps = Fraction(epsilon) / 4
    size = 1
    while True:
        W = candidate_window(alg, size)
        if W.dim > n:
            raise UnsupportedWindow(
                f"no (S, {eps})-invariant box window fits in dimension {n}; pass a window explicitly"
            )
        if invariance_check(gens, W, eps).holds:
            return W
        size *= 2


def build_conjugator(
    phiA: ApproxMap,
    phiB: ApproxMap,
    epsilon,
    seed=0,
    *,
    window: FolnerWindow | None = None,
    strategy: str = "basis-first",
) -> ConjugacyResult:
    """Conjugator M with ``M phiA(w) v_j = phiB(w) u_j`` on matched tilings.

    Both maps are tiled by the same window W inside the subspaces where they
    are multiplicative against the generators; the shorter tiling fixes the
    number of matched tiles and both families are completed to bases by
    standard vectors.
    """
    _check_pair(phiA, phiB)
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    alg, n = phiA.algebra, phiA.n
    W = window if window is not None else default_conjugator_window(alg, epsilon, n)
    words = W.words
    for phi in (phiA, phiB):
        if W.degree() + 1 > phi.degree_cap:
            raise PreconditionError(
                f"window of degree {W.degree()} needs a degree cap of at least {W.degree() + 1}, "
                f"the map stores {phi.degree_cap}"
            )
    d = max(math.ceil(4 / epsilon), W.degree())
    gens_ball = enumerate_ball(alg, 1)
    inv = invariance_check(gens_ball, W, epsilon / 4)

    seqs = np.random.SeedSequence(seed).spawn(2)
    tilings = []
    for phi, ss in zip((phiA, phiB), seqs):
        U = window_mult_subspace(phi, words)
        tilings.append(monotile(phi, words, d, np.random.default_rng(ss), U=U, target=0, maximal=True, strategy=strategy))
    ell = min(t.ell for t in tilings)
    tA, tB = (t.truncated(ell) for t in tilings)

    field = phiA.field
    if ell:
        X = Matrix(field, np.hstack([r.images.data for r in tA.roots]), _trusted=True)
        Y = Matrix(field, np.hstack([r.images.data for r in tB.roots]), _trusted=True)
    else:
        X = Y = Matrix.zeros(field, n, 0)
    Xc, Yc = complete_to_basis(X), complete_to_basis(Y)
    M = Yc @ Xc.inverse()
    Minv = Xc @ Yc.inverse()
    per = _distances(M, Minv, phiA, phiB)

    covered = ell * len(words)
    idx = set(words)
    worst = Fraction(0)
    for s in alg.generators():
        stay = sum(1 for w in words if alg.mul(s, w) in idx)
        worst = max(worst, Fraction(n - stay * ell, n))
    details = {
        "n": n,
        "d": d,
        "dim_W": len(words),
        "window": [list(w) for w in words],
        "window_invariant": inv.holds,
        "window_invariance": inv.to_json(),
        "ell": ell,
        "ell_A": tilings[0].ell,
        "ell_B": tilings[1].ell,
        "dim_U_A": tilings[0].dim_U,
        "dim_U_B": tilings[1].dim_U,
        "covered": covered,
        "proof_bound": str(proof_bound(epsilon, d)),
        "bound_applies": covered * 4 * d >= (4 * d - 3) * n,
        "instance_bound": str(worst),
        "roots_A": tA.to_json()["roots"],
        "roots_B": tB.to_json()["roots"],
    }
    return ConjugacyResult(M, per, epsilon, details)


# ---------------------------------------------------------------------------
# hyperfinite blocks
# ---------------------------------------------------------------------------


@dataclass
class HyperfiniteReport:
    idempotent: Matrix = dc_field(repr=False)
    change_of_basis: Matrix = dc_field(repr=False)
    block_dim: int
    blocks: int
    codimension: int
    defects: dict

    def to_json(self) -> dict:
        return {
            "block_dim": self.block_dim,
            "blocks": self.blocks,
            "codimension": self.codimension,
            "defects": {k: str(v) for k, v in self.defects.items()},
        }


def hyperfinite_decompose(tiling: Tiling) -> HyperfiniteReport:
    """Compress the generators to the tiled span and measure cross-tile leakage.

    In the basis ``Q`` (tile vectors first, then standard completion) the
    compression ``p phi(s) p`` is the leading ``L x L`` corner of
    ``Q^-1 phi(s) Q`` with ``L = ell * dim W``. The defect of ``s`` is the
    normalized rank of that corner minus its block diagonal.
    """
    phi = tiling.phi
    field, n = phi.field, phi.n
    m, ell = tiling.dim_W, tiling.ell
    L = m * ell
    if ell:
        X = Matrix(field, np.hstack([r.images.data for r in tiling.roots]), _trusted=True)
    else:
        X = Matrix.zeros(field, n, 0)
    Q = complete_to_basis(X)
    Qinv = Q.inverse()
    diag = field.zeros((n, n))
    for i in range(L):
        diag[i, i] = field.scalar(1)
    P = Q @ Matrix(field, diag, _trusted=True) @ Qinv
    defects = {}
    for name, s in zip(phi.algebra.generator_names(), phi.algebra.generators()):
        C = (Qinv @ phi[s] @ Q).data[:L, :L]
        off = np.array(C, copy=True)
        for j in range(ell):
            off[j * m : (j + 1) * m, j * m : (j + 1) * m] = field.zeros((m, m))
        defects[name] = Fraction(mat_rank(Matrix(field, off, _trusted=True)), n) if L else Fraction(0)
    return HyperfiniteReport(P, Q, m, ell, n - L, defects)


# ---------------------------------------------------------------------------
# tiling a single window
# ---------------------------------------------------------------------------


def corollary_epsilon(alg: AlgebraSpec, d: int, epsilon) -> Fraction:
    return Fraction(epsilon) / (3 * len(enumerate_ball(alg, 2 * d)))


@dataclass
class WindowTiling:
    tiling: Tiling
    invariance: InvarianceReport
    epsilon: Fraction

    @property
    def codimension(self) -> int:
        return self.tiling.codimension

    @property
    def within(self) -> bool:
        return self.codimension <= self.epsilon * self.tiling.n

    def to_json(self) -> dict:
        out = self.tiling.to_json()
        out.update(
            {
                "epsilon": str(self.epsilon),
                "invariance": self.invariance.to_json(),
                "codimension": self.codimension,
                "allowed_codimension": str(self.epsilon * self.tiling.n),
                "within": self.within,
            }
        )
        return out


def tile_window(
    alg: AlgebraSpec,
    V,
    W: FolnerWindow,
    d: int,
    epsilon,
    field: FieldSpec,
    seed=0,
    *,
    check_invariance: bool = True,
) -> WindowTiling:
    """Tile the image of a window W by translates of a small subspace V of A_{<=d}.

    W must be (A_{<=2d}, eps/(3|S^{2d}|))-invariant; the tiles are added
    until their span has codimension at most ``eps dim W``.
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    inv = invariance_check(enumerate_ball(alg, 2 * d), W, corollary_epsilon(alg, d, epsilon))
    if check_invariance and not inv.holds:
        raise PreconditionError(
            f"window of dimension {inv.dim_W} is not (A_<=2d, {inv.epsilon})-invariant", inv
        )
    phi = build_d_approximation(alg, W, d, field, check_invariance=False)
    target = math.ceil((1 - epsilon) * phi.n)
    tiling = monotile(phi, V, d, seed, target=target)
    return WindowTiling(tiling, inv, epsilon)
