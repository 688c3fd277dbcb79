"""Finite-stage approximations ``phi: A_{<=D} -> M_n(K)`` and their certification."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra import AlgebraElement, AlgebraSpec, enumerate_ball
from .errors import DimensionMismatch, OutOfBall, PreconditionError, UnsupportedAlgebra, UnsupportedSize
from .fields import FieldSpec
from .folner import FolnerWindow, invariance_check
from .linalg import (
    Matrix,
    Subspace,
    _Echelon,
    _matmul,
    _rref,
    batched_rank,
    kron_and_pad,
    matrix_from_text,
    matrix_to_text,
    nullspace,
)

EXHAUSTIVE_BUDGET = 2**20
DEFAULT_SAMPLES = 256


class ApproxMap:
    """A linear map on ``A_{<=degree_cap}`` given by its values on basis words."""

    __slots__ = ("algebra", "field", "n", "degree_cap", "table", "provenance", "window", "_stack")

    def __init__(
        self,
        algebra: AlgebraSpec,
        field: FieldSpec,
        n: int,
        degree_cap: int,
        table: Mapping[tuple, Matrix],
        provenance: Mapping | None = None,
        window: FolnerWindow | None = None,
    ):
        ball = enumerate_ball(algebra, degree_cap)
        if set(table) != set(ball.words):
            missing = [w for w in ball.words if w not in table]
            if missing:
                raise OutOfBall(missing[0], "the supplied table")
            raise ValueError("table has words outside the degree cap ball")
        for w, m in table.items():
            if m.field != field:
                raise DimensionMismatch(f"table entry {w} is over {m.field}, expected {field}")
            if m.shape != (n, n):
                raise DimensionMismatch(f"table entry {w} has shape {m.shape}, expected {(n, n)}")
        self.algebra = algebra
        self.field = field
        self.n = n
        self.degree_cap = degree_cap
        self.table = {w: table[w] for w in ball.words}
        self.provenance = dict(provenance or {})
        self.window = window
        self._stack = None

    def __getitem__(self, word) -> Matrix:
        w = tuple(word)
        try:
            return self.table[w]
        except KeyError:
            raise OutOfBall(w, f"the degree cap {self.degree_cap}") from None

    def words(self) -> tuple:
        return tuple(self.table)

    def generator_matrices(self) -> dict:
        names = self.algebra.generator_names()
        return {name: self[w] for name, w in zip(names, self.algebra.generators())}

    def stack(self, words: Sequence) -> np.ndarray:
        return np.stack([self[w].data for w in words]) if words else self.field.zeros((0, self.n, self.n))

    def same_shape(self, other: ApproxMap) -> bool:
        return (self.algebra, self.field, self.n) == (other.algebra, other.field, other.n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ApproxMap):
            return NotImplemented
        return (
            self.same_shape(other)
            and self.degree_cap == other.degree_cap
            and self.table == other.table
        )

    # -- JSON ---------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "algebra": self.algebra.to_json(),
            "field": str(self.field),
            "n": self.n,
            "degree_cap": self.degree_cap,
            "provenance": self.provenance,
            "window": self.window.to_json() if self.window is not None else None,
            "table": [{"word": list(w), "matrix": matrix_to_text(m)} for w, m in self.table.items()],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> ApproxMap:
        alg = AlgebraSpec.from_json(obj["algebra"])
        field = FieldSpec.parse(obj["field"])
        table = {}
        for entry in obj["table"]:
            m = matrix_from_text(entry["matrix"])
            if m.field != field:
                raise DimensionMismatch(f"matrix over {m.field} in a table over {field}")
            table[tuple(entry["word"])] = m
        window = FolnerWindow.from_json(obj["window"]) if obj.get("window") else None
        return cls(alg, field, int(obj["n"]), int(obj["degree_cap"]), table, obj.get("provenance"), window)


# ---------------------------------------------------------------------------
# building
# ---------------------------------------------------------------------------


def builder_epsilon(alg: AlgebraSpec, d: int) -> Fraction:
    return Fraction(1, d * len(enumerate_ball(alg, 2 * d)))


def build_d_approximation(
    alg: AlgebraSpec,
    W: FolnerWindow,
    d: int,
    field: FieldSpec,
    *,
    check_invariance: bool = True,
) -> ApproxMap:
    """Compress left multiplication to the window: ``phi(b) = p o m_b`` on W.

    ``p`` kills every basis word outside W. With ``check_invariance`` the
    window must be (A_{<=2d}, 1/(d |S^{2d}|))-invariant; the report is kept in
    the provenance either way.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if W.algebra != alg:
        raise ValueError("window belongs to a different algebra")
    ball = enumerate_ball(alg, 2 * d)
    rep = invariance_check(ball, W, builder_epsilon(alg, d))
    if check_invariance and not rep.holds:
        raise PreconditionError(
            f"window of dimension {rep.dim_W} is not (A_<=2d, {rep.epsilon})-invariant "
            f"(dim VW = {rep.dim_VW})",
            rep,
        )
    n = W.dim
    idx = W.index()
    one = field.scalar(1)
    table = {}
    for b in ball.words:
        arr = field.zeros((n, n))
        for j, w in enumerate(W.words):
            i = idx.get(alg.mul(b, w))
            if i is not None:
                arr[i, j] = one
        table[b] = Matrix(field, arr, _trusted=True)
    prov = {"kind": "folner-window", "d": d, "invariance": rep.to_json()}
    return ApproxMap(alg, field, n, 2 * d, table, prov, W)


def _perm_matrix(field: FieldSpec, images: Sequence[int]) -> Matrix:
    """Matrix sending e_j to e_{images[j]}."""
    n = len(images)
    arr = field.zeros((n, n))
    arr[list(images), list(range(n))] = field.scalar(1)
    return Matrix(field, arr, _trusted=True)


def quotient_elements(alg: AlgebraSpec, m: int) -> list:
    if alg.kind == "polynomial" and alg.rank == 1:
        return [(i,) for i in range(m)]
    if alg.kind == "laurent":
        return list(itertools.product(range(m), repeat=alg.rank))
    if alg.kind == "heisenberg":
        return list(itertools.product(range(m), repeat=3))
    raise UnsupportedAlgebra(f"no quotient representation for {alg.kind} (rank {alg.rank})")


def build_quotient_representation(alg: AlgebraSpec, m: int, field: FieldSpec, degree_cap: int) -> ApproxMap:
    """Exact representation through a finite quotient.

    K[x] acts on K[x]/(x^m - 1), K[Z^r] on the group algebra of (Z/m)^r and
    the Heisenberg algebra on that of its reduction mod m; all by left
    multiplication on the group-element basis (listed lexicographically).
    """
    if m < 1:
        raise ValueError("quotient parameter must be >= 1")
    elems = quotient_elements(alg, m)
    index = {g: i for i, g in enumerate(elems)}
    ball = enumerate_ball(alg, degree_cap)
    table = {}
    for b in ball.words:
        g = tuple(e % m for e in b)
        images = [index[tuple(e % m for e in alg.mul(g, h))] for h in elems]
        table[b] = _perm_matrix(field, images)
    prov = {"kind": "quotient-rep", "m": m}
    return ApproxMap(alg, field, len(elems), degree_cap, table, prov)


def amplification_shape(source_n: int, target: int) -> tuple[int, int]:
    if target < source_n:
        raise DimensionMismatch(f"target {target} is smaller than the source dimension {source_n}")
    return divmod(target, source_n)


def amplify(source: ApproxMap, targets: Iterable[int]) -> list[ApproxMap]:
    """``rho(a) = (psi(a) (x) I_c) (+) 0_r`` for each target ``n = c * source.n + r``."""
    out = []
    for t in targets:
        c, r = amplification_shape(source.n, int(t))
        table = {w: kron_and_pad(m, c, r) for w, m in source.table.items()}
        prov = {"kind": "amplified", "copies": c, "pad": r, "source": source.provenance}
        out.append(ApproxMap(source.algebra, source.field, int(t), source.degree_cap, table, prov))
    return out


def amplified_rank_bound(c: int, d: int) -> dict:
    """Inequality chain for an amplification with ``c`` copies of a 2d-certified source.

    ``(1 - 1/2d) c/(c+1) >= (1 - 1/2d)^2 > 1 - 1/d`` whenever ``c >= 2d``.
    """
    base = 1 - Fraction(1, 2 * d)
    first = base * Fraction(c, c + 1)
    second = base * base
    third = 1 - Fraction(1, d)
    return {
        "copies": c,
        "d": d,
        "normalized_lower": first,
        "square": second,
        "target": third,
        "chain_holds": first >= second > third,
    }


# ---------------------------------------------------------------------------
# evaluation and multiplicativity
# ---------------------------------------------------------------------------


def eval_phi(phi: ApproxMap, a: AlgebraElement) -> Matrix:
    if a.algebra != phi.algebra:
        raise ValueError("element belongs to a different algebra")
    if a.field != phi.field:
        raise DimensionMismatch(f"element over {a.field}, map over {phi.field}")
    field = phi.field
    acc = field.zeros((phi.n, phi.n))
    for w, c in a.terms.items():
        acc = acc + phi[w].data * c
    return Matrix(field, field.canonical(acc), _trusted=True)


def _require_cap(phi: ApproxMap, d: int):
    if d < 1:
        raise ValueError("d must be >= 1")
    if 2 * d > phi.degree_cap:
        raise OutOfBall(f"S^{2 * d}", f"the degree cap {phi.degree_cap}")


def defect_subspace(phi: ApproxMap, pairs: Iterable[tuple]) -> Subspace:
    """Common kernel of ``phi(ab) - phi(a) phi(b)`` over the given word pairs."""
    field, n = phi.field, phi.n
    alg = phi.algebra
    ech = _Echelon(field, n)
    for a, b in pairs:
        D = phi[alg.mul(a, b)].data - _matmul(field, phi[a].data, phi[b].data)
        D = field.canonical(D)
        if np.any(D):
            ech.add_block(D)
            if ech.dim == n:
                break
    if ech.dim == 0:
        return Subspace.full(field, n)
    return nullspace(Matrix(field, ech.sorted_rows(), _trusted=True))


def mult_subspace(phi: ApproxMap, d: int) -> Subspace:
    """``U = intersection of ker(phi(ab) - phi(a) phi(b))`` over ``a, b`` in ``S^d``."""
    _require_cap(phi, d)
    words = enumerate_ball(phi.algebra, d).words
    return defect_subspace(phi, itertools.product(words, words))


def construction_subspace(phi: ApproxMap, d: int) -> Subspace:
    """Coordinates of window words ``w`` with ``S^{2d} w`` inside the window.

    This is the explicit subspace on which a window-built map is
    d-multiplicative by construction; it is contained in ``mult_subspace``.
    """
    if phi.window is None:
        raise ValueError("construction subspace needs a window-built map")
    _require_cap(phi, d)
    alg = phi.algebra
    ball = enumerate_ball(alg, 2 * d).words
    idx = phi.window.index()
    keep = [j for j, w in enumerate(phi.window.words) if all(alg.mul(b, w) in idx for b in ball)]
    return Subspace.coordinate(phi.field, phi.n, keep)


def verify_multiplicativity(phi: ApproxMap, d: int, U: Subspace) -> bool:
    """Check ``phi(ab) u = phi(a) phi(b) u`` on every basis vector of U."""
    _require_cap(phi, d)
    if U.dim == 0:
        return True
    field, alg = phi.field, phi.algebra
    B = U.basis.data
    words = enumerate_ball(alg, d).words
    for a in words:
        for b in words:
            lhs = _matmul(field, phi[alg.mul(a, b)].data, B)
            rhs = _matmul(field, phi[a].data, _matmul(field, phi[b].data, B))
            if np.any(field.canonical(lhs - rhs)):
                return False
    return True


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------


@dataclass
class CertReport:
    d: int
    n: int
    dim_U: int
    U: Subspace = dc_field(repr=False)
    mult_ok: bool
    rank_policy: dict
    min_rank_seen: int
    min_rank_witness: tuple
    elements_checked: int

    @property
    def dim_ok(self) -> bool:
        return self.dim_U * self.d >= (self.d - 1) * self.n

    @property
    def rank_ok(self) -> bool:
        return self.min_rank_seen * self.d >= (self.d - 1) * self.n

    @property
    def certified(self) -> bool:
        return self.mult_ok and self.dim_ok and self.rank_ok

    @property
    def threshold(self) -> Fraction:
        return (1 - Fraction(1, self.d)) * self.n

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "dim_U": self.dim_U,
            "threshold": str(self.threshold),
            "mult_ok": self.mult_ok,
            "dim_ok": self.dim_ok,
            "rank_policy": self.rank_policy,
            "min_rank_seen": self.min_rank_seen,
            "min_rank_witness": [str(c) for c in self.min_rank_witness],
            "elements_checked": self.elements_checked,
            "rank_ok": self.rank_ok,
            "certified": self.certified,
        }


def iter_projective(q: int, k: int, batch: int = 4096):
    """Yield the nonzero vectors of GF(q)^k whose first nonzero entry is 1.

    Order: by position of the leading 1 (earliest first), then the tail in
    lexicographic order. Blocks hold at most ``batch`` rows.
    """
    for lead in range(k):
        tail = k - lead - 1
        total = q**tail
        powers = q ** np.arange(tail - 1, -1, -1, dtype=np.int64)
        for s in range(0, total, batch):
            idx = np.arange(s, min(total, s + batch), dtype=np.int64)
            block = np.zeros((len(idx), k), dtype=np.int64)
            block[:, lead] = 1
            if tail:
                block[:, lead + 1 :] = (idx[:, None] // powers[None, :]) % q
            yield block


def projective_vectors(q: int, k: int) -> np.ndarray:
    return np.vstack(list(iter_projective(q, k)))


def _combine(field: FieldSpec, coeffs: np.ndarray, stack: np.ndarray) -> np.ndarray:
    k, n, _ = stack.shape
    flat = _matmul(field, coeffs, stack.reshape(k, n * n))
    return flat.reshape(-1, n, n)


def _ranks(field: FieldSpec, mats: np.ndarray) -> np.ndarray:
    if field.is_prime_field:
        return batched_rank(field, mats)
    return np.array([len(_rref(field, m)[1]) for m in mats], dtype=np.int64)


def _batch_size(n: int) -> int:
    return max(1, min(4096, (1 << 22) // max(1, n * n)))


def exhaustive_feasible(field: FieldSpec, k: int) -> bool:
    return field.is_prime_field and field.modulus**k <= EXHAUSTIVE_BUDGET


def min_rank_search(
    phi: ApproxMap,
    words: Sequence,
    policy: str = "auto",
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> tuple[int, tuple, int, dict]:
    """Smallest rank of ``phi(a)`` seen over nonzero ``a`` in span(words).

    Returns ``(min_rank, coefficients, checked, policy_description)``.
    """
    field, n = phi.field, phi.n
    k = len(words)
    stack = phi.stack(words)
    if policy not in ("auto", "exhaustive", "random"):
        raise ValueError(f"unknown rank policy {policy!r}")
    exhaustive = exhaustive_feasible(field, k) and policy != "random"
    if policy == "exhaustive" and not exhaustive:
        raise UnsupportedSize(f"exhaustive rank check over {field} with {k} coordinates exceeds 2^20")
    best_rank, best_coeffs, checked = n + 1, None, 0

    def consume(coeffs: np.ndarray):
        nonlocal best_rank, best_coeffs, checked
        mats = _combine(field, coeffs, stack)
        ranks = _ranks(field, mats)
        checked += len(ranks)
        i = int(np.argmin(ranks))
        if ranks[i] < best_rank:
            best_rank = int(ranks[i])
            best_coeffs = tuple(field.scalar(c) for c in coeffs[i].tolist())

    bs = _batch_size(n)
    if exhaustive:
        q = field.modulus
        for block in iter_projective(q, k, bs):
            consume(block)
        desc = {"kind": "exhaustive", "field_order": q, "coordinates": k}
    else:
        consume(field.identity(k))
        rng = np.random.default_rng(seed)
        drawn = field.random_array(rng, (samples, k), bound=max(1, n))
        keep = [i for i in range(samples) if np.any(drawn[i])]
        drawn = drawn[keep]
        for s in range(0, len(drawn), bs):
            consume(drawn[s : s + bs])
        desc = {"kind": "basis-plus-random", "samples": samples, "seed": seed}
    return best_rank, best_coeffs or (), checked, desc


def check_d_approximation(
    phi: ApproxMap,
    d: int,
    policy: str = "auto",
    seed: int = 0,
    samples: int = DEFAULT_SAMPLES,
    U: Subspace | None = None,
) -> CertReport:
    """Test the three defining conditions of a d-approximation.

    Multiplicativity and the dimension bound are exact. The rank bound is
    exhaustive over projective coefficient vectors when the field is prime
    and ``q^{|S^d|} <= 2^20``, otherwise it checks the basis words plus
    ``samples`` seeded random combinations.
    """
    _require_cap(phi, d)
    if U is None:
        U = mult_subspace(phi, d)
    mult_ok = verify_multiplicativity(phi, d, U)
    words = enumerate_ball(phi.algebra, d).words
    rmin, coeffs, checked, desc = min_rank_search(phi, words, policy, samples, seed)
    return CertReport(d, phi.n, U.dim, U, mult_ok, desc, rmin, coeffs, checked)
