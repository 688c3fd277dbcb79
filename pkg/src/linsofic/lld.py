"""Locally linearly dependent operator families and low-rank combinations.

A family ``T_1..T_d: K^a -> K^b`` is LLD when ``T_1 v, ..., T_d v`` are
dependent for every ``v``. Such a family always has a nontrivial
combination of rank at most ``d - 1``; the weaker classical bound is
``C(d+1, 2) - 1``. This module decides LLD-ness and searches for low-rank
combinations by exhaustive sweeps at small sizes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .approx import iter_projective
from .errors import DimensionMismatch, UnsupportedSize
from .fields import FieldSpec
from .linalg import Matrix, _matmul, _rref, batched_rank, mat_rank

DOMAIN_BUDGET = 2**20
COEFF_BUDGET = 2**20
SWEEP_BUDGET = 2**24
RATIONAL_GRID = 8


@dataclass(frozen=True)
class OperatorFamily:
    field: FieldSpec
    domain_dim: int
    codomain_dim: int
    ops: tuple

    def __post_init__(self):
        ops = tuple(self.ops)
        if not ops:
            raise ValueError("an operator family needs at least one operator")
        for T in ops:
            if T.field != self.field:
                raise DimensionMismatch(f"operator over {T.field}, family over {self.field}")
            if T.shape != (self.codomain_dim, self.domain_dim):
                raise DimensionMismatch(
                    f"operator of shape {T.shape}, expected {(self.codomain_dim, self.domain_dim)}"
                )
        object.__setattr__(self, "ops", ops)

    @classmethod
    def of(cls, ops: Sequence[Matrix]) -> OperatorFamily:
        ops = list(ops)
        if not ops:
            raise ValueError("an operator family needs at least one operator")
        b, a = ops[0].shape
        return cls(ops[0].field, a, b, tuple(ops))

    @property
    def d(self) -> int:
        return len(self.ops)

    def stack(self) -> np.ndarray:
        return np.stack([T.data for T in self.ops])

    def combination(self, coeffs: Sequence) -> Matrix:
        f = self.field
        acc = f.zeros((self.codomain_dim, self.domain_dim))
        for c, T in zip(coeffs, self.ops):
            acc = acc + T.data * f.scalar(c)
        return Matrix(f, f.canonical(acc), _trusted=True)

    def images(self, v: Sequence) -> Matrix:
        """``d x b`` matrix with rows ``T_i v``."""
        col = self.field.array([list(v)]).T
        rows = [_matmul(self.field, T.data, col)[:, 0] for T in self.ops]
        return Matrix(self.field, np.stack(rows), _trusted=True)


@dataclass(frozen=True)
class LowRankWitness:
    family: OperatorFamily
    coeffs: tuple

    @property
    def combination_rank(self) -> int:
        return mat_rank(self.family.combination(self.coeffs))

    def to_json(self) -> dict:
        fmt = self.family.field.format_scalar
        return {"coeffs": [fmt(c) for c in self.coeffs], "combination_rank": self.combination_rank}


def _ranks(field: FieldSpec, mats: np.ndarray) -> np.ndarray:
    if field.is_prime_field:
        return batched_rank(field, mats)
    return np.array([len(_rref(field, m)[1]) for m in mats], dtype=np.int64)


def _rational_grid(a: int, points: int):
    for v in itertools.product(range(points), repeat=a):
        if any(v):
            yield v


def independence_certificate(fam: OperatorFamily):
    """First vector ``v`` with ``T_1 v..T_d v`` independent, or None if the family is LLD.

    Over GF(q) all projective vectors are swept (``q^a <= 2^20``). Over Q the
    d x d minors of ``[T_i v]`` are polynomials of degree at most
    ``d min(a, b)`` in each coordinate, so a grid with that many points plus
    one per coordinate decides whether they all vanish (``a <= 4``).
    """
    field, a, d = fam.field, fam.domain_dim, fam.d
    if d > fam.codomain_dim:
        return None
    stack = fam.stack().reshape(d * fam.codomain_dim, a)
    if field.is_prime_field:
        q = field.modulus
        if q**a > DOMAIN_BUDGET:
            raise UnsupportedSize(f"domain sweep of size {q}^{a} exceeds 2^20")
        blocks = iter_projective(q, a)
    else:
        if a > 4:
            raise UnsupportedSize("rational LLD test supports domain dimension <= 4")
        pts = d * min(a, fam.codomain_dim) + 1
        grid = list(_rational_grid(a, pts))
        blocks = (field.array(grid[s : s + 4096]) for s in range(0, len(grid), 4096))
    for V in blocks:
        X = _matmul(field, stack, V.T).reshape(d, fam.codomain_dim, -1).transpose(2, 0, 1)
        ok = np.flatnonzero(_ranks(field, X) == d)
        if ok.size:
            return tuple(field.scalar(x) for x in V[int(ok[0])].tolist())
    return None


def is_lld(fam: OperatorFamily) -> bool:
    return independence_certificate(fam) is None


def _coefficient_blocks(field: FieldSpec, d: int):
    if field.is_prime_field:
        q = field.modulus
        if q**d > COEFF_BUDGET:
            raise UnsupportedSize(f"coefficient sweep of size {q}^{d} exceeds 2^20")
        return iter_projective(q, d)
    if d > 3:
        raise UnsupportedSize("rational coefficient sweep supports d <= 3")
    rng = range(-RATIONAL_GRID, RATIONAL_GRID + 1)
    tuples = []
    for lead in range(d):
        for tail in itertools.product(rng, repeat=d - lead - 1):
            tuples.append((0,) * lead + (1,) + tail)
    return (field.array(tuples[s : s + 4096]) for s in range(0, len(tuples), 4096))


def bms_search(fam: OperatorFamily) -> LowRankWitness:
    """Nontrivial combination of least rank; ties go to the first tuple in projective order.

    Coefficients are normalized so the first nonzero entry is 1. Over Q the
    remaining entries range over ``[-8, 8]``.
    """
    field, d = fam.field, fam.d
    stack = fam.stack()
    b, a = fam.codomain_dim, fam.domain_dim
    flat = stack.reshape(d, b * a)
    best, best_c = None, None
    for C in _coefficient_blocks(field, d):
        mats = _matmul(field, C, flat).reshape(-1, b, a)
        ranks = _ranks(field, mats)
        i = int(np.argmin(ranks))
        if best is None or ranks[i] < best:
            best, best_c = int(ranks[i]), C[i]
            if best == 0:
                break
    return LowRankWitness(fam, tuple(field.scalar(c) for c in best_c.tolist()))


def amitsur_bound(d: int) -> int:
    return comb(d + 1, 2) - 1


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepReport:
    field: FieldSpec
    a: int
    b: int
    d: int
    mode: dict
    families_tested: int = 0
    lld_count: int = 0
    max_witnessed_rank: int = -1
    bms_violations: int = 0
    amitsur_violations: int = 0
    first_violation: dict | None = None

    @property
    def ok(self) -> bool:
        return self.bms_violations == 0 and self.amitsur_violations == 0

    def to_json(self) -> dict:
        out = {
            "field": str(self.field),
            "a": self.a,
            "b": self.b,
            "d": self.d,
            "mode": self.mode,
            "families_tested": self.families_tested,
            "lld_count": self.lld_count,
            "max_witnessed_rank": self.max_witnessed_rank if self.lld_count else None,
            "bms_bound": self.d - 1,
            "amitsur_bound": amitsur_bound(self.d),
            "bms_violations": self.bms_violations,
            "amitsur_violations": self.amitsur_violations,
            "ok": self.ok,
        }
        if self.first_violation is not None:
            out["first_violation"] = self.first_violation
        return out


def _digits(idx: np.ndarray, q: int, length: int) -> np.ndarray:
    powers = q ** np.arange(length - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % q


def _sweep_block(field: FieldSpec, fams: np.ndarray, report: SweepReport, labels):
    """Process a block of families ``fams[k] = (T_1..T_d)`` of shape (B, d, b, a)."""
    q = field.modulus
    B, d, b, a = fams.shape
    lld = np.ones(B, dtype=bool)
    if d <= b:
        for V in iter_projective(q, a):
            # images[k, v, i, :] = T_i v
            X = np.einsum("kiba,va->kvib", fams, V) % q
            X = X.reshape(B * len(V), d, b)
            full = (batched_rank(field, X) == d).reshape(B, len(V)).any(axis=1)
            lld &= ~full
    best = np.full(B, b * a + 1, dtype=np.int64)
    for C in iter_projective(q, d):
        mats = np.einsum("ci,kiba->kcba", C, fams) % q
        r = batched_rank(field, mats.reshape(-1, b, a)).reshape(B, len(C))
        best = np.minimum(best, r.min(axis=1))
    report.families_tested += B
    if not lld.any():
        return
    sel = best[lld]
    report.lld_count += int(lld.sum())
    report.max_witnessed_rank = max(report.max_witnessed_rank, int(sel.max()))
    bad_bms = lld & (best > d - 1)
    bad_am = lld & (best > amitsur_bound(d))
    report.bms_violations += int(bad_bms.sum())
    report.amitsur_violations += int(bad_am.sum())
    if report.first_violation is None and bad_bms.any():
        k = int(np.flatnonzero(bad_bms)[0])
        report.first_violation = {
            "family": labels[k],
            "ops": [Matrix(field, fams[k, i], _trusted=True).to_text() for i in range(d)],
            "min_rank": int(best[k]),
        }


def verify_bms_sweep(
    field: FieldSpec,
    a: int,
    b: int,
    d: int,
    mode: str = "exhaustive",
    samples: int = 10_000,
    seed: int = 0,
    block: int = 1 << 15,
) -> SweepReport:
    """Check both rank bounds on every (or a random sample of) d-tuple of b x a matrices."""
    if min(a, b, d) < 1:
        raise ValueError("a, b and d must be positive")
    if not field.is_prime_field:
        return _rational_sweep(field, a, b, d, samples, seed)
    q = field.modulus
    if q**a > DOMAIN_BUDGET or q**d > COEFF_BUDGET:
        raise UnsupportedSize("domain or coefficient sweep exceeds 2^20")
    length = a * b * d
    if mode == "exhaustive":
        total = q**length
        if total > SWEEP_BUDGET:
            raise UnsupportedSize(f"{q}^{length} families exceed the 2^24 sweep budget")
        report = SweepReport(field, a, b, d, {"kind": "exhaustive"})
        for s in range(0, total, block):
            idx = np.arange(s, min(total, s + block), dtype=np.int64)
            fams = _digits(idx, q, length).reshape(-1, d, b, a)
            _sweep_block(field, fams, report, idx.tolist())
        return report
    if mode == "random":
        report = SweepReport(field, a, b, d, {"kind": "random", "samples": samples, "seed": seed})
        rng = np.random.default_rng(seed)
        for s in range(0, samples, block):
            k = min(block, samples - s)
            fams = rng.integers(0, q, size=(k, d, b, a), dtype=np.int64)
            _sweep_block(field, fams, report, list(range(s, s + k)))
        return report
    raise ValueError(f"unknown sweep mode {mode!r}")


def _rational_sweep(field: FieldSpec, a: int, b: int, d: int, samples: int, seed: int) -> SweepReport:
    """Random families over Q with small integer entries, tested one by one."""
    report = SweepReport(field, a, b, d, {"kind": "random", "samples": samples, "seed": seed, "entries": "-1..1"})
    rng = np.random.default_rng(seed)
    for k in range(samples):
        raw = rng.integers(-1, 2, size=(d, b, a))
        if k % 2 and d > 1:
            # images confined to a (d-1)-dimensional column space: LLD by construction
            P = rng.integers(-1, 2, size=(b, d - 1))
            raw = np.einsum("bj,ija->iba", P, rng.integers(-1, 2, size=(d, d - 1, a)))
        fam = OperatorFamily.of([Matrix(field, raw[i].tolist()) for i in range(d)])
        report.families_tested += 1
        if not is_lld(fam):
            continue
        r = bms_search(fam).combination_rank
        report.lld_count += 1
        report.max_witnessed_rank = max(report.max_witnessed_rank, r)
        if r > d - 1:
            report.bms_violations += 1
            if report.first_violation is None:
                report.first_violation = {"family": k, "ops": [T.to_text() for T in fam.ops], "min_rank": r}
        if r > amitsur_bound(d):
            report.amitsur_violations += 1
    return report
