"""Dense exact linear algebra over GF(p) and Q.

GF(p) matrices are ``int64`` arrays with entries in ``[0, p)``; since
``p < 2**31`` every product of two entries fits in 63 bits, and matrix
products are split into 16-bit limbs when the accumulated sum could
overflow. Rational matrices are ``object`` arrays of Fractions.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DependentVectors, DimensionMismatch, FieldMismatch, SingularMatrix
from .fields import FieldSpec

_INT64_LIMIT = 2**63 - 1
_FLOAT_EXACT = 2**53


# ---------------------------------------------------------------------------
# kernels on raw arrays
# ---------------------------------------------------------------------------


def _as_integers(arr: np.ndarray) -> tuple[np.ndarray, int, int]:
    """Scale a Fraction array to integers: ``(ints, denominator, max |entry|)``."""
    flat = arr.ravel().tolist()
    den = math.lcm(*(x.denominator for x in flat))
    ints = [x.numerator * (den // x.denominator) for x in flat]
    out = np.empty(len(ints), dtype=object)
    out[:] = ints
    return out.reshape(arr.shape), den, max(map(abs, ints))


def _rational_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ai, da, ma = _as_integers(a)
    bi, db, mb = _as_integers(b)
    if ma * mb * a.shape[1] < _FLOAT_EXACT:
        prod = (ai.astype(np.float64) @ bi.astype(np.float64)).astype(np.int64).tolist()
    else:
        prod = ai.dot(bi).tolist()
    den = da * db
    out = np.empty((a.shape[0], b.shape[1]), dtype=object)
    out[:] = [[Fraction(x, den) for x in row] for row in prod]
    return out


def _matmul(field: FieldSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    p = field.modulus
    if p is None:
        if a.shape[1] == 0 or a.size == 0 or b.size == 0:
            return field.zeros((a.shape[0], b.shape[1]))
        return _rational_matmul(a, b)
    k = a.shape[1]
    if k == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    if (p - 1) ** 2 * k < _FLOAT_EXACT:
        # every partial sum is an integer below 2^53, so BLAS is exact
        out = a.astype(np.float64) @ b.astype(np.float64)
        return out.astype(np.int64) % p
    if (p - 1) ** 2 * k <= _INT64_LIMIT:
        return (a @ b) % p
    # limb split: b = lo + hi * 2^16, each partial sum stays below 2^63
    lo = b & 0xFFFF
    hi = b >> 16
    r_lo = (a @ lo) % p
    r_hi = (a @ hi) % p
    return (r_lo + (r_hi << 16) % p) % p


def _rref(field: FieldSpec, a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form with first-nonzero pivoting.

    Returns a fresh array; rows past the rank are zero.
    """
    a = np.array(a, dtype=field.dtype, copy=True)
    rows, cols = a.shape
    p = field.modulus
    pivots: list[int] = []
    r = 0
    for j in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, j])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        if p is None:
            piv = a[r, j]
            if piv != 1:
                a[r, j:] = a[r, j:] / piv
        else:
            piv = int(a[r, j])
            if piv != 1:
                a[r, j:] = a[r, j:] * pow(piv, -1, p) % p
        f = a[:, j].copy()
        f[r] = 0
        hit = np.flatnonzero(f)
        if hit.size:
            upd = np.outer(f[hit], a[r, j:])
            if p is None:
                a[hit, j:] = a[hit, j:] - upd
            else:
                a[hit, j:] = (a[hit, j:] - upd) % p
        pivots.append(j)
        r += 1
    return a, pivots


def batched_rank(field: FieldSpec, arr: np.ndarray) -> np.ndarray:
    """Ranks of a stack of matrices ``arr[i]`` over a prime field.

    Division-free elimination: each pivot step replaces row ``r`` by
    ``piv * r - f * pivot_row``, which preserves the row space. GF(2) uses
    bit-packed rows and XOR instead.
    """
    p = field.modulus
    if p is None:
        return np.array([len(_rref(field, m)[1]) for m in arr], dtype=np.int64)
    arr = np.asarray(arr)
    if arr.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if arr.shape[1] > arr.shape[2]:
        arr = arr.transpose(0, 2, 1)
    if p == 2:
        return _batched_rank_gf2(arr)
    if arr.shape[1] >= 96:
        # large matrices: per-matrix elimination touches only the rows it needs
        return np.array([len(_rref(field, m)[1]) for m in arr], dtype=np.int64)
    a = np.array(arr, dtype=np.int64, copy=True) % p
    n, rows, cols = a.shape
    ranks = np.zeros(n, dtype=np.int64)
    used = np.zeros((n, rows), dtype=bool)
    everyone = np.arange(n)
    for j in range(cols):
        cand = (a[:, :, j] != 0) & ~used
        has = cand.any(axis=1)
        idx = np.flatnonzero(has)
        if idx.size == 0:
            continue
        full = idx.size == n
        sub = a[:, :, j:] if full else a[idx, :, j:]
        k = np.arange(idx.size)
        piv = cand[idx].argmax(axis=1)
        prow = sub[k, piv].copy()
        pval = prow[:, 0]
        f = sub[:, :, 0].copy()
        f[k, piv] = 0
        sub = (sub * pval[:, None, None] - f[:, :, None] * prow[:, None, :]) % p
        sub[k, piv] = prow
        if full:
            a[:, :, j:] = sub
        else:
            a[idx, :, j:] = sub
        used[idx if not full else everyone, piv] = True
        ranks[idx] += 1
    return ranks


def _batched_rank_gf2(arr: np.ndarray) -> np.ndarray:
    n, rows, cols = arr.shape
    bits = np.packbits((arr & 1).astype(np.uint8), axis=2, bitorder="little")
    pad = (-bits.shape[2]) % 8
    if pad:
        bits = np.concatenate([bits, np.zeros((n, rows, pad), dtype=np.uint8)], axis=2)
    a = bits.view(np.uint64)
    ranks = np.zeros(n, dtype=np.int64)
    used = np.zeros((n, rows), dtype=bool)
    k_all = np.arange(n)
    for j in range(cols):
        w, b = divmod(j, 64)
        col = ((a[:, :, w] >> np.uint64(b)) & np.uint64(1)).astype(bool)
        cand = col & ~used
        has = cand.any(axis=1)
        if not has.any():
            continue
        piv = cand.argmax(axis=1)
        prow = a[k_all, piv]
        hit = col & has[:, None]
        hit[k_all, piv] = False
        a ^= np.where(hit[:, :, None], prow[:, None, :], np.uint64(0))
        used[k_all[has], piv[has]] = True
        ranks += has
    return ranks


class _Echelon:
    """Mutable RREF row basis used to grow spans one vector at a time."""

    def __init__(self, field: FieldSpec, n: int):
        self.field = field
        self.n = n
        self.rows = field.zeros((0, n))
        self.pivots: list[int] = []

    @property
    def dim(self) -> int:
        return len(self.pivots)

    def reduce(self, vecs: np.ndarray) -> np.ndarray:
        """Residues of the row vectors ``vecs`` modulo the current span."""
        if not self.pivots:
            return np.array(vecs, dtype=self.field.dtype, copy=True)
        coeff = vecs[:, self.pivots]
        out = vecs - _matmul(self.field, coeff, self.rows)
        return self.field.canonical(out)

    def add(self, vec: np.ndarray) -> bool:
        """Insert one row vector; return False if it was already in the span."""
        res = self.reduce(vec.reshape(1, -1))[0]
        nz = np.flatnonzero(res)
        if nz.size == 0:
            return False
        j = int(nz[0])
        res = self.field.canonical(res * self.field.inv(res[j]))
        if self.pivots:
            f = self.rows[:, j].copy()
            hit = np.flatnonzero(f)
            if hit.size:
                self.rows[hit] = self.field.canonical(self.rows[hit] - np.outer(f[hit], res))
        self.rows = np.vstack([self.rows, res.reshape(1, -1)])
        self.pivots.append(j)
        return True

    def add_block(self, vecs: np.ndarray) -> int:
        """Insert several row vectors at once; return how many were new."""
        if vecs.shape[0] == 0:
            return 0
        res = self.reduce(vecs)
        if not np.any(res):
            return 0
        red, piv = _rref(self.field, res)
        k = len(piv)
        red = red[:k]
        if self.pivots:
            f = self.rows[:, piv]
            self.rows = self.field.canonical(self.rows - _matmul(self.field, f, red))
        self.rows = np.vstack([self.rows, red])
        self.pivots.extend(piv)
        return k

    def sorted_rows(self) -> np.ndarray:
        order = np.argsort(self.pivots, kind="stable")
        return self.rows[order]


# ---------------------------------------------------------------------------
# Matrix
# ---------------------------------------------------------------------------


class Matrix:
    """Immutable dense matrix over a :class:`FieldSpec`."""

    __slots__ = ("field", "data")

    def __init__(self, field: FieldSpec, data, *, _trusted: bool = False):
        arr = data if _trusted else field.array(data)
        if arr.ndim != 2:
            raise ValueError(f"matrix data must be 2-D, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    @classmethod
    def _wrap(cls, field: FieldSpec, arr: np.ndarray) -> Matrix:
        return cls(field, field.canonical(arr) if field.modulus is not None else arr, _trusted=True)

    @classmethod
    def from_rows(cls, field: FieldSpec, rows: Sequence[Sequence]) -> Matrix:
        rows = list(rows)
        if not rows:
            return cls.zeros(field, 0, 0)
        return cls(field, rows)

    @classmethod
    def from_columns(cls, field: FieldSpec, cols: Sequence[Sequence], n: int | None = None) -> Matrix:
        cols = list(cols)
        if not cols:
            if n is None:
                raise ValueError("need n for an empty column list")
            return cls.zeros(field, n, 0)
        return cls(field, field.array(cols).T.copy())

    @classmethod
    def zeros(cls, field: FieldSpec, rows: int, cols: int | None = None) -> Matrix:
        return cls(field, field.zeros((rows, rows if cols is None else cols)), _trusted=True)

    @classmethod
    def identity(cls, field: FieldSpec, n: int) -> Matrix:
        return cls(field, field.identity(n), _trusted=True)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __getitem__(self, key):
        return self.data[key]

    def column(self, j: int) -> tuple:
        return tuple(self.data[:, j].tolist())

    def columns(self) -> list[tuple]:
        return [self.column(j) for j in range(self.cols)]

    def tolist(self) -> list[list]:
        return self.data.tolist()

    def _check(self, other: Matrix, same_shape: bool = True):
        if not isinstance(other, Matrix):
            raise TypeError(f"expected Matrix, got {type(other).__name__}")
        if other.field != self.field:
            raise FieldMismatch(f"field {self.field} vs {other.field}")
        if same_shape and other.shape != self.shape:
            raise DimensionMismatch(f"shape {self.shape} vs {other.shape}")

    def __add__(self, other: Matrix) -> Matrix:
        self._check(other)
        return Matrix._wrap(self.field, self.data + other.data)

    def __sub__(self, other: Matrix) -> Matrix:
        self._check(other)
        return Matrix._wrap(self.field, self.data - other.data)

    def __neg__(self) -> Matrix:
        return Matrix._wrap(self.field, -self.data)

    def __matmul__(self, other: Matrix) -> Matrix:
        self._check(other, same_shape=False)
        if self.cols != other.rows:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
        return Matrix._wrap(self.field, _matmul(self.field, self.data, other.data))

    def scale(self, c) -> Matrix:
        return Matrix._wrap(self.field, self.data * self.field.scalar(c))

    def apply(self, vec) -> tuple:
        """Matrix-vector product on a coordinate tuple."""
        v = self.field.array(list(vec)).reshape(-1, 1)
        if v.shape[0] != self.cols:
            raise DimensionMismatch(f"vector of length {v.shape[0]} for {self.shape} matrix")
        return tuple(self.field.canonical(_matmul(self.field, self.data, v))[:, 0].tolist())

    @property
    def T(self) -> Matrix:
        return Matrix(self.field, self.data.T.copy(), _trusted=True)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.field == other.field and self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.field, self.shape, tuple(self.data.flat)))

    def __repr__(self) -> str:
        return f"Matrix({self.field}, {self.tolist()!r})"

    def is_zero(self) -> bool:
        return not np.any(self.data)

    def rref(self) -> tuple[Matrix, list[int]]:
        red, piv = _rref(self.field, self.data)
        return Matrix(self.field, red, _trusted=True), piv

    def rank(self) -> int:
        return mat_rank(self)

    def inverse(self) -> Matrix:
        n = self.rows
        if self.cols != n:
            raise DimensionMismatch(f"inverse of non-square {self.shape} matrix")
        aug = np.hstack([self.data, self.field.identity(n)])
        red, piv = _rref(self.field, aug)
        if len(piv) < n or piv[n - 1] != n - 1:
            raise SingularMatrix(f"matrix of size {n} is singular")
        return Matrix(self.field, red[:, n:].copy(), _trusted=True)

    def to_text(self) -> str:
        return matrix_to_text(self)


def hstack(mats: Sequence[Matrix]) -> Matrix:
    field = mats[0].field
    return Matrix(field, np.hstack([m.data for m in mats]), _trusted=True)


def vstack(mats: Sequence[Matrix]) -> Matrix:
    field = mats[0].field
    return Matrix(field, np.vstack([m.data for m in mats]), _trusted=True)


def block_diag(mats: Sequence[Matrix]) -> Matrix:
    field = mats[0].field
    n = sum(m.rows for m in mats)
    k = sum(m.cols for m in mats)
    out = field.zeros((n, k))
    r = c = 0
    for m in mats:
        out[r : r + m.rows, c : c + m.cols] = m.data
        r += m.rows
        c += m.cols
    return Matrix(field, out, _trusted=True)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def mat_rank(m: Matrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    # eliminate along the shorter side
    data = m.data if m.rows <= m.cols else m.data.T
    return len(_rref(m.field, data)[1])


def rk_dist(a: Matrix, b: Matrix) -> Fraction:
    """Normalized rank distance ``rank(a - b) / n`` between square matrices."""
    if a.field != b.field:
        raise FieldMismatch(f"field {a.field} vs {b.field}")
    if a.shape != b.shape or a.rows != a.cols:
        raise DimensionMismatch(f"rk_dist needs equal square shapes, got {a.shape} and {b.shape}")
    if a.rows == 0:
        raise DimensionMismatch("rk_dist is undefined for 0x0 matrices")
    return Fraction(mat_rank(a - b), a.rows)


class Subspace:
    """Subspace of K^n stored by a canonical reduced column-echelon basis.

    ``basis`` is ``n x dim``; its transpose is the RREF of any spanning set,
    so equal subspaces have identical bases.
    """

    __slots__ = ("field", "ambient_dim", "_rows", "_pivots")

    def __init__(self, field: FieldSpec, ambient_dim: int, rows: np.ndarray, pivots: list[int]):
        rows.flags.writeable = False
        self.field = field
        self.ambient_dim = ambient_dim
        self._rows = rows
        self._pivots = tuple(pivots)

    @classmethod
    def span(cls, field: FieldSpec, n: int, vectors) -> Subspace:
        """Span of the columns of a Matrix, or of an iterable of coordinate tuples."""
        if isinstance(vectors, Matrix):
            if vectors.rows != n:
                raise DimensionMismatch(f"vectors of length {vectors.rows} in K^{n}")
            rowvecs = vectors.data.T
        else:
            vecs = [list(v) for v in vectors]
            if not vecs:
                return cls.zero(field, n)
            rowvecs = field.array(vecs)
            if rowvecs.shape[1] != n:
                raise DimensionMismatch(f"vectors of length {rowvecs.shape[1]} in K^{n}")
        return cls._from_rows(field, n, rowvecs)

    @classmethod
    def _from_rows(cls, field: FieldSpec, n: int, rowvecs: np.ndarray) -> Subspace:
        if rowvecs.shape[0] == 0:
            return cls.zero(field, n)
        red, piv = _rref(field, rowvecs)
        return cls(field, n, red[: len(piv)].copy(), piv)

    @classmethod
    def zero(cls, field: FieldSpec, n: int) -> Subspace:
        return cls(field, n, field.zeros((0, n)), [])

    @classmethod
    def full(cls, field: FieldSpec, n: int) -> Subspace:
        return cls(field, n, field.identity(n), list(range(n)))

    @classmethod
    def coordinate(cls, field: FieldSpec, n: int, indices: Iterable[int]) -> Subspace:
        idx = sorted(set(indices))
        rows = field.zeros((len(idx), n))
        for r, i in enumerate(idx):
            rows[r, i] = field.scalar(1)
        return cls(field, n, rows, idx)

    @property
    def dim(self) -> int:
        return len(self._pivots)

    @property
    def basis(self) -> Matrix:
        return Matrix(self.field, self._rows.T.copy(), _trusted=True)

    @property
    def pivots(self) -> tuple[int, ...]:
        return self._pivots

    def vectors(self) -> list[tuple]:
        return [tuple(r) for r in self._rows.tolist()]

    def row_array(self) -> np.ndarray:
        return self._rows

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return (
            self.field == other.field
            and self.ambient_dim == other.ambient_dim
            and self._pivots == other._pivots
            and bool(np.array_equal(self._rows, other._rows))
        )

    def __hash__(self):
        return hash((self.field, self.ambient_dim, self._pivots, tuple(self._rows.flat)))

    def __repr__(self) -> str:
        return f"Subspace({self.field}, n={self.ambient_dim}, dim={self.dim})"

    def _same(self, other: Subspace):
        if self.field != other.field:
            raise FieldMismatch(f"field {self.field} vs {other.field}")
        if self.ambient_dim != other.ambient_dim:
            raise DimensionMismatch(f"ambient K^{self.ambient_dim} vs K^{other.ambient_dim}")

    def reduce_rows(self, vecs: np.ndarray) -> np.ndarray:
        """Residues of row vectors modulo this subspace (zero iff contained)."""
        if not self._pivots:
            return np.array(vecs, dtype=self.field.dtype, copy=True)
        coeff = vecs[:, list(self._pivots)]
        return self.field.canonical(vecs - _matmul(self.field, coeff, self._rows))

    def contains(self, vec) -> bool:
        v = self.field.array([list(vec)])
        return not np.any(self.reduce_rows(v))

    def __le__(self, other: Subspace) -> bool:
        self._same(other)
        return not np.any(other.reduce_rows(self._rows)) if self.dim else True

    def __add__(self, other: Subspace) -> Subspace:
        self._same(other)
        return Subspace._from_rows(self.field, self.ambient_dim, np.vstack([self._rows, other._rows]))

    def intersect(self, other: Subspace) -> Subspace:
        return subspace_intersect(self, other)


def nullspace(m: Matrix) -> Subspace:
    """Right kernel ``{v : m v = 0}`` as a canonical Subspace of K^cols."""
    field, n = m.field, m.cols
    if m.rows == 0:
        return Subspace.full(field, n)
    red, piv = _rref(field, m.data)
    free = [j for j in range(n) if j not in set(piv)]
    if not free:
        return Subspace.zero(field, n)
    vecs = field.zeros((len(free), n))
    one = field.scalar(1)
    for k, f in enumerate(free):
        vecs[k, f] = one
        for r, pc in enumerate(piv):
            vecs[k, pc] = -red[r, f]
    return Subspace._from_rows(field, n, field.canonical(vecs))


def subspace_intersect(a: Subspace, b: Subspace) -> Subspace:
    a._same(b)
    field, n = a.field, a.ambient_dim
    if a.dim == 0 or b.dim == 0:
        return Subspace.zero(field, n)
    # solve A x = B y via the kernel of [A | -B]
    A = a._rows.T
    B = b._rows.T
    ker = nullspace(Matrix(field, field.canonical(np.hstack([A, -B])), _trusted=True))
    if ker.dim == 0:
        return Subspace.zero(field, n)
    xs = ker.row_array()[:, : a.dim]
    return Subspace._from_rows(field, n, _matmul(field, xs, a._rows))


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    return a + b


def complete_to_basis(vectors: Matrix) -> Matrix:
    """Extend independent columns to an invertible matrix.

    Missing columns are standard basis vectors chosen greedily in index order.
    """
    field, n = vectors.field, vectors.rows
    ech = _Echelon(field, n)
    for j in range(vectors.cols):
        if not ech.add(vectors.data[:, j]):
            raise DependentVectors(f"column {j} is dependent on the previous columns")
    extra = []
    eye = field.identity(n)
    for i in range(n):
        if ech.dim == n:
            break
        if ech.add(eye[i]):
            extra.append(i)
    if extra:
        out = np.hstack([vectors.data, eye[:, extra]])
    else:
        out = np.array(vectors.data, copy=True)
    return Matrix(field, out, _trusted=True)


def kron_and_pad(m: Matrix, copies: int, pad: int) -> Matrix:
    """``(m ⊗ I_copies) ⊕ 0_pad``."""
    if copies < 1 or pad < 0:
        raise ValueError(f"need copies >= 1 and pad >= 0, got {copies}, {pad}")
    field = m.field
    eye = field.identity(copies)
    big = np.kron(m.data, eye) if copies > 1 else np.array(m.data, copy=True)
    big = field.canonical(big)
    if pad == 0:
        return Matrix(field, big, _trusted=True)
    out = field.zeros((big.shape[0] + pad, big.shape[1] + pad))
    out[: big.shape[0], : big.shape[1]] = big
    return Matrix(field, out, _trusted=True)


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------


def matrix_to_text(m: Matrix) -> str:
    """Header ``field rows cols`` then one line per row."""
    lines = [f"{m.field} {m.rows} {m.cols}"]
    fmt = m.field.format_scalar
    for row in m.data.tolist():
        lines.append(" ".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def matrix_from_text(text: str) -> Matrix:
    tokens = text.split()
    if len(tokens) < 3:
        raise ValueError("matrix text needs a 'field rows cols' header")
    field = FieldSpec.parse(tokens[0])
    rows, cols = int(tokens[1]), int(tokens[2])
    body = tokens[3:]
    if len(body) != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, found {len(body)}")
    vals = [field.parse_scalar(t) for t in body]
    arr = field.zeros((rows, cols))
    if rows * cols:
        arr.flat = vals
    return Matrix(field, arr, _trusted=True)
