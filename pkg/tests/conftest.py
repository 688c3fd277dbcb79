import itertools
from fractions import Fraction

import numpy as np
import pytest

from linsofic.fields import FieldSpec

SMALL_FIELDS = [FieldSpec(2), FieldSpec(3), FieldSpec(7), FieldSpec(None)]


def brute_rank_gf(rows, p):
    """Rank over GF(p) as log_p of the size of the row space (tiny inputs only)."""
    rows = [tuple(int(x) % p for x in r) for r in rows]
    if not rows:
        return 0
    n = len(rows[0])
    space = set()
    for coeffs in itertools.product(range(p), repeat=len(rows)):
        v = tuple(sum(c * r[j] for c, r in zip(coeffs, rows)) % p for j in range(n))
        space.add(v)
    size, k = len(space), 0
    while p**k < size:
        k += 1
    return k


def fraction_rank(rows):
    """Plain Gaussian elimination over Fractions, independent of the package."""
    m = [[Fraction(x) for x in r] for r in rows]
    rank, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rank < len(m) and col < ncols:
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / m[rank][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
        col += 1
    return rank


def random_matrix(rng, field, rows, cols, rank=None):
    """Random matrix, optionally of rank at most ``rank``."""
    bound = 3
    if rank is None:
        return field.random_array(rng, (rows, cols), bound=bound)
    if rank == 0:
        return field.zeros((rows, cols))
    a = field.random_array(rng, (rows, rank), bound=bound)
    b = field.random_array(rng, (rank, cols), bound=bound)
    if field.is_prime_field:
        return (a @ b) % field.modulus
    return a.dot(b)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
