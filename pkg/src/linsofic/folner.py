"""Monomial windows and exact (V, eps)-invariance checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra import AlgebraSpec, Ball, enumerate_ball, word_length
from .errors import UnsupportedWindow
from .fields import QQ
from .linalg import Matrix, mat_rank


@dataclass(frozen=True)
class FolnerWindow:
    """A finite set of basis words spanning a subspace W of the algebra."""

    algebra: AlgebraSpec
    words: tuple
    params: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        words = tuple(self.algebra.check_word(w) for w in self.words)
        if not words:
            raise ValueError("a window needs at least one word")
        if len(set(words)) != len(words):
            raise ValueError("window words must be distinct")
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "params", dict(self.params))

    @classmethod
    def from_words(cls, alg: AlgebraSpec, words: Iterable, params: Mapping | None = None) -> FolnerWindow:
        """Window on the given words, sorted into canonical order."""
        ws = [alg.check_word(w) for w in words]
        return cls(alg, tuple(alg.sort_words(ws)), params or {})

    @property
    def dim(self) -> int:
        return len(self.words)

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def index(self) -> dict:
        return {w: i for i, w in enumerate(self.words)}

    def degree(self) -> int:
        """Least d with every word of the window inside ``S^d``."""
        return max(word_length(self.algebra, w) for w in self.words)

    def to_json(self) -> dict:
        return {
            "algebra": self.algebra.to_json(),
            "params": dict(self.params),
            "words": [list(w) for w in self.words],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> FolnerWindow:
        alg = AlgebraSpec.from_json(obj["algebra"])
        return cls(alg, tuple(tuple(w) for w in obj["words"]), obj.get("params", {}))


def candidate_window(alg: AlgebraSpec, n: int) -> FolnerWindow:
    """Box-shaped window of size parameter ``n`` for a built-in algebra."""
    if n < 1:
        raise ValueError("window size parameter must be >= 1")
    if alg.kind == "polynomial":
        words = itertools.product(range(n), repeat=alg.rank)
    elif alg.kind == "laurent":
        words = itertools.product(range(-n, n + 1), repeat=alg.rank)
    elif alg.kind == "heisenberg":
        words = itertools.product(range(-n, n + 1), range(-n, n + 1), range(-n * n, n * n + 1))
    else:
        raise UnsupportedWindow("custom algebras need an explicit word list")
    return FolnerWindow.from_words(alg, words, {"n": n})


@dataclass(frozen=True)
class InvarianceReport:
    dim_W: int
    dim_VW: int
    epsilon: Fraction
    method: str = "count"

    @property
    def holds(self) -> bool:
        return self.dim_VW < (1 + self.epsilon) * self.dim_W

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.dim_VW, self.dim_W)

    def to_json(self) -> dict:
        return {
            "dim_W": self.dim_W,
            "dim_VW": self.dim_VW,
            "epsilon": str(self.epsilon),
            "holds": self.holds,
            "method": self.method,
        }


def _words_of(x) -> tuple:
    if isinstance(x, (Ball, FolnerWindow)):
        return tuple(x.words)
    return tuple(tuple(w) for w in x)


def product_words(alg: AlgebraSpec, V: Sequence, W: Sequence) -> set:
    return {alg.mul(v, w) for v in V for w in W}


def _rank_path(alg: AlgebraSpec, V: Sequence, W: Sequence) -> int:
    # Row per product v*w, column per distinct basis word, entries in Q.
    prods = [alg.mul(v, w) for v in V for w in W]
    cols = {p: j for j, p in enumerate(dict.fromkeys(prods))}
    arr = np.zeros((len(prods), len(cols)), dtype=np.int64)
    for i, p in enumerate(prods):
        arr[i, cols[p]] = 1
    return mat_rank(Matrix(QQ, arr))


def invariance_check(V, W, epsilon, method: str = "auto") -> InvarianceReport:
    """Decide whether ``dim VW < (1 + epsilon) dim W`` exactly.

    ``V`` may be a ball, a window or a list of words; ``W`` a window or a
    list of words. ``method`` is ``"count"``, ``"rank"`` or ``"auto"``
    (count for built-in kinds, rank for custom ones).
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    alg = _algebra_of(V, W)
    vw, ww = _words_of(V), _words_of(W)
    if method == "auto":
        method = "count" if alg.builtin else "rank"
    if method == "count":
        dim_vw = len(product_words(alg, vw, ww))
    elif method == "rank":
        dim_vw = _rank_path(alg, vw, ww)
    else:
        raise ValueError(f"unknown method {method!r}")
    return InvarianceReport(len(set(ww)), dim_vw, epsilon, method)


def _algebra_of(V, W) -> AlgebraSpec:
    algs = {x.algebra for x in (V, W) if isinstance(x, (Ball, FolnerWindow))}
    if len(algs) > 1:
        raise ValueError("V and W belong to different algebras")
    if not algs:
        raise ValueError("cannot infer the algebra: pass a Ball or FolnerWindow")
    return algs.pop()


def find_invariant_window(alg: AlgebraSpec, V, epsilon, start: int = 1, limit: int = 1 << 12) -> FolnerWindow:
    """Smallest power-of-two multiple of ``start`` whose window is (V, eps)-invariant."""
    n = start
    while n <= limit:
        W = candidate_window(alg, n)
        if invariance_check(V, W, epsilon).holds:
            return W
        n *= 2
    raise UnsupportedWindow(f"no ({epsilon})-invariant window with size parameter <= {limit}")


def generator_ball(alg: AlgebraSpec) -> Ball:
    return enumerate_ball(alg, 1)
