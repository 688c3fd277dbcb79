"""Finitely generated monomial algebras and their filtration balls.

Every built-in algebra has a basis of words with coefficient-free
multiplication (the product of two basis words is again a basis word):

* ``polynomial(m)``: K[x_1..x_m]; words are non-negative exponent tuples.
* ``laurent(r)``: K[Z^r]; words are integer exponent tuples.
* ``heisenberg``: K[H] for the discrete Heisenberg group with generators
  x, y and central z, relation ``y x = x y z``. The word ``(a, b, c)`` is
  ``x^a y^b z^c`` and ``(a,b,c)(a',b',c') = (a+a', b+b', c+c'+a'b)``.
* ``custom``: a free monoid modulo a confluent rewrite table; words are
  tuples of letter indices.

Generator lists always start with the unit word.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, NonTermination, OutOfBall
from .fields import FieldSpec

Word = tuple  # tuple[int, ...]

REWRITE_BUDGET = 10_000
KINDS = ("polynomial", "laurent", "heisenberg", "custom")


@dataclass(frozen=True)
class AlgebraSpec:
    kind: str
    rank: int = 0
    letters: tuple[str, ...] = ()
    rules: tuple[tuple[Word, Word], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown algebra kind {self.kind!r}")
        if self.kind in ("polynomial", "laurent") and self.rank < 1:
            raise ConfigError(f"{self.kind} algebra needs rank >= 1")
        if self.kind == "custom":
            if not self.letters:
                raise ConfigError("custom algebra needs at least one letter")
            k = len(self.letters)
            for lhs, rhs in self.rules:
                if not lhs:
                    raise ConfigError("rewrite rule with empty left-hand side")
                if any(not 0 <= i < k for i in lhs + rhs):
                    raise ConfigError("rewrite rule uses an unknown letter")

    # -- constructors -----------------------------------------------------

    @classmethod
    def polynomial(cls, num_vars: int = 1) -> AlgebraSpec:
        return cls("polynomial", num_vars)

    @classmethod
    def laurent(cls, rank: int = 1) -> AlgebraSpec:
        return cls("laurent", rank)

    @classmethod
    def heisenberg(cls) -> AlgebraSpec:
        return cls("heisenberg", 3)

    @classmethod
    def custom(cls, letters: Sequence[str], rules: Iterable[tuple[Sequence, Sequence]]) -> AlgebraSpec:
        letters = tuple(letters)
        idx = {name: i for i, name in enumerate(letters)}

        def parse(side):
            if isinstance(side, str):
                side = list(side)
            try:
                return tuple(idx[s] if isinstance(s, str) else int(s) for s in side)
            except KeyError as exc:
                raise ConfigError(f"unknown letter {exc.args[0]!r} in rewrite rule") from None

        return cls("custom", 0, letters, tuple((parse(l), parse(r)) for l, r in rules))

    @classmethod
    def from_json(cls, obj: Mapping) -> AlgebraSpec:
        if not isinstance(obj, Mapping) or "kind" not in obj:
            raise ConfigError("algebra JSON must be an object with a 'kind' field")
        kind = obj["kind"]
        if kind == "polynomial":
            return cls.polynomial(int(obj.get("vars", 1)))
        if kind == "laurent":
            return cls.laurent(int(obj.get("rank", 1)))
        if kind == "heisenberg":
            return cls.heisenberg()
        if kind == "custom":
            if "letters" not in obj:
                raise ConfigError("custom algebra needs a 'letters' field")
            return cls.custom(obj["letters"], obj.get("rules", []))
        raise ConfigError(f"unknown algebra kind {kind!r}")

    def to_json(self) -> dict:
        if self.kind == "polynomial":
            return {"kind": "polynomial", "vars": self.rank}
        if self.kind == "laurent":
            return {"kind": "laurent", "rank": self.rank}
        if self.kind == "heisenberg":
            return {"kind": "heisenberg"}
        return {
            "kind": "custom",
            "letters": list(self.letters),
            "rules": [[list(l), list(r)] for l, r in self.rules],
        }

    # -- words ------------------------------------------------------------

    @property
    def unit(self) -> Word:
        if self.kind == "custom":
            return ()
        return (0,) * self.rank

    @property
    def builtin(self) -> bool:
        return self.kind != "custom"

    def generators(self) -> tuple[Word, ...]:
        """The generating set S, unit first."""
        return _generators(self)

    def generator_names(self) -> tuple[str, ...]:
        return tuple(self.format_word(g) for g in self.generators())

    def word_key(self, w: Word):
        """Graded lexicographic sort key."""
        if self.kind == "custom":
            return (len(w), w)
        return (sum(abs(e) for e in w), tuple(-e for e in w))

    def sort_words(self, words: Iterable[Word]) -> list[Word]:
        return sorted(set(words), key=self.word_key)

    def mul(self, u: Word, v: Word) -> Word:
        kind = self.kind
        if kind in ("polynomial", "laurent"):
            return tuple(a + b for a, b in zip(u, v))
        if kind == "heisenberg":
            a, b, c = u
            a2, b2, c2 = v
            return (a + a2, b + b2, c + c2 + a2 * b)
        return self.rewrite(u + v)

    def rewrite(self, w: Sequence[int]) -> Word:
        """Normal form of a letter sequence under the custom rewrite table."""
        w = list(w)
        steps = 0
        rules = self.rules
        changed = True
        while changed:
            changed = False
            for lhs, rhs in rules:
                pos = _find(w, lhs)
                if pos < 0:
                    continue
                w[pos : pos + len(lhs)] = rhs
                steps += 1
                if steps > REWRITE_BUDGET:
                    raise NonTermination(f"rewriting exceeded {REWRITE_BUDGET} steps")
                changed = True
                break
        return tuple(w)

    def normal_form(self, seq: Sequence[int]) -> tuple[Word, int]:
        """Basis word and scalar of a product of generators given by index.

        The scalar is always 1 for the monomial algebras supported here.
        """
        gens = self.generators()
        w = self.unit
        for i in seq:
            if not 0 <= i < len(gens):
                raise IndexError(f"generator index {i} out of range")
            w = self.mul(w, gens[i])
        return w, 1

    def format_word(self, w: Word) -> str:
        if self.kind == "custom":
            return "".join(self.letters[i] for i in w) or "1"
        if self.kind == "heisenberg":
            names = ("x", "y", "z")
        elif self.rank == 1:
            names = ("x",) if self.kind == "polynomial" else ("t",)
        else:
            names = tuple(f"{'x' if self.kind == 'polynomial' else 't'}{i + 1}" for i in range(self.rank))
        parts = []
        for name, e in zip(names, w):
            if e == 0:
                continue
            parts.append(name if e == 1 else f"{name}^{e}")
        return "*".join(parts) or "1"

    def check_word(self, w) -> Word:
        w = tuple(int(e) for e in w)
        if self.kind == "custom":
            if any(not 0 <= i < len(self.letters) for i in w):
                raise ValueError(f"invalid custom word {w}")
            return w
        if len(w) != self.rank:
            raise ValueError(f"word {w} should have {self.rank} entries")
        if self.kind == "polynomial" and any(e < 0 for e in w):
            raise ValueError(f"negative exponent in polynomial word {w}")
        return w


def _find(w: list, pat: tuple) -> int:
    k = len(pat)
    for i in range(len(w) - k + 1):
        if tuple(w[i : i + k]) == pat:
            return i
    return -1


@lru_cache(maxsize=None)
def _generators(alg: AlgebraSpec) -> tuple[Word, ...]:
    unit = alg.unit
    if alg.kind == "polynomial":
        gens = [tuple(int(i == j) for j in range(alg.rank)) for i in range(alg.rank)]
    elif alg.kind == "laurent":
        gens = []
        for i in range(alg.rank):
            gens.append(tuple(int(i == j) for j in range(alg.rank)))
            gens.append(tuple(-int(i == j) for j in range(alg.rank)))
    elif alg.kind == "heisenberg":
        gens = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]
    else:
        gens = [alg.rewrite((i,)) for i in range(len(alg.letters))]
    return (unit, *gens)


# ---------------------------------------------------------------------------
# elements
# ---------------------------------------------------------------------------


class AlgebraElement:
    """Finite linear combination of basis words; zero coefficients are dropped."""

    __slots__ = ("algebra", "field", "terms")

    def __init__(self, algebra: AlgebraSpec, field: FieldSpec, terms: Mapping[Word, object] | None = None):
        clean = {}
        for w, c in (terms or {}).items():
            c = field.scalar(c)
            if c:
                w = tuple(w)
                clean[w] = field.scalar(clean.get(w, 0) + c)
                if not clean[w]:
                    del clean[w]
        self.algebra = algebra
        self.field = field
        self.terms = clean

    @classmethod
    def word(cls, algebra: AlgebraSpec, field: FieldSpec, w: Word, coeff=1) -> AlgebraElement:
        return cls(algebra, field, {tuple(w): coeff})

    @classmethod
    def one(cls, algebra: AlgebraSpec, field: FieldSpec) -> AlgebraElement:
        return cls.word(algebra, field, algebra.unit)

    @classmethod
    def zero(cls, algebra: AlgebraSpec, field: FieldSpec) -> AlgebraElement:
        return cls(algebra, field)

    def is_zero(self) -> bool:
        return not self.terms

    def support(self) -> list[Word]:
        return self.algebra.sort_words(self.terms)

    def _same(self, other: AlgebraElement):
        if not isinstance(other, AlgebraElement):
            raise TypeError(f"expected AlgebraElement, got {type(other).__name__}")
        if other.algebra != self.algebra or other.field != self.field:
            raise ValueError("elements belong to different algebras or fields")

    def __add__(self, other: AlgebraElement) -> AlgebraElement:
        self._same(other)
        terms = dict(self.terms)
        for w, c in other.terms.items():
            terms[w] = self.field.scalar(terms.get(w, 0) + c)
        return AlgebraElement(self.algebra, self.field, terms)

    def __neg__(self) -> AlgebraElement:
        return AlgebraElement(self.algebra, self.field, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other: AlgebraElement) -> AlgebraElement:
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return mul_elements(self, other)
        c = self.field.scalar(other)
        return AlgebraElement(self.algebra, self.field, {w: v * c for w, v in self.terms.items()})

    def __rmul__(self, other):
        return self * other

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.algebra == other.algebra and self.field == other.field and self.terms == other.terms

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        fmt = self.field.format_scalar
        return " + ".join(f"{fmt(self.terms[w])}*{self.algebra.format_word(w)}" for w in self.support())


def mul_elements(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """Bilinear extension of word multiplication."""
    a._same(b)
    alg, field = a.algebra, a.field
    out: dict[Word, object] = {}
    for u, cu in a.terms.items():
        for v, cv in b.terms.items():
            w = alg.mul(u, v)
            out[w] = field.scalar(out.get(w, 0) + cu * cv)
    return AlgebraElement(alg, field, out)


# ---------------------------------------------------------------------------
# balls
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """Normal forms of all products of at most ``radius`` generators."""

    algebra: AlgebraSpec
    radius: int
    words: tuple[Word, ...]
    lengths: Mapping[Word, int] = field(compare=False, repr=False)
    index: Mapping[Word, int] = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, w) -> bool:
        return tuple(w) in self.index

    def __iter__(self):
        return iter(self.words)

    @property
    def dim(self) -> int:
        return len(self.words)


class _Growth:
    """Breadth-first ball growth, cached per algebra."""

    def __init__(self, alg: AlgebraSpec):
        self.alg = alg
        self.lengths: dict[Word, int] = {alg.unit: 0}
        self.frontier: list[Word] = [alg.unit]
        self.radius = 0

    def grow_to(self, r: int):
        gens = self.alg.generators()[1:]
        while self.radius < r:
            nxt = []
            for w in self.frontier:
                for s in gens:
                    v = self.alg.mul(w, s)
                    if v not in self.lengths:
                        self.lengths[v] = self.radius + 1
                        nxt.append(v)
            self.frontier = nxt
            self.radius += 1


_GROWTH: dict[AlgebraSpec, _Growth] = {}


@lru_cache(maxsize=256)
def enumerate_ball(alg: AlgebraSpec, r: int) -> Ball:
    """The ball ``S^r``: its words span ``A_{<=r}``."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    g = _GROWTH.setdefault(alg, _Growth(alg))
    g.grow_to(r)
    words = tuple(sorted((w for w, k in g.lengths.items() if k <= r), key=alg.word_key))
    lengths = {w: g.lengths[w] for w in words}
    return Ball(alg, r, words, lengths, {w: i for i, w in enumerate(words)})


def word_length(alg: AlgebraSpec, w: Word, limit: int = 10_000) -> int:
    """Least r with ``w`` in ``S^r``."""
    w = tuple(w)
    if alg.kind == "polynomial":
        return sum(w)
    if alg.kind == "laurent":
        return sum(abs(e) for e in w)
    g = _GROWTH.setdefault(alg, _Growth(alg))
    while w not in g.lengths:
        if g.radius >= limit or (not g.frontier and g.radius > 0):
            raise OutOfBall(w, f"the ball of radius {g.radius}")
        g.grow_to(g.radius + 1)
    return g.lengths[w]


def element_coords(a: AlgebraElement, ball: Ball) -> tuple:
    """Coefficient vector of ``a`` in the ordered word basis of ``ball``."""
    field = a.field
    vec = [field.scalar(0)] * len(ball)
    for w, c in a.terms.items():
        i = ball.index.get(w)
        if i is None:
            raise OutOfBall(w, f"the ball of radius {ball.radius}")
        vec[i] = c
    return tuple(vec)


def growth_function(alg: AlgebraSpec, r: int) -> list[int]:
    """``[dim A_{<=0}, ..., dim A_{<=r}]``."""
    return [len(enumerate_ball(alg, k)) for k in range(r + 1)]


def as_fraction(x) -> Fraction:
    return Fraction(x)
