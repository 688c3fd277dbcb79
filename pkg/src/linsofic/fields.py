"""Exact scalar fields: prime fields GF(p) and the rationals.

Scalars are plain Python values in canonical form: an ``int`` in ``[0, p)``
for GF(p) and a :class:`fractions.Fraction` for Q. Arrays of scalars are
numpy arrays with dtype ``int64`` (GF(p)) or ``object`` holding Fractions (Q).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import ConfigError

MAX_MODULUS = 2**31


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for every n < 3.4e14."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17)
    for q in small:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    """A prime field (``modulus`` set) or the rationals (``modulus is None``)."""

    modulus: int | None = None

    def __post_init__(self):
        p = self.modulus
        if p is None:
            return
        if not isinstance(p, int) or isinstance(p, bool):
            raise ValueError(f"modulus must be an int, got {p!r}")
        if not 2 <= p < MAX_MODULUS:
            raise ValueError(f"modulus {p} outside [2, 2^31)")
        if not is_prime(p):
            raise ValueError(f"modulus {p} is not prime")

    @classmethod
    def gf(cls, p: int) -> FieldSpec:
        return cls(p)

    @classmethod
    def rationals(cls) -> FieldSpec:
        return cls(None)

    @classmethod
    def parse(cls, text: str) -> FieldSpec:
        """Parse ``gf:p`` or ``q``."""
        t = text.strip().lower()
        if t in ("q", "qq", "rationals"):
            return cls(None)
        if t.startswith("gf:"):
            try:
                return cls(int(t[3:]))
            except ValueError as exc:
                raise ConfigError(f"bad field {text!r}: {exc}") from None
        raise ConfigError(f"bad field {text!r}; expected 'gf:p' or 'q'")

    def __str__(self) -> str:
        return "q" if self.modulus is None else f"gf:{self.modulus}"

    @property
    def kind(self) -> str:
        return "rationals" if self.modulus is None else "prime-field"

    @property
    def is_prime_field(self) -> bool:
        return self.modulus is not None

    @property
    def order(self) -> int | None:
        """Number of elements, or None for an infinite field."""
        return self.modulus

    @property
    def dtype(self):
        return np.int64 if self.modulus is not None else object

    # -- scalars ---------------------------------------------------------

    def scalar(self, value) -> int | Fraction:
        """Canonical representative of ``value`` in this field."""
        p = self.modulus
        if p is None:
            return Fraction(value)
        if isinstance(value, Fraction):
            if value.denominator == 1:
                return int(value.numerator) % p
            den = value.denominator % p
            if den == 0:
                raise ZeroDivisionError(f"{value} has no image in GF({p})")
            return value.numerator * pow(den, -1, p) % p
        return int(value) % p

    def inv(self, x):
        if self.modulus is None:
            return 1 / Fraction(x)
        x = int(x) % self.modulus
        if x == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(x, -1, self.modulus)

    def parse_scalar(self, text: str):
        return self.scalar(Fraction(text))

    def format_scalar(self, x) -> str:
        if self.modulus is None:
            return str(Fraction(x))
        return str(int(x))

    # -- arrays ------------------------------------------------------------

    def array(self, values) -> np.ndarray:
        """Canonical numpy array of the given (nested) values."""
        if self.modulus is not None:
            if isinstance(values, np.ndarray) and values.dtype.kind in "iu":
                return np.mod(values, self.modulus).astype(np.int64)
            raw = np.asarray(values, dtype=object)
            if raw.size and any(isinstance(v, Fraction) for v in raw.flat):
                out = np.empty(raw.shape, dtype=np.int64)
                out.flat = [self.scalar(v) for v in raw.flat]
                return out
            return np.asarray(raw % self.modulus, dtype=np.int64)
        raw = np.asarray(values, dtype=object)
        out = np.empty(raw.shape, dtype=object)
        out.flat = [Fraction(v) for v in raw.flat]
        return out

    def canonical(self, arr: np.ndarray) -> np.ndarray:
        """Bring an array produced by arithmetic back to canonical form."""
        if self.modulus is not None:
            return np.asarray(arr % self.modulus, dtype=np.int64)
        if arr.dtype != object:
            return self.array(arr)
        return arr

    def zeros(self, shape) -> np.ndarray:
        if self.modulus is not None:
            return np.zeros(shape, dtype=np.int64)
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out

    def identity(self, n: int) -> np.ndarray:
        out = self.zeros((n, n))
        for i in range(n):
            out[i, i] = self.scalar(1)
        return out

    def random_array(self, rng: np.random.Generator, shape, bound: int | None = None) -> np.ndarray:
        """Uniform entries over GF(p), or integers in [-bound, bound] over Q."""
        if self.modulus is not None:
            return rng.integers(0, self.modulus, size=shape, dtype=np.int64)
        if bound is None:
            raise ValueError("rational sampling needs an integer bound")
        return self.array(rng.integers(-bound, bound + 1, size=shape).tolist())

    def elements(self) -> Iterable[int]:
        if self.modulus is None:
            raise ValueError("cannot enumerate an infinite field")
        return range(self.modulus)


GF2 = FieldSpec(2)
QQ = FieldSpec(None)
