"""Characteristics over F_2 and the affine group AGL(g, F_2).

Bit vectors are machine words indexed little-endian by coordinate: bit ``i``
of a word is coordinate ``i`` (the first coordinate is bit 0).  Every ordering
used elsewhere in the package (enumeration order, polynomial variable order,
file formats) is the integer order of these words.  String renderings list
the coordinates left to right, so the word ``0b100`` in genus 3 prints as
``"001"``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

MAX_GROUP_GENUS = 4


class Parity(Enum):
    EVEN = 0
    ODD = 1


class CharFilter(Enum):
    ALL = "all"
    EVEN = "even"
    ODD = "odd"


def popcount(x: int) -> int:
    return bin(x).count("1")


def dot(a: int, b: int) -> int:
    """The F_2 pairing of two bit vectors."""
    return popcount(a & b) & 1


def word_to_str(word: int, genus: int) -> str:
    return "".join("1" if (word >> i) & 1 else "0" for i in range(genus))


def str_to_word(bits: str) -> int:
    word = 0
    for i, ch in enumerate(bits):
        if ch == "1":
            word |= 1 << i
        elif ch != "0":
            raise ValueError(f"not a bit string: {bits!r}")
    return word


def word_to_bits(word: int, genus: int) -> tuple[int, ...]:
    return tuple((word >> i) & 1 for i in range(genus))


def bits_to_word(bits: Sequence[int]) -> int:
    word = 0
    for i, b in enumerate(bits):
        if b & 1:
            word |= 1 << i
    return word


def _check_word(word: int, genus: int) -> None:
    if genus < 1:
        raise ValueError("genus must be positive")
    if word < 0 or word >> genus:
        raise ValueError(f"bit vector {word} does not fit genus {genus}")


@dataclass(frozen=True, order=True)
class HalfChar:
    """A single vector of F_2^g, the index of a second order theta function."""

    genus: int
    eps: int

    def __post_init__(self) -> None:
        _check_word(self.eps, self.genus)

    @classmethod
    def from_str(cls, bits: str) -> "HalfChar":
        return cls(len(bits), str_to_word(bits))

    def bits(self) -> tuple[int, ...]:
        return word_to_bits(self.eps, self.genus)

    def __add__(self, other: "HalfChar") -> "HalfChar":
        if other.genus != self.genus:
            raise ValueError("genus mismatch")
        return HalfChar(self.genus, self.eps ^ other.eps)

    def __str__(self) -> str:
        return word_to_str(self.eps, self.genus)


@dataclass(frozen=True, order=True)
class Characteristic:
    """A theta characteristic ``[eps, delta]`` with both vectors in F_2^g."""

    genus: int
    eps: int
    delta: int

    def __post_init__(self) -> None:
        _check_word(self.eps, self.genus)
        _check_word(self.delta, self.genus)

    @classmethod
    def from_str(cls, eps: str, delta: str) -> "Characteristic":
        if len(eps) != len(delta):
            raise ValueError("eps and delta must have equal length")
        return cls(len(eps), str_to_word(eps), str_to_word(delta))

    @property
    def parity(self) -> Parity:
        return Parity(dot(self.eps, self.delta))

    @property
    def is_even(self) -> bool:
        return dot(self.eps, self.delta) == 0

    @property
    def index(self) -> int:
        """Position in :func:`enumerate_chars` order (eps major, then delta)."""
        return (self.eps << self.genus) | self.delta

    def __str__(self) -> str:
        return f"[{word_to_str(self.eps, self.genus)},{word_to_str(self.delta, self.genus)}]"


def parity(m: Characteristic) -> Parity:
    return m.parity


def enumerate_chars(g: int, filter: CharFilter | str = CharFilter.ALL) -> list[Characteristic]:
    """All characteristics of genus ``g``, eps major then delta, in word order."""
    if g < 1:
        raise ValueError("genus must be positive")
    filter = CharFilter(filter)
    out = []
    for eps in range(1 << g):
        for delta in range(1 << g):
            m = Characteristic(g, eps, delta)
            if filter is CharFilter.EVEN and not m.is_even:
                continue
            if filter is CharFilter.ODD and m.is_even:
                continue
            out.append(m)
    return out


def even_count(g: int) -> int:
    return 2 ** (g - 1) * (2**g + 1)


def odd_count(g: int) -> int:
    return 2 ** (g - 1) * (2**g - 1)


# --- linear algebra over F_2 -------------------------------------------------
# A g x g matrix is a tuple of g row words; row i holds the coefficients of
# output coordinate i.


def mat_apply(rows: Sequence[int], x: int) -> int:
    out = 0
    for i, row in enumerate(rows):
        if popcount(row & x) & 1:
            out |= 1 << i
    return out


def mat_mul(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    """The product ``a @ b`` (apply ``b`` first)."""
    g = len(a)
    cols_b = [mat_apply(b, 1 << j) for j in range(g)]
    out = []
    for row in a:
        word = 0
        for j in range(g):
            if popcount(row & cols_b[j]) & 1:
                word |= 1 << j
        out.append(word)
    return tuple(out)


def identity_matrix(g: int) -> tuple[int, ...]:
    return tuple(1 << i for i in range(g))


def rank_f2(rows: Sequence[int]) -> int:
    basis: list[int] = []
    for r in rows:
        for b in basis:
            r = min(r, r ^ b)
        if r:
            basis.append(r)
    return len(basis)


def is_invertible(rows: Sequence[int]) -> bool:
    return rank_f2(rows) == len(rows)


@dataclass(frozen=True, order=True)
class AffineMap:
    """The map ``x -> linear @ x + shift`` on F_2^g."""

    linear: tuple[int, ...]
    shift: int

    def __post_init__(self) -> None:
        g = len(self.linear)
        _check_word(self.shift, g)
        for row in self.linear:
            _check_word(row, g)
        if not is_invertible(self.linear):
            raise ValueError("linear part is singular over F_2")

    @property
    def genus(self) -> int:
        return len(self.linear)

    def __call__(self, x: int) -> int:
        return mat_apply(self.linear, x) ^ self.shift

    def compose(self, other: "AffineMap") -> "AffineMap":
        """``self ∘ other``."""
        return AffineMap(mat_mul(self.linear, other.linear), self(other.shift))

    def permutation(self) -> tuple[int, ...]:
        """Image of every word, indexed by the word."""
        return tuple(self(x) for x in range(1 << self.genus))


def enumerate_gl(g: int) -> list[tuple[int, ...]]:
    """GL(g, F_2) by breadth-first closure from the elementary transvections."""
    if g < 1:
        raise ValueError("genus must be positive")
    if g > MAX_GROUP_GENUS:
        raise ValueError(f"group enumeration is limited to genus <= {MAX_GROUP_GENUS}")
    ident = identity_matrix(g)
    gens = []
    for i in range(g):
        for j in range(g):
            if i != j:
                rows = list(ident)
                rows[i] |= 1 << j
                gens.append(tuple(rows))
    seen = {ident}
    queue = deque([ident])
    while queue:
        m = queue.popleft()
        for s in gens:
            p = mat_mul(s, m)
            if p not in seen:
                seen.add(p)
                queue.append(p)
    return sorted(seen)


def gl_order(g: int) -> int:
    order = 1
    for i in range(g):
        order *= 2**g - 2**i
    return order


def enumerate_affine_group(g: int) -> list[AffineMap]:
    """All of AGL(g, F_2); ``2**g * |GL(g, F_2)|`` maps."""
    return [AffineMap(m, s) for m in enumerate_gl(g) for s in range(1 << g)]


def affine_permutations(g: int) -> list[tuple[int, ...]]:
    """Distinct permutations of F_2^g induced by AGL(g, F_2)."""
    return sorted({a.permutation() for a in enumerate_affine_group(g)})


def iter_words(g: int) -> Iterator[int]:
    return iter(range(1 << g))
