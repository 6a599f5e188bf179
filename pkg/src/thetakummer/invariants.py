"""Symmetries of second order theta constants.

The diagonal matrices ``D_S`` and the transform ``T_g`` act linearly on the
vector ``(Theta[a])_a``; affine maps of F_2^g act by permuting indices.  This
module builds those matrices exactly, tests admissibility of monomials,
forms orbit sums, and produces the degree 16 Schottky relation in both first
and second order variables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .charspace import (
    CharFilter,
    Characteristic,
    affine_permutations,
    dot,
    enumerate_chars,
)
from .numtheta import EvalPoint, first_order_table, random_period_matrix, second_order_table
from .polyring import (
    GaussianRational,
    SparsePoly,
    VarIndex,
    const_vars,
    first_order_vars,
    normalize,
    poly_sum,
)

# Orbit labels of the weight six invariants in genus three.
LEMMA_STRINGS: tuple[tuple[int, ...], ...] = (
    (12, 0, 0, 0, 0, 0, 0, 0),
    (8, 4, 0, 0, 0, 0, 0, 0),
    (4, 4, 4, 0, 0, 0, 0, 0),
    (6, 2, 2, 2, 0, 0, 0, 0),
    (4, 0, 0, 0, 2, 2, 2, 2),
    (5, 1, 1, 1, 1, 1, 1, 1),
)


class InadmissibleMonomial(ValueError):
    pass


# --- action matrices ---------------------------------------------------------


@dataclass(frozen=True)
class ActionMatrix:
    label: str
    genus: int
    entries: tuple[tuple, ...]

    @property
    def size(self) -> int:
        return len(self.entries)

    def __matmul__(self, other: "ActionMatrix") -> "ActionMatrix":
        n = self.size
        rows = tuple(
            tuple(
                normalize(sum((self.entries[i][k] * other.entries[k][j] for k in range(n)), 0))
                for j in range(n)
            )
            for i in range(n)
        )
        return ActionMatrix(f"{self.label}*{other.label}", self.genus, rows)

    def power(self, k: int) -> "ActionMatrix":
        out = identity_action(self.genus)
        for _ in range(k):
            out = out @ self
        return out

    def is_identity(self) -> bool:
        n = self.size
        return all(self.entries[i][j] == (1 if i == j else 0) for i in range(n) for j in range(n))

    def as_lists(self) -> list[list]:
        return [list(r) for r in self.entries]


def identity_action(g: int) -> ActionMatrix:
    n = 1 << g
    return ActionMatrix("I", g, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))


def _quad(a: int, s: Sequence[Sequence[int]]) -> int:
    g = len(s)
    bits = [(a >> i) & 1 for i in range(g)]
    return sum(bits[i] * s[i][j] * bits[j] for i in range(g) for j in range(g))


_I_POW = (1, GaussianRational(0, 1), -1, GaussianRational(0, -1))


def ds_matrix(s: Sequence[Sequence[int]]) -> ActionMatrix:
    """``diag(i ** (a^t S a))`` over words ``a``; ``S`` integral symmetric."""
    g = len(s)
    if any(len(row) != g for row in s):
        raise ValueError("S must be square")
    if any(s[i][j] != s[j][i] for i in range(g) for j in range(g)):
        raise ValueError("S must be symmetric")
    if any(int(x) != x for row in s for x in row):
        raise ValueError("S must be integral")
    n = 1 << g
    diag = [_I_POW[_quad(a, s) % 4] for a in range(n)]
    rows = tuple(tuple(diag[i] if i == j else 0 for j in range(n)) for i in range(n))
    return ActionMatrix(f"DS({[list(r) for r in s]})", g, rows)


def tg_matrix(g: int) -> ActionMatrix:
    """``((1+i)/2)**g * ((-1)**<a,b>)``."""
    n = 1 << g
    c = GaussianRational(Fraction(1, 2), Fraction(1, 2)) ** g
    rows = tuple(tuple(normalize(c * (-1) ** dot(a, b)) for b in range(n)) for a in range(n))
    return ActionMatrix("Tg", g, rows)


def elementary_symmetric(g: int) -> list[list[list[int]]]:
    """The basis ``E_ii`` and ``E_ij + E_ji`` of integral symmetric matrices."""
    out = []
    for i in range(g):
        for j in range(i, g):
            m = [[0] * g for _ in range(g)]
            m[i][j] = m[j][i] = 1
            out.append(m)
    return out


def permutation_matrix(perm: Sequence[int]) -> list[list[int]]:
    """Matrix sending variable ``a`` to variable ``perm[a]`` under substitution."""
    n = len(perm)
    m = [[0] * n for _ in range(n)]
    for a, b in enumerate(perm):
        m[b][a] = 1
    return m


def action_matrix(label: str, g: int, s: Sequence[Sequence[int]] | None = None) -> ActionMatrix:
    """``label`` is ``"DS"`` (with ``s``) or ``"Tg"``."""
    if label.upper() == "DS":
        if s is None:
            raise ValueError("DS needs a symmetric matrix S")
        if len(s) != g:
            raise ValueError("S does not match genus")
        return ds_matrix(s)
    if label.upper() == "TG":
        return tg_matrix(g)
    raise ValueError(f"unknown action {label!r}")


# --- admissibility and orbits -----------------------------------------------


def _genus_of(exps: Sequence[int]) -> int:
    n = len(exps)
    g = n.bit_length() - 1
    if n != 1 << g or g < 1:
        raise ValueError("exponent vector length must be a power of two")
    return g


def is_admissible(exps: Sequence[int]) -> bool:
    """Invariance of ``prod Theta[a]**exps[a]`` under every ``D_S``.

    Checked on the elementary symmetric matrices, which suffices because the
    diagonal characters are multiplicative in ``S``.
    """
    g = _genus_of(exps)
    if sum(exps) % 2:
        raise ValueError("admissibility is defined for even degree")
    n = 1 << g
    for i in range(g):
        if sum(exps[a] for a in range(n) if (a >> i) & 1) % 4:
            return False
    for i, j in itertools.combinations(range(g), 2):
        if sum(exps[a] for a in range(n) if (a >> i) & 1 and (a >> j) & 1) % 2:
            return False
    return True


def multiplicity_string(exps: Sequence[int]) -> tuple[int, ...]:
    return tuple(sorted(exps, reverse=True))


def _permute(exps: Sequence[int], perm: Sequence[int]) -> tuple[int, ...]:
    out = [0] * len(exps)
    for a, e in enumerate(exps):
        out[perm[a]] = e
    return tuple(out)


def orbit(exps: Sequence[int]) -> list[tuple[int, ...]]:
    """Distinct images of an exponent vector under AGL(g, F_2), sorted."""
    g = _genus_of(exps)
    return sorted({_permute(exps, p) for p in affine_permutations(g)})


def canonical_label(exps: Sequence[int]) -> tuple[int, ...]:
    """Lexicographically least element of the orbit."""
    return orbit(exps)[0]


def orbit_sum(exps: Sequence[int], ctx: Sequence[VarIndex] | None = None) -> SparsePoly:
    exps = tuple(exps)
    g = _genus_of(exps)
    if not is_admissible(exps):
        raise InadmissibleMonomial(f"{exps} is not admissible")
    ctx = tuple(ctx) if ctx is not None else const_vars(g)
    if len(ctx) != len(exps):
        raise ValueError("context size does not match the exponent vector")
    return SparsePoly(ctx, {e: 1 for e in orbit(exps)})


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All exponent vectors of the given length and sum, in decreasing lex order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def admissible_monomials(g: int, degree: int) -> list[tuple[int, ...]]:
    return [e for e in compositions(degree, 1 << g) if is_admissible(e)]


def admissible_orbits(g: int, degree: int) -> list[tuple[int, ...]]:
    """Canonical labels of the AGL orbits of admissible monomials, sorted."""
    perms = affine_permutations(g)
    seen: set[tuple[int, ...]] = set()
    labels = []
    for e in admissible_monomials(g, degree):
        if e in seen:
            continue
        orb = {_permute(e, p) for p in perms}
        seen |= orb
        labels.append(min(orb))
    return sorted(labels)


def invariant_basis(g: int = 3, half_weight_degree: int = 12) -> list[SparsePoly]:
    """Orbit sums of all admissible monomials of the given degree.

    For ``g = 3`` the orbits follow :data:`LEMMA_STRINGS`; otherwise they are
    ordered by descending multiplicity string.
    """
    labels = admissible_orbits(g, half_weight_degree)
    lemma = [multiplicity_string(s) for s in LEMMA_STRINGS]

    def rank(e: tuple[int, ...]):
        ms = multiplicity_string(e)
        return (lemma.index(ms) if ms in lemma else len(lemma), tuple(-x for x in ms), e)

    labels.sort(key=rank)
    return [orbit_sum(e) for e in labels]


# --- squares of first order constants ---------------------------------------


def riem_square(m: Characteristic) -> SparsePoly:
    """``theta[m]**2`` at ``z = 0`` as a quadratic form in the constants ``Theta``.

    ``theta[eps,delta]**2 = sum_s (-1)**<delta, s + eps> Theta[s] Theta[s + eps]``.
    """
    g = m.genus
    n = 1 << g
    ctx = const_vars(g)
    terms: dict[tuple[int, ...], int] = {}
    for s in range(n):
        e = [0] * n
        e[s] += 1
        e[s ^ m.eps] += 1
        key = tuple(e)
        terms[key] = terms.get(key, 0) + (-1) ** dot(m.delta, s ^ m.eps)
    return SparsePoly(ctx, terms)


@lru_cache(maxsize=None)
def riem_square_table(g: int) -> dict[Characteristic, SparsePoly]:
    return {m: riem_square(m) for m in enumerate_chars(g, CharFilter.EVEN)}


def validate_square_table(g: int, samples: int = 10, seed: int = 0, tol_factor: float = 1.0) -> float:
    """Check the square table at random period matrices.

    Returns the largest ratio ``|residual| / err``; raises ``AssertionError`` if
    any residual exceeds its certified radius.
    """
    from .polyring import evaluate_certified

    rng = np.random.default_rng(seed)
    worst = 0.0
    table = riem_square_table(g)
    for _ in range(samples):
        p = EvalPoint(random_period_matrix(g, rng), np.zeros(g))
        first = first_order_table(p, 1e-13)
        second = second_order_table(p, 1e-13)
        vals, errs = list(second.values), list(second.errs)
        for m, poly in table.items():
            lhs = first[m.index] ** 2
            rhs = evaluate_certified(poly, vals, errs)
            r = lhs - rhs
            if abs(r.value) > tol_factor * r.err:
                raise AssertionError(f"square table fails for {m}: {abs(r.value):.3g} > {r.err:.3g}")
            worst = max(worst, abs(r.value) / r.err if r.err else 0.0)
    return worst


# --- the Schottky relation ---------------------------------------------------


def even_first_order_context(g: int = 3) -> tuple[VarIndex, ...]:
    return first_order_vars(enumerate_chars(g, CharFilter.EVEN))


@lru_cache(maxsize=None)
def _schottky_first() -> SparsePoly:
    ctx = even_first_order_context(3)
    xs = [SparsePoly.var(ctx, i) for i in range(len(ctx))]
    p16 = poly_sum((x**16 for x in xs), ctx)
    p8 = poly_sum((x**8 for x in xs), ctx)
    return p16 * Fraction(1, 8) - (p8 * p8) * Fraction(1, 64)


@lru_cache(maxsize=None)
def _schottky_second() -> SparsePoly:
    table = riem_square_table(3)
    ctx = const_vars(3)
    p16 = SparsePoly.zero(ctx)
    p8 = SparsePoly.zero(ctx)
    for sq in table.values():
        s4 = (sq * sq) * (sq * sq)
        p8 = p8 + s4
        p16 = p16 + s4 * s4
    return p16 * Fraction(1, 8) - (p8 * p8) * Fraction(1, 64)


def schottky_poly(representation: str = "second") -> SparsePoly:
    """The genus three Schottky relation

    ``S = (1/8) sum theta_m**16 - ((1/8) sum theta_m**8)**2`` over even ``m``,
    either in the 36 first order constants (``"first"``) or, after replacing
    every square by :func:`riem_square`, in the 8 constants ``Theta[a]``
    (``"second"``).
    """
    rep = representation.lower()
    if rep in ("first", "firstorder", "first_order"):
        return _schottky_first()
    if rep in ("second", "secondorder", "second_order"):
        return _schottky_second()
    raise ValueError(f"unknown representation {representation!r}")
