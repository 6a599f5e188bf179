"""Certified evaluation of theta functions with characteristics.

Lattice sums are accumulated in ``numpy.longdouble`` and rounded once to
double precision on return.  Each returned value carries an
absolute error radius that covers two sources:

* truncation: lattice points outside an ellipsoid of radius ``R`` are bounded
  by a disjoint-ball comparison with a radial Gaussian integral (see
  :func:`gaussian_tail_bound`);
* rounding: every summand gets a relative error budget proportional to the
  size of its exponent, plus a pairwise-summation term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gamma, gammaincc

from .charspace import Characteristic, HalfChar, dot

UNIT_ROUNDOFF = 2.0**-53
MAX_LATTICE_POINTS = 4_000_000
# Lattice sums run in the platform's extended type; the bound uses its real epsilon.
_EXT_ROUNDOFF = float(np.finfo(np.longdouble).eps) / 2.0
_PI_LD = np.longdouble("3.14159265358979323846264338327950288")


class PrecisionError(ArithmeticError):
    """The requested error radius cannot be certified in double precision."""


class GenusMismatch(ValueError):
    pass


# --- certified scalars -------------------------------------------------------


def _round(x: complex) -> float:
    return 4.0 * UNIT_ROUNDOFF * abs(x)


@dataclass(frozen=True)
class CertifiedComplex:
    """A complex number known to lie within ``err`` of ``value``."""

    value: complex
    err: float = 0.0

    def __post_init__(self) -> None:
        if not self.err >= 0.0:
            raise ValueError("error radius must be nonnegative")

    @classmethod
    def exact(cls, value: complex) -> "CertifiedComplex":
        return cls(complex(value), 0.0)

    @staticmethod
    def _lift(other) -> "CertifiedComplex":
        if isinstance(other, CertifiedComplex):
            return other
        return CertifiedComplex(complex(other), 0.0)

    def __add__(self, other) -> "CertifiedComplex":
        o = self._lift(other)
        v = self.value + o.value
        return CertifiedComplex(v, self.err + o.err + _round(v))

    __radd__ = __add__

    def __neg__(self) -> "CertifiedComplex":
        return CertifiedComplex(-self.value, self.err)

    def __sub__(self, other) -> "CertifiedComplex":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "CertifiedComplex":
        return self._lift(other) - self

    def __mul__(self, other) -> "CertifiedComplex":
        o = self._lift(other)
        v = self.value * o.value
        err = abs(self.value) * o.err + abs(o.value) * self.err + self.err * o.err + _round(v)
        return CertifiedComplex(v, err)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "CertifiedComplex":
        if k < 0:
            raise ValueError("negative powers are not supported")
        v = self.value**k
        a = abs(self.value)
        err = (a + self.err) ** k - a**k + k * _round(v)
        return CertifiedComplex(v, err)

    def __abs__(self) -> float:
        return abs(self.value)

    def contains(self, x: complex) -> bool:
        return abs(complex(x) - self.value) <= self.err

    def certifies_zero(self) -> bool:
        """True when 0 lies inside the error disc."""
        return abs(self.value) <= self.err

    def __str__(self) -> str:
        return f"{self.value.real:.15g}{self.value.imag:+.15g}j ± {self.err:.3g}"


def csum(items: Iterable[CertifiedComplex]) -> CertifiedComplex:
    """Sum with a single rounding term (real and imaginary parts via fsum)."""
    items = list(items)
    re = math.fsum(c.value.real for c in items)
    im = math.fsum(c.value.imag for c in items)
    v = complex(re, im)
    return CertifiedComplex(v, math.fsum(c.err for c in items) + _round(v))


# --- domain ------------------------------------------------------------------


class PeriodMatrix:
    """A point of the Siegel upper half space H_g."""

    def __init__(self, entries) -> None:
        a = np.array(entries, dtype=complex)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("period matrix must be square")
        if not np.array_equal(a, a.T):
            raise ValueError("period matrix must be symmetric")
        try:
            self._chol = np.linalg.cholesky(a.imag)
        except np.linalg.LinAlgError as exc:
            raise ValueError("imaginary part is not positive definite") from exc
        a.setflags(write=False)
        self.entries = a

    @classmethod
    def from_upper(cls, upper: Sequence[Sequence[complex]]) -> "PeriodMatrix":
        """Build from rows of the upper triangle, ``upper[i][j - i]`` for ``j >= i``."""
        g = len(upper)
        a = np.zeros((g, g), dtype=complex)
        for i in range(g):
            for j in range(i, g):
                a[i, j] = a[j, i] = upper[i][j - i]
        return cls(a)

    @property
    def genus(self) -> int:
        return self.entries.shape[0]

    @property
    def imag(self) -> np.ndarray:
        return self.entries.imag

    @cached_property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.imag)[0])

    def scaled(self, factor: float) -> "PeriodMatrix":
        return PeriodMatrix(self.entries * factor)

    def __repr__(self) -> str:
        return f"PeriodMatrix({self.entries.tolist()!r})"


@dataclass(frozen=True)
class EvalPoint:
    tau: PeriodMatrix
    z: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        z = np.zeros(self.tau.genus, dtype=complex) if self.z is None else np.array(self.z, dtype=complex)
        if z.shape != (self.tau.genus,):
            raise GenusMismatch(f"z has shape {z.shape}, expected ({self.tau.genus},)")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def genus(self) -> int:
        return self.tau.genus

    def with_z(self, z) -> "EvalPoint":
        return EvalPoint(self.tau, z)


def random_period_matrix(g: int, rng: np.random.Generator, noise: float = 0.5) -> PeriodMatrix:
    """``A + iB`` with ``A`` symmetric uniform in [-1, 1] and ``B = I + N N^T``."""
    a = rng.uniform(-1.0, 1.0, size=(g, g))
    a = np.triu(a) + np.triu(a, 1).T
    n = rng.uniform(-noise, noise, size=(g, g))
    b = np.eye(g) + n @ n.T
    b = (b + b.T) / 2
    return PeriodMatrix(a + 1j * b)


def random_z(g: int, rng: np.random.Generator, imag_scale: float = 0.3) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=g) + 1j * rng.uniform(-imag_scale, imag_scale, size=g)


# --- truncation --------------------------------------------------------------


def gaussian_tail_bound(radius: float, rho: float, g: int) -> float:
    """Bound on ``sum exp(-pi |x|^2)`` over points ``x`` with ``|x| > radius``.

    The points form any translate of a lattice whose minimal distance is at
    least ``rho``; requires ``radius >= rho``.  Balls of radius ``rho/2``
    around the points are disjoint and each summand is dominated by the mean
    over its ball of ``exp(-pi (|y| - rho/2)^2)``.
    """
    if radius < rho:
        raise ValueError("radius must be at least rho")
    a = radius - rho
    s = rho / 2.0
    total = 0.0
    for k in range(g):
        half = (k + 1) / 2.0
        incomplete = 0.5 * math.pi ** (-half) * gamma(half) * gammaincc(half, math.pi * a * a)
        total += math.comb(g - 1, k) * s ** (g - 1 - k) * incomplete
    return g * (2.0 / rho) ** g * total


@dataclass(frozen=True)
class _Truncation:
    radius: float
    prefactor: float
    tail: float


def _choose_radius(tau: PeriodMatrix, z: np.ndarray, budget: float) -> tuple[_Truncation, np.ndarray]:
    y_mat = tau.imag
    y = z.imag
    center = np.linalg.solve(y_mat, y)
    log_pref = math.pi * float(y @ center)
    g = tau.genus
    rho = math.sqrt(tau.min_eigenvalue) * (1.0 - 1e-9)
    radius = rho
    for _ in range(4000):
        tail = gaussian_tail_bound(radius, rho, g)
        if tail == 0.0 or math.log(tail) + log_pref <= math.log(budget):
            return _Truncation(radius, math.exp(log_pref), tail * math.exp(log_pref)), center
        radius += 0.05 + 0.02 * radius
    raise PrecisionError("could not reach the truncation budget")


def _lattice_points(tau: PeriodMatrix, center: np.ndarray, shift: np.ndarray, radius: float) -> np.ndarray:
    """Points ``v = n + shift`` with ``(v + center)^T Y (v + center) <= radius^2``."""
    y_mat = tau.imag
    g = tau.genus
    half_width = radius * np.sqrt(np.diag(np.linalg.inv(y_mat)))
    lo = np.ceil(-center - shift - half_width - 1e-12).astype(int)
    hi = np.floor(-center - shift + half_width + 1e-12).astype(int)
    counts = hi - lo + 1
    if np.prod(counts.astype(float)) > MAX_LATTICE_POINTS:
        raise PrecisionError("lattice enumeration box too large for this period matrix")
    axes = [np.arange(lo[i], hi[i] + 1) for i in range(g)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, g)
    v = grid + shift
    w = v + center
    norms = np.einsum("ni,ij,nj->n", w, y_mat, w)
    return v[norms <= radius * radius * (1 + 1e-12)]


def _first_order_sums(
    tau: PeriodMatrix, z: np.ndarray, eps: int, deltas: Sequence[int], target_err: float
) -> list[CertifiedComplex]:
    """theta[eps, delta](tau, z) for every delta in ``deltas`` from one lattice."""
    if not target_err > 0:
        raise ValueError("target_err must be positive")
    g = tau.genus
    trunc, center = _choose_radius(tau, z, target_err / 2.0)
    shift = np.array([((eps >> i) & 1) / 2.0 for i in range(g)])
    v = _lattice_points(tau, center, shift, trunc.radius).astype(np.longdouble)
    t_mat = tau.entries.astype(np.clongdouble)
    zl = z.astype(np.clongdouble)
    quad = np.einsum("ni,ij,nj->n", v, t_mat, v)
    lin = 2 * (v @ zl)
    terms = np.exp((quad + lin) * (_PI_LD * 1j))
    mags = np.abs(terms)
    av = np.abs(v)
    size = np.einsum("ni,ij,nj->n", av, np.abs(t_mat), av) + 2 * (av @ (np.abs(zl) + 1))
    # exponent products and sums carry at most (g^2 + 4) roundings each
    term_err = mags * (_EXT_ROUNDOFF * (math.pi * (g * g + 4) * size + 8))
    n_terms = max(len(terms), 2)
    sum_factor = _EXT_ROUNDOFF * (math.log2(n_terms) + 16)
    round_budget = float(term_err.sum() * 2 + mags.sum() * sum_factor * 2)
    twice = np.rint(2.0 * v.astype(float)).astype(np.int64)
    out = []
    for delta in deltas:
        dvec = np.array([(delta >> i) & 1 for i in range(g)], dtype=np.int64)
        k = (twice @ dvec) % 4
        # multiply by i**k exactly
        re = np.where(k == 0, terms.real, np.where(k == 1, -terms.imag, np.where(k == 2, -terms.real, terms.imag)))
        im = np.where(k == 0, terms.imag, np.where(k == 1, terms.real, np.where(k == 2, -terms.imag, -terms.real)))
        value = complex(float(re.sum()), float(im.sum()))
        rounding = round_budget + _round(value)
        if rounding > target_err / 2.0:
            raise PrecisionError(
                f"rounding error {rounding:.3g} exceeds half of target_err={target_err:.3g}"
            )
        out.append(CertifiedComplex(value, trunc.tail + rounding))
    return out


def _check_point(genus: int, p: EvalPoint) -> None:
    if genus != p.genus:
        raise GenusMismatch(f"characteristic genus {genus} != point genus {p.genus}")


def theta_first(m: Characteristic, p: EvalPoint, target_err: float = 1e-10) -> CertifiedComplex:
    """First order theta function ``theta[m](tau, z)``."""
    _check_point(m.genus, p)
    return _first_order_sums(p.tau, p.z, m.eps, [m.delta], target_err)[0]


def theta_second(e: HalfChar, p: EvalPoint, target_err: float = 1e-10) -> CertifiedComplex:
    """Second order theta function ``Theta[e](tau, z) = theta[e, 0](2 tau, 2 z)``."""
    _check_point(e.genus, p)
    doubled = EvalPoint(p.tau.scaled(2.0), 2.0 * p.z)
    return theta_first(Characteristic(e.genus, e.eps, 0), doubled, target_err)


# --- batched tables ----------------------------------------------------------


@dataclass(frozen=True)
class CertifiedVector:
    values: np.ndarray
    errs: np.ndarray

    def __getitem__(self, i: int) -> CertifiedComplex:
        return CertifiedComplex(complex(self.values[i]), float(self.errs[i]))

    def __len__(self) -> int:
        return len(self.values)


def first_order_table(p: EvalPoint, target_err: float = 1e-10) -> CertifiedVector:
    """All ``4**g`` first order thetas, indexed by :attr:`Characteristic.index`."""
    g = p.genus
    n = 1 << g
    values = np.zeros(n * n, dtype=complex)
    errs = np.zeros(n * n)
    for eps in range(n):
        for delta, c in zip(range(n), _first_order_sums(p.tau, p.z, eps, range(n), target_err)):
            values[(eps << g) | delta] = c.value
            errs[(eps << g) | delta] = c.err
    return CertifiedVector(values, errs)


def second_order_table(p: EvalPoint, target_err: float = 1e-10) -> CertifiedVector:
    """All ``2**g`` second order thetas ``Theta[e](tau, z)`` indexed by the word ``e``."""
    g = p.genus
    tau2 = p.tau.scaled(2.0)
    z2 = 2.0 * p.z
    vals = []
    for eps in range(1 << g):
        vals.append(_first_order_sums(tau2, z2, eps, [0], target_err)[0])
    return CertifiedVector(np.array([c.value for c in vals]), np.array([c.err for c in vals]))


def theta_abs_bound(tau_imag: np.ndarray, second_order: bool, target_err: float = 1e-12) -> float:
    """Upper bound for ``|theta[a, b](Z, 0)|`` (or ``|Theta[a](Z)|``) over every
    characteristic and every ``Z`` with imaginary part ``tau_imag``."""
    y = np.array(tau_imag, dtype=float)
    y = (y + y.T) / 2
    scale = 2.0 if second_order else 1.0
    pure = PeriodMatrix(1j * scale * y)
    zero = np.zeros(y.shape[0], dtype=complex)
    best = 0.0
    for eps in range(1 << y.shape[0]):
        c = _first_order_sums(pure, zero, eps, [0], target_err)[0]
        best = max(best, c.value.real + c.err)
    return best


# --- identity catalog --------------------------------------------------------


@dataclass(frozen=True)
class Riem:
    """``theta[eps,delta](z)^2 = sum_s (-1)^{delta.(s+eps)} Theta[s](0) Theta[s+eps](z)``.

    For even characteristics the sign reduces to ``(-1)^{delta.s}``; odd ones
    pick up the extra factor ``(-1)^{eps.delta}``.
    """

    eps: int
    delta: int


@dataclass(frozen=True)
class ProdTT:
    """``Theta[delta](z) Theta[delta+eps](z) = 2^-g sum_s (-1)^{delta.s} theta[eps,s](2z) theta[eps,s](0)``."""

    delta: int
    eps: int


@dataclass(frozen=True)
class Add:
    """``theta[eps,delta](2z) theta[eps,delta](0) = sum_s (-1)^{delta.s} Theta[s](z) Theta[s+eps](z)``."""

    eps: int
    delta: int


@dataclass(frozen=True)
class T8:
    """``sum theta^8(z) = sum theta^6(0) theta^2(2z)`` over all characteristics."""


IdentityId = Riem | ProdTT | Add | T8


def parse_identity(text: str, genus: int) -> list[IdentityId]:
    """``riem``, ``tt``, ``add`` or ``t8``, optionally ``name:AAA,BBB`` for one instance.

    Without explicit characteristics every instance of the family is returned.
    """
    from .charspace import str_to_word

    name, _, rest = text.lower().partition(":")
    n = 1 << genus
    if name == "t8":
        return [T8()]
    cls = {"riem": Riem, "tt": ProdTT, "add": Add}.get(name)
    if cls is None:
        raise ValueError(f"unknown identity {text!r}")
    if rest:
        a, b = rest.split(",")
        if len(a) != genus or len(b) != genus:
            raise ValueError("characteristic length does not match genus")
        return [cls(str_to_word(a), str_to_word(b))]
    return [cls(a, b) for a in range(n) for b in range(n)]


class ThetaCache:
    """Lazily computed theta tables at one point ``(tau, z)``."""

    def __init__(self, p: EvalPoint, target_err: float) -> None:
        self.p = p
        # identities combine many products, so each theta gets a tighter budget
        self.target_err = min(target_err, max(target_err * 1e-3, 1e-13))
        self._first: dict[float, CertifiedVector] = {}
        self._second: dict[float, CertifiedVector] = {}

    def first(self, scale: float) -> CertifiedVector:
        if scale not in self._first:
            self._first[scale] = first_order_table(self.p.with_z(scale * self.p.z), self.target_err)
        return self._first[scale]

    def second(self, scale: float) -> CertifiedVector:
        if scale not in self._second:
            self._second[scale] = second_order_table(self.p.with_z(scale * self.p.z), self.target_err)
        return self._second[scale]


def _sign(x: int) -> int:
    return -1 if x & 1 else 1


def identity_residual(ident: IdentityId, p: EvalPoint, target_err: float = 1e-10,
                      cache: ThetaCache | None = None) -> CertifiedComplex:
    """LHS - RHS of a catalogued identity at ``p``.

    Raises :class:`PrecisionError` if the certified radius of the residual
    cannot be brought under ``target_err``.
    """
    cache = cache or ThetaCache(p, target_err)
    res = _residual(ident, p, cache)
    if res.err > target_err:
        raise PrecisionError(f"residual radius {res.err:.3g} exceeds target_err={target_err:.3g}")
    return res


def _residual(ident: IdentityId, p: EvalPoint, cache: ThetaCache) -> CertifiedComplex:
    g = p.genus
    n = 1 << g

    def idx(e: int, d: int) -> int:
        return (e << g) | d

    if isinstance(ident, Riem):
        e, d = ident.eps, ident.delta
        lhs = cache.first(1.0)[idx(e, d)] ** 2
        c0, cz = cache.second(0.0), cache.second(1.0)
        rhs = csum(_sign(dot(d, s ^ e)) * (c0[s] * cz[s ^ e]) for s in range(n))
        return lhs - rhs
    if isinstance(ident, ProdTT):
        d, e = ident.delta, ident.eps
        cz = cache.second(1.0)
        lhs = cz[d] * cz[d ^ e]
        f2, f0 = cache.first(2.0), cache.first(0.0)
        rhs = csum(_sign(dot(d, s)) * (f2[idx(e, s)] * f0[idx(e, s)]) for s in range(n))
        return lhs - rhs * (1.0 / n)
    if isinstance(ident, Add):
        e, d = ident.eps, ident.delta
        lhs = cache.first(2.0)[idx(e, d)] * cache.first(0.0)[idx(e, d)]
        cz = cache.second(1.0)
        rhs = csum(_sign(dot(d, s)) * (cz[s] * cz[s ^ e]) for s in range(n))
        return lhs - rhs
    if isinstance(ident, T8):
        fz, f0, f2 = cache.first(1.0), cache.first(0.0), cache.first(2.0)
        lhs = csum(fz[i] ** 8 for i in range(n * n))
        rhs = csum((f0[i] ** 6) * (f2[i] ** 2) for i in range(n * n))
        return lhs - rhs
    raise ValueError(f"unknown identity {ident!r}")
