"""Fourier-Jacobi expansions of polynomials in second order theta constants.

A period matrix of genus ``g + 1`` is split as ``Z = [[w, z^t], [z, tau]]``
and ``q = exp(pi i w / 4)``.  Writing ``alpha = (b, eps)`` with ``b`` in
bit 0 of the word,

    Theta[b eps](Z) = sum_{m in Z + b/2} q**(8 m**2) Theta[eps](tau, m z),

so ``X_{0 eps} = Theta[eps](tau) + 2 q**8 Theta[eps](tau, z) + O(q**32)`` and
``X_{1 eps} = 2 q**2 Theta[eps](tau, z/2) + O(q**18)``.  For a homogeneous
``P`` split as ``sum f_i`` by the number ``i`` of ``X_1`` factors, the
``q**8`` coefficient is therefore

    F8(tau, 2z) = 16 f_4(Theta(tau), Theta(tau, z))
                  + 2 sum_eps dF0/dTheta[eps] (Theta(tau)) Theta[eps](tau, 2z)

with ``F0 = f_0``.  The second sum is carried formally as ``H1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .charspace import Characteristic, dot, word_to_str
from .numtheta import (
    CertifiedComplex,
    EvalPoint,
    PeriodMatrix,
    PrecisionError,
    csum,
    first_order_table,
    second_order_table,
    theta_abs_bound,
)
from .polyring import (
    ContextMismatch,
    SparsePoly,
    VarIndex,
    const_vars,
    evaluate_certified,
    first_order_vars,
    func_vars,
    partial_derivative,
    poly_sum,
    split_vars,
)


class ArgScale(Enum):
    """What the ``x`` variables of an assembled polynomial stand for.

    ``HALF``: ``x_eps = Theta[eps](tau, z/2)``, the raw coefficient at ``z``.
    ``FULL``: ``x_eps = Theta[eps](tau, z)``, the coefficient at ``2z``.
    """

    HALF = "half"
    FULL = "full"


class ScaleMismatch(ValueError):
    pass


class NotInQuarticSpan(ValueError):
    def __init__(self, residual: SparsePoly) -> None:
        super().__init__(f"{len(residual)} monomials outside the quartic span")
        self.residual = residual


class ValidationFailure(AssertionError):
    pass


# --- contexts ----------------------------------------------------------------


def mixed_vars(g: int) -> tuple[VarIndex, ...]:
    """Constants ``Theta[eps](tau)`` followed by functions ``x_eps``."""
    return const_vars(g) + func_vars(g)


def doubling_vars(g: int) -> tuple[VarIndex, ...]:
    """``theta[0, delta](tau)``, then ``Theta[eps](tau)``, then ``x_eps``."""
    return first_order_vars([Characteristic(g, 0, d) for d in range(1 << g)]) + mixed_vars(g)


# --- split polynomials -------------------------------------------------------


@dataclass(frozen=True)
class SplitPoly:
    base_genus: int
    poly: SparsePoly

    def __post_init__(self) -> None:
        if self.poly.ctx != split_vars(self.base_genus):
            raise ContextMismatch("split polynomial must use the split variables of its base genus")
        self.poly.require_homogeneous()

    @classmethod
    def lift(cls, p: SparsePoly) -> "SplitPoly":
        """Reinterpret a polynomial in ``Theta[alpha]`` constants of genus ``g + 1``."""
        G = p.ctx[0].genus if p.ctx else 1
        if p.ctx != const_vars(G):
            raise ContextMismatch("expected the second order constants of one genus")
        return cls(G - 1, SparsePoly(split_vars(G - 1), p.terms))


@dataclass(frozen=True)
class FJTerm:
    index: int
    poly: SparsePoly


def _x1_count(e: Sequence[int]) -> int:
    return sum(k for a, k in enumerate(e) if a & 1)


def split_parts(p: SplitPoly) -> list[FJTerm]:
    """``P = sum f_i`` with ``i`` the number of ``X_1`` factors; empty parts omitted."""
    parts: dict[int, dict] = {}
    for e, c in p.poly.terms.items():
        parts.setdefault(_x1_count(e), {})[e] = c
    return [FJTerm(i, SparsePoly(p.poly.ctx, parts[i])) for i in sorted(parts)]


def _part(p: SplitPoly, i: int) -> SparsePoly:
    for t in split_parts(p):
        if t.index == i:
            return t.poly
    return SparsePoly.zero(p.poly.ctx)


def phi_image(p: SplitPoly) -> SparsePoly:
    """``F0``: the ``X_1``-free part with ``X_{0 eps}`` renamed to ``Theta[eps]``."""
    g = p.base_genus
    f0 = _part(p, 0)
    out = {}
    for e, c in f0.terms.items():
        out[tuple(e[eps << 1] for eps in range(1 << g))] = c
    return SparsePoly(const_vars(g), out)


@dataclass(frozen=True)
class AssembledPoly:
    """A polynomial in :func:`mixed_vars` with its argument scale."""

    poly: SparsePoly
    scale: ArgScale

    def __add__(self, other: "AssembledPoly") -> "AssembledPoly":
        if self.scale is not other.scale:
            raise ScaleMismatch(f"cannot add {self.scale.value} and {other.scale.value} polynomials")
        return AssembledPoly(self.poly + other.poly, self.scale)

    def __sub__(self, other: "AssembledPoly") -> "AssembledPoly":
        if self.scale is not other.scale:
            raise ScaleMismatch(f"cannot subtract {other.scale.value} from {self.scale.value} polynomial")
        return AssembledPoly(self.poly - other.poly, self.scale)


@dataclass(frozen=True)
class F8Term:
    """``F8(tau, 2z) = main + 2 sum_eps h1[eps] * Theta[eps](tau, 2z)``."""

    base_genus: int
    main: AssembledPoly
    h1: tuple[tuple[int, SparsePoly], ...] = field(default_factory=tuple)

    @property
    def h1_is_zero(self) -> bool:
        return not self.h1

    def evaluate(self, tau: PeriodMatrix, z: np.ndarray, target_err: float = 1e-12) -> CertifiedComplex:
        """Numerical value of ``F8(tau, 2z)``."""
        g = self.base_genus
        z = np.asarray(z, dtype=complex)
        c0 = second_order_table(EvalPoint(tau, np.zeros(g)), target_err)
        cz = second_order_table(EvalPoint(tau, z), target_err)
        vals = list(c0.values) + list(cz.values)
        errs = list(c0.errs) + list(cz.errs)
        total = evaluate_certified(self.main.poly, vals, errs)
        if self.h1:
            c2 = second_order_table(EvalPoint(tau, 2 * z), target_err)
            for eps, d in self.h1:
                total = total + 2.0 * (evaluate_certified(d, list(c0.values), list(c0.errs)) * c2[eps])
        return total


def raw_f4(p: SplitPoly) -> AssembledPoly:
    """``f_4`` with ``X_0 -> Theta(tau)`` and ``X_1 -> x``, flagged ``HALF``."""
    g = p.base_genus
    n = 1 << g
    ctx = mixed_vars(g)
    mapping = [(a >> 1) + (n if a & 1 else 0) for a in range(2 * n)]
    return AssembledPoly(_part(p, 4).reindex(ctx, mapping), ArgScale.HALF)


def f8_term(p: SplitPoly) -> F8Term:
    """The ``q**8`` coefficient, assembled at ``(tau, 2z)``."""
    g = p.base_genus
    main = raw_f4(p)
    main = AssembledPoly(main.poly * 16, ArgScale.FULL)
    f0 = phi_image(p)
    h1 = []
    if not f0.is_zero():
        for eps, v in enumerate(f0.ctx):
            d = partial_derivative(f0, v)
            if not d.is_zero():
                h1.append((eps, d))
    return F8Term(g, main, tuple(h1))


# --- doubling ----------------------------------------------------------------


def bilinear_b(g: int, eps: int, delta: int) -> SparsePoly:
    """``B_{eps,delta}(x) = sum_s (-1)**<delta,s> x_s x_{s+eps}`` in :func:`doubling_vars`."""
    ctx = doubling_vars(g)
    n = 1 << g
    off = 2 * n  # x variables start after first order and constants
    terms: dict[tuple[int, ...], int] = {}
    for s in range(n):
        e = [0] * len(ctx)
        e[off + s] += 1
        e[off + (s ^ eps)] += 1
        key = tuple(e)
        terms[key] = terms.get(key, 0) + (-1) ** dot(delta, s)
    return SparsePoly(ctx, terms)


@dataclass(frozen=True)
class DoublingIdentity:
    """``Theta[a](tau, 2z) * Theta[b](tau) = numerator / denominator``.

    Numerator and denominator live in :func:`doubling_vars`; the denominator is
    the monomial ``Theta[a](tau) * prod_delta theta[0,delta](tau)**2``.
    """

    genus: int
    a: int
    b: int
    numerator: SparsePoly
    denominator: SparsePoly

    def residual(self, tau: PeriodMatrix, z: np.ndarray, target_err: float = 1e-13) -> CertifiedComplex:
        g = self.genus
        n = 1 << g
        z = np.asarray(z, dtype=complex)
        f0 = first_order_table(EvalPoint(tau, np.zeros(g)), target_err)
        c0 = second_order_table(EvalPoint(tau, np.zeros(g)), target_err)
        cz = second_order_table(EvalPoint(tau, z), target_err)
        c2 = second_order_table(EvalPoint(tau, 2 * z), target_err)
        vals = [f0.values[d] for d in range(n)] + list(c0.values) + list(cz.values)
        errs = [f0.errs[d] for d in range(n)] + list(c0.errs) + list(cz.errs)
        num = evaluate_certified(self.numerator, vals, errs)
        den = evaluate_certified(self.denominator, vals, errs)
        return (c2[self.a] * c0[self.b]) * den - num


def _doubling_core(a: int, g: int) -> SparsePoly:
    """``N_a`` with ``Theta[a](tau, 2z) Theta[a](tau) prod_d theta[0,d](tau)**2 = N_a``."""
    n = 1 << g
    ctx = doubling_vars(g)
    t2 = [SparsePoly.var(ctx, d, 2) for d in range(n)]
    parts = []
    for d in range(n):
        other = SparsePoly.constant(ctx, 1)
        for d2 in range(n):
            if d2 != d:
                other = other * t2[d2]
        bd = bilinear_b(g, 0, d)
        parts.append((bd * bd) * other * ((-1) ** dot(a, d)))
    return poly_sum(parts, ctx) * Fraction(1, n)


def doubling_rewrite(a: int, b: int, g: int) -> DoublingIdentity:
    """Build the identity from

    ``Theta[a](tau, 2z) Theta[a](tau) = 2**-g sum_d (-1)**<a,d> theta[0,d](tau, 2z)**2``
    and ``theta[0,d](tau, 2z) theta[0,d](tau) = B_{0,d}(x)``, multiplied through
    by ``Theta[b](tau) / Theta[a](tau)``.
    """
    n = 1 << g
    if not (0 <= a < n and 0 <= b < n):
        raise ValueError("half characteristics out of range for the genus")
    ctx = doubling_vars(g)
    denominator = SparsePoly.var(ctx, n + a)
    for d in range(n):
        denominator = denominator * SparsePoly.var(ctx, d, 2)
    numerator = _doubling_core(a, g) * SparsePoly.var(ctx, n + b)
    return DoublingIdentity(g, a, b, numerator, denominator)


def validate_doubling(ident: DoublingIdentity, samples: int = 50, seed: int = 0) -> float:
    """Gate: raise :class:`ValidationFailure` unless every residual is inside its radius.

    Returns the worst ratio ``|residual| / err``.
    """
    from .numtheta import random_period_matrix, random_z

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        tau = random_period_matrix(ident.genus, rng)
        z = random_z(ident.genus, rng)
        r = ident.residual(tau, z)
        if abs(r.value) > r.err:
            raise ValidationFailure(f"doubling identity fails: |{r.value:.3g}| > {r.err:.3g}")
        worst = max(worst, abs(r.value) / r.err if r.err else 0.0)
    return worst


def materialize_h1(term: F8Term) -> tuple[SparsePoly, SparsePoly]:
    """``(numerator, denominator)`` in :func:`doubling_vars` for the whole ``F8(tau, 2z)``.

    Every ``Theta[eps](tau, 2z)`` in ``H1`` is replaced by its doubling
    rewrite; the shared denominator is
    ``prod_eps Theta[eps](tau) * prod_delta theta[0,delta](tau)**2``.
    """
    g = term.base_genus
    n = 1 << g
    ctx = doubling_vars(g)
    consts = [SparsePoly.var(ctx, n + e) for e in range(n)]
    denominator = SparsePoly.constant(ctx, 1)
    for e in range(n):
        denominator = denominator * consts[e]
    for d in range(n):
        denominator = denominator * SparsePoly.var(ctx, d, 2)
    numerator = term.main.poly.reindex(ctx, list(range(n, 3 * n))) * denominator
    for eps, d in term.h1:
        others = SparsePoly.constant(ctx, 1)
        for e in range(n):
            if e != eps:
                others = others * consts[e]
        numerator = numerator + d.reindex(ctx, list(range(n, 2 * n))) * _doubling_core(eps, g) * others * 2
    return numerator, denominator


# --- quartics ----------------------------------------------------------------


def _string_value(word: int, g: int) -> int:
    """Rank of a word when its string is read as a binary number."""
    return int(word_to_str(word, g), 2)


def _two_planes(g: int) -> list[tuple[int, ...]]:
    """Two dimensional linear subspaces of F_2^g as sorted word tuples."""
    seen = set()
    for u in range(1, 1 << g):
        for v in range(u + 1, 1 << g):
            seen.add(tuple(sorted({0, u, v, u ^ v})))
    return sorted(seen)


def quartic_basis(g: int) -> list[SparsePoly]:
    """Orbit sums of quartic monomials whose indices add to zero, under index shifts.

    Order: ``sum x**4``; then ``x_a**2 x_{a+c}**2`` summed over pairs, for
    ``c != 0`` in string order; then the products over the cosets of each two
    dimensional subspace.  In genus three the subspaces are ordered by the
    nonzero functional that annihilates them.
    """
    if g not in (2, 3):
        raise ValueError("quartic bases are provided for genus 2 and 3")
    n = 1 << g
    ctx = func_vars(g)
    out = []

    def mono(exps: dict[int, int]) -> tuple[int, ...]:
        e = [0] * n
        for a, k in exps.items():
            e[a] += k
        return tuple(e)

    out.append(SparsePoly(ctx, {mono({a: 4}): 1 for a in range(n)}))
    for c in sorted(range(1, n), key=lambda w: _string_value(w, g)):
        pairs = {tuple(sorted((a, a ^ c))) for a in range(n)}
        out.append(SparsePoly(ctx, {mono({a: 2, b: 2}): 1 for a, b in pairs}))
    planes = _two_planes(g)
    if g == 3:
        def annihilator(v: tuple[int, ...]) -> int:
            return next(c for c in range(1, n) if all(dot(c, x) == 0 for x in v))

        planes.sort(key=lambda v: _string_value(annihilator(v), g))
    for v in planes:
        cosets = {tuple(sorted(x ^ s for x in v)) for s in range(n)}
        out.append(SparsePoly(ctx, {mono({x: 1 for x in cos}): 1 for cos in cosets}))
    return out


# The fifteen genus three quartics, each a list of monomials; a monomial is the
# list of its index strings with multiplicity.
GENUS3_QUARTICS: tuple[tuple[tuple[str, ...], ...], ...] = (
    tuple((s,) * 4 for s in ("000", "001", "010", "100", "110", "101", "011", "111")),
    (("000", "000", "001", "001"), ("010", "010", "011", "011"), ("100", "100", "101", "101"), ("110", "110", "111", "111")),
    (("000", "000", "010", "010"), ("001", "001", "011", "011"), ("100", "100", "110", "110"), ("101", "101", "111", "111")),
    (("000", "000", "011", "011"), ("010", "010", "001", "001"), ("100", "100", "111", "111"), ("110", "110", "101", "101")),
    (("000", "000", "100", "100"), ("010", "010", "110", "110"), ("001", "001", "101", "101"), ("011", "011", "111", "111")),
    (("000", "000", "101", "101"), ("010", "010", "111", "111"), ("100", "100", "001", "001"), ("110", "110", "011", "011")),
    (("000", "000", "110", "110"), ("010", "010", "100", "100"), ("101", "101", "011", "011"), ("001", "001", "111", "111")),
    (("000", "000", "111", "111"), ("010", "010", "101", "101"), ("100", "100", "011", "011"), ("110", "110", "001", "001")),
    (("000", "010", "100", "110"), ("001", "011", "101", "111")),
    (("000", "001", "100", "101"), ("010", "011", "110", "111")),
    (("000", "011", "100", "111"), ("001", "010", "101", "110")),
    (("000", "001", "010", "011"), ("100", "101", "110", "111")),
    (("000", "010", "101", "111"), ("001", "011", "100", "110")),
    (("000", "001", "110", "111"), ("010", "011", "100", "101")),
    (("000", "011", "101", "110"), ("001", "010", "100", "111")),
)


def genus3_quartics_from_table() -> list[SparsePoly]:
    from .charspace import str_to_word

    ctx = func_vars(3)
    out = []
    for q in GENUS3_QUARTICS:
        terms = {}
        for mono in q:
            e = [0] * 8
            for s in mono:
                e[str_to_word(s)] += 1
            terms[tuple(e)] = 1
        out.append(SparsePoly(ctx, terms))
    return out


def extract_quartic_coeffs(f8: AssembledPoly, g: int) -> list[SparsePoly]:
    """Coefficients ``s_j`` in the constants with ``f8 = sum s_j Q_j``.

    The quartics have disjoint monomial supports with unit coefficients, so
    ``s_j`` is the coefficient of any monomial of ``Q_j``; all others must agree
    and nothing may fall outside.  Raises :class:`NotInQuarticSpan`.
    """
    n = 1 << g
    if f8.poly.ctx != mixed_vars(g):
        raise ContextMismatch("expected the mixed constant and x variables of the genus")
    basis = quartic_basis(g)
    owner: dict[tuple[int, ...], int] = {}
    for j, q in enumerate(basis):
        for e in q.terms:
            owner[e] = j
    by_x: dict[tuple[int, ...], dict] = {}
    for e, c in f8.poly.terms.items():
        by_x.setdefault(tuple(e[n:]), {})[tuple(e[:n])] = c
    cctx = const_vars(g)
    coeffs: list[SparsePoly | None] = [None] * len(basis)
    residual: dict[tuple[int, ...], object] = {}
    for xe, cterms in by_x.items():
        j = owner.get(xe)
        poly = SparsePoly(cctx, cterms)
        if j is None:
            for ce, c in cterms.items():
                residual[ce + xe] = c
            continue
        if coeffs[j] is None:
            coeffs[j] = poly
    out = [c if c is not None else SparsePoly.zero(cctx) for c in coeffs]
    # every monomial of Q_j must carry exactly s_j
    for j, q in enumerate(basis):
        for xe in q.terms:
            have = SparsePoly(cctx, by_x.get(xe, {}))
            if have != out[j]:
                for ce, c in (have - out[j]).terms.items():
                    residual[ce + xe] = c
    if residual:
        raise NotInQuarticSpan(SparsePoly(f8.poly.ctx, residual))
    return out


def assemble_quartic(coeffs: Sequence[SparsePoly], g: int) -> AssembledPoly:
    ctx = mixed_vars(g)
    n = 1 << g
    const_embed = list(range(n))
    x_embed = list(range(n, 2 * n))
    total = SparsePoly.zero(ctx)
    for s, q in zip(coeffs, quartic_basis(g)):
        total = total + s.reindex(ctx, const_embed) * q.reindex(ctx, x_embed)
    return AssembledPoly(total, ArgScale.FULL)


def fj_pipeline(p: SplitPoly) -> list[SparsePoly]:
    """``split_parts -> f8_term -> extract_quartic_coeffs``.

    Requires ``H1 = 0`` (a polynomial whose ``Phi`` image vanishes); otherwise
    the coefficient is only meromorphic and :func:`materialize_h1` applies.
    """
    term = f8_term(p)
    if not term.h1_is_zero:
        raise ValueError("H1 is nonzero; materialize it with an explicit denominator first")
    return extract_quartic_coeffs(term.main, p.base_genus)


# --- numerical extraction ----------------------------------------------------


@dataclass(frozen=True)
class FJNumeric:
    coefficients: tuple[CertifiedComplex, ...]
    nodes: int
    radius: float


def _block_matrix(w: complex, tau: PeriodMatrix, z: np.ndarray) -> PeriodMatrix:
    g = tau.genus
    m = np.zeros((g + 1, g + 1), dtype=complex)
    m[0, 0] = w
    m[0, 1:] = z
    m[1:, 0] = z
    m[1:, 1:] = tau.entries
    return PeriodMatrix(m)


def _abs_poly_bound(p: SparsePoly, bound: float) -> float:
    return math.fsum(abs(complex(c)) * bound ** sum(e) for e, c in p.terms.items())


def fj_numeric(p: SplitPoly, tau: PeriodMatrix, z: np.ndarray, max_order: int = 8,
               target_err: float = 1e-9, min_nodes: int = 64, max_nodes: int = 1024,
               gap_r: float = 0.6, gap_rho: float = 0.15) -> FJNumeric:
    """q-coefficients ``0..max_order`` of ``P(Theta[alpha](Z))`` from evaluations.

    Nodes ``q_k = r exp(2 pi i k / N)`` correspond to ``w_k`` with
    ``Im w = t0 + gap_r`` and ``Re w = 8k/N``, where ``t0 = y^t Y^-1 y`` is the
    boundary of ``H_{g+1}`` along the slice.  The discrete Fourier transform
    inverts the Vandermonde system exactly; aliased higher coefficients are
    bounded through ``M(rho) rho**-m (r/rho)**N / (1 - (r/rho)**N)`` with
    ``M(rho)`` a bound for ``|P|`` on the circle ``|q| = rho``.
    """
    g = p.base_genus
    if tau.genus != g:
        raise ValueError("tau has the wrong genus for this split polynomial")
    z = np.asarray(z, dtype=complex)
    y = z.imag
    t0 = float(y @ np.linalg.solve(tau.imag, y))
    if not gap_r > gap_rho > 0:
        raise ValueError("need gap_r > gap_rho > 0")
    r = math.exp(-math.pi * (t0 + gap_r) / 4.0)
    rho = math.exp(-math.pi * (t0 + gap_rho) / 4.0)
    im_rho = np.zeros((g + 1, g + 1))
    im_rho[0, 0] = t0 + gap_rho
    im_rho[0, 1:] = y
    im_rho[1:, 0] = y
    im_rho[1:, 1:] = tau.imag
    theta_max = theta_abs_bound(im_rho, True, 1e-12)
    m_rho = _abs_poly_bound(p.poly, theta_max)
    ratio = r / rho
    n = min_nodes
    while True:
        alias = m_rho * rho ** (-max_order) * ratio**n / (1.0 - ratio**n)
        if alias <= target_err / 10 or n >= max_nodes:
            break
        n *= 2
    if alias > target_err:
        raise PrecisionError(f"aliasing bound {alias:.3g} exceeds target_err={target_err:.3g} with {n} nodes")
    im_w = t0 + gap_r
    vals = []
    theta_target = 1e-14
    for k in range(n):
        w = 8.0 * k / n + 1j * im_w
        Z = _block_matrix(w, tau, z)
        table = second_order_table(EvalPoint(Z, np.zeros(g + 1)), theta_target)
        vals.append(evaluate_certified(p.poly, list(table.values), list(table.errs)))
    coeffs = []
    for m in range(max_order + 1):
        acc = []
        for k, v in enumerate(vals):
            # q_k**-m = r**-m exp(-2 pi i k m / N); the phase is exact up to rounding
            phase = complex(np.exp(-2j * math.pi * ((k * m) % n) / n))
            acc.append(v * CertifiedComplex(phase, 4.0 * 2.0**-53))
        c = csum(acc) * (r ** (-m) / n)
        tail = m_rho * rho ** (-m) * ratio**n / (1.0 - ratio**n)
        coeffs.append(CertifiedComplex(c.value, c.err + tail))
    worst = max(c.err for c in coeffs)
    if worst > target_err:
        raise PrecisionError(f"q-coefficient error {worst:.3g} exceeds target_err={target_err:.3g}")
    return FJNumeric(tuple(coeffs), n, r)
