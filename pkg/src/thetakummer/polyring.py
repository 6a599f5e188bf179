"""Exact sparse polynomials over Q and Q(i).

A :class:`SparsePoly` lives in a *context*: a tuple of :class:`VarIndex`
naming its variables in order.  Terms map exponent tuples to exact
coefficients (``int``, :class:`fractions.Fraction` or
:class:`GaussianRational`); zero coefficients are never stored.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .charspace import Characteristic, str_to_word, word_to_str

_BITS = 8
_MASK = (1 << _BITS) - 1
MAX_DEGREE = _MASK


class ContextMismatch(ValueError):
    pass


class NotHomogeneous(ValueError):
    pass


# --- coefficients ------------------------------------------------------------


class GaussianRational:
    """``re + im*i`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0) -> None:
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _parts(x) -> tuple[Fraction, Fraction]:
        if isinstance(x, GaussianRational):
            return x.re, x.im
        if isinstance(x, (int, Fraction)):
            return Fraction(x), Fraction(0)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        return normalize(GaussianRational(self.re + p[0], self.im + p[1]))

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        return normalize(GaussianRational(self.re - p[0], self.im - p[1]))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        a, b = p
        return normalize(GaussianRational(self.re * a - self.im * b, self.re * b + self.im * a))

    __rmul__ = __mul__

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def norm(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __truediv__(self, other):
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        a, b = p
        n = a * a + b * b
        if n == 0:
            raise ZeroDivisionError("division by zero")
        return normalize(GaussianRational((self.re * a + self.im * b) / n, (self.im * a - self.re * b) / n))

    def __rtruediv__(self, other):
        return GaussianRational(*self._parts(other)) / self

    def __pow__(self, k: int):
        out = GaussianRational(1)
        base = self
        while k:
            if k & 1:
                out = GaussianRational(*GaussianRational._parts(out * base))
            base = GaussianRational(*GaussianRational._parts(base * base))
            k >>= 1
        return normalize(out)

    def __eq__(self, other) -> bool:
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        return self.re == p[0] and self.im == p[1]

    def __hash__(self) -> int:
        return hash((self.re, self.im)) if self.im else hash(self.re)

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"GaussianRational({self.re}, {self.im})"


I = GaussianRational(0, 1)


def normalize(c):
    """Canonical exact representative: ints stay ints, real Gaussians collapse."""
    if isinstance(c, GaussianRational):
        if c.im == 0:
            c = c.re
        else:
            return c
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    if isinstance(c, (int, Fraction)):
        return c
    raise TypeError(f"unsupported coefficient {c!r}")


def _abs_float(c) -> float:
    if isinstance(c, GaussianRational):
        return abs(complex(c))
    return abs(float(c))


def format_coefficient(c) -> str:
    c = normalize(c)
    if isinstance(c, GaussianRational):
        return f"{_frac_str(c.re)}{'+' if c.im >= 0 else '-'}{_frac_str(abs(c.im))}i"
    return _frac_str(Fraction(c))


def _frac_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


_COEF_RE = re.compile(r"^([+-]?\d+/\d+)(?:([+-])(\d+/\d+)i)?$")


def parse_coefficient(text: str):
    m = _COEF_RE.match(text)
    if not m:
        raise ValueError(f"malformed coefficient {text!r}")
    re_part = Fraction(m.group(1))
    if m.group(2) is None:
        return normalize(re_part)
    im_part = Fraction(m.group(3)) * (-1 if m.group(2) == "-" else 1)
    return normalize(GaussianRational(re_part, im_part))


# --- variables ---------------------------------------------------------------


class Family(IntEnum):
    FIRST_ORDER = 0  # theta[0, delta](tau) and other first order constants
    SECOND_CONST = 1  # Theta[eps](tau)
    SECOND_FUNC = 2  # x_eps = Theta[eps](tau, z)
    SPLIT = 3  # X_{b eps} = Theta[b eps](Z), Z of genus g + 1


_PREFIX = {Family.FIRST_ORDER: "t", Family.SECOND_CONST: "T", Family.SECOND_FUNC: "x", Family.SPLIT: "X"}
_NAME_RE = re.compile(r"^([tTxX])\[([01]+)(?:,([01]+))?\]$")


@dataclass(frozen=True, order=True)
class VarIndex:
    """A polynomial variable tied to a characteristic.

    ``index`` is the word of the half characteristic, or ``Characteristic.index``
    for the first order family.  For ``SPLIT`` the word has ``genus`` bits and
    bit 0 is the leading entry ``b``.
    """

    family: Family
    genus: int
    index: int

    @property
    def name(self) -> str:
        p = _PREFIX[self.family]
        if self.family is Family.FIRST_ORDER:
            g = self.genus
            return f"{p}[{word_to_str(self.index >> g, g)},{word_to_str(self.index & ((1 << g) - 1), g)}]"
        return f"{p}[{word_to_str(self.index, self.genus)}]"

    @classmethod
    def parse(cls, name: str) -> "VarIndex":
        m = _NAME_RE.match(name)
        if not m:
            raise ValueError(f"malformed variable name {name!r}")
        fam = {v: k for k, v in _PREFIX.items()}[m.group(1)]
        a = m.group(2)
        if fam is Family.FIRST_ORDER:
            if m.group(3) is None or len(m.group(3)) != len(a):
                raise ValueError(f"first order variable needs [eps,delta]: {name!r}")
            return cls(fam, len(a), Characteristic.from_str(a, m.group(3)).index)
        if m.group(3) is not None:
            raise ValueError(f"unexpected delta in {name!r}")
        return cls(fam, len(a), str_to_word(a))

    def __str__(self) -> str:
        return self.name


Context = tuple[VarIndex, ...]


def const_vars(g: int) -> Context:
    return tuple(VarIndex(Family.SECOND_CONST, g, e) for e in range(1 << g))


def func_vars(g: int) -> Context:
    return tuple(VarIndex(Family.SECOND_FUNC, g, e) for e in range(1 << g))


def split_vars(g: int) -> Context:
    """The ``2**(g+1)`` variables Theta[b eps](Z) for a genus ``g + 1`` matrix."""
    return tuple(VarIndex(Family.SPLIT, g + 1, a) for a in range(1 << (g + 1)))


def first_order_vars(chars: Iterable[Characteristic]) -> Context:
    return tuple(VarIndex(Family.FIRST_ORDER, m.genus, m.index) for m in chars)


# --- packing -----------------------------------------------------------------


def _pack(exps: Sequence[int]) -> int:
    k = 0
    for i, e in enumerate(exps):
        k |= e << (_BITS * i)
    return k


def _unpack(k: int, n: int) -> tuple[int, ...]:
    return tuple((k >> (_BITS * i)) & _MASK for i in range(n))


def _key(exps: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    return (sum(exps), exps)


# --- polynomials -------------------------------------------------------------


class SparsePoly:
    """Immutable sparse polynomial over an explicit variable context."""

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: Sequence[VarIndex], terms: Mapping[tuple[int, ...], object] | None = None) -> None:
        self.ctx: Context = tuple(ctx)
        n = len(self.ctx)
        clean: dict[tuple[int, ...], object] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != n:
                raise ValueError(f"exponent vector {e} does not match {n} variables")
            if any(x < 0 for x in e):
                raise ValueError("negative exponent")
            c = normalize(c)
            if c:
                clean[e] = c
        self.terms = clean
        self._hash = None

    # construction
    @classmethod
    def _raw(cls, ctx: Context, terms: dict) -> "SparsePoly":
        p = object.__new__(cls)
        p.ctx = ctx
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, ctx: Sequence[VarIndex]) -> "SparsePoly":
        return cls(ctx)

    @classmethod
    def constant(cls, ctx: Sequence[VarIndex], c) -> "SparsePoly":
        return cls(ctx, {(0,) * len(ctx): c})

    @classmethod
    def var(cls, ctx: Sequence[VarIndex], v: VarIndex | int, power: int = 1) -> "SparsePoly":
        ctx = tuple(ctx)
        i = v if isinstance(v, int) else ctx.index(v)
        e = [0] * len(ctx)
        e[i] = power
        return cls(ctx, {tuple(e): 1})

    @classmethod
    def monomial(cls, ctx: Sequence[VarIndex], exps: Sequence[int], c=1) -> "SparsePoly":
        return cls(ctx, {tuple(exps): c})

    # basic queries
    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def nvars(self) -> int:
        return len(self.ctx)

    def degrees(self) -> set[int]:
        return {sum(e) for e in self.terms}

    def degree(self) -> int:
        return max(self.degrees(), default=-1)

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def require_homogeneous(self) -> int:
        d = self.degrees()
        if len(d) > 1:
            raise NotHomogeneous(f"mixed degrees {sorted(d)}")
        return d.pop() if d else 0

    def coefficient(self, exps: Sequence[int]):
        return self.terms.get(tuple(exps), 0)

    def sorted_terms(self) -> list[tuple[tuple[int, ...], object]]:
        """Terms in graded lexicographic order, largest first."""
        return sorted(self.terms.items(), key=lambda t: _key(t[0]), reverse=True)

    def __iter__(self) -> Iterator[tuple[tuple[int, ...], object]]:
        return iter(self.sorted_terms())

    def _check(self, other: "SparsePoly") -> None:
        if self.ctx != other.ctx:
            raise ContextMismatch("polynomials live in different variable contexts")

    def __eq__(self, other) -> bool:
        if isinstance(other, SparsePoly):
            return self.ctx == other.ctx and self.terms == other.terms
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self == SparsePoly.constant(self.ctx, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ctx, frozenset(self.terms.items())))
        return self._hash

    # arithmetic
    def _lift(self, other) -> "SparsePoly":
        if isinstance(other, SparsePoly):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction, GaussianRational)):
            return SparsePoly.constant(self.ctx, other)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other) -> "SparsePoly":
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        out = dict(self.terms)
        for e, c in o.terms.items():
            s = normalize(out.get(e, 0) + c)
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return SparsePoly._raw(self.ctx, out)

    __radd__ = __add__

    def __neg__(self) -> "SparsePoly":
        return SparsePoly._raw(self.ctx, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "SparsePoly":
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other) -> "SparsePoly":
        return (-self) + other

    def scale(self, c) -> "SparsePoly":
        c = normalize(c)
        if not c:
            return SparsePoly.zero(self.ctx)
        return SparsePoly._raw(self.ctx, {e: normalize(v * c) for e, v in self.terms.items()})

    def __mul__(self, other) -> "SparsePoly":
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return multiply(self, o)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "SparsePoly":
        if isinstance(c, (int, Fraction)):
            return self.scale(Fraction(1) / Fraction(c))
        if isinstance(c, GaussianRational):
            return self.scale(1 / c)
        return NotImplemented

    def __pow__(self, k: int) -> "SparsePoly":
        if k < 0:
            raise ValueError("negative power")
        out = SparsePoly.constant(self.ctx, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    # transformations
    def map_coefficients(self, fn: Callable) -> "SparsePoly":
        return SparsePoly(self.ctx, {e: fn(c) for e, c in self.terms.items()})

    def reindex(self, ctx: Sequence[VarIndex], mapping: Sequence[int]) -> "SparsePoly":
        """Move variable ``i`` of this context to position ``mapping[i]`` of ``ctx``.

        Several variables may map to the same target (their exponents add).
        """
        ctx = tuple(ctx)
        if len(mapping) != self.nvars:
            raise ValueError("mapping length must equal the number of variables")
        out: dict[tuple[int, ...], object] = {}
        n = len(ctx)
        for e, c in self.terms.items():
            new = [0] * n
            for i, k in enumerate(e):
                if k:
                    new[mapping[i]] += k
            t = tuple(new)
            s = normalize(out.get(t, 0) + c)
            if s:
                out[t] = s
            else:
                out.pop(t, None)
        return SparsePoly._raw(ctx, out)

    def embed(self, ctx: Sequence[VarIndex]) -> "SparsePoly":
        """The same polynomial in a context containing all current variables."""
        ctx = tuple(ctx)
        pos = {v: i for i, v in enumerate(ctx)}
        try:
            mapping = [pos[v] for v in self.ctx]
        except KeyError as exc:
            raise ContextMismatch(f"variable {exc.args[0]} missing from target context") from None
        return self.reindex(ctx, mapping)

    def content(self) -> Fraction:
        """Positive rational ``c`` with ``self / c`` primitive integral (real coefficients)."""
        if not self.terms:
            return Fraction(0)
        nums, dens = [], []
        for c in self.terms.values():
            if isinstance(c, GaussianRational):
                raise TypeError("content is defined for rational polynomials only")
            f = Fraction(c)
            nums.append(f.numerator)
            dens.append(f.denominator)
        return Fraction(math.gcd(*nums), math.lcm(*dens))

    # evaluation
    def evaluate(self, values: Sequence):
        """Exact (or floating) evaluation; ``values`` is indexed like the context."""
        total = 0
        for e, c in self.terms.items():
            t = c
            for x, k in zip(values, e):
                if k:
                    t = t * x**k
            total = total + t
        return normalize(total) if isinstance(total, (int, Fraction, GaussianRational)) else total

    def exponent_matrix(self) -> tuple[np.ndarray, list]:
        items = self.sorted_terms()
        e = np.array([t[0] for t in items], dtype=np.int64).reshape(len(items), self.nvars)
        return e, [t[1] for t in items]

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms()[:12]:
            mono = "*".join(
                f"{v.name}^{k}" if k > 1 else v.name for v, k in zip(self.ctx, e) if k
            )
            parts.append(f"({format_coefficient(c)}){'*' + mono if mono else ''}")
        more = f" + ... ({len(self.terms)} terms)" if len(self.terms) > 12 else ""
        return " + ".join(parts) + more

    # text format
    def to_text(self, headers: Mapping[str, str] | None = None) -> str:
        """Canonical text: optional ``key value`` headers, a ``vars`` line, then
        one ``NUM/DEN e1 ... ek`` line per term in graded lexicographic order."""
        lines = [f"{k} {v}" for k, v in (headers or {}).items()]
        lines.append("vars " + " ".join(v.name for v in self.ctx))
        for e, c in self.sorted_terms():
            lines.append(" ".join([format_coefficient(c), *map(str, e)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> tuple["SparsePoly", dict[str, str]]:
        headers: dict[str, str] = {}
        ctx: Context | None = None
        terms: dict[tuple[int, ...], object] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if ctx is None:
                if fields[0] == "vars":
                    try:
                        ctx = tuple(VarIndex.parse(f) for f in fields[1:])
                    except ValueError as exc:
                        raise ValueError(f"line {lineno}: {exc}") from None
                else:
                    headers[fields[0]] = " ".join(fields[1:])
                continue
            if len(fields) != len(ctx) + 1:
                raise ValueError(f"line {lineno}: expected {len(ctx) + 1} fields, got {len(fields)}")
            try:
                c = parse_coefficient(fields[0])
                e = tuple(int(x) for x in fields[1:])
            except ValueError as exc:
                raise ValueError(f"line {lineno}, column 1: {exc}") from None
            if e in terms:
                raise ValueError(f"line {lineno}: duplicate monomial")
            terms[e] = c
        if ctx is None:
            raise ValueError("missing 'vars' header line")
        return cls(ctx, terms), headers


def multiply(a: SparsePoly, b: SparsePoly) -> SparsePoly:
    """Exact product via packed exponent keys."""
    a._check(b)
    if not a.terms or not b.terms:
        return SparsePoly.zero(a.ctx)
    if a.degree() + b.degree() > MAX_DEGREE:
        raise OverflowError(f"total degree exceeds {MAX_DEGREE}")
    if len(a.terms) < len(b.terms):
        a, b = b, a
    pa = [(_pack(e), c) for e, c in a.terms.items()]
    pb = [(_pack(e), c) for e, c in b.terms.items()]
    acc: dict[int, object] = {}
    get = acc.get
    for kb, cb in pb:
        for ka, ca in pa:
            k = ka + kb
            acc[k] = get(k, 0) + ca * cb
    n = a.nvars
    out = {}
    for k, c in acc.items():
        c = normalize(c)
        if c:
            out[_unpack(k, n)] = c
    return SparsePoly._raw(a.ctx, out)


def poly_sum(polys: Iterable[SparsePoly], ctx: Sequence[VarIndex] | None = None) -> SparsePoly:
    acc: dict[tuple[int, ...], object] = {}
    the_ctx = tuple(ctx) if ctx is not None else None
    for p in polys:
        if the_ctx is None:
            the_ctx = p.ctx
        elif p.ctx != the_ctx:
            raise ContextMismatch("polynomials live in different variable contexts")
        for e, c in p.terms.items():
            acc[e] = acc.get(e, 0) + c
    if the_ctx is None:
        raise ValueError("empty sum needs an explicit context")
    return SparsePoly(the_ctx, acc)


def linear_form(ctx: Sequence[VarIndex], coeffs: Sequence) -> SparsePoly:
    n = len(ctx)
    terms = {}
    for i, c in enumerate(coeffs):
        if c:
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = c
    return SparsePoly(ctx, terms)


def substitute_linear(p: SparsePoly, m: Sequence[Sequence]) -> SparsePoly:
    """Replace variable ``j`` by the linear form ``sum_i m[i][j] x_i``.

    With this convention ``substitute_linear(substitute_linear(p, A), B)``
    equals ``substitute_linear(p, B @ A)``.
    """
    n = p.nvars
    if len(m) != n or any(len(row) != n for row in m):
        raise ValueError(f"matrix must be {n} x {n}")
    cols = [[normalize(m[i][j]) for i in range(n)] for j in range(n)]
    # monomial fast path: each column has one nonzero entry
    if all(sum(1 for c in col if c) == 1 for col in cols):
        out: dict[tuple[int, ...], object] = {}
        target = [next(i for i, c in enumerate(col) if c) for col in cols]
        scal = [col[target[j]] for j, col in enumerate(cols)]
        for e, c in p.terms.items():
            new = [0] * n
            coef = c
            for j, k in enumerate(e):
                if k:
                    new[target[j]] += k
                    coef = coef * scal[j] ** k
            t = tuple(new)
            s = normalize(out.get(t, 0) + coef)
            if s:
                out[t] = s
            else:
                out.pop(t, None)
        return SparsePoly._raw(p.ctx, out)
    blocks = _blocks(cols)
    var_block = {}
    for b, (outs, ins) in enumerate(blocks):
        for pos, j in enumerate(ins):
            var_block[j] = (b, pos)
    # expansion of a block monomial, as packed-key dict over the full context
    memo: list[dict] = [dict() for _ in blocks]
    forms = [
        [( _pack([1 if k == i else 0 for k in range(n)]), c) for i, c in enumerate(col) if c]
        for col in cols
    ]

    def expand(b: int, sub: tuple[int, ...]) -> dict:
        hit = memo[b].get(sub)
        if hit is not None:
            return hit
        ins = blocks[b][1]
        # peel one factor and recurse on the smaller exponent
        k = next(i for i, e in enumerate(sub) if e)
        smaller = list(sub)
        smaller[k] -= 1
        base = expand(b, tuple(smaller)) if any(smaller) else {0: 1}
        acc: dict[int, object] = {}
        for kb, cb in base.items():
            for kf, cf in forms[ins[k]]:
                key = kb + kf
                acc[key] = acc.get(key, 0) + cb * cf
        acc = {key: c for key, c in acc.items() if c}
        memo[b][sub] = acc
        return acc

    total: dict[int, object] = {}
    for e, c in p.terms.items():
        parts = [{0: c}]
        for b, (_, ins) in enumerate(blocks):
            sub = tuple(e[j] for j in ins)
            if any(sub):
                parts.append(expand(b, sub))
        cur = parts[0]
        for part in parts[1:]:
            nxt: dict[int, object] = {}
            for k1, c1 in cur.items():
                for k2, c2 in part.items():
                    k = k1 + k2
                    nxt[k] = nxt.get(k, 0) + c1 * c2
            cur = nxt
        for k, v in cur.items():
            total[k] = total.get(k, 0) + v
    out = {}
    for k, v in total.items():
        v = normalize(v)
        if v:
            out[_unpack(k, n)] = v
    return SparsePoly._raw(p.ctx, out)


def _blocks(cols: list[list]) -> list[tuple[list[int], list[int]]]:
    """Split a substitution into independent blocks.

    Returns ``(output variables, input variables)`` pairs such that the input
    variables of a block only map to linear forms in its output variables.
    """
    n = len(cols)
    parent = list(range(2 * n))  # 0..n-1 inputs, n..2n-1 outputs

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for j, col in enumerate(cols):
        for i, c in enumerate(col):
            if c:
                parent[find(j)] = find(n + i)
    groups: dict[int, tuple[list[int], list[int]]] = {}
    for j in range(n):
        groups.setdefault(find(j), ([], []))[1].append(j)
    for i in range(n):
        groups.setdefault(find(n + i), ([], []))[0].append(i)
    return [grp for grp in groups.values() if grp[1]]


def partial_derivative(p: SparsePoly, v: VarIndex | int) -> SparsePoly:
    if isinstance(v, int):
        i = v
        if not 0 <= i < p.nvars:
            raise ValueError(f"variable position {i} out of range")
    else:
        try:
            i = p.ctx.index(v)
        except ValueError:
            raise ValueError(f"unknown variable {v}") from None
    out = {}
    for e, c in p.terms.items():
        k = e[i]
        if k:
            new = list(e)
            new[i] = k - 1
            out[tuple(new)] = normalize(c * k)
    return SparsePoly._raw(p.ctx, out)


# --- certified numerical evaluation -----------------------------------------

_U = 2.0**-53


def evaluate_certified(p: SparsePoly, values: Sequence[complex], errs: Sequence[float]):
    """Evaluate at floating point data carrying error radii.

    Returns ``(value, err)``; ``err`` covers the propagated input radii and the
    floating point work of the evaluation itself.
    """
    from .numtheta import CertifiedComplex

    x = np.asarray(values, dtype=complex)
    r = np.asarray(errs, dtype=float)
    if x.shape != (p.nvars,) or r.shape != (p.nvars,):
        raise ValueError("values and errs must match the polynomial context")
    if not p.terms:
        return CertifiedComplex(0j, 0.0)
    e, coeffs = p.exponent_matrix()
    c = np.array([complex(v) if isinstance(v, GaussianRational) else float(v) for v in coeffs], dtype=complex)
    cabs = np.abs(c)
    dmax = int(e.max()) if e.size else 0
    ks = np.arange(dmax + 1)
    xp = x[:, None] ** ks[None, :]
    ap = np.abs(x)[:, None] ** ks[None, :]
    bp = (np.abs(x) + r)[:, None] ** ks[None, :]
    idx = np.arange(p.nvars)
    mono = np.prod(xp[idx, e], axis=1) if p.nvars else np.ones(len(c))
    amono = np.prod(ap[idx, e], axis=1) if p.nvars else np.ones(len(c))
    bmono = np.prod(bp[idx, e], axis=1) if p.nvars else np.ones(len(c))
    terms = c * mono
    value = complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))
    deg = int(e.sum(axis=1).max()) if e.size else 0
    propagated = math.fsum((cabs * (bmono - amono)).tolist())
    gamma = 2.0 * _U * (deg + 8)
    rounding = gamma * math.fsum((cabs * bmono).tolist()) + 4.0 * _U * abs(value)
    return CertifiedComplex(value, propagated + rounding)


# --- exact linear algebra ----------------------------------------------------


@dataclass
class SpanResult:
    """Outcome of :func:`span_membership`.

    ``coefficients`` is ``None`` when the target is certified to lie outside the
    span; ``residual`` is then the nonzero remainder after elimination.
    ``basis`` lists the generator indices that were independent, in order.
    """

    coefficients: list[Fraction] | None
    residual: SparsePoly
    basis: list[int]

    @property
    def in_span(self) -> bool:
        return self.coefficients is not None


def _integral_vector(p: SparsePoly) -> tuple[dict[tuple[int, ...], int], int]:
    """Scale ``p`` to integer coefficients; returns (vector, denominator)."""
    den = 1
    for c in p.terms.values():
        if isinstance(c, GaussianRational):
            raise TypeError("span membership is implemented over Q")
        if isinstance(c, Fraction):
            den = math.lcm(den, c.denominator)
    return {e: int(c * den) for e, c in p.terms.items()}, den


def _gcd_all(*groups: Iterable[int]) -> int:
    g = 0
    for grp in groups:
        for x in grp:
            g = math.gcd(g, x)
            if g == 1:
                return 1
    return g


def _axpy(a: int, x: dict, b: int, y: dict) -> dict:
    """``a*x - b*y`` for sparse integer vectors."""
    out = {k: a * v for k, v in x.items()} if a != 1 else dict(x)
    for k, v in y.items():
        s = out.get(k, 0) - b * v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def span_membership(target: SparsePoly, gens: Sequence[SparsePoly]) -> SpanResult:
    """Exact coefficients ``c`` with ``target = sum c_i gens_i``, or a certificate
    that none exist.

    Fraction-free elimination over integer-scaled vectors indexed by monomial.
    Every generator is reduced against the pivots found so far; its pivot is
    the monomial with the largest coefficient support among its terms
    (ties broken by graded lexicographic order) so that later reductions touch
    as few entries as possible.
    """
    ctx = target.ctx
    for gpoly in gens:
        if gpoly.ctx != ctx:
            raise ContextMismatch("generators and target live in different contexts")
    degs = set()
    for poly in [target, *gens]:
        if poly.terms:
            degs.add(poly.require_homogeneous())
    if len(degs) > 1:
        raise NotHomogeneous(f"mixed degrees among target and generators: {sorted(degs)}")

    m = len(gens)
    support: dict[tuple[int, ...], int] = {}
    vecs = []
    dens = []
    for gpoly in gens:
        v, d = _integral_vector(gpoly)
        vecs.append(v)
        dens.append(d)
        for k in v:
            support[k] = support.get(k, 0) + 1

    # basis element (pivot, vec, combo) with vec = sum combo_j * (dens_j gens_j)
    basis: list[tuple[tuple[int, ...], dict, list[int]]] = []
    independent: list[int] = []

    def reduce(vec: dict, combo: list[int], scale: int) -> tuple[dict, list[int], int]:
        for piv, bvec, bcombo in basis:
            r = vec.get(piv)
            if r:
                p = bvec[piv]
                g = math.gcd(p, r)
                pa, rb = p // g, r // g
                vec = _axpy(pa, vec, rb, bvec)
                combo = [pa * c - rb * bc for c, bc in zip(combo, bcombo)]
                scale *= pa
                cg = _gcd_all(vec.values(), combo, (scale,))
                if cg > 1:
                    vec = {k: v // cg for k, v in vec.items()}
                    combo = [c // cg for c in combo]
                    scale //= cg
        return vec, combo, scale

    for i, v in enumerate(vecs):
        combo = [0] * m
        combo[i] = 1
        vec, combo, _ = reduce(v, combo, 1)
        if vec:
            piv = max(vec, key=lambda k: (support.get(k, 0), _key(k)))
            basis.append((piv, vec, combo))
            independent.append(i)

    tvec, tden = _integral_vector(target)
    # invariant: vec = scale * tvec + sum combo_j * (dens_j gens_j)
    vec, combo, scale = reduce(tvec, [0] * m, 1)
    if vec:
        residual = SparsePoly(ctx, {k: Fraction(v, scale * tden) for k, v in vec.items()})
        return SpanResult(None, residual, independent)
    coeffs = [Fraction(-c * dens[j], scale * tden) for j, c in enumerate(combo)]
    return SpanResult(coeffs, SparsePoly.zero(ctx), independent)


def divide_exact(numerator: SparsePoly, divisor: SparsePoly) -> tuple[SparsePoly, SparsePoly]:
    """Multivariate division by leading terms in graded lexicographic order.

    Returns ``(quotient, remainder)``; the division is exact iff the remainder
    is zero.
    """
    numerator._check(divisor)
    if divisor.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    lead_e, lead_c = divisor.sorted_terms()[0]
    rest = dict(numerator.terms)
    quotient: dict[tuple[int, ...], object] = {}
    remainder: dict[tuple[int, ...], object] = {}
    dterms = list(divisor.terms.items())
    while rest:
        e = max(rest, key=_key)
        c = rest[e]
        if all(a >= b for a, b in zip(e, lead_e)):
            qe = tuple(a - b for a, b in zip(e, lead_e))
            qc = normalize(Fraction(1) * c / lead_c) if not isinstance(lead_c, GaussianRational) else normalize(c / lead_c)
            quotient[qe] = normalize(quotient.get(qe, 0) + qc)
            for de, dc in dterms:
                t = tuple(a + b for a, b in zip(qe, de))
                s = normalize(rest.get(t, 0) - qc * dc)
                if s:
                    rest[t] = s
                else:
                    rest.pop(t, None)
        else:
            remainder[e] = c
            del rest[e]
    return SparsePoly(numerator.ctx, quotient), SparsePoly(numerator.ctx, remainder)
