"""Binary codes, their complete weight enumerators and Construction A lattices.

A codeword is a machine word with bit ``j`` holding column ``j``.  The
genus ``g`` enumerator has one variable per column pattern ``a`` in F_2^g,
where bit ``i`` of ``a`` is the entry of the ``i``-th codeword of the tuple.

Lattice theta series use ``theta_L(Z) = sum exp(pi i tr(Gram(l_1..l_g) Z))``
over g-tuples of lattice vectors, so that ``theta_L(Z)`` equals the
enumerator evaluated at ``Theta[a](Z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .charspace import popcount, rank_f2
from .numtheta import CertifiedComplex, EvalPoint, PeriodMatrix, PrecisionError, second_order_table
from .polyring import SparsePoly, const_vars, evaluate_certified, substitute_linear

DEFAULT_WORK_BUDGET = 2**32
_U = 2.0**-53


class WorkBudgetExceeded(RuntimeError):
    pass


class CodeFormatError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


# --- codes -------------------------------------------------------------------


@dataclass(frozen=True)
class BinaryCode:
    n: int
    k: int
    rows: tuple[int, ...]
    name: str = "code"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("length must be positive")
        if len(self.rows) != self.k:
            raise ValueError(f"expected {self.k} generator rows, got {len(self.rows)}")
        for r in self.rows:
            if r < 0 or r >> self.n:
                raise ValueError("generator row longer than the code length")
        if rank_f2(self.rows) != self.k:
            raise ValueError("generator matrix is rank deficient over F_2")

    @classmethod
    def from_strings(cls, rows: Sequence[str], name: str = "code") -> "BinaryCode":
        if not rows:
            raise ValueError("need at least one row (use zero_code for the zero code)")
        n = len(rows[0])
        words = []
        for r in rows:
            if len(r) != n:
                raise ValueError("rows have different lengths")
            words.append(sum(1 << j for j, ch in enumerate(r) if ch == "1"))
        return cls(n, len(rows), tuple(words), name)

    def row_strings(self) -> list[str]:
        return ["".join("1" if (r >> j) & 1 else "0" for j in range(self.n)) for r in self.rows]

    def codewords(self) -> np.ndarray:
        """All ``2**k`` codewords as words, index bits select generators."""
        words = np.zeros(1 << self.k, dtype=np.int64)
        for i, r in enumerate(self.rows):
            size = 1 << i
            words[size : 2 * size] = words[:size] ^ r
        return words

    def codeword_bits(self) -> np.ndarray:
        w = self.codewords()
        return ((w[:, None] >> np.arange(self.n)[None, :]) & 1).astype(np.int64)

    def direct_sum(self, other: "BinaryCode", name: str | None = None) -> "BinaryCode":
        rows = self.rows + tuple(r << self.n for r in other.rows)
        return BinaryCode(self.n + other.n, self.k + other.k, rows, name or f"{self.name}+{other.name}")


def zero_code(n: int, name: str = "zero") -> BinaryCode:
    return BinaryCode(n, 0, (), name)


@dataclass(frozen=True)
class Validation:
    ok: bool
    reason: str = ""
    witness: tuple[str, ...] = field(default_factory=tuple)

    def __bool__(self) -> bool:
        return self.ok


def validate_type2(code: BinaryCode) -> Validation:
    """Self-dual and doubly even, with a witness on failure.

    Checking the generators suffices: pairwise even overlaps give
    self-orthogonality, and then ``wt(a+b) = wt(a) + wt(b) - 2|a & b|`` keeps
    weights divisible by four.
    """

    def fmt(w: int) -> str:
        return "".join("1" if (w >> j) & 1 else "0" for j in range(code.n))

    rows = code.rows
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            if popcount(rows[i] & rows[j]) & 1:
                return Validation(False, "self-orthogonal", (fmt(rows[i]), fmt(rows[j])))
    for r in rows:
        if popcount(r) % 2:
            return Validation(False, "self-orthogonal", (fmt(r), fmt(r)))
    if code.n != 2 * code.k:
        return Validation(False, "self-dual", (f"n={code.n}", f"k={code.k}"))
    for r in rows:
        if popcount(r) % 4:
            return Validation(False, "doubly-even", (fmt(r),))
    return Validation(True)


# --- weight enumerators ------------------------------------------------------


@dataclass(frozen=True)
class WeightEnumerator:
    genus: int
    poly: SparsePoly
    code_name: str = ""

    def total(self) -> int:
        return self.poly.evaluate([1] * len(self.poly.ctx))


def _check_budget(work: int, budget: int) -> None:
    if work > budget:
        raise WorkBudgetExceeded(f"{work} codeword tuples exceed the work budget {budget}")


def weight_enumerator(code: BinaryCode, g: int, work_budget: int = DEFAULT_WORK_BUDGET,
                      chunk: int = 1 << 20) -> WeightEnumerator:
    """Complete genus ``g`` weight enumerator, exact.

    Codeword tuples are swept in vectorized blocks: the last component runs
    over the full code while the leading components are chunked.  Each tuple
    contributes ``sum_j B**pattern_j`` with ``B = n + 1``, which encodes its
    pattern counts in base ``B``; counting distinct keys gives the monomials.
    """
    if g < 1:
        raise ValueError("genus must be positive")
    n, k = code.n, code.k
    _check_budget(1 << (k * g), work_budget)
    nvars = 1 << g
    ctx = const_vars(g)
    base = n + 1
    if k == 0:
        e = [0] * nvars
        e[0] = n
        return WeightEnumerator(g, SparsePoly(ctx, {tuple(e): 1}), code.name)
    bits = code.codeword_bits()  # (2**k, n)
    fits = nvars * math.log2(base) < 62
    counts: dict = {}
    lead = 1 << (k * (g - 1))
    per = max(1, chunk // (1 << k))
    powers = base ** np.arange(nvars, dtype=np.int64) if fits else None
    for start in range(0, lead, per):
        idx = np.arange(start, min(lead, start + per), dtype=np.int64)
        partial = np.zeros((len(idx), n), dtype=np.int64)
        for i in range(g - 1):
            comp = (idx >> (k * i)) & ((1 << k) - 1)
            partial |= bits[comp] << i
        full = partial[:, None, :] | (bits[None, :, :] << (g - 1))
        full = full.reshape(-1, n)
        if fits:
            keys = powers[full].sum(axis=1)
            uniq, cnt = np.unique(keys, return_counts=True)
            for key, c in zip(uniq.tolist(), cnt.tolist()):
                counts[key] = counts.get(key, 0) + c
        else:
            hist = np.zeros((full.shape[0], nvars), dtype=np.int64)
            rows_i = np.repeat(np.arange(full.shape[0]), n)
            np.add.at(hist, (rows_i, full.ravel()), 1)
            uniq, cnt = np.unique(hist, axis=0, return_counts=True)
            for row, c in zip(map(tuple, uniq.tolist()), cnt.tolist()):
                counts[row] = counts.get(row, 0) + c
    terms = {}
    for key, c in counts.items():
        if fits:
            e = []
            for _ in range(nvars):
                key, r = divmod(key, base)
                e.append(r)
            terms[tuple(e)] = c
        else:
            terms[key] = c
    return WeightEnumerator(g, SparsePoly(ctx, terms), code.name)


def hadamard_matrix(g: int) -> list[list[int]]:
    n = 1 << g
    return [[(-1) ** popcount(a & b) for b in range(n)] for a in range(n)]


def hadamard_stages(g: int) -> list[list[list[int]]]:
    """Factors of :func:`hadamard_matrix`, one 2x2 butterfly per coordinate.

    Their product is the full matrix; substituting stage by stage keeps every
    block of the substitution at two variables.
    """
    n = 1 << g
    out = []
    for i in range(g):
        m = [[0] * n for _ in range(n)]
        for a in range(n):
            for b in (a, a ^ (1 << i)):
                m[a][b] = -1 if (a >> i) & 1 and (b >> i) & 1 else 1
        out.append(m)
    return out


def macwilliams_holds(w: WeightEnumerator, k: int) -> bool:
    """``W(H x) = 2**(k g) W(x)``, the self-duality identity, exactly."""
    transformed = w.poly
    for stage in hadamard_stages(w.genus):
        transformed = substitute_linear(transformed, stage)
    return transformed == w.poly * (2 ** (k * w.genus))


def marginalize(w: WeightEnumerator) -> WeightEnumerator:
    """Identify ``x_a`` with ``x_{a xor top}``, dropping the last tuple slot."""
    if w.genus < 2:
        raise ValueError("need genus at least 2")
    g = w.genus - 1
    mask = (1 << g) - 1
    poly = w.poly.reindex(const_vars(g), [a & mask for a in range(1 << w.genus)])
    return WeightEnumerator(g, poly, w.code_name)


# --- Construction A ----------------------------------------------------------


@dataclass(frozen=True)
class ConstructionALattice:
    """``{x / sqrt 2 : x in Z^n, x mod 2 in C}``."""

    code: BinaryCode
    require_type2: bool = True

    def __post_init__(self) -> None:
        if self.require_type2:
            v = validate_type2(self.code)
            if not v:
                raise ValueError(f"code {self.code.name!r} is not Type II ({v.reason}, witness {v.witness})")


def _column_tail(c: float, radius: float, g: int) -> float:
    """Bound for sum of exp(-c |v|^2) over v in a shifted Z^g with |v| > radius.

    Shell ``k < |v| <= k+1`` holds at most ``(2k+4)**g`` points.
    """
    total = 0.0
    k = max(0, int(math.floor(radius)))
    while True:
        term = (2 * k + 4) ** g * math.exp(-c * k * k)
        total += term
        if term < 1e-30 * max(total, 1e-300) or (k > radius + 5 and term < 1e-300):
            break
        k += 1
    return total


def _column_factors(z: np.ndarray, target: float) -> tuple[np.ndarray, np.ndarray]:
    """``f(a) = sum_m exp(2 pi i (m + a/2)^t Z (m + a/2))`` for every pattern ``a``.

    Plain double precision box sums with their own tail and rounding bound.
    """
    g = z.shape[0]
    y = z.imag
    lam = float(np.linalg.eigvalsh(y).min())
    c = 2.0 * math.pi * lam
    radius = 1.0
    while _column_tail(c, radius, g) > target:
        radius += 0.5
    tail = _column_tail(c, radius, g)
    b = int(math.ceil(radius)) + 1
    grid = np.array(np.meshgrid(*([np.arange(-b, b + 1)] * g), indexing="ij")).reshape(g, -1).T
    vals = np.empty(1 << g, dtype=complex)
    errs = np.empty(1 << g)
    for a in range(1 << g):
        shift = np.array([((a >> i) & 1) / 2.0 for i in range(g)])
        v = grid + shift
        q = np.einsum("ni,ij,nj->n", v, z, v)
        terms = np.exp(2j * math.pi * q)
        vals[a] = complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))
        # exponent rounding grows with |q|; each term is bounded by its modulus
        mods = np.abs(terms)
        rounding = float(np.sum(mods * (8 * _U * (1.0 + 2 * math.pi * np.abs(q))))) + 4 * _U * abs(vals[a])
        errs[a] = tail + rounding
    return vals, errs


def lattice_theta_direct(lattice: ConstructionALattice, z: PeriodMatrix, target_err: float = 1e-10,
                         work_budget: int = DEFAULT_WORK_BUDGET) -> CertifiedComplex:
    """Theta series of the lattice summed over g-tuples of lattice vectors.

    Coordinates of a tuple split into ``n`` rows, and the row ``j`` ranges over
    ``(a_j + 2 Z^g) / sqrt 2`` with ``a_j`` the column pattern of the codeword
    tuple.  The sum is taken tuple by tuple, each row factor by its own box
    sum; no weight enumerator or theta routine is involved.
    """
    code = lattice.code
    g = z.genus
    _check_budget(1 << (code.k * g), work_budget)
    zz = np.asarray(z.entries, dtype=complex)
    per_col = target_err / (8.0 * max(code.n, 1) * max(1, 1 << (code.k * g)))
    f, fe = _column_factors(zz, max(per_col, 1e-300))
    bits = code.codeword_bits()
    fa, fea = np.abs(f), fe
    total = 0j
    prop = 0.0
    absum = 0.0
    lead = 1 << (code.k * (g - 1))
    per = max(1, (1 << 18) // max(1, 1 << code.k))
    for start in range(0, lead, per):
        idx = np.arange(start, min(lead, start + per), dtype=np.int64)
        partial = np.zeros((len(idx), code.n), dtype=np.int64)
        for i in range(g - 1):
            comp = (idx >> (code.k * i)) & ((1 << code.k) - 1)
            partial |= bits[comp] << i
        pat = (partial[:, None, :] | (bits[None, :, :] << (g - 1))).reshape(-1, code.n)
        prods = np.prod(f[pat], axis=1)
        amax = np.prod(fa[pat] + fea[pat], axis=1)
        amin = np.prod(fa[pat], axis=1)
        total += complex(math.fsum(prods.real.tolist()), math.fsum(prods.imag.tolist()))
        prop += math.fsum((amax - amin).tolist())
        absum += math.fsum(amax.tolist())
    rounding = 2.0 * _U * (code.n + 4) * absum + 4.0 * _U * abs(total)
    err = prop + rounding
    if err > target_err:
        raise PrecisionError(f"direct lattice sum radius {err:.3g} exceeds target_err={target_err:.3g}")
    return CertifiedComplex(total, err)


def theta_via_enumerator(w: WeightEnumerator, z: PeriodMatrix, target_err: float = 1e-10) -> CertifiedComplex:
    """``W(Theta[a](Z))`` with propagated error."""
    if w.genus != z.genus:
        raise ValueError(f"enumerator genus {w.genus} does not match period matrix genus {z.genus}")
    theta_target = min(target_err, max(target_err * 1e-4, 1e-14))
    table = second_order_table(EvalPoint(z, np.zeros(z.genus)), theta_target)
    res = evaluate_certified(w.poly, list(table.values), list(table.errs))
    if res.err > target_err:
        raise PrecisionError(f"enumerator evaluation radius {res.err:.3g} exceeds target_err={target_err:.3g}")
    return res


def theta_series_coefficients(lattice: ConstructionALattice, max_sq: int) -> list[int]:
    """Counts of integer vectors ``x`` with ``x mod 2`` in the code by ``|x|^2``.

    Entry ``s`` counts lattice vectors of norm ``s / 2``.  Brute force over
    coordinates, merging partial vectors with equal parity word and length.
    """
    code = lattice.code
    words = set(code.codewords().tolist())
    r = math.isqrt(max_sq)
    state: dict[tuple[int, int], int] = {(0, 0): 1}
    for j in range(code.n):
        nxt: dict[tuple[int, int], int] = {}
        for (word, sq), mult in state.items():
            for x in range(-r, r + 1):
                s = sq + x * x
                if s <= max_sq:
                    key = (word | ((x & 1) << j), s)
                    nxt[key] = nxt.get(key, 0) + mult
        state = nxt
    counts = [0] * (max_sq + 1)
    for (word, sq), mult in state.items():
        if word in words:
            counts[sq] += mult
    return counts


def theta_from_shells(counts: Sequence[int], z: complex) -> complex:
    """Genus one series ``sum_s counts[s] exp(pi i (s/2) z)``, truncated."""
    return complex(sum(c * np.exp(0.5j * math.pi * s * z) for s, c in enumerate(counts)))


# --- bundled data and files --------------------------------------------------

BUNDLED = ("e8", "e8e8", "d16p", "golay")


def parse_code(text: str, name: str | None = None) -> BinaryCode:
    """Parse ``n k name`` followed by ``k`` rows of ``n`` zeros and ones."""
    header: tuple[int, int, str] | None = None
    rows: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            parts = line.split()
            if len(parts) < 2:
                raise CodeFormatError("header must read 'n k name'", lineno)
            try:
                n, k = int(parts[0]), int(parts[1])
            except ValueError:
                raise CodeFormatError("n and k must be integers", lineno) from None
            header = (n, k, parts[2] if len(parts) > 2 else (name or "code"))
            continue
        n = header[0]
        if len(line) != n:
            raise CodeFormatError(f"row has length {len(line)}, expected {n}", lineno, min(len(line), n) + 1)
        for col, ch in enumerate(line, start=1):
            if ch not in "01":
                raise CodeFormatError(f"unexpected character {ch!r}", lineno, col)
        rows.append(line)
    if header is None:
        raise CodeFormatError("missing header", 1)
    n, k, label = header
    if len(rows) != k:
        raise CodeFormatError(f"expected {k} rows, found {len(rows)}", len(text.splitlines()) or 1)
    if k == 0:
        return zero_code(n, label)
    try:
        return BinaryCode.from_strings(rows, label)
    except ValueError as exc:
        raise CodeFormatError(str(exc), 1) from None


def format_code(code: BinaryCode) -> str:
    return "\n".join([f"{code.n} {code.k} {code.name}", *code.row_strings()]) + "\n"


def bundled_code(name: str) -> BinaryCode:
    key = name.lower().replace("+", "p").replace("_", "")
    aliases = {"e8e8": "e8e8", "e8pe8": "e8e8", "d16": "d16p", "d16p": "d16p", "e8": "e8", "golay": "golay", "g24": "golay"}
    if key not in aliases:
        raise KeyError(f"no bundled code named {name!r}; available: {', '.join(BUNDLED)}")
    text = resources.files("thetakummer.data").joinpath(f"{aliases[key]}.code").read_text()
    return parse_code(text)


def load_code(path_or_name: str) -> BinaryCode:
    """A code file, or a bundled code by name (also accepts ``data/<name>.code``)."""
    p = Path(path_or_name)
    if p.is_file():
        return parse_code(p.read_text(), p.stem)
    return bundled_code(p.stem)
