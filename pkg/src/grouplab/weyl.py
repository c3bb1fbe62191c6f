"""Young symmetrizers, monomials in matrix entries, comfortable juntas and
the eigenvalues λ_S of the adjoint column-coupling operator.

Indices are 0-based throughout: the entry x_{11} of the usual notation is
position ``(0, 0)``.  Each position carries a part tag: always 0 over the
reals, 0/1 for the real/imaginary part of a complex entry, and 0..3 for
the (re, i, j, k) parts of a quaternion entry.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FieldMismatch, InvalidShape, NotComfortable, TooLarge
from .partitions import normalize
from .sampling import HAMILTON, DenseMatrix, expected_chi_norm

MAX_SYMMETRIZER_DEGREE = 8
MAX_TRANSLATE_DEGREE = 6
N_PARTS = {"real": 1, "complex": 2, "quaternion": 4}
# Rescaling that gives a single part of a Gaussian entry unit variance.
PART_SCALE = {"real": 1.0, "complex": math.sqrt(2.0), "quaternion": 2.0}

Perm = tuple[int, ...]


def _structure_constants(field: str) -> np.ndarray:
    if field == "real":
        return np.ones((1, 1, 1))
    if field == "complex":
        M = np.zeros((2, 2, 2))
        M[0, 0, 0], M[0, 1, 1], M[1, 0, 1], M[1, 1, 0] = 1, -1, 1, 1
        return M
    return HAMILTON


# ---------------------------------------------------------------------------
# Young symmetrizers
# ---------------------------------------------------------------------------

def compose(p: Perm, q: Perm) -> Perm:
    """(p∘q)(i) = p(q(i))."""
    return tuple(p[i] for i in q)


def perm_sign(p: Perm) -> int:
    sign, seen = 1, [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class SignedPermSum:
    degree: int
    terms: tuple[tuple[Perm, int], ...]

    def as_dict(self) -> dict[Perm, int]:
        return dict(self.terms)


def _tableau_blocks(lam: Sequence[int]) -> tuple[list[list[int]], list[list[int]]]:
    """Rows and columns of the row-major standard filling of λ."""
    rows, start = [], 0
    for part in lam:
        rows.append(list(range(start, start + part)))
        start += part
    cols = [[row[j] for row in rows if len(row) > j] for j in range(lam[0] if lam else 0)]
    return rows, cols


def _block_group(blocks: list[list[int]], d: int) -> list[Perm]:
    perms = []
    for choice in itertools.product(*(itertools.permutations(b) for b in blocks)):
        p = list(range(d))
        for block, image in zip(blocks, choice):
            for src, dst in zip(block, image):
                p[src] = dst
        perms.append(tuple(p))
    return perms


def young_symmetrizer(lam: Sequence[int]) -> SignedPermSum:
    """c_λ = (Σ_{p∈P} e_p)(Σ_{q∈Q} sign(q) e_q), with e_p e_q = e_{p∘q}."""
    lam = normalize(lam)
    d = sum(lam)
    if d > MAX_SYMMETRIZER_DEGREE:
        raise TooLarge(f"degree {d} exceeds {MAX_SYMMETRIZER_DEGREE}")
    rows, cols = _tableau_blocks(lam)
    P = _block_group(rows, d)
    Q = [(q, perm_sign(q)) for q in _block_group(cols, d)]
    coeffs: dict[Perm, int] = defaultdict(int)
    for p in P:
        for q, s in Q:
            coeffs[compose(p, q)] += s
    ident = tuple(range(d))
    ordered = sorted(((p, c) for p, c in coeffs.items() if c), key=lambda t: (t[0] != ident, t[0]))
    return SignedPermSum(d, tuple(ordered))


# ---------------------------------------------------------------------------
# Monomials and polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class MonomialIndex:
    """A multiset of (row, col, part) positions, stored sorted."""

    positions: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        pos = tuple(sorted(_as_position(p) for p in self.positions))
        object.__setattr__(self, "positions", pos)

    @classmethod
    def of(cls, positions: Iterable) -> "MonomialIndex":
        return cls(tuple(positions))

    @property
    def degree(self) -> int:
        return len(self.positions)

    @property
    def rows(self) -> list[int]:
        return [p[0] for p in self.positions]

    @property
    def cols(self) -> list[int]:
        return [p[1] for p in self.positions]

    def is_column_comfortable(self, n: int) -> bool:
        cols = self.cols
        return len(set(cols)) == len(cols) and all(c < n // 2 for c in cols)

    def is_row_comfortable(self, n: int) -> bool:
        rows = self.rows
        return len(set(rows)) == len(rows) and all(r < n // 2 for r in rows)

    def is_comfortable(self, n: int) -> bool:
        return self.is_row_comfortable(n) and self.is_column_comfortable(n)

    def __mul__(self, other: "MonomialIndex") -> "MonomialIndex":
        return MonomialIndex(self.positions + other.positions)


def _as_position(p) -> tuple[int, int, int]:
    if len(p) == 2:
        return int(p[0]), int(p[1]), 0
    return int(p[0]), int(p[1]), int(p[2])


@dataclass(frozen=True, eq=False)
class GroupPolynomial:
    """Finite real combination of monomials in the (parts of the) entries of an n×n matrix."""

    terms: Mapping[MonomialIndex, float]
    n: int
    field: str = "real"

    def __post_init__(self):
        clean = {m: float(c) for m, c in self.terms.items() if c != 0}
        for m in clean:
            for r, c, part in m.positions:
                if not (0 <= r < self.n and 0 <= c < self.n and 0 <= part < N_PARTS[self.field]):
                    raise InvalidShape(f"position {(r, c, part)} outside {self.field} {self.n}x{self.n}")
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    @classmethod
    def constant(cls, value: float, n: int, field: str = "real") -> "GroupPolynomial":
        return cls({MonomialIndex(): value}, n, field)

    @classmethod
    def monomial(cls, positions: Iterable, n: int, field: str = "real", coeff: float = 1.0,
                 normalized: bool = True) -> "GroupPolynomial":
        """coeff·∏ positions; with ``normalized`` each factor is scaled so that a
        single part of a standard Gaussian entry has unit variance."""
        m = MonomialIndex.of(positions)
        scale = PART_SCALE[field] ** m.degree if normalized else 1.0
        return cls({m: coeff * scale}, n, field)

    @property
    def degree(self) -> int:
        return max((m.degree for m in self.terms), default=0)

    def __add__(self, other: "GroupPolynomial") -> "GroupPolynomial":
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) + c
        return GroupPolynomial(out, self.n, self.field)

    def __sub__(self, other: "GroupPolynomial") -> "GroupPolynomial":
        return self + other.scale(-1.0)

    def __mul__(self, other: "GroupPolynomial") -> "GroupPolynomial":
        self._check(other)
        out: dict[MonomialIndex, float] = defaultdict(float)
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                out[m1 * m2] += c1 * c2
        return GroupPolynomial(out, self.n, self.field)

    def scale(self, s: float) -> "GroupPolynomial":
        return GroupPolynomial({m: s * c for m, c in self.terms.items()}, self.n, self.field)

    def _check(self, other: "GroupPolynomial") -> None:
        if other.field != self.field:
            raise FieldMismatch(f"{self.field} vs {other.field}")
        if other.n != self.n:
            raise InvalidShape(f"ambient sizes {self.n} and {other.n} differ")

    def approx_equal(self, other: "GroupPolynomial", tol: float = 1e-10) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) <= tol for k in keys)

    def to_json(self) -> str:
        return json.dumps([
            {"positions": [[r, c] for r, c, _ in m.positions],
             "parts": [p for _, _, p in m.positions],
             "coeff": coeff}
            for m, coeff in self.terms.items()
        ])

    @classmethod
    def from_json(cls, text: str, n: int, field: str = "real") -> "GroupPolynomial":
        terms = {}
        for item in json.loads(text):
            pos = [(r, c, p) for (r, c), p in zip(item["positions"], item["parts"])]
            terms[MonomialIndex.of(pos)] = item["coeff"]
        return cls(terms, n, field)


def comfortable_junta(lam: Sequence[int], n: int) -> GroupPolynomial:
    """P_λ(X) = Σ_σ ε_σ ∏_i x_{i,σ(i)} with ε read off the Young symmetrizer."""
    lam = normalize(lam)
    d = sum(lam)
    if d > MAX_SYMMETRIZER_DEGREE:
        raise TooLarge(f"degree {d} exceeds {MAX_SYMMETRIZER_DEGREE}")
    if 2 * d >= n:
        raise InvalidShape(f"comfortable juntas need d < n/2 (d={d}, n={n})")
    terms = {}
    for sigma, eps in young_symmetrizer(lam).terms:
        terms[MonomialIndex.of((i, sigma[i]) for i in range(d))] = eps
    return GroupPolynomial(terms, n, "real")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _as_batch(X, field: str) -> np.ndarray:
    if isinstance(X, DenseMatrix):
        if X.field != field:
            raise FieldMismatch(f"polynomial over {field}, matrix over {X.field}")
        return X.data[None]
    arr = np.asarray(X)
    if field == "real" and np.iscomplexobj(arr):
        raise FieldMismatch("real polynomial evaluated on complex entries")
    if field == "complex" and not np.iscomplexobj(arr):
        arr = arr.astype(complex)
    core = 3 if field == "quaternion" else 2
    if field == "quaternion" and arr.shape[-1] != 4:
        raise FieldMismatch("quaternion polynomial needs a trailing parts axis of length 4")
    return arr.reshape((-1,) + arr.shape[-core:])


def _part_views(arr: np.ndarray, field: str) -> np.ndarray:
    """Stack of real part-arrays, indexed [..., row, col, part]."""
    if field == "real":
        return arr[..., None]
    if field == "complex":
        return np.stack([arr.real, arr.imag], axis=-1)
    return arr


def evaluate_batch(p: GroupPolynomial, X) -> np.ndarray:
    """Values of p on a stack of matrices (or a single DenseMatrix)."""
    arr = _as_batch(X, p.field)
    size = arr.shape[1]
    for m in p.terms:
        if any(r >= size or c >= size for r, c, _ in m.positions):
            raise InvalidShape(f"matrix of size {size} too small for polynomial on {p.n}")
    parts = _part_views(arr, p.field)
    out = np.zeros(arr.shape[0])
    for m, coeff in p.terms.items():
        term = np.full(arr.shape[0], coeff)
        for r, c, part in m.positions:
            term = term * parts[:, r, c, part]
        out += term
    return out


def evaluate(p: GroupPolynomial, X) -> float:
    if isinstance(X, DenseMatrix):
        return float(evaluate_batch(p, X)[0])
    vals = evaluate_batch(p, X)
    return float(vals[0]) if vals.shape == (1,) else vals


# ---------------------------------------------------------------------------
# λ_S
# ---------------------------------------------------------------------------

def lambda_S(S, n: int) -> float:
    """n^{-d/2}·∏_k E‖N(0, I_{n-c_k})‖ over the (0-based) columns c_k of S."""
    S = S if isinstance(S, MonomialIndex) else MonomialIndex.of(S)
    rows_ok = all(r < n // 2 for r in S.rows)
    if not (S.is_column_comfortable(n) and rows_ok):
        raise NotComfortable(f"{S.positions} is not column-comfortable within [n/2] for n={n}")
    log_val = sum(math.log(expected_chi_norm(n - c)) for c in S.cols)
    return math.exp(log_val - 0.5 * S.degree * math.log(n))


# ---------------------------------------------------------------------------
# Translations
# ---------------------------------------------------------------------------

def _translated_entry(V: np.ndarray, field: str, r: int, c: int, part: int, side: str) -> dict:
    """Linear form (in the parts of X) of one part of (XV)_{rc} or (VX)_{rc}."""
    M = _structure_constants(field)
    parts = _part_views(V[None], field)[0]
    n = V.shape[0]
    form: dict[tuple[int, int, int], float] = {}
    k = M.shape[0]
    for j in range(n):
        for s in range(k):
            if side == "right":
                coeff = sum(M[part, s, t] * parts[j, c, t] for t in range(k))
                key = (r, j, s)
            else:
                coeff = sum(M[part, t, s] * parts[r, j, t] for t in range(k))
                key = (j, c, s)
            if coeff != 0:
                form[key] = form.get(key, 0.0) + coeff
    return form


def _translate(p: GroupPolynomial, V, side: str) -> GroupPolynomial:
    Varr = V.data if isinstance(V, DenseMatrix) else np.asarray(V)
    if isinstance(V, DenseMatrix) and V.field != p.field:
        raise FieldMismatch(f"polynomial over {p.field}, matrix over {V.field}")
    if p.degree > MAX_TRANSLATE_DEGREE:
        raise TooLarge(f"degree {p.degree} exceeds {MAX_TRANSLATE_DEGREE}")
    if p.field == "complex":
        Varr = Varr.astype(complex)
    out: dict[MonomialIndex, float] = defaultdict(float)
    cache: dict = {}
    for m, coeff in p.terms.items():
        forms = []
        for pos in m.positions:
            if pos not in cache:
                cache[pos] = list(_translated_entry(Varr, p.field, *pos, side).items())
            forms.append(cache[pos])
        for combo in itertools.product(*forms):
            val = coeff
            for _, c in combo:
                val *= c
            out[MonomialIndex(tuple(k for k, _ in combo))] += val
    return GroupPolynomial(out, p.n, p.field)


def right_translate(p: GroupPolynomial, V) -> GroupPolynomial:
    """The polynomial X ↦ p(XV)."""
    return _translate(p, V, "right")


def left_translate(p: GroupPolynomial, U) -> GroupPolynomial:
    """The polynomial X ↦ p(UX)."""
    return _translate(p, U, "left")


def column_comfortable_subsets(d: int) -> Iterable[tuple[tuple[int, int], ...]]:
    """All S ⊆ [d]×[d] with distinct columns: each column gets one row or none."""
    for rows in itertools.product(range(-1, d), repeat=d):
        yield tuple((r, c) for c, r in enumerate(rows) if r >= 0)


@dataclass(frozen=True)
class BracketRow:
    n: int
    d: int
    S: tuple[tuple[int, int], ...]
    value: float
    passed: bool


def lambda_bracket_audit(ns: Sequence[int] = (36, 100), dmax: int = 6) -> list[BracketRow]:
    """2^{-d} ≤ λ_S ≤ 1 and |λ_S - 1| ≤ 2d²/n for every column-comfortable S ⊆ [d]×[d]."""
    rows = []
    for n in ns:
        for d in range(1, dmax + 1):
            for S in column_comfortable_subsets(d):
                lam = lambda_S(S, n)
                ok = 2.0**-d <= lam <= 1.0 and abs(lam - 1.0) <= 2 * d * d / n
                rows.append(BracketRow(n, d, S, lam, ok))
    return rows
