"""Scalar fields, seeded streams and the coupled matrix distributions.

Three distributions live here: Haar measure on SO(n)/SU(n)/Sp(n), the
standard Gaussian matrix ensemble, and the over-Gaussian law Y·G where G
is drawn from the Gaussian maker distribution (GMD).  Every sampler has a
batched ``*_batch`` form returning a plain ndarray of shape
``(size, n, n)`` (``(size, n, n, 4)`` for quaternions) and a single-draw
form returning a :class:`DenseMatrix`.

Group elements are returned undilated.  Callers that want the √n-scaled
convention multiply explicitly.

Quaternion arrays store the parts (re, i, j, k) on a trailing axis of
length 4 and use the Hamilton product.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import FieldMismatch, RankDeficient, Unsupported

FIELDS = ("real", "complex", "quaternion")
FAMILIES = ("SO", "SU", "Sp", "Spin")
_FAMILY_FIELD = {"SO": "real", "SU": "complex", "Sp": "quaternion"}

RANK_TOL = 1e-12
HAAR_RETRIES = 3


# ---------------------------------------------------------------------------
# Quaternions
# ---------------------------------------------------------------------------

def _hamilton_table() -> np.ndarray:
    # M[p, s, t]: coefficient of basis element p in e_s * e_t
    M = np.zeros((4, 4, 4))
    products = {
        (0, 0): (0, 1), (0, 1): (1, 1), (0, 2): (2, 1), (0, 3): (3, 1),
        (1, 0): (1, 1), (1, 1): (0, -1), (1, 2): (3, 1), (1, 3): (2, -1),
        (2, 0): (2, 1), (2, 1): (3, -1), (2, 2): (0, -1), (2, 3): (1, 1),
        (3, 0): (3, 1), (3, 1): (2, 1), (3, 2): (1, -1), (3, 3): (0, -1),
    }
    for (s, t), (p, sign) in products.items():
        M[p, s, t] = sign
    return M


HAMILTON = _hamilton_table()
_QCONJ = np.array([1.0, -1.0, -1.0, -1.0])


def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product of quaternion arrays (broadcast over leading axes)."""
    a0, a1, a2, a3 = np.moveaxis(a, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


def qconj(a: np.ndarray) -> np.ndarray:
    return a * _QCONJ


def qmatmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Product of quaternion matrices of shape (..., n, m, 4) and (..., m, p, 4)."""
    return np.einsum("pst,...ijs,...jkt->...ikp", HAMILTON, A, B, optimize=True)


def qconj_transpose(A: np.ndarray) -> np.ndarray:
    return np.swapaxes(qconj(A), -2, -3)


@dataclass(frozen=True)
class Quaternion:
    re: float = 0.0
    i_part: float = 0.0
    j_part: float = 0.0
    k_part: float = 0.0

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "Quaternion":
        return cls(*(float(x) for x in a))

    def as_array(self) -> np.ndarray:
        return np.array([self.re, self.i_part, self.j_part, self.k_part])

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.re, -self.i_part, -self.j_part, -self.k_part)

    def norm2(self) -> float:
        return self.re**2 + self.i_part**2 + self.j_part**2 + self.k_part**2

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_array(self.as_array() + other.as_array())

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_array(self.as_array() - other.as_array())

    def __neg__(self) -> "Quaternion":
        return Quaternion.from_array(-self.as_array())

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(qmul(self.as_array(), other.as_array()))
        return Quaternion.from_array(self.as_array() * float(other))

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# Matrices and group specs
# ---------------------------------------------------------------------------

def infer_field(a: np.ndarray) -> str:
    if np.iscomplexobj(a):
        return "complex"
    if a.ndim >= 3 and a.shape[-1] == 4:
        return "quaternion"
    return "real"


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    """A single matrix over one of the three scalar fields."""

    data: np.ndarray
    field: str = "real"

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}")
        data = np.asarray(self.data)
        if self.field == "quaternion":
            ok = data.ndim == 3 and data.shape[-1] == 4
            data = data.astype(float)
        elif self.field == "complex":
            ok = data.ndim == 2
            data = data.astype(complex)
        else:
            ok = data.ndim == 2 and not np.iscomplexobj(data)
            data = data.astype(float)
        if not ok:
            raise ValueError(f"array of shape {data.shape} is not a {self.field} matrix")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    def __matmul__(self, other: "DenseMatrix") -> "DenseMatrix":
        if other.field != self.field:
            raise FieldMismatch(f"{self.field} @ {other.field}")
        if self.field == "quaternion":
            return DenseMatrix(qmatmul(self.data, other.data), self.field)
        return DenseMatrix(self.data @ other.data, self.field)

    def conj_transpose(self) -> "DenseMatrix":
        if self.field == "quaternion":
            return DenseMatrix(qconj_transpose(self.data), self.field)
        return DenseMatrix(self.data.conj().T, self.field)

    def entry(self, i: int, j: int):
        if self.field == "quaternion":
            return Quaternion.from_array(self.data[i, j])
        return self.data[i, j]

    def to_json(self) -> str:
        """Row-major nested lists; complex entries as [re, im], quaternions as [re, i, j, k]."""
        if self.field == "complex":
            rows = np.stack([self.data.real, self.data.imag], axis=-1).tolist()
        else:
            rows = self.data.tolist()
        return json.dumps({"field": self.field, "rows": rows})

    @classmethod
    def from_json(cls, text: str) -> "DenseMatrix":
        obj = json.loads(text)
        arr = np.array(obj["rows"], dtype=float)
        if obj["field"] == "complex":
            arr = arr[..., 0] + 1j * arr[..., 1]
        return cls(arr, obj["field"])

    @classmethod
    def identity(cls, n: int, field: str = "real") -> "DenseMatrix":
        return cls(identity_array(n, field), field)


def identity_array(n: int, field: str) -> np.ndarray:
    if field == "quaternion":
        out = np.zeros((n, n, 4))
        out[np.arange(n), np.arange(n), 0] = 1.0
        return out
    return np.eye(n, dtype=complex if field == "complex" else float)


def field_matmul(A: np.ndarray, B: np.ndarray, field: str) -> np.ndarray:
    if field == "quaternion":
        return qmatmul(A, B)
    return A @ B


@dataclass(frozen=True)
class GroupSpec:
    family: str
    n: int

    def __post_init__(self):
        fam = normalize_family(self.family)
        object.__setattr__(self, "family", fam)
        # Sp(1) ≅ SU(2) is allowed; every other family needs n >= 2
        lowest = 1 if fam == "Sp" else 2
        if not isinstance(self.n, (int, np.integer)) or self.n < lowest:
            raise ValueError(f"{fam}(n) needs integer n >= {lowest}, got {self.n!r}")
        if fam == "Spin" and self.n < 3:
            raise ValueError("Spin(n) needs n >= 3")
        object.__setattr__(self, "n", int(self.n))

    @property
    def field(self) -> str:
        if self.family == "Spin":
            raise Unsupported("Spin(n) has no matrix model here")
        return _FAMILY_FIELD[self.family]

    @property
    def matrix_size(self) -> int:
        return self.n

    def __str__(self) -> str:
        return f"{self.family}({self.n})"


def normalize_family(name: str) -> str:
    key = str(name).strip().lower()
    table = {"so": "SO", "su": "SU", "sp": "Sp", "spin": "Spin"}
    if key not in table:
        raise ValueError(f"unknown group family {name!r}")
    return table[key]


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

@dataclass
class RngStream:
    """A reproducible numpy Generator keyed by (seed, stream_id, path)."""

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(
            entropy=int(self.seed) & (2**64 - 1),
            spawn_key=(int(self.stream_id), *map(int, self.path)),
        )
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def fork(self, *keys: int) -> "RngStream":
        """A fresh, independent stream derived from this one's identity (not its state)."""
        return RngStream(self.seed, self.stream_id, self.path + tuple(int(k) for k in keys))

    def normal(self, scale=1.0, size=None) -> np.ndarray:
        return self.generator.normal(0.0, scale, size)

    def chi(self, df, size=None) -> np.ndarray:
        return np.sqrt(self.generator.chisquare(df, size))

    @property
    def provenance(self) -> dict:
        return {"seed": int(self.seed), "stream_id": int(self.stream_id), "path": list(self.path)}


def as_rng(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0)
    return RngStream(int(rng))


# ---------------------------------------------------------------------------
# Gaussian matrices
# ---------------------------------------------------------------------------

def gaussian_batch(n: int, field: str, rng: RngStream, size: int) -> np.ndarray:
    """``size`` independent n×n Gaussian matrices with E|entry|² = 1."""
    if field == "real":
        return rng.normal(1.0, (size, n, n))
    if field == "complex":
        s = math.sqrt(0.5)
        return rng.normal(s, (size, n, n)) + 1j * rng.normal(s, (size, n, n))
    if field == "quaternion":
        return rng.normal(0.5, (size, n, n, 4))
    raise ValueError(f"unknown field {field!r}")


def sample_gaussian_matrix(n: int, field: str, rng: RngStream) -> DenseMatrix:
    if n < 1:
        raise ValueError("n must be >= 1")
    return DenseMatrix(gaussian_batch(n, field, rng, 1)[0], field)


# ---------------------------------------------------------------------------
# Gram-Schmidt
# ---------------------------------------------------------------------------

def _check_rank(diag_abs: np.ndarray) -> None:
    if np.any(diag_abs < RANK_TOL):
        raise RankDeficient(f"Gram-Schmidt residual {diag_abs.min():.3e} below {RANK_TOL}")


def _gs_columns_linalg(X: np.ndarray, field: str) -> tuple[np.ndarray, np.ndarray]:
    # Householder QR, normalized so that R has positive diagonal: this is the
    # Gram-Schmidt factorization, computed stably.
    Q, R = np.linalg.qr(X)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    _check_rank(np.abs(d))
    phase = d / np.abs(d)
    Q = Q * phase[..., None, :]
    R = R * np.conj(phase)[..., :, None]
    det = np.linalg.det(Q)
    if field == "real":
        fix = np.sign(det)
    else:
        fix = det / np.abs(det)
    # flip (rotate) the last column so that det = +1, keep Q R = X
    Q[..., :, -1] *= np.conj(fix)[..., None]
    R[..., -1, :] *= fix[..., None]
    return Q, R


def _qinner_cols(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # <a, b> = sum_i conj(a_i) b_i  over axis -2
    return qmul(qconj(a), b).sum(axis=-2)


def _qinner_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # <a, b>' = sum_i a_i conj(b_i)
    return qmul(a, qconj(b)).sum(axis=-2)


def _gs_quaternion(X: np.ndarray, axis: str) -> tuple[np.ndarray, np.ndarray]:
    n = X.shape[-2]
    batch = X.shape[:-3]
    Q = np.zeros_like(X)
    T = np.zeros(batch + (n, n, 4))
    for k in range(n):
        v = X[..., :, k, :] if axis == "columns" else X[..., k, :, :]
        v = v.copy()
        for _ in range(2):  # second pass restores orthogonality lost to rounding
            for l in range(k):
                q = Q[..., :, l, :] if axis == "columns" else Q[..., l, :, :]
                if axis == "columns":
                    c = _qinner_cols(q, v)
                    v = v - qmul(q, c[..., None, :])
                    T[..., l, k, :] += c
                else:
                    c = _qinner_rows(v, q)
                    v = v - qmul(c[..., None, :], q)
                    T[..., k, l, :] += c
        norm = np.sqrt((v**2).sum(axis=(-2, -1)))
        _check_rank(norm)
        v = v / norm[..., None, None]
        T[..., k, k, 0] = norm
        if axis == "columns":
            Q[..., :, k, :] = v
        else:
            Q[..., k, :, :] = v
    return Q, T


def gram_schmidt_batch(X: np.ndarray, field: str, axis: str = "columns") -> tuple[np.ndarray, np.ndarray]:
    """Special Gram-Schmidt of a stack of square matrices.

    Returns ``(Q, T)``.  For ``axis="columns"`` T is upper triangular with
    X = Q·T; for ``axis="rows"`` T is lower triangular with X = T·Q.  Real and
    complex outputs have determinant one; quaternion outputs get no
    determinant correction.
    """
    if axis not in ("columns", "rows"):
        raise ValueError("axis must be 'columns' or 'rows'")
    X = np.asarray(X)
    if field == "quaternion":
        return _gs_quaternion(X.astype(float), axis)
    X = X.astype(complex if field == "complex" else float)
    if axis == "columns":
        return _gs_columns_linalg(X, field)
    Qt, Rt = _gs_columns_linalg(np.swapaxes(X, -1, -2), field)
    return np.swapaxes(Qt, -1, -2), np.swapaxes(Rt, -1, -2)


def special_gram_schmidt(X: DenseMatrix, axis: str = "columns") -> DenseMatrix:
    if X.n_rows != X.n_cols:
        raise ValueError("special_gram_schmidt needs a square matrix")
    Q, _ = gram_schmidt_batch(X.data[None], X.field, axis)
    return DenseMatrix(Q[0], X.field)


# ---------------------------------------------------------------------------
# Haar, GMD and over-Gaussian samplers
# ---------------------------------------------------------------------------

def haar_batch(g: GroupSpec, rng: RngStream, size: int, return_factor: bool = False):
    """``size`` Haar samples of g (undilated); optionally also the GS factor T with Y = Q·T."""
    if g.family == "Spin":
        raise Unsupported("no sampler for Spin(n); use SO(n)")
    field = g.field
    for attempt in range(HAAR_RETRIES + 1):
        Y = gaussian_batch(g.n, field, rng, size)
        try:
            Q, T = gram_schmidt_batch(Y, field, "columns")
        except RankDeficient:
            if attempt == HAAR_RETRIES:
                raise
            continue
        if return_factor:
            return Q, T, Y
        return Q


def sample_haar(g: GroupSpec, rng: RngStream) -> DenseMatrix:
    return DenseMatrix(haar_batch(g, rng, 1)[0], g.field)


def gmd_batch(n: int, field: str, rng: RngStream, size: int) -> np.ndarray:
    """Upper-triangular Gaussian maker matrices, the law of X⁻¹Y.

    Off-diagonal entries have E|g|² = 1/n.  Diagonal entries i < n are
    (1/√n)·‖N(0, I)‖ over the n-i+1 remaining (field) coordinates.  The
    last diagonal entry carries the determinant correction: a signed
    (real) or phase-uniform (complex) variable of second moment 1/n, and a
    positive norm for quaternions.
    """
    sn = math.sqrt(n)
    iu = np.triu_indices(n, 1)
    m = n - np.arange(n)  # remaining dimension for each diagonal slot
    if field == "real":
        G = np.zeros((size, n, n))
        G[:, iu[0], iu[1]] = rng.normal(1.0 / sn, (size, len(iu[0])))
        diag = rng.chi(m[:-1], (size, n - 1)) / sn
        G[:, np.arange(n - 1), np.arange(n - 1)] = diag
        G[:, n - 1, n - 1] = rng.normal(1.0 / sn, size)
        return G
    if field == "complex":
        s = 1.0 / math.sqrt(2 * n)
        G = np.zeros((size, n, n), dtype=complex)
        k = len(iu[0])
        G[:, iu[0], iu[1]] = rng.normal(s, (size, k)) + 1j * rng.normal(s, (size, k))
        diag = rng.chi(2 * m[:-1], (size, n - 1)) * s
        G[:, np.arange(n - 1), np.arange(n - 1)] = diag
        G[:, n - 1, n - 1] = rng.normal(s, size) + 1j * rng.normal(s, size)
        return G
    if field == "quaternion":
        s = 1.0 / (2 * sn)
        G = np.zeros((size, n, n, 4))
        G[:, iu[0], iu[1], :] = rng.normal(s, (size, len(iu[0]), 4))
        diag = rng.chi(4 * m, (size, n)) * s
        G[:, np.arange(n), np.arange(n), 0] = diag
        return G
    raise ValueError(f"unknown field {field!r}")


@dataclass(frozen=True, eq=False)
class UpperTriangular:
    n: int
    entries: np.ndarray
    field: str = "real"

    def __post_init__(self):
        e = np.asarray(self.entries)
        lower = np.tril_indices(self.n, -1)
        if np.any(e[lower[0], lower[1]] != 0):
            raise ValueError("entries below the diagonal must vanish")

    def diagonal(self) -> np.ndarray:
        e = np.asarray(self.entries)
        idx = np.arange(self.n)
        return e[idx, idx, 0] if self.field == "quaternion" else e[idx, idx]

    def as_matrix(self) -> DenseMatrix:
        return DenseMatrix(self.entries, self.field)


def sample_gmd(n: int, field: str, rng: RngStream) -> UpperTriangular:
    if n < 1:
        raise ValueError("n must be >= 1")
    return UpperTriangular(n, gmd_batch(n, field, rng, 1)[0], field)


def gmd_columns(n: int, cols: Sequence[int], rng: RngStream, size: int) -> np.ndarray:
    """Selected (0-based) columns of real GMD samples, shape (size, n, len(cols)).

    Columns of a Gaussian maker matrix share no entries, so they are
    independent and can be drawn one at a time with the law used by
    ``gmd_batch``.
    """
    sn = math.sqrt(n)
    out = np.zeros((size, n, len(cols)))
    for j, c in enumerate(cols):
        if not 0 <= c < n:
            raise IndexError(f"column {c} outside 0..{n - 1}")
        if c:
            out[:, :c, j] = rng.normal(1.0 / sn, (size, c))
        if c < n - 1:
            out[:, c, j] = rng.chi(n - c, size) / sn
        else:
            out[:, c, j] = rng.normal(1.0 / sn, size)
    return out


def over_gaussian_batch(n: int, rng: RngStream, size: int, rows: int | None = None,
                        cols: Sequence[int] | None = None) -> np.ndarray:
    """Real over-Gaussian samples Y·G.

    ``rows`` keeps only the first rows of Y; ``cols`` keeps only the listed
    columns of the product (drawn from the matching GMD columns).
    """
    r = n if rows is None else rows
    Y = rng.normal(1.0, (size, r, n))
    G = gmd_batch(n, "real", rng, size) if cols is None else gmd_columns(n, cols, rng, size)
    return Y @ G


def sample_over_gaussian(n: int, rng: RngStream) -> DenseMatrix:
    if n < 1:
        raise ValueError("n must be >= 1")
    return DenseMatrix(over_gaussian_batch(n, rng, 1)[0], "real")


# ---------------------------------------------------------------------------
# Scalar helpers
# ---------------------------------------------------------------------------

def expected_chi_norm(m: int) -> float:
    """E‖N(0, I_m)‖ = √2·Γ((m+1)/2)/Γ(m/2)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return math.sqrt(2.0) * math.exp(math.lgamma((m + 1) / 2) - math.lgamma(m / 2))


def phi_array(Q: np.ndarray) -> np.ndarray:
    """Complex 2n×2n image of quaternion matrices (..., n, n, 4).

    Writing q = z1 + j·z2 with z1 = a + b·i and z2 = c - d·i, the block
    form is [[z1, -conj(z2)], [z2, conj(z1)]].
    """
    a, b, c, d = np.moveaxis(Q, -1, 0)
    z1 = a + 1j * b
    z2 = c - 1j * d
    top = np.concatenate([z1, -np.conj(z2)], axis=-1)
    bottom = np.concatenate([z2, np.conj(z1)], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def phi_embedding(Q: DenseMatrix) -> DenseMatrix:
    if Q.field != "quaternion":
        raise FieldMismatch("phi_embedding expects a quaternion matrix")
    if Q.n_rows != Q.n_cols:
        raise ValueError("phi_embedding expects a square matrix")
    return DenseMatrix(phi_array(Q.data), "complex")
