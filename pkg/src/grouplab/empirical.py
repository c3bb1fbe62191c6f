"""Monte-Carlo functional analysis on compact matrix groups.

Every estimator takes an ``RngStream`` and returns an ``EstimateWithCI``;
samples are drawn in fixed chunks from forked streams, so a value depends
only on the seed and the sample counts.  Haar samples are undilated; the
√n convention is applied here wherever a polynomial is evaluated on a
group element, so that μ, γ and ν norms live on the same scale.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, permutations
from typing import Callable, Sequence

import numpy as np
from scipy.special import betainc, betaincinv

from .errors import (InsufficientSamples, InvalidShape, MeasureTooSmall, MultiplicityTooHigh,
                     Unsupported)
from .estimates import CHUNK, EstimateWithCI, chunk_sizes, mean_estimate, monte_carlo
from .sampling import (GroupSpec, RngStream, field_matmul, gaussian_batch, gmd_columns,
                       gram_schmidt_batch, haar_batch, over_gaussian_batch, qconj_transpose)
from .weyl import GroupPolynomial, MonomialIndex, evaluate_batch

REJECTION_FLOOR = 1e-4
CONV_SQ_FLOOR = 1e-3
SV_THRESHOLD = 1e-6
FIT_FACTOR = 50
MAX_NORM_DEGREE = 6
MAX_NOISE_DEGREE = 4
DISTRIBUTIONS = ("mu", "gamma", "nu")


def _chunk_for(n: int) -> int:
    # keep a chunk of n×n matrices around 40 MB
    return max(500, min(CHUNK, CHUNK * 256 // (n * n)))


def _inverse(X: np.ndarray, field: str) -> np.ndarray:
    """Inverse of a stack of unitary matrices (the conjugate transpose)."""
    if field == "quaternion":
        return qconj_transpose(X)
    return np.conj(np.swapaxes(X, -1, -2)) if field == "complex" else np.swapaxes(X, -1, -2)


# ---------------------------------------------------------------------------
# Caps and indicator sets
# ---------------------------------------------------------------------------

def cap_measure(n: int, t: float, sense: str = "gt") -> float:
    """Haar measure of {X₁₁ > t} (or < t) on SO(n).

    X₁₁² is Beta(1/2, (n-1)/2), and X₁₁ is symmetric about zero.
    """
    if n < 2:
        raise ValueError("cap_measure needs n >= 2")
    if not -1.0 <= t <= 1.0:
        raise ValueError("threshold must lie in [-1, 1]")
    if sense == "lt":
        return cap_measure(n, -t, "gt")
    if sense != "gt":
        raise ValueError("sense must be 'gt' or 'lt'")
    upper = 0.5 * (1.0 - betainc(0.5, (n - 1) / 2.0, t * t))
    return float(upper if t >= 0 else 1.0 - upper)


def cap_threshold(n: int, alpha: float, sense: str = "gt") -> float:
    """The t with cap_measure(n, t, sense) = alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if sense == "lt":
        return -cap_threshold(n, alpha, "gt")
    if alpha > 0.5:
        return -cap_threshold(n, 1.0 - alpha, "gt")
    return float(math.sqrt(betaincinv(0.5, (n - 1) / 2.0, 1.0 - 2.0 * alpha)))


@dataclass(frozen=True)
class IndicatorSpec:
    """A measurable subset of the group, tested on undilated samples.

    ``kind`` is one of ``cap_gt``, ``cap_lt``, ``whole`` or ``custom``.  A
    custom set carries a vectorized predicate and, optionally, its measure.
    """

    kind: str = "cap_gt"
    threshold: float = 0.0
    coordinate: tuple[int, int] = (0, 0)
    predicate: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    known_measure: float | None = None

    @classmethod
    def cap(cls, t: float, sense: str = "gt", coordinate=(0, 0)) -> "IndicatorSpec":
        return cls("cap_" + sense, float(t), tuple(coordinate))

    @classmethod
    def whole(cls) -> "IndicatorSpec":
        return cls("whole")

    @classmethod
    def custom(cls, predicate, measure: float | None = None) -> "IndicatorSpec":
        return cls("custom", predicate=predicate, known_measure=measure)

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X)
        if self.kind == "whole":
            return np.ones(X.shape[:-2], dtype=bool)
        if self.kind == "custom":
            return np.asarray(self.predicate(X), dtype=bool)
        r, c = self.coordinate
        x = np.real(X[..., r, c])
        if self.kind == "cap_gt":
            return x > self.threshold
        if self.kind == "cap_lt":
            return x < self.threshold
        raise ValueError(f"unknown indicator kind {self.kind!r}")

    def measure(self, g: GroupSpec) -> float:
        if self.kind == "whole":
            return 1.0
        if self.kind == "custom":
            if self.known_measure is None:
                raise Unsupported("custom set without a known measure")
            return float(self.known_measure)
        if g.family != "SO":
            raise Unsupported("closed-form cap measures are implemented for SO(n)")
        return cap_measure(g.n, self.threshold, self.kind[4:])

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind.startswith("cap"):
            out.update(threshold=self.threshold, coordinate=list(self.coordinate))
        if self.known_measure is not None:
            out["measure"] = self.known_measure
        return out


def _checked_measure(A: IndicatorSpec, g: GroupSpec, floor: float) -> float:
    mu = A.measure(g)
    if mu < floor:
        raise MeasureTooSmall(f"measure {mu:.3g} below {floor:g}")
    return mu


def rejection_sample(A: IndicatorSpec, g: GroupSpec, size: int, rng: RngStream,
                     floor: float = REJECTION_FLOOR) -> np.ndarray:
    """``size`` Haar samples conditioned on A, by rejection."""
    mu = _checked_measure(A, g, floor) if A.kind != "custom" or A.known_measure else 1.0
    if A.kind == "whole":
        return haar_batch(g, rng, size)
    got, count, rounds = [], 0, 0
    while count < size:
        batch = min(_chunk_for(g.n), max(64, int((size - count) / mu * 1.1) + 16))
        X = haar_batch(g, rng.fork(rounds), batch)
        keep = X[A.contains(X)]
        got.append(keep)
        count += len(keep)
        rounds += 1
    return np.concatenate(got)[:size]


# ---------------------------------------------------------------------------
# Values of test functions
# ---------------------------------------------------------------------------

def _values(f, X: np.ndarray) -> np.ndarray:
    """f on a stack of undilated samples."""
    if isinstance(f, IndicatorSpec):
        return f.contains(X).astype(float)
    if isinstance(f, GroupPolynomial):
        return evaluate_batch(f, X)
    return np.asarray(f(X), dtype=float)


def _group_for(field_name: str, n: int) -> GroupSpec:
    return GroupSpec({"real": "SO", "complex": "SU", "quaternion": "Sp"}[field_name], n)


# ---------------------------------------------------------------------------
# Empirical low-degree basis
# ---------------------------------------------------------------------------

def monomial_list(n: int, d: int) -> list[tuple[int, ...]]:
    """Monomials of degree ≤ d in the n² real entries, as sorted flat-index tuples."""
    out: list[tuple[int, ...]] = [()]
    for k in range(1, d + 1):
        out.extend(combinations_with_replacement(range(n * n), k))
    return out


def _features(X: np.ndarray, monomials: Sequence[tuple[int, ...]]) -> np.ndarray:
    flat = X.reshape(X.shape[0], -1)
    F = np.ones((X.shape[0], len(monomials)))
    by_degree: dict[int, list[int]] = {}
    for j, m in enumerate(monomials):
        by_degree.setdefault(len(m), []).append(j)
    for k, cols in by_degree.items():
        if k == 0:
            continue
        idx = np.array([monomials[j] for j in cols])
        F[:, cols] = np.prod(flat[:, idx], axis=2)
    return F


@dataclass(frozen=True, eq=False)
class EmpiricalBasis:
    """Functions orthonormal in L²(μ) spanning the polynomials of degree ≤ d."""

    group: GroupSpec
    d: int
    monomials: tuple[tuple[int, ...], ...]
    coeffs: np.ndarray  # monomial features (on √n·X) -> basis functions
    rank: int
    threshold: float
    n_fit: int
    seed: dict

    def values(self, X: np.ndarray) -> np.ndarray:
        """Basis functions on a stack of undilated samples, shape (size, rank)."""
        F = _features(math.sqrt(self.group.n) * np.asarray(X), self.monomials)
        return F @ self.coeffs

    def gram(self, n_samples: int, rng: RngStream) -> np.ndarray:
        """Empirical Gram matrix of the basis on a fresh sample."""
        acc = np.zeros((self.rank, self.rank))
        for i, size in enumerate(chunk_sizes(n_samples, _chunk_for(self.group.n))):
            B = self.values(haar_batch(self.group, rng.fork(i), size))
            acc += B.T @ B
        return acc / n_samples


def fit_empirical_basis(g: GroupSpec, d: int, n_fit: int, rng: RngStream,
                        threshold: float = SV_THRESHOLD) -> EmpiricalBasis:
    if g.field != "real":
        raise Unsupported("empirical bases are implemented for SO(n)")
    if not 0 <= 2 * d < g.n:
        raise InvalidShape(f"need d < n/2 (d={d}, n={g.n})")
    monomials = monomial_list(g.n, d)
    if n_fit < FIT_FACTOR * len(monomials):
        raise InsufficientSamples(f"n_fit={n_fit} below {FIT_FACTOR}×{len(monomials)} monomials")
    gram = np.zeros((len(monomials), len(monomials)))
    dil = math.sqrt(g.n)
    for i, size in enumerate(chunk_sizes(n_fit, _chunk_for(g.n))):
        F = _features(dil * haar_batch(g, rng.fork(i), size), monomials)
        gram += F.T @ F
    gram /= n_fit
    s, V = np.linalg.eigh(gram)
    keep = s > threshold
    coeffs = V[:, keep] / np.sqrt(s[keep])
    return EmpiricalBasis(g, d, tuple(monomials), coeffs, int(keep.sum()), threshold, n_fit,
                          rng.provenance)


def project_low_degree_norm(f, basis: EmpiricalBasis, n_eval: int, rng: RngStream) -> EstimateWithCI:
    """Estimate ‖f^{≤d}‖² = Σ_b ⟨f, b⟩² over the fitted basis.

    Each ⟨f, b⟩² is estimated by the unbiased U-statistic (S² - Σz²)/(N(N-1)).
    The standard error combines the delta-method term with the second-order
    term that dominates when the projection is near zero.
    """
    if rng.provenance == basis.seed:
        raise ValueError("evaluation stream must differ from the basis-fitting stream")
    r = basis.rank
    if n_eval < max(10 * r, 2):
        raise InsufficientSamples(f"n_eval={n_eval} below 10×rank={10 * r}")
    S = np.zeros(r)
    Q = np.zeros(r)
    ZZ = np.zeros((r, r))
    for i, size in enumerate(chunk_sizes(n_eval, _chunk_for(basis.group.n))):
        X = haar_batch(basis.group, rng.fork(i), size)
        Z = _values(f, X)[:, None] * basis.values(X)
        S += Z.sum(axis=0)
        Q += (Z**2).sum(axis=0)
        ZZ += Z.T @ Z
    N = n_eval
    value = float(((S**2 - Q) / (N * (N - 1))).sum())
    m = S / N
    C = (ZZ - N * np.outer(m, m)) / (N - 1)
    var = 4.0 * float(m @ C @ m) / N + 2.0 * float((C**2).sum()) / N**2
    return EstimateWithCI(value, math.sqrt(max(var, 0.0)), N, rng.provenance)


def level_d_bound(alpha: float, d: int, C: float = 10.0) -> float:
    """α²·(10C·log(1/α)/d)^d, the level-d envelope at constant C."""
    if d == 0:
        return alpha**2
    return alpha**2 * (10.0 * C * math.log(1.0 / alpha) / d) ** d


def level_d_admissible(alpha: float, d: int) -> bool:
    return d <= 0.5 * math.log(1.0 / alpha)


# ---------------------------------------------------------------------------
# Norms under μ, γ and ν
# ---------------------------------------------------------------------------

def _compact(p: GroupPolynomial) -> tuple[GroupPolynomial, int, list[int]]:
    """Relabel p onto its used rows (0..R-1) and columns; returns (p', R, columns)."""
    rows = sorted({r for m in p.terms for r, _, _ in m.positions})
    cols = sorted({c for m in p.terms for _, c, _ in m.positions})
    rmap = {r: i for i, r in enumerate(rows)}
    cmap = {c: j for j, c in enumerate(cols)}
    size = max(len(rows), len(cols), 1)
    terms = {
        MonomialIndex.of((rmap[r], cmap[c], part) for r, c, part in m.positions): coeff
        for m, coeff in p.terms.items()
    }
    return GroupPolynomial(terms, size, p.field), len(rows), cols


def _nu_draw(polys: Sequence[GroupPolynomial], n: int, square: bool = True):
    """Sampler of ν-values for several real polynomials sharing one batch."""
    union = GroupPolynomial.constant(0.0, n)
    for p in polys:
        if p.field != "real":
            raise Unsupported("the over-Gaussian distribution is real")
        union = union + GroupPolynomial({m: 1.0 for m in p.terms}, n)
    rows = sorted({r for m in union.terms for r, _, _ in m.positions})
    cols = sorted({c for m in union.terms for _, c, _ in m.positions})
    R = (max(rows) + 1) if rows else 1
    cols = cols or [0]
    cmap = {c: j for j, c in enumerate(cols)}
    size_c = max(R, len(cols))
    local = [GroupPolynomial({MonomialIndex.of((r, cmap[c], part) for r, c, part in m.positions): v
                              for m, v in p.terms.items()}, size_c) for p in polys]

    def draw(rng: RngStream, size: int) -> np.ndarray:
        Y = over_gaussian_batch(n, rng, size, rows=R, cols=cols)
        M = np.zeros((size, size_c, size_c))
        M[:, :R, :len(cols)] = Y
        vals = np.stack([evaluate_batch(q, M) for q in local], axis=1)
        return vals**2 if square else vals

    return draw


def _dilated_draw(polys: Sequence[GroupPolynomial], distribution: str, n: int, field_name: str):
    g = _group_for(field_name, n)

    def draw(rng: RngStream, size: int) -> np.ndarray:
        if distribution == "mu":
            X = math.sqrt(n) * haar_batch(g, rng, size)
        else:
            X = gaussian_batch(n, field_name, rng, size)
        return np.stack([evaluate_batch(p, X) ** 2 for p in polys], axis=1)

    return draw


def norms_under(distribution: str, polys: Sequence[GroupPolynomial], n_samples: int,
                rng: RngStream) -> list[EstimateWithCI]:
    """‖p‖² for several polynomials on one shared sample of the distribution."""
    if distribution not in DISTRIBUTIONS:
        raise ValueError(f"distribution must be one of {DISTRIBUTIONS}")
    polys = list(polys)
    if not polys:
        return []
    n, field_name = polys[0].n, polys[0].field
    for p in polys:
        if p.degree > MAX_NORM_DEGREE:
            raise InvalidShape(f"degree {p.degree} above {MAX_NORM_DEGREE}")
        if (p.n, p.field) != (n, field_name):
            raise InvalidShape("polynomials must share ambient size and field")
    if distribution == "nu":
        draw = _nu_draw(polys, n)
        chunk = CHUNK
    else:
        draw = _dilated_draw(polys, distribution, n, field_name)
        chunk = _chunk_for(n)
    return monte_carlo(draw, n_samples, rng, chunk).estimates(rng.provenance)


def norm_under(distribution: str, p: GroupPolynomial, n_samples: int, rng: RngStream) -> EstimateWithCI:
    """Monte-Carlo ‖p‖² under μ (√n-dilated Haar), γ (Gaussian) or ν (over-Gaussian)."""
    return norms_under(distribution, [p], n_samples, rng)[0]


# ---------------------------------------------------------------------------
# Convolutions
# ---------------------------------------------------------------------------

def convolution_form(A: IndicatorSpec, B: IndicatorSpec, C: IndicatorSpec, g: GroupSpec,
                     n_samples: int, rng: RngStream) -> EstimateWithCI:
    """⟨f_A * f_B, f_C⟩ = Pr_{a∼A, b∼B}[ab ∈ C] / μ(C)."""
    _checked_measure(A, g, REJECTION_FLOOR)
    _checked_measure(B, g, REJECTION_FLOOR)
    mu_c = C.measure(g)
    if mu_c <= 0:
        raise MeasureTooSmall("target set has measure zero")

    def draw(sub: RngStream, size: int) -> np.ndarray:
        a = rejection_sample(A, g, size, sub.fork(0))
        b = rejection_sample(B, g, size, sub.fork(1))
        return C.contains(field_matmul(a, b, g.field)).astype(float) / mu_c

    return mean_estimate(draw, n_samples, rng, _chunk_for(g.n))


def product_hits(A: IndicatorSpec, g: GroupSpec, n_pairs: int, rng: RngStream) -> int:
    """Number of pairs a, b drawn from A with ab ∈ A."""
    mu = A.measure(g)
    est = convolution_form(A, A, A, g, n_pairs, rng)
    return int(round(est.value * mu * n_pairs))


def conv_sq_norm(A: IndicatorSpec, g: GroupSpec, n_outer: int, n_inner: int, rng: RngStream,
                 B: IndicatorSpec | None = None) -> EstimateWithCI:
    """Unbiased estimate of ‖f_A * f_B‖²₂ (B defaults to A).

    (f_A * f_B)(x) = Pr_{y∼B}[x y⁻¹ ∈ A] / μ(A).  For each outer x the square
    is estimated by a U-statistic over fresh inner draws y ∼ B.
    """
    B = A if B is None else B
    mu_a = _checked_measure(A, g, CONV_SQ_FLOOR)
    _checked_measure(B, g, CONV_SQ_FLOOR)
    if n_inner < 2:
        raise InsufficientSamples("need at least two inner samples")
    m = n_inner

    def draw(sub: RngStream, size: int) -> np.ndarray:
        x = haar_batch(g, sub.fork(0), size)
        y = rejection_sample(B, g, size * m, sub.fork(1))
        y = y.reshape((size, m) + y.shape[1:])
        prod = field_matmul(x[:, None], _inverse(y, g.field), g.field)
        t = A.contains(prod).astype(float) / mu_a
        return (t.sum(axis=1) ** 2 - (t**2).sum(axis=1)) / (m * (m - 1))

    return mean_estimate(draw, n_outer, rng, max(1, _chunk_for(g.n) // m))


def l2_mixing_proxy(A: IndicatorSpec, B: IndicatorSpec, g: GroupSpec, n_outer: int, n_inner: int,
                    rng: RngStream) -> EstimateWithCI:
    """‖f_A * f_B - 1‖²₂ = ‖f_A * f_B‖²₂ - 1."""
    est = conv_sq_norm(A, g, n_outer, n_inner, rng, B=B)
    return EstimateWithCI(est.value - 1.0, est.std_error, est.n_samples, est.seed)


def square_set_witness(A: IndicatorSpec, g: GroupSpec, n_outer: int, n_inner: int,
                       rng: RngStream) -> EstimateWithCI:
    """Lower estimate of μ(A²): the fraction of x ∼ Haar for which some inner y ∼ A has xy⁻¹ ∈ A."""
    _checked_measure(A, g, REJECTION_FLOOR)
    m = n_inner

    def draw(sub: RngStream, size: int) -> np.ndarray:
        x = haar_batch(g, sub.fork(0), size)
        y = rejection_sample(A, g, size * m, sub.fork(1)).reshape((size, m) + x.shape[1:])
        prod = field_matmul(x[:, None], _inverse(y, g.field), g.field)
        return A.contains(prod).any(axis=1).astype(float)

    return mean_estimate(draw, n_outer, rng, max(1, _chunk_for(g.n) // m))


# ---------------------------------------------------------------------------
# Noise operator
# ---------------------------------------------------------------------------

def noise_pairings(polys: Sequence[GroupPolynomial], rho: float, g: GroupSpec, n_samples: int,
                   rng: RngStream, C: float = 4.0) -> list[tuple[EstimateWithCI, ...]]:
    """Per polynomial, estimates of (⟨T_ρ f, f⟩_μ, ‖f‖²_μ, ⟨T_ρ f, f⟩_μ - (ρ/C)^d ‖f‖²_μ).

    X = GS(Z)·V and X' = GS(Z')·V with Z' = ρZ + √(1-ρ²)W and V ∼ Haar;
    f is evaluated on the √n-dilated matrices.  All polynomials share one
    sample.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    polys = list(polys)
    for f in polys:
        if f.degree > MAX_NOISE_DEGREE:
            raise InvalidShape(f"degree {f.degree} above {MAX_NOISE_DEGREE}")
        if f.field != g.field or f.n != g.n:
            raise InvalidShape("polynomial and group disagree")
    n, fld = g.n, g.field
    floors = np.array([(rho / C) ** f.degree for f in polys])
    dil = math.sqrt(n)
    mix = math.sqrt(max(0.0, 1.0 - rho * rho))

    def draw(sub: RngStream, size: int) -> np.ndarray:
        Z = gaussian_batch(n, fld, sub.fork(0), size)
        W = gaussian_batch(n, fld, sub.fork(1), size)
        V = haar_batch(g, sub.fork(2), size)
        Q, _ = gram_schmidt_batch(Z, fld)
        Q2, _ = gram_schmidt_batch(rho * Z + mix * W, fld)
        X, X2 = dil * field_matmul(Q, V, fld), dil * field_matmul(Q2, V, fld)
        a = np.stack([evaluate_batch(f, X) for f in polys], axis=1)
        b = np.stack([evaluate_batch(f, X2) for f in polys], axis=1)
        return np.concatenate([a * b, a * a, a * b - floors * a * a], axis=1)

    est = monte_carlo(draw, n_samples, rng, _chunk_for(n)).estimates(rng.provenance)
    k = len(polys)
    return [(est[i], est[k + i], est[2 * k + i]) for i in range(k)]


def noise_pairing_detail(f: GroupPolynomial, rho: float, g: GroupSpec, n_samples: int,
                         rng: RngStream, C: float = 4.0) -> tuple[EstimateWithCI, ...]:
    return noise_pairings([f], rho, g, n_samples, rng, C)[0]


def noise_pairing(f: GroupPolynomial, rho: float, g: GroupSpec, n_samples: int,
                  rng: RngStream) -> EstimateWithCI:
    """⟨T_ρ f, f⟩_μ."""
    return noise_pairing_detail(f, rho, g, n_samples, rng)[0]


# ---------------------------------------------------------------------------
# Gaussian maker moments and over-Gaussian pairings
# ---------------------------------------------------------------------------

def gmd_ell(indices: Sequence[tuple[int, int]]) -> int:
    """Number of off-diagonal factors, counted with multiplicity."""
    return sum(1 for r, c in indices if r != c)


def gmd_bound(indices: Sequence[tuple[int, int]], n: int) -> float:
    return n ** (-gmd_ell(indices) / 2.0)


def gmd_moment(indices: Sequence[tuple[int, int]], n: int, n_samples: int, rng: RngStream) -> EstimateWithCI:
    """E ∏ G[r, c] for G ∼ GMD (0-based indices, real field)."""
    indices = [(int(r), int(c)) for r, c in indices]
    counts = Counter(indices)
    if counts and max(counts.values()) > 2:
        raise MultiplicityTooHigh("an entry appears more than twice")
    for r, c in indices:
        if not (0 <= r < n and 0 <= c < n):
            raise InvalidShape(f"entry {(r, c)} outside {n}x{n}")
    cols = sorted({c for _, c in indices}) or [0]
    cmap = {c: j for j, c in enumerate(cols)}

    def draw(sub: RngStream, size: int) -> np.ndarray:
        G = gmd_columns(n, cols, sub, size)
        out = np.ones(size)
        for r, c in indices:
            out = out * G[:, r, cmap[c]]
        return out

    return mean_estimate(draw, n_samples, rng)


def row_form(columns: Sequence[int], n: int) -> GroupPolynomial:
    """x_I = ∏_r x_{r, I(r)} for I given as the list of columns of rows 0..d-1."""
    return GroupPolynomial.monomial([(r, c) for r, c in enumerate(columns)], n)


def hamming(S: MonomialIndex, T: MonomialIndex) -> int:
    """Rows on which two row-forms pick different columns; InvalidShape if not comparable."""
    def as_map(M: MonomialIndex) -> dict[int, int]:
        rows = M.rows
        if len(set(rows)) != len(rows):
            raise InvalidShape("row-forms use each row once")
        return {r: c for r, c, _ in M.positions}

    a, b = as_map(S), as_map(T)
    if set(a) != set(b):
        raise InvalidShape("row-forms must share their row set")
    return sum(1 for r in a if a[r] != b[r])


def epsilon_ell(ell: int, d: int, n: int) -> float:
    """2^{ℓ+4}·n^{-ℓ/2}·2^{dℓ/√n}."""
    return 2.0 ** (ell + 4) * n ** (-ell / 2.0) * 2.0 ** (d * ell / math.sqrt(n))


def off_diagonal_pairing(S: MonomialIndex, T: MonomialIndex, n: int, n_samples: int,
                         rng: RngStream) -> EstimateWithCI:
    """⟨x_I, x_J⟩_ν for two row-forms at Hamming distance ≥ 1."""
    if hamming(S, T) < 1:
        raise InvalidShape("identical row-forms: use norm_under('nu', ...)")
    pS = GroupPolynomial({S: 1.0}, n)
    pT = GroupPolynomial({T: 1.0}, n)
    inner = _nu_draw([pS, pT], n, square=False)
    return mean_estimate(lambda sub, size: np.prod(inner(sub, size), axis=1), n_samples, rng)


def off_diagonal_pairings(pairs: Sequence[tuple[MonomialIndex, MonomialIndex]], n: int,
                          n_samples: int, rng: RngStream) -> list[EstimateWithCI]:
    """Several ν-pairings on one shared sample."""
    polys = []
    for S, T in pairs:
        if hamming(S, T) < 1:
            raise InvalidShape("identical row-forms: use norm_under('nu', ...)")
        polys += [GroupPolynomial({S: 1.0}, n), GroupPolynomial({T: 1.0}, n)]
    inner = _nu_draw(polys, n, square=False)

    def draw(sub: RngStream, size: int) -> np.ndarray:
        v = inner(sub, size)
        return v[:, 0::2] * v[:, 1::2]

    return monte_carlo(draw, n_samples, rng).estimates(rng.provenance)


# ---------------------------------------------------------------------------
# Comfortable projection
# ---------------------------------------------------------------------------

def comf_projection_factor(d: int, n: int) -> float:
    """m!/(n^d (m-d)!) with m = ⌊n/2⌋."""
    m = n // 2
    if not 0 <= d <= m:
        raise InvalidShape(f"need 0 <= d <= n/2 (d={d}, n={n})")
    return math.perm(m, d) / n**d


def comf_projection_mc(f: GroupPolynomial, d: int, n_samples: int,
                       rng: RngStream) -> tuple[EstimateWithCI, EstimateWithCI, EstimateWithCI]:
    """Estimates of (E Σ_S ⟨R_V f, H_S⟩²_γ, factor·‖f‖²_μ, their difference).

    f is a comfortable d-junta on the top-left d×d block.  The γ-coefficient
    of f(XV) on the monomial ∏_i x_{i, k_i} is f evaluated on the rows
    k_1..k_d of V, so the sum runs over injective k into the first ⌊n/2⌋ rows.
    """
    n = f.n
    if f.field != "real":
        raise Unsupported("comfortable projection is implemented for SO(n)")
    for m in f.terms:
        if any(r >= d or c >= d for r, c, _ in m.positions):
            raise InvalidShape("f must live on the top-left d×d block")
    factor = comf_projection_factor(d, n)
    tuples = [list(k) for k in permutations(range(n // 2), d)]
    g = GroupSpec("SO", n)
    dil = math.sqrt(n)

    def draw(sub: RngStream, size: int) -> np.ndarray:
        V = haar_batch(g, sub, size)
        if d == 0:
            lhs = evaluate_batch(f, np.zeros((size, 1, 1))) ** 2
        else:
            lhs = np.zeros(size)
            for k in tuples:
                lhs += evaluate_batch(f, V[:, k, :d]) ** 2
        rhs = factor * evaluate_batch(f, dil * V) ** 2
        return np.stack([lhs, rhs, lhs - rhs], axis=1)

    return tuple(monte_carlo(draw, n_samples, rng, _chunk_for(n)).estimates(rng.provenance))


# ---------------------------------------------------------------------------
# Column-coupling eigenvalue by regression
# ---------------------------------------------------------------------------

def lambda_S_regression(S, n: int, n_samples: int, rng: RngStream) -> EstimateWithCI:
    """Slope of H_S(Y) on H_S(√n·GS(Y)) over Gaussian Y.

    Conditioning Y on its Gram-Schmidt image multiplies H_S by λ_S, so the
    slope E[xy]/E[x²] estimates λ_S.  The standard error linearizes the ratio.
    """
    S = S if isinstance(S, MonomialIndex) else MonomialIndex.of(S)
    H = GroupPolynomial({S: 1.0}, n)
    dil = math.sqrt(n)

    def draw(sub: RngStream, size: int) -> np.ndarray:
        Y = gaussian_batch(n, "real", sub, size)
        Q, _ = gram_schmidt_batch(Y, "real")
        x = evaluate_batch(H, dil * Q)
        y = evaluate_batch(H, Y)
        u, v = x * y, x * x
        return np.stack([u, v, u * u, v * v, u * v], axis=1)

    stats = monte_carlo(draw, n_samples, rng, _chunk_for(n))
    Eu, Ev, Euu, Evv, Euv = (float(m) for m in stats.mean)
    slope = Eu / Ev
    var = (Euu - Eu**2) - 2 * slope * (Euv - Eu * Ev) + slope**2 * (Evv - Ev**2)
    se = math.sqrt(max(var, 0.0) / stats.n) / Ev
    return EstimateWithCI(slope, se, stats.n, rng.provenance)
