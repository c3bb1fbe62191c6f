"""Fundamental weights and exact Laplace-Beltrami eigenvalues.

Weights are realized as coordinate vectors over an orthogonal basis: the
u_j (squared norm 2) for SO and Sp, the standard e_j (squared norm 1) for
SU.  The eigenvalue attached to a dominant weight v = Σ r_i w_i is
λ_v = -2⟨v, σ⟩ - ‖v‖², with σ = Σ w_i.  Spin reuses the SO system for
integer weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Sequence

from .errors import Unsupported
from .partitions import (HalfPartition, fmt, level, max_rows, partitions_of,
                         step_vector, su_partitions_of_level, validate)
from .sampling import GroupSpec, normalize_family

Gram = tuple[tuple[Fraction, ...], ...]


@dataclass(frozen=True)
class WeightSystem:
    family: str
    n: int
    coords: tuple[tuple[Fraction, ...], ...]  # w_i in the orthogonal basis
    basis_norm2: Fraction
    gram: Gram

    @property
    def rank(self) -> int:
        return len(self.coords)

    @property
    def sigma(self) -> tuple[int, ...]:
        return (1,) * self.rank


@dataclass(frozen=True)
class WeightCoefficients:
    r: tuple[int, ...]
    mirrored: bool = False
    has_mirror: bool = False


def _gram(coords, norm2: Fraction) -> Gram:
    return tuple(
        tuple(norm2 * sum((a * b for a, b in zip(u, v)), Fraction(0)) for v in coords)
        for u in coords
    )


def _prefix(i: int, k: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(1 if j < i else 0) for j in range(k))


def _family(family) -> str:
    return normalize_family(family) if isinstance(family, str) else family.family


def weight_system(family: str, n: int) -> WeightSystem:
    return _weight_system(_family(family), n)


@lru_cache(maxsize=None)
def _weight_system(fam: str, n: int) -> WeightSystem:
    if fam == "Spin":
        raise Unsupported("Spin uses the SO(n) weight system")
    if fam == "SO":
        if n < 3:
            raise ValueError("SO(n) weights need n >= 3")
        k = n // 2
        half = tuple(Fraction(1, 2) for _ in range(k))
        if n % 2:
            coords = [_prefix(i, k) for i in range(1, k)] + [half]
        else:
            coords = [_prefix(i, k) for i in range(1, k - 1)]
            last = half[:-1] + (Fraction(-1, 2),)
            coords += [half, last]
        norm2 = Fraction(2)
    elif fam == "Sp":
        coords = [_prefix(i, n) for i in range(1, n + 1)]
        norm2 = Fraction(2)
    else:
        coords = [tuple(Fraction(1 if j < i else 0) - Fraction(i, n) for j in range(n))
                  for i in range(1, n)]
        norm2 = Fraction(1)
    coords = tuple(coords)
    return WeightSystem(fam, n, coords, norm2, _gram(coords, norm2))


def partition_to_weights(family: str, lam, n: int, mirrored: bool = False) -> WeightCoefficients:
    fam = _family(family)
    g = GroupSpec(fam, n)
    if isinstance(lam, HalfPartition):
        raise Unsupported("half-integer Spin weights are outside the implemented systems")
    lam = validate(g, lam)
    if fam == "SU":
        return WeightCoefficients(step_vector(lam, n))
    if fam == "Sp":
        parts = list(lam) + [0] * (n + 1 - len(lam))
        return WeightCoefficients(tuple(parts[i] - parts[i + 1] for i in range(n)))
    k = n // 2
    parts = list(lam) + [0] * (k + 1 - len(lam))
    diffs = [parts[i] - parts[i + 1] for i in range(k)]
    if n % 2:
        return WeightCoefficients(tuple(diffs[: k - 1]) + (2 * parts[k - 1],))
    a, b = parts[k - 2] - parts[k - 1], parts[k - 2] + parts[k - 1]
    if mirrored:
        a, b = b, a
    return WeightCoefficients(tuple(diffs[: k - 2]) + (a, b), mirrored, parts[k - 1] > 0)


def _system(fam: str, n: int) -> WeightSystem:
    return weight_system("SO" if fam == "Spin" else fam, n)


def _combine(ws: WeightSystem, r: Sequence[int]) -> list[Fraction]:
    # coordinates of Σ r_i w_i in the orthogonal basis
    out = [Fraction(0)] * len(ws.coords[0]) if ws.coords else []
    for ri, w in zip(r, ws.coords):
        if ri:
            out = [a + ri * b for a, b in zip(out, w)]
    return out


def laplacian_eigenvalue(family: str, lam, n: int, mirrored: bool = False) -> Fraction:
    """-2⟨v, σ⟩ - ‖v‖² for the dominant weight v attached to λ."""
    fam = _family(family)
    ws = _system(fam, n)
    v = _combine(ws, partition_to_weights(fam, lam, n, mirrored).r)
    sigma = _combine(ws, ws.sigma)
    inner = sum((a * b for a, b in zip(v, sigma)), Fraction(0))
    norm2 = sum((a * a for a in v), Fraction(0))
    return -ws.basis_norm2 * (2 * inner + norm2)


def eigenvalue_envelope(D, n: int) -> Fraction:
    return Fraction(-2 * D * D - 2 * n * D)


def check_eigenvalue_bound(family: str, lam, n: int, mirrored: bool = False):
    fam = _family(family)
    lam_v = laplacian_eigenvalue(fam, lam, n, mirrored)
    D = level(GroupSpec(fam, n), lam)
    return lam_v, D, eigenvalue_envelope(D, n) <= lam_v <= 0


@dataclass(frozen=True)
class LaplacianRow:
    family: str
    n: int
    partition: str
    D: int
    eigenvalue: Fraction
    bound: Fraction
    passed: bool
    mirrored: bool = False

    def csv_fields(self) -> list:
        return [self.family, self.n, self.partition, self.D, str(self.eigenvalue), str(self.bound),
                "pass" if self.passed else "fail"]


def _lowest_n(fam: str) -> int:
    return {"SO": 3, "Spin": 3, "SU": 2, "Sp": 1}[fam]


def laplacian_table(family: str, n: int, dmax: int = 8) -> list[LaplacianRow]:
    fam = _family(family)
    g = GroupSpec(fam, n)
    rows = []
    for D in range(dmax + 1):
        shapes = su_partitions_of_level(n, D) if fam == "SU" else partitions_of(D, max_rows(g))
        for lam in shapes:
            branches = [False]
            if fam in ("SO", "Spin") and n % 2 == 0 and len(lam) == n // 2:
                branches.append(True)
            for mirrored in branches:
                lam_v, d, ok = check_eigenvalue_bound(fam, lam, n, mirrored)
                rows.append(LaplacianRow(fam, n, fmt(lam), d, lam_v, eigenvalue_envelope(d, n), ok,
                                         mirrored))
    return rows


def laplacian_audit(families: Sequence[str] = ("SO", "SU", "Sp", "Spin"), n_max: int = 12,
                    dmax: int = 8) -> list[LaplacianRow]:
    rows = []
    for fam in families:
        for n in range(_lowest_n(fam), n_max + 1):
            rows.extend(laplacian_table(fam, n, dmax))
    return rows

