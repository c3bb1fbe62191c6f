"""Partitions, levels, step vectors, Littlewood-Richardson products and
Weyl dimension formulas, all in exact arithmetic.

Integer partitions are plain tuples of positive ints (trailing zeros are
stripped).  Half-integer Spin weights use :class:`HalfPartition`, which
stores doubled parts so that arithmetic stays in the integers.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import InvalidShape, NonIntegerResult
from .sampling import GroupSpec

Partition = tuple[int, ...]


@dataclass(frozen=True)
class HalfPartition:
    """A Spin weight whose parts all have fractional part 1/2 (stored doubled)."""

    doubled: tuple[int, ...]

    def __post_init__(self):
        d = tuple(int(x) for x in self.doubled)
        if not d or any(x % 2 == 0 or x < 0 for x in d):
            raise InvalidShape("half-integer parts must be positive odd multiples of 1/2")
        if any(a < b for a, b in zip(d, d[1:])):
            raise InvalidShape("parts must be weakly decreasing")
        object.__setattr__(self, "doubled", d)

    @classmethod
    def from_parts(cls, parts: Iterable) -> "HalfPartition":
        return cls(tuple(int(Fraction(p) * 2) for p in parts))

    @property
    def parts(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(x, 2) for x in self.doubled)

    def __len__(self) -> int:
        return len(self.doubled)

    def __str__(self) -> str:
        return "(" + ",".join(f"{x}/2" for x in self.doubled) + ")"


def normalize(parts: Sequence[int]) -> Partition:
    out = []
    for p in parts:
        if int(p) != p or p < 0:
            raise InvalidShape(f"partition parts must be non-negative integers, got {tuple(parts)}")
        out.append(int(p))
    if any(a < b for a, b in zip(out, out[1:])):
        raise InvalidShape(f"partition must be weakly decreasing, got {tuple(parts)}")
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def fmt(lam) -> str:
    if isinstance(lam, HalfPartition):
        return str(lam)
    return "(" + ",".join(str(p) for p in lam) + ")"


def conjugate(lam: Sequence[int]) -> Partition:
    lam = normalize(lam)
    if not lam:
        return ()
    return tuple(sum(1 for p in lam if p > j) for j in range(lam[0]))


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def partitions_of(d: int, max_rows: int | None = None) -> list[Partition]:
    """All partitions of d with at most max_rows rows, lexicographically descending."""
    if d < 0:
        raise ValueError("d must be non-negative")
    rows = d if max_rows is None else max_rows

    def rec(remaining: int, cap: int, slots: int) -> Iterator[Partition]:
        if remaining == 0:
            yield ()
            return
        if slots == 0:
            return
        for first in range(min(remaining, cap), 0, -1):
            for rest in rec(remaining - first, first, slots - 1):
                yield (first,) + rest

    return list(rec(d, d, rows))


def max_rows(g: GroupSpec) -> int:
    if g.family in ("SO", "Spin"):
        return g.n // 2
    if g.family == "Sp":
        return g.n
    return g.n - 1


def su_reduce(lam: Sequence[int], n: int) -> Partition:
    """Strip full columns of height n (they act trivially on SU(n))."""
    lam = normalize(lam)
    if len(lam) > n:
        raise InvalidShape(f"{fmt(lam)} has more than {n} rows")
    if len(lam) == n:
        lam = normalize([p - lam[-1] for p in lam])
    return lam


def validate(g: GroupSpec, lam) -> Partition | HalfPartition:
    if isinstance(lam, HalfPartition):
        if g.family != "Spin":
            raise InvalidShape("half-integer weights only exist for Spin")
        if len(lam) != g.n // 2:
            raise InvalidShape(f"Spin({g.n}) half-integer weights need exactly {g.n // 2} parts")
        return lam
    if g.family == "SU":
        return su_reduce(lam, g.n)
    lam = normalize(lam)
    if len(lam) > max_rows(g):
        raise InvalidShape(f"{fmt(lam)} has too many rows for {g}")
    return lam


# ---------------------------------------------------------------------------
# Levels and step vectors
# ---------------------------------------------------------------------------

def step_vector(lam: Sequence[int], n: int) -> tuple[int, ...]:
    lam = normalize(lam)
    if len(lam) >= n:
        raise InvalidShape(f"{fmt(lam)} needs fewer than {n} rows")
    padded = list(lam) + [0] * (n - len(lam))
    return tuple(padded[i] - padded[i + 1] for i in range(n - 1))


def partition_from_steps(steps: Sequence[int]) -> Partition:
    if any(a < 0 for a in steps):
        raise InvalidShape("step vector entries must be non-negative")
    parts, acc = [], 0
    for a in reversed(steps):
        acc += a
        parts.append(acc)
    return normalize(parts[::-1])


def level(g: GroupSpec, lam):
    """Σλ for SO/Sp/Spin; the min-weighted step sum for SU."""
    lam = validate(g, lam)
    if isinstance(lam, HalfPartition):
        return Fraction(sum(lam.doubled), 2)
    if g.family == "SU":
        a = step_vector(lam, g.n)
        return sum(ai * min(i, g.n - i) for i, ai in enumerate(a, start=1))
    return sum(lam)


def _half_index(n: int) -> int:
    # number of steps in the "first half": a_1 .. a_{ceil(n/2)-1}
    return (n + 1) // 2 - 1


def efficient_truncation(lam: Sequence[int], n: int) -> Partition:
    a = step_vector(lam, n)
    h = _half_index(n)
    return partition_from_steps(list(a[:h]) + [0] * (n - 1 - h))


def dually_efficient_truncation(lam: Sequence[int], n: int) -> Partition:
    a = step_vector(lam, n)
    h = _half_index(n)
    return partition_from_steps([0] * h + list(a[h:]))


def is_efficient(lam: Sequence[int], n: int) -> bool:
    return len(normalize(lam)) < n // 2


def is_dually_efficient(lam: Sequence[int], n: int) -> bool:
    a = step_vector(lam, n)
    return not any(a[: _half_index(n)])


def su_partitions_of_level(n: int, d: int) -> list[Partition]:
    """All SU(n) highest weights (fewer than n rows) of total level d."""
    weights = [min(i, n - i) for i in range(1, n)]
    out = []

    def rec(i: int, remaining: int, steps: list[int]):
        if i == len(weights):
            if remaining == 0:
                out.append(partition_from_steps(steps))
            return
        for a in range(remaining // weights[i] + 1):
            steps.append(a)
            rec(i + 1, remaining - a * weights[i], steps)
            steps.pop()

    rec(0, d, [])
    return sorted(out, reverse=True)


# ---------------------------------------------------------------------------
# Littlewood-Richardson
# ---------------------------------------------------------------------------

def _horizontal_strips(shape: Partition, m: int) -> Iterator[tuple[Partition, tuple[int, ...]]]:
    """Shapes obtained by adding a horizontal strip of m boxes, with per-row additions."""
    rows = list(shape) + [0]

    def rec(i: int, remaining: int, new: list[int], added: list[int]):
        if i == len(rows):
            if remaining == 0:
                yield normalize(new), tuple(added)
            return
        cap = remaining if i == 0 else min(remaining, rows[i - 1] - rows[i])
        for k in range(cap, -1, -1):
            yield from rec(i + 1, remaining - k, new + [rows[i] + k], added + [k])

    yield from rec(0, m, [], [])


def littlewood_richardson(alpha: Sequence[int], beta: Sequence[int]) -> dict[Partition, int]:
    """Expansion of s_α·s_β: boxes of β are added to α row by row with labels
    1, 2, ..., as horizontal strips, keeping fillings whose reverse reading
    word is a lattice word."""
    alpha, beta = normalize(alpha), normalize(beta)
    result: Counter = Counter()

    def lattice_ok(fill: dict[int, list[int]], labels: int) -> bool:
        counts = [0] * (labels + 2)
        for r in sorted(fill):
            for lab in reversed(fill[r]):
                counts[lab] += 1
                if lab > 1 and counts[lab] > counts[lab - 1]:
                    return False
        return True

    def rec(label: int, shape: Partition, fill: dict[int, list[int]]):
        if label > len(beta):
            result[shape] += 1
            return
        for new_shape, added in _horizontal_strips(shape, beta[label - 1]):
            nf = {r: list(v) for r, v in fill.items()}
            for r, k in enumerate(added):
                if k:
                    nf.setdefault(r, []).extend([label] * k)
            if lattice_ok(nf, label):
                rec(label + 1, new_shape, nf)

    rec(1, alpha, {})
    return dict(sorted(result.items(), reverse=True))


def su_tensor(alpha: Sequence[int], beta: Sequence[int], n: int) -> dict[Partition, int]:
    """LR product restricted to SU(n): drop shapes with > n rows, strip full columns."""
    out: Counter = Counter()
    for lam, mult in littlewood_richardson(alpha, beta).items():
        if len(lam) <= n:
            out[su_reduce(lam, n)] += mult
    return dict(out)


# ---------------------------------------------------------------------------
# Weyl dimension formulas
# ---------------------------------------------------------------------------

def _as_fracs(lam, k: int) -> list[Fraction]:
    if isinstance(lam, HalfPartition):
        parts = list(lam.parts)
    else:
        parts = [Fraction(p) for p in lam]
    return parts + [Fraction(0)] * (k - len(parts))


def _typeA(l: list[Fraction]) -> Fraction:
    k = len(l)
    out = Fraction(1)
    for i in range(k):
        for j in range(i + 1, k):
            out *= Fraction(l[i] - l[j] + j - i, j - i)
    return out


def _dim_so_odd(l: list[Fraction]) -> Fraction:
    k = len(l)
    out = _typeA(l)
    for i in range(1, k + 1):
        for j in range(i, k + 1):
            den = 2 * k + 1 - i - j
            out *= (l[i - 1] + l[j - 1] + den) / den
    return out


def _dim_so_even(l: list[Fraction]) -> Fraction:
    k = len(l)
    out = _typeA(l)
    for i in range(1, k + 1):
        for j in range(i + 1, k + 1):
            den = 2 * k - i - j
            out *= (l[i - 1] + l[j - 1] + den) / den
    return out


def _dim_sp(l: list[Fraction]) -> Fraction:
    n = len(l)
    out = _typeA(l)
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            den = 2 * n + 2 - i - j
            out *= (l[i - 1] + l[j - 1] + den) / den
    return out


def is_associated_pair(g: GroupSpec, lam) -> bool:
    """True for SO(2k) shapes with exactly k rows: two inequivalent irreducibles
    (λ_k and -λ_k) share this partition and this dimension."""
    if g.family not in ("SO", "Spin") or g.n % 2:
        return False
    lam = validate(g, lam)
    return len(lam) == g.n // 2 and g.n >= 2


def weyl_dimension(g: GroupSpec, lam) -> int:
    """Exact dimension of the irreducible representation of g with highest weight λ."""
    lam = validate(g, lam)
    if g.family == "SU":
        val = _typeA(_as_fracs(lam, g.n))
    elif g.family == "Sp":
        val = _dim_sp(_as_fracs(lam, g.n))
    else:
        k = g.n // 2
        l = _as_fracs(lam, k)
        val = _dim_so_odd(l) if g.n % 2 else _dim_so_even(l)
    if val.denominator != 1 or val <= 0:
        raise NonIntegerResult(f"dimension of {fmt(lam)} for {g} came out as {val}")
    return int(val)


# ---------------------------------------------------------------------------
# Quasirandomness and group-level constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuasirandomProfile:
    n: int
    c: float
    Q: dict[int, float]
    tail: float

    def bound(self, d: int) -> float:
        if d in self.Q:
            return self.Q[d]
        return self.tail if d > 0 else 1.0


def quasirandom_profile(n: int, c: float = 0.125) -> QuasirandomProfile:
    if n < 2 or not (0 < c <= 1):
        raise ValueError("need n >= 2 and 0 < c <= 1")
    threshold = c * n / (1 + c)
    tail = (1 + c) ** threshold
    Q = {}
    for d in range(1, (n + 1) // 2):
        Q[d] = (c * n / d) ** d if d < threshold else tail
    return QuasirandomProfile(n, c, Q, tail)


def min_dimension_by_level(g: GroupSpec, dmax: int) -> dict[int, int]:
    out = {}
    for d in range(1, dmax + 1):
        if g.family == "SU":
            shapes = su_partitions_of_level(g.n, d)
        else:
            shapes = partitions_of(d, max_rows(g))
        if shapes:
            out[d] = min(weyl_dimension(g, lam) for lam in shapes)
    return out


def max_passing_c(g: GroupSpec, dmax: int, tol: float = 1e-6) -> float:
    """Largest c in (0, 1] with dim ≥ Q_d(c) at every level d ≤ dmax (0 if none)."""
    mins = min_dimension_by_level(g, dmax)

    def ok(c: float) -> bool:
        prof = quasirandom_profile(g.n, c)
        return all(m >= prof.bound(d) for d, m in mins.items())

    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def quasirandom_D(g: GroupSpec) -> int:
    if g.family in ("SU", "Spin"):
        return g.n
    if g.family == "Sp":
        return 2 * g.n
    raise ValueError("min-rank bookkeeping covers SU, Spin and Sp factors")


def min_rank_and_D(factors: Iterable) -> tuple[int, int]:
    specs = [f if isinstance(f, GroupSpec) else GroupSpec(*f) for f in factors]
    if not specs:
        raise ValueError("need at least one factor")
    return min(s.n for s in specs), min(quasirandom_D(s) for s in specs)


# ---------------------------------------------------------------------------
# Audits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AuditRow:
    family: str
    n: int
    partition: str
    level: object
    dimension: int | None
    bound: float | None
    passed: bool
    check: str = ""

    def csv_fields(self) -> list:
        return [self.family, self.n, self.partition, self.level, self.dimension,
                "" if self.bound is None else f"{float(self.bound):.6g}",
                "pass" if self.passed else "fail"]


def low_level_bound(g: GroupSpec, d: int) -> Fraction | int:
    if g.family == "SU":
        return math.comb(g.n // 2, d)
    return Fraction((g.n - d) ** d, math.factorial(d))


def high_level_bound(g: GroupSpec) -> float | None:
    if g.family in ("SO", "Spin"):
        return math.exp(g.n / 32)
    if g.family == "Sp":
        return math.exp(g.n / 16)
    return None


def dimension_bound(g: GroupSpec, d: int) -> tuple[float | None, str]:
    """The lower bound applicable at level d, with the name of its regime."""
    if 2 * d < g.n:
        return low_level_bound(g, d), "low-level"
    b = high_level_bound(g)
    return b, ("high-level" if b is not None else "none")


def _shapes(g: GroupSpec, d: int) -> list[Partition]:
    if g.family == "SU":
        return su_partitions_of_level(g.n, d)
    return partitions_of(d, max_rows(g))


def dims_table(g: GroupSpec, dmax: int) -> list[AuditRow]:
    rows = []
    for d in range(dmax + 1):
        bound, regime = dimension_bound(g, d)
        for lam in _shapes(g, d):
            dim = weyl_dimension(g, lam)
            passed = bound is None or dim >= bound
            rows.append(AuditRow(g.family, g.n, fmt(lam), d, dim, bound, passed, regime))
    return rows


def lb1_audit(ns: Sequence[int] = (10, 20), dmax: int = 6,
              families: Sequence[str] = ("SO", "Sp", "SU")) -> list[AuditRow]:
    rows = []
    for fam in families:
        for n in ns:
            g = GroupSpec(fam, n)
            for d in range(dmax + 1):
                if 2 * d >= n:
                    break
                bound = low_level_bound(g, d)
                for lam in _shapes(g, d):
                    dim = weyl_dimension(g, lam)
                    rows.append(AuditRow(fam, n, fmt(lam), d, dim, bound, dim >= bound, "lb1"))
    return rows


def lb2_audit(ns: Sequence[int] = (10, 12), families: Sequence[str] = ("SO", "Sp")) -> list[AuditRow]:
    rows = []
    for fam in families:
        for n in ns:
            g = GroupSpec(fam, n)
            bound = high_level_bound(g)
            lo = math.ceil(n / 2)
            for d in range(lo, math.floor(n / 2 + 3) + 1):
                for lam in partitions_of(d, max_rows(g)):
                    dim = weyl_dimension(g, lam)
                    rows.append(AuditRow(fam, n, fmt(lam), d, dim, bound, dim >= bound, "lb2"))
    return rows


def lr_conservation_audit(ns: Sequence[int] = (5, 8), max_size: int = 4) -> list[AuditRow]:
    rows = []
    shapes = [lam for d in range(max_size + 1) for lam in partitions_of(d)]
    for n in ns:
        g = GroupSpec("SU", n)
        for a in shapes:
            if len(a) > n:
                continue
            for b in shapes:
                if len(b) > n:
                    continue
                lhs = weyl_dimension(g, a) * weyl_dimension(g, b)
                rhs = sum(m * weyl_dimension(g, lam) for lam, m in su_tensor(a, b, n).items())
                rows.append(AuditRow("SU", n, f"{fmt(a)}x{fmt(b)}", None, lhs, rhs, lhs == rhs,
                                     "lr-conservation"))
    return rows


def lr_level_audit(ns: Sequence[int] = (6, 8), max_total: int = 5) -> list[AuditRow]:
    """Efficient α times dually-efficient β has exactly one constituent of
    level |α| + level(β), and every other constituent sits strictly lower."""
    rows = []
    for n in ns:
        g = GroupSpec("SU", n)
        half = n // 2
        for sa in range(max_total + 1):
            alphas = [a for a in partitions_of(sa) if len(a) < half]
            for sb in range(max_total - sa + 1):
                betas = [b for b in partitions_of(sb, n - 1) if is_dually_efficient(b, n)]
                for a in alphas:
                    for b in betas:
                        target = sum(a) + level(g, b)
                        prod = su_tensor(a, b, n)
                        top = [(lam, m) for lam, m in prod.items() if level(g, lam) == target]
                        above = [lam for lam in prod if level(g, lam) > target]
                        ok = len(top) == 1 and top[0][1] == 1 and not above
                        rows.append(AuditRow("SU", n, f"{fmt(a)}x{fmt(b)}", target, None, None, ok,
                                             "lr-level"))
    return rows


def step_roundtrip_audit(n: int = 13, max_weight: int = 12) -> list[AuditRow]:
    rows = []

    def rec(i: int, remaining: int, steps: list[int]):
        if i == n:
            s = tuple(steps)
            back = step_vector(partition_from_steps(s), n)
            rows.append(AuditRow("SU", n, str(s), None, None, None, back == s, "step-roundtrip"))
            return
        for a in range(remaining // i + 1):
            steps.append(a)
            rec(i + 1, remaining - a * i, steps)
            steps.pop()

    rec(1, max_weight, [])
    return rows
