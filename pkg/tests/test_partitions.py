import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from grouplab.errors import InvalidShape
from grouplab.partitions import (HalfPartition, conjugate, dims_table, dually_efficient_truncation,
                                 efficient_truncation, is_associated_pair, is_dually_efficient,
                                 is_efficient, level, littlewood_richardson, lr_conservation_audit,
                                 lr_level_audit, max_passing_c, min_rank_and_D, partition_from_steps,
                                 partitions_of, quasirandom_profile, step_roundtrip_audit,
                                 step_vector, su_partitions_of_level, su_tensor, weyl_dimension)
from grouplab.sampling import GroupSpec


def count_ssyt(lam, n):
    """Brute-force count of semistandard tableaux of shape lam with entries in 1..n."""
    cells = [(r, c) for r, row in enumerate(lam) for c in range(row)]
    fill = {}

    def rec(i):
        if i == len(cells):
            return 1
        r, c = cells[i]
        lo = 1
        if c > 0:
            lo = max(lo, fill[(r, c - 1)])
        if r > 0:
            lo = max(lo, fill[(r - 1, c)] + 1)
        total = 0
        for v in range(lo, n + 1):
            fill[(r, c)] = v
            total += rec(i + 1)
        fill.pop((r, c), None)
        return total

    return rec(0)


small_partitions = st.integers(0, 6).flatmap(lambda d: st.sampled_from(partitions_of(d)))


class TestEnumeration:
    def test_examples(self):
        assert partitions_of(0, 5) == [()]
        assert partitions_of(4, 2) == [(4,), (3, 1), (2, 2)]
        assert len(partitions_of(10)) == 42

    def test_counts(self):
        # partition numbers p(0..12)
        expected = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77]
        assert [len(partitions_of(d)) for d in range(13)] == expected

    @given(st.integers(0, 12), st.integers(1, 6))
    def test_row_bound_and_order(self, d, rows):
        parts = partitions_of(d, rows)
        assert all(sum(p) == d and len(p) <= rows for p in parts)
        assert parts == sorted(parts, reverse=True)
        assert len(set(parts)) == len(parts)

    @given(small_partitions)
    def test_conjugate_involution(self, lam):
        assert conjugate(conjugate(lam)) == lam
        assert sum(conjugate(lam)) == sum(lam)

    def test_invalid(self):
        with pytest.raises(InvalidShape):
            weyl_dimension(GroupSpec("SO", 5), (1, 2))
        with pytest.raises(InvalidShape):
            weyl_dimension(GroupSpec("SO", 5), (1, 1, 1))


class TestLevels:
    def test_examples(self):
        assert level(GroupSpec("SO", 7), (2, 1)) == 3
        assert level(GroupSpec("SU", 6), (1, 1, 1, 1, 1)) == 1
        assert level(GroupSpec("SU", 6), (2,)) == 2

    def test_steps(self):
        assert step_vector((3, 1), 4) == (2, 1, 0)
        assert partition_from_steps((0, 0, 1)) == (1, 1, 1)

    def test_truncations(self):
        lam = (2, 1, 1, 1, 1)
        assert efficient_truncation(lam, 6) == (1,)
        assert dually_efficient_truncation(lam, 6) == (1, 1, 1, 1, 1)
        assert is_efficient((1,), 6) and is_dually_efficient((1, 1, 1, 1, 1), 6)

    @given(st.integers(3, 9), st.data())
    def test_step_roundtrip(self, n, data):
        steps = tuple(data.draw(st.lists(st.integers(0, 4), min_size=n - 1, max_size=n - 1)))
        assert step_vector(partition_from_steps(steps), n) == steps

    @settings(deadline=None, max_examples=30)
    @given(st.integers(3, 7), st.integers(0, 5))
    def test_su_levels_enumeration(self, n, d):
        shapes = su_partitions_of_level(n, d)
        g = GroupSpec("SU", n)
        assert all(level(g, lam) == d for lam in shapes)
        # brute force over step vectors bounded by d
        brute = set()
        for lam in (l for s in range(d * n + 1) for l in partitions_of(s, n - 1)):
            if level(g, lam) == d:
                brute.add(lam)
        assert set(shapes) == brute

    def test_step_audit(self):
        rows = step_roundtrip_audit(9, 8)
        assert rows and all(r.passed for r in rows)


class TestLittlewoodRichardson:
    def test_examples(self):
        assert littlewood_richardson((1,), (1,)) == {(2,): 1, (1, 1): 1}
        assert littlewood_richardson((2, 1), (2, 1))[(3, 2, 1)] == 2
        assert littlewood_richardson((), (3, 1)) == {(3, 1): 1}

    @settings(max_examples=40)
    @given(small_partitions, small_partitions)
    def test_size_and_symmetry(self, a, b):
        lr = littlewood_richardson(a, b)
        assert all(sum(lam) == sum(a) + sum(b) for lam in lr)
        assert lr == littlewood_richardson(b, a)
        # the count of standard fillings matches f^a f^b binom(|a|+|b|, |a|)
        f = lambda lam: math.factorial(sum(lam)) // hook_product(lam)
        lhs = sum(m * f(lam) for lam, m in lr.items())
        assert lhs == f(a) * f(b) * math.comb(sum(a) + sum(b), sum(a))

    def test_su_tensor_conserves_dimension(self):
        rows = lr_conservation_audit((3, 5), 3)
        assert rows and all(r.passed for r in rows)

    def test_level_audit(self):
        rows = lr_level_audit((6, 7), 4)
        assert rows and all(r.passed for r in rows)

    def test_su_tensor_strips_columns(self):
        assert su_tensor((1,), (1, 1), 3) == {(2, 1): 1, (): 1}


def hook_product(lam):
    conj = conjugate(lam)
    return math.prod(lam[i] - j + conj[j] - i - 1 for i in range(len(lam)) for j in range(lam[i]))


class TestDimensions:
    def test_examples(self):
        assert weyl_dimension(GroupSpec("SO", 5), (1,)) == 5
        for d in range(8):
            assert weyl_dimension(GroupSpec("Sp", 1), (d,)) == d + 1

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_su_matches_tableaux(self, n):
        g = GroupSpec("SU", n)
        for d in range(6):
            for lam in partitions_of(d, n - 1):
                assert weyl_dimension(g, lam) == count_ssyt(lam, n)

    @pytest.mark.parametrize("n", [5, 6, 7, 8, 9])
    def test_so_closed_forms(self, n):
        g = GroupSpec("SO", n)
        for d in range(1, 5):
            if d <= n // 2:
                sym = math.comb(n + d - 1, d) - math.comb(n + d - 3, d - 2) if d >= 2 else n
                assert weyl_dimension(g, (d,)) == sym
            if d < n / 2:
                assert weyl_dimension(g, (1,) * d) == math.comb(n, d)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_sp_closed_forms(self, n):
        g = GroupSpec("Sp", n)
        assert weyl_dimension(g, (1,)) == 2 * n
        assert weyl_dimension(g, (2,)) == n * (2 * n + 1)
        for k in range(2, n + 1):
            assert weyl_dimension(g, (1,) * k) == math.comb(2 * n, k) - math.comb(2 * n, k - 2)

    def test_spinors(self):
        for k in range(1, 6):
            half = HalfPartition((1,) * k)
            assert weyl_dimension(GroupSpec("Spin", 2 * k + 1), half) == 2**k
            if k >= 2:
                assert weyl_dimension(GroupSpec("Spin", 2 * k), half) == 2 ** (k - 1)

    def test_so_even_associated(self):
        g = GroupSpec("SO", 6)
        assert is_associated_pair(g, (1, 1, 1))
        assert not is_associated_pair(g, (1, 1))
        # Λ³ of the 6-dim space splits into two 10-dimensional pieces
        assert weyl_dimension(g, (1, 1, 1)) == 10

    def test_dims_table_levels(self):
        rows = dims_table(GroupSpec("SO", 11), 6)
        assert {r.level for r in rows} == set(range(7))
        assert all(r.passed for r in rows)


class TestQuasirandom:
    def test_profile(self):
        prof = quasirandom_profile(100, 0.5)
        assert prof.Q[1] == pytest.approx(50)
        assert prof.Q[2] == pytest.approx(625)

    def test_min_rank(self):
        assert min_rank_and_D([("SU", 5)]) == (5, 5)
        assert min_rank_and_D([("Sp", 3), ("SU", 10)]) == (3, 6)
        assert min_rank_and_D([("Spin", 4)]) == (4, 4)

    def test_max_passing_c(self):
        c = max_passing_c(GroupSpec("SO", 11), 5)
        assert 0 < c <= 1
        prof = quasirandom_profile(11, c)
        assert weyl_dimension(GroupSpec("SO", 11), (1,)) >= prof.bound(1)

    def test_low_level_bound_fraction(self):
        from grouplab.partitions import low_level_bound
        assert low_level_bound(GroupSpec("SO", 10), 2) == Fraction(32)
