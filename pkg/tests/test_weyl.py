import math
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grouplab.empirical import lambda_S_regression
from grouplab.errors import FieldMismatch, InvalidShape, NotComfortable, TooLarge
from grouplab.estimates import RunningStats
from grouplab.partitions import conjugate, partitions_of
from grouplab.sampling import (GroupSpec, RngStream, expected_chi_norm, gaussian_batch,
                               haar_batch, qmatmul, sample_haar)
from grouplab.weyl import (GroupPolynomial, MonomialIndex, comfortable_junta, compose, evaluate,
                           evaluate_batch, lambda_S, lambda_bracket_audit, left_translate, perm_sign, right_translate,
                           young_symmetrizer)

N_LAST = {"real": 0, "complex": 1, "quaternion": 3}


def algebra_product(a: dict, b: dict) -> dict:
    out = defaultdict(int)
    for p, x in a.items():
        for q, y in b.items():
            out[compose(p, q)] += x * y
    return {k: v for k, v in out.items() if v}


def hook_product(lam):
    conj = conjugate(lam)
    return math.prod(lam[i] - j + conj[j] - i - 1 for i in range(len(lam)) for j in range(lam[i]))


class TestSymmetrizer:
    def test_examples(self):
        assert young_symmetrizer((2,)).terms == (((0, 1), 1), ((1, 0), 1))
        assert young_symmetrizer((1, 1)).terms == (((0, 1), 1), ((1, 0), -1))
        with pytest.raises(TooLarge):
            young_symmetrizer((9,))

    @pytest.mark.parametrize("lam", [lam for d in range(1, 5) for lam in partitions_of(d)])
    def test_quasi_idempotent(self, lam):
        # c_λ² = (hook product) · c_λ
        c = young_symmetrizer(lam).as_dict()
        sq = algebra_product(c, c)
        h = hook_product(lam)
        assert sq == {k: h * v for k, v in c.items()}

    def test_sign(self):
        assert perm_sign((1, 0, 2)) == -1
        assert perm_sign((1, 2, 0)) == 1


class TestJunta:
    def test_rotation_block(self):
        X = np.eye(6)
        X[:2, :2] = [[0, -1], [1, 0]]
        assert evaluate(comfortable_junta((1, 1), 6), X) == pytest.approx(1.0)

    @pytest.mark.parametrize("lam", [(1,), (2,), (1, 1), (2, 1), (3,), (1, 1, 1)])
    def test_identity(self, lam):
        assert evaluate(comfortable_junta(lam, 8), np.eye(8)) == pytest.approx(1.0)

    def test_needs_room(self):
        with pytest.raises(InvalidShape):
            comfortable_junta((2, 1), 6)

    def test_cross_degree_orthogonality(self):
        n = 10
        shapes = [(1,), (2,), (1, 1), (2, 1), (1, 1, 1), (3,)]
        P = [comfortable_junta(lam, n) for lam in shapes]
        pairs = [(i, j) for i in range(len(P)) for j in range(len(P)) if sum(shapes[i]) < sum(shapes[j])]
        stats = RunningStats()
        rng = RngStream(2024)
        for k in range(20):
            X = haar_batch(GroupSpec("SO", n), rng.fork(k), 50_000) * math.sqrt(n)
            vals = [evaluate_batch(p, X) for p in P]
            stats.push(np.stack([vals[i] * vals[j] for i, j in pairs], axis=1))
        for est in stats.estimates():
            assert abs(est.value) <= 3 * est.std_error + 1e-12


class TestPolynomial:
    def test_json_roundtrip(self):
        p = comfortable_junta((2, 1), 8) + GroupPolynomial.constant(0.5, 8)
        q = GroupPolynomial.from_json(p.to_json(), 8)
        assert p.approx_equal(q, 0)

    def test_arithmetic(self):
        x = GroupPolynomial.monomial([(0, 0)], 4)
        y = GroupPolynomial.monomial([(1, 1)], 4)
        X = np.arange(16.0).reshape(4, 4)
        assert evaluate((x + y) * (x - y), X) == pytest.approx(0.0 ** 2 - 5.0 ** 2)
        assert (x * y).degree == 2

    def test_field_mismatch(self):
        x = GroupPolynomial.monomial([(0, 0)], 3)
        z = GroupPolynomial.monomial([(0, 0, 1)], 3, "complex")
        with pytest.raises(FieldMismatch):
            x + z
        with pytest.raises(FieldMismatch):
            evaluate(x, np.eye(3, dtype=complex))

    def test_comfort(self):
        assert MonomialIndex.of([(0, 0), (1, 2)]).is_comfortable(6)
        assert not MonomialIndex.of([(0, 0), (1, 3)]).is_column_comfortable(6)

    def test_complex_parts(self):
        z = GroupPolynomial.monomial([(0, 1, 1)], 2, "complex", normalized=False)
        X = np.array([[0, 2 + 3j], [0, 0]])
        assert evaluate(z, X) == 3.0


class TestTranslation:
    def test_identity(self):
        p = comfortable_junta((2, 1), 8)
        assert right_translate(p, np.eye(8)).approx_equal(p, 1e-10)
        assert left_translate(p, np.eye(8)).approx_equal(p, 1e-10)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**31), st.sampled_from(["real", "complex", "quaternion"]))
    def test_matches_matrix_product(self, seed, field):
        rng = RngStream(seed)
        n = 3
        fam = {"real": "SO", "complex": "SU", "quaternion": "Sp"}[field]
        V = sample_haar(GroupSpec(fam, n), rng.fork(0))
        p = (GroupPolynomial.monomial([(0, 0, 0), (1, 2, 0)], n, field)
             + GroupPolynomial.monomial([(2, 1, N_LAST[field])], n, field, coeff=-0.7))
        X = gaussian_batch(n, field, rng.fork(1), 5)
        if field == "quaternion":
            XV, VX = qmatmul(X, V.data), qmatmul(V.data, X)
        else:
            XV, VX = X @ V.data, V.data @ X
        assert np.allclose(evaluate_batch(right_translate(p, V), X), evaluate_batch(p, XV), atol=1e-10)
        assert np.allclose(evaluate_batch(left_translate(p, V), X), evaluate_batch(p, VX), atol=1e-10)

    def test_haar_invariance_of_norm(self):
        # ‖p‖² is unchanged by right translation
        n = 6
        p = comfortable_junta((1, 1), n)
        V = sample_haar(GroupSpec("SO", n), RngStream(5)).data
        q = right_translate(p, V)
        X = haar_batch(GroupSpec("SO", n), RngStream(6), 200_000) * math.sqrt(n)
        a, b = evaluate_batch(p, X) ** 2, evaluate_batch(q, X) ** 2
        se = math.sqrt(a.var() / a.size + b.var() / b.size)
        assert abs(a.mean() - b.mean()) <= 3 * se


class TestLambdaS:
    def test_examples(self):
        assert lambda_S([], 4) == 1.0
        assert lambda_S([(0, 0)], 4) == pytest.approx(0.9400, abs=5e-5)
        assert lambda_S([(0, 0), (1, 1)], 4) == pytest.approx(0.7500, abs=5e-5)

    def test_closed_form(self):
        # E‖N(0,I_m)‖ = √2 Γ((m+1)/2)/Γ(m/2)
        for n in (8, 9, 20):
            S = [(0, 0), (1, 2), (2, 3)]
            want = math.prod(math.sqrt(2) * math.exp(math.lgamma((n - c + 1) / 2) - math.lgamma((n - c) / 2))
                             for c in (0, 2, 3)) / n ** 1.5
            assert lambda_S(S, n) == pytest.approx(want, rel=1e-12)

    @given(st.integers(4, 40), st.data())
    def test_monotone_in_column(self, n, data):
        c = data.draw(st.integers(0, n // 2 - 2))
        assert lambda_S([(0, c + 1)], n) < lambda_S([(0, c)], n) <= 1.0

    def test_requires_comfort(self):
        with pytest.raises(NotComfortable):
            lambda_S([(0, 3)], 6)

    @pytest.mark.parametrize("S", [[(0, 0)], [(0, 0), (1, 1)], [(0, 1), (1, 0)], [(0, 2), (1, 0), (2, 1)]])
    def test_regression(self, S):
        n = 12
        est = lambda_S_regression(S, n, 200_000, RngStream(31))
        assert abs(est.value - lambda_S(S, n)) <= 3 * est.std_error

    def test_bracket_sweep(self):
        rows = lambda_bracket_audit((36, 100), 4)
        # each of d columns takes one of d rows or none
        assert len(rows) == 2 * sum((d + 1) ** d for d in range(1, 5))
        assert all(r.passed for r in rows)

    def test_chi_norm_oracle(self):
        assert lambda_S([(0, 0)], 4) == pytest.approx(expected_chi_norm(4) / 2)
