import numpy as np
import pytest

from subspace_cpd import (
    DimensionError,
    SolverOptions,
    factorize,
    nuclear_norm_product,
    segment_loss,
)


def svd_nuclear(M):
    """Oracle: sum of singular values of the explicit matrix."""
    return np.linalg.svd(M, compute_uv=False).sum()


class TestFactorize:
    def test_exact_rank_one_data(self):
        u = np.array([[1.0], [2.0]])
        v = np.ones((1, 3))
        X = u @ v
        res = factorize(X, 1, 0.0)
        assert res.fit_loss == pytest.approx(0.0, abs=1e-20)
        assert res.Z_hat @ res.S_hat == pytest.approx(X, abs=1e-10)
        # ||u|| * ||v|| = sqrt(5) * sqrt(3)
        assert res.nuclear_norm == pytest.approx(np.sqrt(15.0), abs=1e-10)
        assert res.nuclear_norm == pytest.approx(svd_nuclear(X), abs=1e-10)

    def test_zero_data(self):
        res = factorize(np.zeros((4, 7)), 2, 0.3)
        assert res.fit_loss == 0.0
        assert res.nuclear_norm == 0.0
        assert res.objective == 0.0

    def test_objective_identity_at_return(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((8, 20))
        lam = 0.25
        res = factorize(X, 3, lam)
        assert res.objective == res.fit_loss + lam * res.nuclear_norm

    def test_monotone_objective_history(self):
        rng = np.random.default_rng(42)
        X = rng.standard_normal((10, 40))
        res = factorize(X, 3, 0.1)
        hist = res.objective_history
        assert len(hist) == res.iterations
        drops = np.diff(hist)
        assert np.all(drops <= 1e-10 * np.abs(hist[:-1]))

    def test_dimension_error(self):
        X = np.ones((3, 5))
        with pytest.raises(DimensionError):
            factorize(X, 4, 0.0)
        with pytest.raises(DimensionError):
            factorize(X, 6, 0.0)

    def test_nonfinite_input_rejected(self):
        X = np.ones((3, 5))
        X[1, 2] = np.nan
        with pytest.raises(ValueError):
            factorize(X, 1, 0.0)

    def test_full_width_interpolates_unregularized(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((5, 30))
        res = factorize(X, 5, 0.0)
        assert res.fit_loss <= 1e-16 * np.sum(X**2)

    def test_nuclear_norm_shrinks_with_lam(self):
        rng = np.random.default_rng(11)
        X = rng.standard_normal((8, 25))
        nucs = [factorize(X, 3, lam).nuclear_norm for lam in (0.0, 0.2, 0.5, 1.0, 2.0)]
        assert all(b <= a + 1e-8 for a, b in zip(nucs, nucs[1:]))

    def test_orthogonal_invariance(self):
        rng = np.random.default_rng(19)
        X = rng.standard_normal((9, 30))
        Q, _ = np.linalg.qr(rng.standard_normal((9, 9)))
        a = factorize(X, 2, 0.3)
        b = factorize(Q @ X, 2, 0.3)
        assert b.objective == pytest.approx(a.objective, rel=1e-8)
        assert b.fit_loss == pytest.approx(a.fit_loss, rel=1e-7, abs=1e-10)
        assert b.nuclear_norm == pytest.approx(a.nuclear_norm, rel=1e-8)

    def test_converged_flag_and_budget(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((6, 15))
        res = factorize(X, 2, 0.1, SolverOptions(max_iters=1))
        assert res.iterations == 1
        assert not res.converged
        res2 = factorize(X, 2, 0.1)
        assert res2.converged


class TestNuclearNormProduct:
    def test_identity_embedding_diagonal(self):
        Z = np.zeros((3, 2))
        Z[0, 0] = Z[1, 1] = 1.0
        S = np.diag([3.0, 4.0])
        assert nuclear_norm_product(Z, S) == pytest.approx(7.0, abs=1e-12)

    def test_outer_product(self):
        Z = np.array([[1.0], [2.0]])
        S = np.ones((1, 3))
        assert nuclear_norm_product(Z, S) == pytest.approx(np.sqrt(15.0), abs=1e-12)
        assert nuclear_norm_product(Z, S) == pytest.approx(svd_nuclear(Z @ S), abs=1e-12)

    def test_zero_factor(self):
        rng = np.random.default_rng(0)
        Z = rng.standard_normal((5, 2))
        assert nuclear_norm_product(Z, np.zeros((2, 8))) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            nuclear_norm_product(np.ones((3, 2)), np.ones((3, 4)))

    def test_matches_svd_oracle_on_random_instances(self):
        rng = np.random.default_rng(123)
        for _ in range(30):
            p, d, k = rng.integers(2, 12, size=3)
            Z = rng.standard_normal((p, d))
            S = rng.standard_normal((d, k))
            got = nuclear_norm_product(Z, S)
            want = svd_nuclear(Z @ S)
            assert got == pytest.approx(want, rel=1e-8, abs=1e-10)


class TestSegmentLoss:
    def test_regularized_total_identity(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((10, 50))
        lam = 0.05
        sl = segment_loss(X, 2, lam)
        assert sl.regularized_total == pytest.approx(sl.fit + lam * sl.nuclear, abs=0.0)

    def test_noiseless_rank_d_fit_is_zero(self):
        rng = np.random.default_rng(8)
        Z = np.linalg.qr(rng.standard_normal((7, 2)))[0]
        X = Z @ rng.standard_normal((2, 40))
        sl = segment_loss(X, 2, 0.0)
        assert sl.fit <= 1e-18 * np.sum(X**2)

    def test_short_segment_rejected(self):
        with pytest.raises(DimensionError):
            segment_loss(np.ones((5, 2)), 3, 0.0)

    def test_deterministic(self):
        rng = np.random.default_rng(21)
        X = rng.standard_normal((6, 33))
        a = segment_loss(X, 2, 0.1, SolverOptions(seed=4))
        b = segment_loss(X, 2, 0.1, SolverOptions(seed=4))
        assert a == b
