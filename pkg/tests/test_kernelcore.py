import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

import oracles
from rffklms import (
    DimensionError,
    GaussianKernel,
    RandomFeatureMap,
    kernel_approx,
    kernel_exact,
    sample_feature_map,
    transform,
)
from rffklms.kernelcore import approximation_error, kernel_matrix


class TestGaussianKernel:
    def test_zero_distance(self):
        assert kernel_exact(GaussianKernel(5.0), [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0

    def test_direct_substitution(self):
        u = np.array([0.0, 0.0])
        v = np.array([1.0, 1.0])  # ||u - v|| = sqrt(2)
        assert kernel_exact(GaussianKernel(1.0), u, v) == pytest.approx(0.36787944117144233, rel=1e-15)

    def test_symmetric(self):
        gen = np.random.default_rng(0)
        k = GaussianKernel(2.0)
        for _ in range(20):
            u, v = gen.standard_normal((2, 4))
            assert kernel_exact(k, u, v) == kernel_exact(k, v, u)

    def test_callable(self):
        k = GaussianKernel(3.0)
        assert k([0.0], [3.0]) == kernel_exact(k, [0.0], [3.0])

    @pytest.mark.parametrize("sigma", [0.0, -1.0, np.inf, np.nan])
    def test_bad_sigma(self, sigma):
        with pytest.raises(ValueError):
            GaussianKernel(sigma)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            kernel_exact(GaussianKernel(1.0), [0.0, 1.0], [0.0])

    def test_kernel_matrix_matches_pairwise(self):
        gen = np.random.default_rng(1)
        A, B = gen.standard_normal((4, 3)), gen.standard_normal((5, 3))
        k = GaussianKernel(1.5)
        K = kernel_matrix(k, A, B)
        ref = [[kernel_exact(k, a, b) for b in B] for a in A]
        assert_allclose(K, ref, rtol=1e-13)


class TestSampleFeatureMap:
    def test_deterministic(self):
        a = sample_feature_map(3, 100, 5.0, 42)
        b = sample_feature_map(3, 100, 5.0, 42)
        assert_array_equal(a.omegas, b.omegas)
        assert_array_equal(a.phases, b.phases)
        assert a == b

    def test_different_seeds_differ(self):
        assert sample_feature_map(3, 10, 5.0, 1) != sample_feature_map(3, 10, 5.0, 2)

    def test_frequency_variance(self):
        fmap = sample_feature_map(1, 100_000, 5.0, 7)
        assert abs(np.var(fmap.omegas) / (1 / 25) - 1) < 0.05

    def test_frequency_mean(self):
        D = 10_000
        fmap = sample_feature_map(2, D, 1.0, 3)
        assert np.all(np.abs(fmap.omegas.mean(axis=0)) < 3 / np.sqrt(D))

    def test_phase_range(self):
        fmap = sample_feature_map(2, 50_000, 1.0, 9)
        assert fmap.phases.min() >= 0.0 and fmap.phases.max() < 2 * np.pi
        # uniform: mean pi, variance (2 pi)^2 / 12
        assert abs(fmap.phases.mean() - np.pi) < 4 * 2 * np.pi / np.sqrt(12 * 50_000)

    def test_shapes(self):
        fmap = sample_feature_map(4, 7, 2.0, 0)
        assert fmap.omegas.shape == (7, 4)
        assert fmap.feature_dim == 7 and fmap.input_dim == 4
        assert fmap.seed == 0 and fmap.sigma == 2.0

    @pytest.mark.parametrize("args", [(0, 5, 1.0), (2, 0, 1.0), (2, 5, 0.0), (2, 5, -2.0), (1.5, 5, 1.0)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            sample_feature_map(*args, seed=0)

    def test_bad_seed(self):
        with pytest.raises(ValueError):
            sample_feature_map(2, 5, 1.0, -1)
        with pytest.raises(TypeError):
            sample_feature_map(2, 5, 1.0, 1.5)


class TestRandomFeatureMap:
    def test_immutable(self):
        fmap = sample_feature_map(2, 5, 1.0, 0)
        with pytest.raises(ValueError):
            fmap.omegas[0, 0] = 1.0
        with pytest.raises(ValueError):
            fmap.phases[0] = 1.0
        with pytest.raises(AttributeError):
            fmap.sigma = 2.0

    def test_copies_inputs(self):
        W = np.zeros((2, 1))
        fmap = RandomFeatureMap(W, [0.0, 1.0], 1.0)
        W[0, 0] = 5.0
        assert fmap.omegas[0, 0] == 0.0

    @pytest.mark.parametrize("phases", [[2 * np.pi], [-0.1], [7.0]])
    def test_phase_out_of_range(self, phases):
        with pytest.raises(ValueError):
            RandomFeatureMap(np.zeros((1, 1)), phases, 1.0)

    def test_phase_count(self):
        with pytest.raises(DimensionError):
            RandomFeatureMap(np.zeros((2, 1)), [0.0], 1.0)

    def test_json_round_trip(self):
        fmap = sample_feature_map(3, 20, 5.0, 123)
        back = RandomFeatureMap.from_json(fmap.to_json())
        assert back == fmap
        doc = json.loads(fmap.to_json())
        assert set(doc) == {"sigma", "input_dim", "feature_dim", "seed", "omegas", "phases"}


class TestTransform:
    def test_constant_feature(self):
        fmap = RandomFeatureMap(np.zeros((1, 3)), [0.0], 1.0)
        assert_allclose(transform(fmap, [1.0, -2.0, 3.0]), [np.sqrt(2.0)], rtol=1e-15)

    def test_opposite_phases(self):
        fmap = RandomFeatureMap(np.zeros((2, 2)), [0.0, np.pi], 1.0)
        assert_allclose(fmap.transform([0.3, 0.4]), [1.0, -1.0], rtol=1e-15)

    def test_matches_definition(self):
        fmap = sample_feature_map(3, 17, 2.0, 5)
        X = np.random.default_rng(2).standard_normal((6, 3))
        ref = oracles.features(fmap.omegas, fmap.phases, X)
        assert_allclose(fmap.transform_batch(X), ref, rtol=1e-13, atol=1e-15)
        for x, r in zip(X, ref):
            assert_allclose(fmap.transform(x), r, rtol=1e-13, atol=1e-15)

    def test_norm_bound(self):
        fmap = sample_feature_map(2, 64, 0.3, 8)
        X = 10 * np.random.default_rng(3).standard_normal((200, 2))
        assert np.all(np.sum(fmap.transform_batch(X) ** 2, axis=1) <= 2.0 + 1e-12)

    def test_out_buffer_reused(self):
        fmap = sample_feature_map(2, 8, 1.0, 0)
        buf = np.empty(8)
        res = fmap.transform([0.1, 0.2], out=buf)
        assert res is buf
        assert_array_equal(buf, fmap.transform([0.1, 0.2]))

    def test_wrong_buffer(self):
        fmap = sample_feature_map(2, 8, 1.0, 0)
        with pytest.raises(DimensionError):
            fmap.transform([0.1, 0.2], out=np.empty(7))

    def test_dimension_mismatch(self):
        fmap = sample_feature_map(2, 8, 1.0, 0)
        with pytest.raises(DimensionError):
            fmap.transform([1.0, 2.0, 3.0])
        with pytest.raises(DimensionError):
            fmap.transform_batch(np.zeros((4, 3)))

    def test_scalar_input_for_one_dim(self):
        fmap = sample_feature_map(1, 4, 1.0, 0)
        assert_array_equal(fmap.transform(0.5), fmap.transform([0.5]))


class TestKernelApprox:
    def test_self_inner_product(self):
        fmap = sample_feature_map(3, 30, 1.0, 4)
        u = np.array([0.5, -1.0, 2.0])
        z = fmap.transform(u)
        val = kernel_approx(fmap, u, u)
        assert val == pytest.approx(z @ z, rel=1e-15)
        assert 0.0 <= val <= 2.0

    def test_large_D_close_to_exact(self):
        fmap = sample_feature_map(2, 5000, 5.0, 11)
        u = np.array([0.2, -0.4])
        v = u + np.array([0.6, 0.8])  # unit distance
        assert abs(kernel_approx(fmap, u, v) - np.exp(-1 / 50)) < 0.05

    def test_rms_error_decays(self):
        rows = approximation_error(5.0, 5, [100, 400, 1600], 1000, seed=0)
        rms = [r[1] for r in rows]
        assert rms[0] > rms[1] > rms[2]
        # 1/sqrt(D) decay: each quadrupling of D halves the error
        for a, b in zip(rms, rms[1:]):
            assert 0.3 < b / a < 0.8

    def test_rms_matches_direct_computation(self):
        ((D, rms, mx),) = approximation_error(1.0, 2, [10], 50, seed=3, n_maps=1)
        assert D == 10 and mx >= rms > 0

    def test_single_feature_bounded(self):
        ((D, rms, mx),) = approximation_error(5.0, 5, [1], 200, seed=0)
        assert D == 1 and rms <= 3.0 and mx <= 3.0

    def test_unbiased(self):
        # average of N independent single-feature estimates
        N = 100_000
        fmap = sample_feature_map(2, N, 2.0, 21)
        u, v = np.array([0.3, 0.1]), np.array([-0.5, 1.0])
        single = 2.0 * np.cos(fmap.omegas @ u + fmap.phases) * np.cos(fmap.omegas @ v + fmap.phases)
        assert abs(single.mean() - kernel_exact(GaussianKernel(2.0), u, v)) < 5 / np.sqrt(N)

    def test_shift_invariance(self):
        k = GaussianKernel(1.3)
        gen = np.random.default_rng(5)
        for _ in range(10):
            u, v, t = gen.standard_normal((3, 3))
            assert kernel_exact(k, u + t, v + t) == pytest.approx(kernel_exact(k, u, v), rel=1e-14)
        # the approximation error statistics are unchanged by a common shift
        fmaps = [sample_feature_map(3, 200, 1.3, s) for s in range(60)]
        U, V = gen.standard_normal((2, 50, 3))
        t = np.array([3.0, -2.0, 1.0])

        def rms(shift):
            errs = [
                kernel_approx(f, u + shift, v + shift) - kernel_exact(k, u, v)
                for f in fmaps for u, v in zip(U[:10], V[:10])
            ]
            return np.sqrt(np.mean(np.square(errs)))

        assert rms(t) == pytest.approx(rms(np.zeros(3)), rel=0.25)
