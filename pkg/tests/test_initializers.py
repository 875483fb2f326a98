import math

import numpy as np
import pytest

from maxreg import initializers, net
from maxreg.initializers import (
    InitSpec,
    construct_layer_parallel,
    construct_unit_rank_k,
    sample,
    steinwart_offset,
)
from maxreg.net import Architecture
from maxreg.regions import Window, count_regions_exact


WIN2 = Window.cube(2, 50.0)


class TestInitSpec:
    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            InitSpec("bogus")

    def test_data_shift_needs_points(self):
        with pytest.raises(ValueError):
            InitSpec("maxout_he", steinwart_shift="data")

    def test_negative_noise(self):
        with pytest.raises(ValueError):
            InitSpec("many_regions", noise=-0.1)

    def test_normal_rank6_rejected(self):
        arch = Architecture(2, (2,), 6, 1)
        with pytest.raises(ValueError):
            sample(arch, InitSpec("maxout_he", dist_shape="normal"))

    def test_uniform_rank6_allowed(self):
        arch = Architecture(2, (2,), 6, 1)
        sample(arch, InitSpec("maxout_he", dist_shape="uniform"))


class TestSampledStatistics:
    def test_maxout_he_normal_std(self):
        arch = Architecture(100, (200,), 2, 1)
        params = sample(arch, InitSpec("maxout_he", seed=0))
        std = params.hidden_w[0].std()
        assert std == pytest.approx(0.1, rel=0.02)

    def test_relu_he_std(self):
        arch = Architecture(100, (200,), 2, 1)
        params = sample(arch, InitSpec("relu_he", seed=0))
        assert params.hidden_w[0].std() == pytest.approx(math.sqrt(2 / 100), rel=0.02)

    def test_uniform_shape_bounded(self):
        arch = Architecture(50, (100,), 3, 1)
        params = sample(arch, InitSpec("maxout_he", dist_shape="uniform", seed=0))
        w = params.hidden_w[0]
        from maxreg.bounds import maxout_he_std

        bound = maxout_he_std(3, 50, "uniform") * math.sqrt(3)
        assert np.abs(w).max() <= bound
        assert w.std() == pytest.approx(maxout_he_std(3, 50, "uniform"), rel=0.05)

    def test_sphere_pre_shift_geometry(self):
        arch = Architecture(3, (20,), 4, 1)
        params = sample(arch, InitSpec("sphere", seed=1))
        shift = 1.0 / math.sqrt(4 * 3)
        w = params.hidden_w[0]
        b_raw = params.hidden_b[0] + shift
        norms = np.sqrt((w**2).sum(axis=2) + b_raw**2)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)
        assert np.all(b_raw >= 0)

    def test_zero_bias(self):
        arch = Architecture(3, (4, 4), 2, 1)
        params = sample(arch, InitSpec("maxout_he", zero_bias=True, seed=2))
        for b in params.hidden_b:
            assert not b.any()
        assert not params.out_b.any()

    def test_determinism_and_seed_sensitivity(self):
        arch = Architecture(3, (4,), 2, 1)
        a = sample(arch, InitSpec("maxout_he", seed=5))
        b = sample(arch, InitSpec("maxout_he", seed=5))
        c = sample(arch, InitSpec("maxout_he", seed=6))
        assert np.array_equal(a.hidden_w[0], b.hidden_w[0])
        assert not np.array_equal(a.hidden_w[0], c.hidden_w[0])

    def test_unit_draws_independent_of_width(self):
        # unit u's parameters do not change when the layer grows
        small = Architecture(3, (2,), 2, 1)
        big = Architecture(3, (5,), 2, 1)
        ps = sample(small, InitSpec("maxout_he", seed=7))
        pb = sample(big, InitSpec("maxout_he", seed=7))
        assert np.array_equal(ps.hidden_w[0][0], pb.hidden_w[0][0])
        assert np.array_equal(ps.hidden_w[0][1], pb.hidden_w[0][1])

    def test_norm_preservation_deep(self):
        # activation second moments should stay within a factor 2 over 5 layers
        gen = np.random.default_rng(0)
        for rank in (2, 3, 4, 5):
            arch = Architecture(50, (50,) * 5, rank, 1)
            params = sample(arch, InitSpec("maxout_he", seed=rank))
            xs = gen.normal(size=(1000, 50))
            h = xs
            first = None
            for w, b in zip(params.hidden_w, params.hidden_b):
                pre = np.einsum("pq,ukq->puk", h, w) + b
                h = pre.max(axis=2)
                if first is None:
                    first = (h**2).sum(axis=1).mean()
            last = (h**2).sum(axis=1).mean()
            assert 0.5 <= last / first <= 2.0


class TestManyRegions:
    def test_single_unit_full_rank(self):
        arch = Architecture(1, (1,), 3, 1)
        params = sample(arch, InitSpec("many_regions", seed=1))
        report = count_regions_exact(arch, params, Window.cube(1, 50.0))
        assert report.regions == 3

    def test_layer_reaches_maximum(self):
        arch = Architecture(2, (3,), 3, 1)
        maximum = sum(
            math.comb(3, j) * 2**j for j in range(3)
        )
        for seed in range(3):
            params = sample(arch, InitSpec("many_regions", seed=seed))
            assert count_regions_exact(arch, params, WIN2).regions == maximum


class TestSphereRegions:
    def test_every_unit_attains_rank(self):
        for rank in range(2, 6):
            for seed in range(30):
                arch = Architecture(2, (1,), rank, 1)
                params = sample(arch, InitSpec("sphere", seed=seed))
                report = count_regions_exact(arch, params, WIN2)
                assert report.regions == rank, (rank, seed, report.regions)


class TestSteinwartShift:
    def test_network_is_translate(self):
        arch = Architecture(2, (3, 3), 2, 1)
        base = InitSpec("maxout_he", seed=9)
        shifted_spec = InitSpec("maxout_he", seed=9, steinwart_shift="cube")
        plain = sample(arch, base)
        shifted = sample(arch, shifted_spec)
        c = steinwart_offset(shifted_spec, arch.n0)
        gen = np.random.default_rng(10)
        for _ in range(10):
            x = gen.normal(size=2)
            np.testing.assert_allclose(
                net.forward(arch, shifted, x),
                net.forward(arch, plain, x + c),
                atol=1e-9,
            )
            np.testing.assert_allclose(
                net.gradient(arch, shifted, x),
                net.gradient(arch, plain, x + c),
                atol=1e-9,
            )

    def test_data_shift_in_hull(self):
        points = ((0.0, 0.0), (2.0, 0.0), (0.0, 2.0))
        spec = InitSpec(
            "maxout_he", seed=3, steinwart_shift="data", data_points=points
        )
        c = steinwart_offset(spec, 2)
        assert c[0] >= 0 and c[1] >= 0 and c.sum() <= 2.0 + 1e-12


class TestConstructions:
    def test_unit_rank_collapse_to_one(self):
        arch, params = construct_unit_rank_k(2, 3, 1, seed=0)
        assert count_regions_exact(arch, params, WIN2).regions == 1

    def test_unit_rank_partial(self):
        arch, params = construct_unit_rank_k(1, 3, 2, seed=0)
        assert count_regions_exact(arch, params, Window.cube(1, 50.0)).regions == 2
        arch, params = construct_unit_rank_k(2, 4, 3, seed=0)
        assert count_regions_exact(arch, params, WIN2).regions == 3

    def test_unit_rank_many_seeds(self):
        for seed in range(10):
            arch, params = construct_unit_rank_k(2, 5, 4, seed=seed)
            assert count_regions_exact(arch, params, WIN2).regions == 4

    def test_unit_rank_validation(self):
        with pytest.raises(ValueError):
            construct_unit_rank_k(2, 3, 4)

    def test_layer_parallel_counts(self):
        cases = [
            (2, [3, 3], 9),
            (2, [2, 2, 2], 7),
            (1, [4], 4),
            (2, [2, 3, 4], 18),
        ]
        for n0, ks, want in cases:
            arch, params = construct_layer_parallel(n0, ks, seed=0)
            window = Window.cube(n0, 50.0)
            assert count_regions_exact(arch, params, window).regions == want, (n0, ks)

    def test_layer_parallel_validation(self):
        with pytest.raises(ValueError):
            construct_layer_parallel(2, [0, 2])
