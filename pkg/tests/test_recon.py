import numpy as np
import pytest

from codedfti import dictionary, levels, recon, sampling
from codedfti.transforms import dft_forward, dhw_forward, dhw_inverse
from oracles import dense_dft_analysis, tail_l1_by_sort

RNG = np.random.default_rng(7)


def small_volume(n=64, n_p=4, seed=0):
    d = dictionary.synth_dictionary(6, n, seed=seed)
    G = np.random.default_rng(seed + 1).uniform(0.0, 1.0, (6, n_p))
    return recon.HSVolume(X=d.H @ G, spatial_shape=(2, n_p // 2))


class TestAcquire:
    def test_nyquist_noiseless_is_full_transform(self):
        vol = small_volume()
        meas = recon.acquire(vol, sampling.sample_nyquist(64))
        assert np.max(np.abs(meas.Y - dft_forward(vol.X))) < 1e-12

    def test_empty_pattern_zero_rows(self):
        vol = small_volume()
        pat = sampling.SamplingPattern(
            kind="mls", N=64, omega=np.array([], dtype=int), weights=np.array([])
        )
        meas = recon.acquire(vol, pat)
        assert meas.Y.shape == (0, 4)

    def test_matches_dense_operator_oracle(self):
        vol = small_volume(n=64, n_p=4)
        W = levels.build_dft_levels(64, 3)
        m = np.full(8, 2)
        pat = sampling.sample_mls(W, m, seed=9)
        meas = recon.acquire(vol, pat)
        oracle = (dense_dft_analysis(64) @ vol.X)[pat.omega]
        assert np.max(np.abs(meas.Y - oracle)) < 1e-12

    def test_vds_duplicates_share_noise(self):
        vol = small_volume()
        pat = sampling.sample_vds(64, 200, seed=3)
        noise = recon.NoiseModel(kind="gaussian-bounded", eps_nyq=0.5, seed=4)
        meas = recon.acquire(vol, pat, noise)
        omega = pat.omega
        dup_rows = [i for i in set(omega.tolist()) if np.sum(omega == i) > 1]
        assert dup_rows, "expected duplicates at this draw count"
        i = dup_rows[0]
        rows = np.where(omega == i)[0]
        assert np.allclose(meas.Y[rows[0]], meas.Y[rows[1]])

    def test_linearity_noiseless(self):
        pat = sampling.sample_vds(64, 30, seed=5)
        va, vb = small_volume(seed=1), small_volume(seed=2)
        ya = recon.acquire(va, pat).Y
        yb = recon.acquire(vb, pat).Y
        combo = recon.HSVolume(X=2.0 * va.X + 3.0 * vb.X)
        yc = recon.acquire(combo, pat).Y
        assert np.max(np.abs(yc - 2.0 * ya - 3.0 * yb)) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            recon.acquire(small_volume(n=64), sampling.sample_nyquist(32))


class TestNoiseModel:
    def test_bound_holds_exactly(self):
        nm = recon.NoiseModel(kind="gaussian-bounded", eps_nyq=0.8, seed=1)
        w = nm.nyquist_noise(128, 16)
        norms = np.linalg.norm(w, axis=0)
        assert np.all(norms <= 0.8 / 4.0 + 1e-14)

    def test_none_kind_is_silent(self):
        assert np.all(recon.NoiseModel().nyquist_noise(16, 3) == 0)

    def test_deterministic(self):
        nm = recon.NoiseModel(kind="gaussian-bounded", eps_nyq=0.2, seed=5)
        assert np.array_equal(nm.nyquist_noise(32, 2), nm.nyquist_noise(32, 2))


class TestSigmaTail:
    def test_zero_for_exactly_level_sparse(self):
        T = levels.build_dhw_sparsity_levels(8)
        s = np.zeros(8)
        s[0], s[2] = 1.0, -2.0
        assert recon.sigma_tail(s, [1, 1, 0], T) == 0.0

    def test_hand_case(self):
        T = levels.LevelScheme(
            N=4, r=2, kind="dhw-sparsity", levels=((0, 1), (2, 3)), boundaries=(2, 4)
        )
        s = np.array([3.0, -1.0, 0.5, 2.0])
        assert abs(recon.sigma_tail(s, [1, 0], T) - 3.5) < 1e-15
        assert recon.sigma_tail(s, [2, 2], T) == 0.0

    def test_matches_independent_sort(self):
        T = levels.build_dhw_sparsity_levels(32)
        for trial in range(10):
            s = np.random.default_rng(trial).standard_normal(32)
            k = np.random.default_rng(100 + trial).integers(0, T.sizes + 1)
            assert abs(recon.sigma_tail(s, k, T) - tail_l1_by_sort(s, k, T.levels)) < 1e-12

    def test_monotone_in_k(self):
        T = levels.build_dhw_sparsity_levels(16)
        s = RNG.standard_normal(16)
        k = np.zeros(T.r, dtype=int)
        previous = recon.sigma_tail(s, k, T)
        for level in range(T.r):
            k2 = k.copy()
            k2[level] = min(1, T.sizes[level])
            current = recon.sigma_tail(s, k2, T)
            assert current <= previous + 1e-12


class TestReconstruct:
    def test_nyquist_noiseless_recovers_exactly(self):
        vol = small_volume()
        meas = recon.acquire(vol, sampling.sample_nyquist(64))
        x_hat, report = recon.reconstruct(meas, psi="dft", approach="mls-this-work", x_true=vol)
        assert report.aggregate_error <= 1e-8
        assert all(s == "converged" for s in report.statuses)

    def test_dft_sparse_levels_fully_sampled(self):
        n = 64
        W = levels.build_dft_levels(n, 3)
        rng = np.random.default_rng(3)
        cols = []
        for _ in range(4):
            s = np.zeros(n, dtype=complex)
            s[n // 2 - 1] = rng.uniform(0.5, 1.5)  # DC
            f = int(rng.integers(1, 4))
            a = rng.uniform(0.2, 1.0) * np.exp(2j * np.pi * rng.uniform())
            s[n // 2 - 1 + f] = a
            s[n // 2 - 1 - f] = np.conj(a)
            from codedfti.transforms import dft_inverse

            cols.append(dft_inverse(s))
        vol = recon.HSVolume(X=np.column_stack(cols))
        m = np.where(np.arange(8) == 0, W.sizes, 0)
        pat = sampling.sample_mls(W, m, seed=1)
        meas = recon.acquire(vol, pat)
        x_hat, report = recon.reconstruct(meas, psi="dft", approach="mls-this-work", x_true=vol)
        assert np.all(report.per_pixel_rel_sq_err <= 1e-4)

    def test_approach_pattern_mismatch(self):
        vol = small_volume()
        meas = recon.acquire(vol, sampling.sample_vds(64, 20, seed=1))
        with pytest.raises(ValueError):
            recon.reconstruct(meas, psi="dhw", approach="mls-this-work")
        meas2 = recon.acquire(vol, sampling.sample_nyquist(64))
        with pytest.raises(ValueError):
            recon.reconstruct(meas2, psi="dhw", approach="initial-vds")

    def test_pixel_order_independence(self):
        vol = small_volume(n=32, n_p=4)
        W = levels.build_dhw_sampling_levels(32)
        pat = sampling.sample_mls(W, np.minimum(W.sizes, 4), seed=2)
        meas = recon.acquire(vol, pat)
        x_hat, _ = recon.reconstruct(meas, psi="dhw", approach="mls-this-work")
        perm = [2, 0, 3, 1]
        meas_perm = recon.CiFtiMeasurements(Y=meas.Y[:, perm], pattern=pat)
        x_hat_perm, _ = recon.reconstruct(meas_perm, psi="dhw", approach="mls-this-work")
        assert np.array_equal(x_hat_perm.X, x_hat.X[:, perm])

    def test_vds_weighted_reconstruction(self):
        n = 64
        s = np.zeros(n)
        s[0], s[1] = 1.0, 0.4
        x = dhw_inverse(s)
        vol = recon.HSVolume(X=np.column_stack([x, 2.0 * x]))
        pat = sampling.sample_vds(n, 48, seed=8)
        meas = recon.acquire(vol, pat)
        x_hat, report = recon.reconstruct(meas, psi="dhw", approach="initial-vds", x_true=vol)
        assert np.all(report.per_pixel_rel_sq_err <= 1e-4)


class TestErrorReport:
    def test_perfect_reconstruction(self):
        vol = small_volume()
        T = levels.build_dhw_sparsity_levels(64)
        report = recon.error_report(vol, vol, np.zeros(T.r, dtype=int), T, "dhw", beta1=1.0, beta2=1.0)
        assert report.aggregate_error == 0.0
        assert report.bound_holds

    def test_sigma_zero_for_level_sparse_volume(self):
        T = levels.build_dhw_sparsity_levels(16)
        s = np.zeros((16, 3))
        s[0, :] = 1.0
        s[2, 1] = 0.5
        X = np.column_stack([dhw_inverse(s[:, j]) for j in range(3)])
        vol = recon.HSVolume(X=X)
        k = np.array([1, 1, 0, 0])
        report = recon.error_report(vol, vol, k, T, "dhw")
        assert np.allclose(report.sigma_tails, 0.0, atol=1e-12)

    def test_aggregate_is_stacked_norm(self):
        va, vb = small_volume(seed=3), small_volume(seed=4)
        T = levels.build_dhw_sparsity_levels(64)
        report = recon.error_report(va, vb, np.zeros(T.r, dtype=int), T, "dhw")
        assert abs(report.aggregate_error - np.linalg.norm(va.X - vb.X)) < 1e-12


class TestVolumeIo:
    def test_roundtrip(self, tmp_path):
        vol = small_volume()
        path = tmp_path / "vol.bin"
        vol.save(path)
        back = recon.HSVolume.load(path)
        assert np.array_equal(back.X, vol.X)
        assert back.spatial_shape == vol.spatial_shape

    def test_band_map_requires_shape(self):
        vol = recon.HSVolume(X=np.zeros((8, 6)))
        with pytest.raises(ValueError):
            vol.band_map(0)

    def test_measurements_roundtrip(self, tmp_path):
        vol = small_volume()
        pat = sampling.sample_vds(64, 30, seed=2)
        meas = recon.acquire(vol, pat, recon.NoiseModel(kind="gaussian-bounded", eps_nyq=0.1, seed=1))
        path = tmp_path / "meas.bin"
        meas.save(path)
        back = recon.CiFtiMeasurements.load(path)
        assert np.array_equal(back.Y, meas.Y)
        assert np.array_equal(back.pattern.omega, pat.omega)
        assert back.eps_nyq == meas.eps_nyq

    def test_corrupt_size_rejected(self, tmp_path):
        vol = small_volume()
        path = tmp_path / "vol.bin"
        vol.save(path)
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(ValueError):
            recon.HSVolume.load(path)
