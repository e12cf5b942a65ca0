import numpy as np
import pytest

from discrete_cs.measurement import (
    MeasurementEnsemble,
    apply_channel,
    build_dct_ensemble,
    build_svd_ensemble,
    noise_level_db_to_variance,
)


@pytest.mark.parametrize("build", [build_svd_ensemble, build_dct_ensemble])
def test_ensemble_invariants(build, rng):
    ens = build(129, 258, rng)
    assert ens.A.shape == ens.U.shape == (129, 258)
    assert np.max(np.abs(ens.U @ ens.U.T - np.eye(129))) < 1e-10
    assert np.max(np.abs(ens.A - ens.U * ens.c)) == 0
    # independent recomputation of the column norms from A itself
    norms = np.sqrt(np.einsum("ki,ki->i", ens.A, ens.A))
    assert np.max(np.abs(norms - 1)) < 1e-10
    assert ens.c_bar_sq == pytest.approx(np.mean(ens.c**2))
    assert ens.c_bar_sq > 0
    assert len(set(ens.rows)) == 129


def test_square_is_orthogonal(rng):
    ens = build_svd_ensemble(16, 16, rng)
    np.testing.assert_allclose(ens.c, 1.0, atol=1e-12)
    assert ens.c_bar_sq == pytest.approx(1.0)
    np.testing.assert_allclose(ens.A.T @ ens.A, np.eye(16), atol=1e-10)


def test_half_rows_doubles_scaling(rng):
    # columns of half an orthogonal matrix carry about half the energy
    assert build_svd_ensemble(129, 258, rng).c_bar_sq == pytest.approx(2.0, rel=0.1)


def test_deterministic():
    a = build_svd_ensemble(10, 20, np.random.default_rng(3))
    b = build_svd_ensemble(10, 20, np.random.default_rng(3))
    np.testing.assert_array_equal(a.A, b.A)


def test_bad_shape(rng):
    with pytest.raises(ValueError):
        build_svd_ensemble(0, 5, rng)
    with pytest.raises(ValueError):
        build_svd_ensemble(6, 5, rng)


def test_degenerate_column():
    M = np.eye(3)
    with pytest.raises(ValueError):
        MeasurementEnsemble.from_rows(M, [0, 1])


def test_row_selection_uniform():
    counts = np.zeros(12)
    for seed in range(3000):
        counts[build_dct_ensemble(4, 12, np.random.default_rng(seed)).rows] += 1
    expected = 3000 * 4 / 12
    assert np.sum((counts - expected) ** 2 / expected) < 31.3  # 99.9% quantile, 11 dof


def test_save_load_roundtrip(tmp_path, rng):
    ens = build_svd_ensemble(5, 9, rng)
    path = tmp_path / "ens.txt"
    ens.save(path)
    back = MeasurementEnsemble.load(path)
    np.testing.assert_array_equal(back.U, ens.U)
    np.testing.assert_array_equal(back.c, ens.c)
    np.testing.assert_array_equal(back.A, ens.A)


def test_load_rejects_other_files(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("1 2\n")
    with pytest.raises(ValueError):
        MeasurementEnsemble.load(path)


class TestChannel:
    def test_noiseless(self, rng):
        ens = build_svd_ensemble(6, 10, rng)
        x = rng.choice([-1.0, 0.0, 1.0], 10)
        np.testing.assert_array_equal(apply_channel(ens, x, 0.0, rng).y, ens.A @ x)

    def test_zero_signal(self, rng):
        ens = build_svd_ensemble(6, 10, rng)
        np.testing.assert_array_equal(apply_channel(ens, np.zeros(10), 0.0, rng).y, np.zeros(6))

    def test_noise_variance(self, rng):
        A = np.eye(1)
        n = np.array([apply_channel(A, [0.0], 0.3, rng).y[0] for _ in range(100_000)])
        # sample variance of 1e5 Gaussians has relative std sqrt(2/n)
        assert abs(n.var() - 0.3) < 3 * 0.3 * np.sqrt(2 / n.size)

    def test_negative_variance(self, rng):
        with pytest.raises(ValueError):
            apply_channel(np.eye(2), np.zeros(2), -1.0, rng)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            apply_channel(np.eye(2), np.zeros(3), 1.0, rng)


@pytest.mark.parametrize("db, expected", [(0, 1.0), (20, 0.01), (3, 0.5011872336272722)])
def test_db_to_variance(db, expected):
    assert noise_level_db_to_variance(db) == pytest.approx(expected, rel=1e-12)
