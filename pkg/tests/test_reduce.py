import numpy as np
import pytest

from corpus_atlas import reduce as red
from corpus_atlas.embedstore import EmbeddingMatrix


def _oracle_curve(x):
    """Cumulative explained-variance curve via dense covariance eigendecomposition."""
    x = np.asarray(x, dtype=np.float64)
    c = np.cov(x, rowvar=False, ddof=1)
    eig = np.sort(np.linalg.eigvalsh(np.atleast_2d(c)))[::-1]
    eig = np.clip(eig, 0.0, None)
    return np.cumsum(eig) / eig.sum()


class TestFit:
    def test_rank_one_collinear(self):
        x = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        model = red.fit(x, 0.95)
        assert model.m == 1
        assert model.explained_ratio[0] == pytest.approx(1.0, abs=1e-12)

    def test_eigenvalues_9_and_1_need_both(self):
        # sample covariance exactly diag(9, 1): 9/10 < 0.95 forces m = 2
        t = 1.0 / np.sqrt(3.0)
        x = np.array([[3.0, t], [-3.0, t], [0.0, -2.0 * t]])
        cov = np.cov(x, rowvar=False, ddof=1)
        assert np.allclose(np.sort(np.linalg.eigvalsh(cov)), [1.0, 9.0], atol=1e-12)
        model = red.fit(x, 0.95)
        assert model.m == 2
        assert model.explained_ratio == pytest.approx([0.9, 0.1], abs=1e-12)

    def test_components_orthonormal(self, rng):
        x = rng.normal(size=(40, 12))
        model = red.fit(x, 1.0)
        gram = model.components @ model.components.T
        assert np.abs(gram - np.eye(model.m)).max() < 1e-8

    def test_sign_convention(self, rng):
        x = rng.normal(size=(30, 6))
        model = red.fit(x, 1.0)
        for row in model.components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_determinism(self, rng):
        x = rng.normal(size=(25, 8))
        a, b = red.fit(x, 0.9), red.fit(x, 0.9)
        assert np.array_equal(a.mean, b.mean)
        assert np.array_equal(a.components, b.components)
        assert np.array_equal(a.explained_ratio, b.explained_ratio)

    def test_errors(self, rng):
        with pytest.raises(ValueError):
            red.fit(np.ones((1, 3)), 0.95)  # n < 2
        with pytest.raises(ValueError, match="zero-variance"):
            red.fit(np.ones((5, 3)), 0.95)  # all rows identical
        with pytest.raises(ValueError):
            red.fit(rng.normal(size=(5, 3)), 0.0)
        with pytest.raises(ValueError):
            red.fit(rng.normal(size=(5, 3)), 1.5)

    def test_accepts_embedding_matrix(self, rng):
        m = EmbeddingMatrix(data=rng.normal(size=(10, 4)).astype(np.float32),
                            ids=[f"i{k}" for k in range(10)], variant_tag="v")
        model = red.fit(m, 0.95)
        out = red.transform(model, m)
        assert isinstance(out, EmbeddingMatrix)
        assert out.ids == m.ids
        assert out.variant_tag == "v"
        assert out.d == model.m


class TestTransform:
    def test_full_rank_preserves_distances(self, rng):
        x = rng.normal(size=(20, 5))
        model = red.fit(x, 1.0)
        assert model.m == 5
        z = red.transform(model, x)
        dx = np.linalg.norm(x[:, None] - x[None, :], axis=-1)
        dz = np.linalg.norm(z[:, None] - z[None, :], axis=-1)
        mask = dx > 0
        assert np.abs(dz[mask] / dx[mask] - 1.0).max() < 1e-6

    def test_mean_row_maps_to_zero(self, rng):
        x = rng.normal(size=(15, 4))
        model = red.fit(x, 0.95)
        z = red.transform(model, model.mean[None, :])
        assert np.abs(z).max() < 1e-12

    def test_rank_one_coordinates(self):
        x = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        model = red.fit(x, 0.95)
        z = red.transform(model, x)[:, 0]
        s = np.sqrt(2.0)
        assert z == pytest.approx([-s, 0.0, s], abs=1e-12)

    def test_dimension_mismatch(self, rng):
        model = red.fit(rng.normal(size=(10, 4)), 0.95)
        with pytest.raises(ValueError, match="mismatch"):
            red.transform(model, rng.normal(size=(3, 5)))

    def test_transformed_columns_uncorrelated(self, rng):
        x = rng.normal(size=(60, 8)) @ rng.normal(size=(8, 8))
        model = red.fit(x, 1.0)
        z = red.transform(model, x)
        c = np.cov(z, rowvar=False, ddof=1)
        off = c - np.diag(np.diag(c))
        assert np.abs(off).max() < 1e-6 * np.abs(np.diag(c)).max()


class TestExplainedCurve:
    def test_running_sum(self):
        model = red.PcaModel(
            mean=np.zeros(3),
            components=np.eye(3),
            explained_ratio=np.array([0.6, 0.3, 0.1]),
            variance_target=1.0,
        )
        assert red.explained_curve(model) == pytest.approx([0.6, 0.9, 1.0], abs=1e-15)

    def test_single_component(self):
        x = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        model = red.fit(x, 0.5)
        assert red.explained_curve(model).shape == (1,)

    def test_matches_eigendecomposition_oracle(self, rng):
        for _ in range(5):
            base = rng.normal(size=(50, 20))
            spd_mix = rng.normal(size=(20, 20))
            x = base @ spd_mix
            model = red.fit(x, 1.0)
            curve = red.explained_curve(model)
            oracle = _oracle_curve(x)
            assert np.abs(curve - oracle[: model.m]).max() < 1e-8

    def test_last_element_reaches_target(self, rng):
        for target in (0.5, 0.8, 0.95, 1.0):
            x = rng.normal(size=(30, 10))
            model = red.fit(x, target)
            curve = red.explained_curve(model)
            assert curve[-1] >= target - 1e-9
            assert np.all(np.diff(curve) >= -1e-15)
            assert np.all(model.explained_ratio > 0)
            assert np.all(np.diff(model.explained_ratio) <= 1e-15)
            assert model.explained_ratio.sum() <= 1.0 + 1e-12


def test_reconstruction_loses_only_discarded_variance(rng):
    for _ in range(5):
        x = rng.normal(size=(40, 10)) @ np.diag(rng.uniform(0.1, 3.0, size=10))
        model = red.fit(x, 0.8)
        z = red.transform(model, x)
        back = z @ model.components + model.mean
        total = ((x - x.mean(axis=0)) ** 2).sum() / (x.shape[0] - 1)
        lost = ((x - back) ** 2).sum() / (x.shape[0] - 1)
        expected_lost = (1.0 - red.explained_curve(model)[-1]) * total
        assert lost == pytest.approx(expected_lost, rel=1e-6, abs=1e-9)


def test_model_json_round_trip(tmp_path, rng):
    x = rng.normal(size=(20, 6))
    model = red.fit(x, 0.9)
    path = tmp_path / "pca.json"
    red.save_model(model, path)
    back = red.load_model(path)
    assert np.array_equal(back.mean, model.mean)
    assert np.array_equal(back.components, model.components)
    assert np.array_equal(back.explained_ratio, model.explained_ratio)
    assert back.variance_target == model.variance_target
