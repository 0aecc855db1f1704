import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentcl.errors import BadK, NeedTwoTasks, ShapeMismatch, ZeroPrototype
from latentcl.similarity import (average_overlap, class_prototype_similarity,
                                 subspace_overlap)
from latentcl.synth import SynthConfig, generate_synthetic

from factories import toy_dataset


def embedded_gaussian(rng, n, d, directions, scales):
    """Samples spread along the given orthonormal directions plus tiny
    isotropic jitter so the top eigenvectors are exactly those directions."""
    z = rng.normal(size=(n, len(directions)))
    X = (z * np.asarray(scales)) @ np.asarray(directions, dtype=float)
    return X + 1e-6 * rng.normal(size=(n, d))


def basis(d, *axes):
    E = np.eye(d)
    return E[list(axes)]


class TestSubspaceOverlap:
    def test_identical_task_gives_one(self):
        rng = np.random.default_rng(0)
        t = rng.normal(size=(50, 12))
        assert subspace_overlap(t, t, k=3) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint_subspaces_give_zero(self):
        rng = np.random.default_rng(1)
        d = 16
        a = embedded_gaussian(rng, 200, d, basis(d, 0, 1), [3.0, 2.0])
        b = embedded_gaussian(rng, 200, d, basis(d, 2, 3), [3.0, 2.0])
        assert subspace_overlap(a, b, k=2) == pytest.approx(0.0, abs=1e-6)

    def test_one_shared_direction_gives_half(self):
        rng = np.random.default_rng(2)
        d = 16
        a = embedded_gaussian(rng, 300, d, basis(d, 0, 1), [3.0, 2.0])
        b = embedded_gaussian(rng, 300, d, basis(d, 0, 2), [3.0, 2.0])
        assert subspace_overlap(a, b, k=2) == pytest.approx(0.5, abs=1e-6)

    def test_rotation_invariant(self):
        rng = np.random.default_rng(3)
        d = 10
        a = rng.normal(size=(60, d)) * np.linspace(3, 0.1, d)
        b = rng.normal(size=(60, d)) * np.linspace(0.1, 3, d)
        Q = np.linalg.qr(rng.normal(size=(d, d)))[0]
        before = subspace_overlap(a, b, k=4)
        after = subspace_overlap(a @ Q, b @ Q, k=4)
        assert after == pytest.approx(before, abs=1e-9)

    def test_centering_removes_common_offset(self):
        rng = np.random.default_rng(4)
        d = 16
        shift = 100.0 * np.eye(d)[5]
        a = embedded_gaussian(rng, 200, d, basis(d, 0, 1), [3.0, 2.0]) + shift
        b = embedded_gaussian(rng, 200, d, basis(d, 2, 3), [3.0, 2.0]) + shift
        assert subspace_overlap(a, b, k=2) == pytest.approx(0.0, abs=1e-6)

    def test_bad_k(self):
        rng = np.random.default_rng(0)
        t = rng.normal(size=(10, 5))
        with pytest.raises(BadK):
            subspace_overlap(t, t, k=0)
        with pytest.raises(BadK):
            subspace_overlap(t, t, k=6)  # exceeds column count
        with pytest.raises(BadK):
            subspace_overlap(t[:4], t, k=4)  # exceeds rows - 1

    def test_column_mismatch(self):
        with pytest.raises(ShapeMismatch):
            subspace_overlap(np.zeros((5, 3)), np.zeros((5, 4)), k=1)

    @given(st.integers(0, 1000))
    @settings(max_examples=20, deadline=None)
    def test_bounded_and_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(30, 8))
        b = rng.normal(size=(30, 8))
        v = subspace_overlap(a, b, k=3)
        assert 0.0 - 1e-12 <= v <= 1.0 + 1e-12
        assert subspace_overlap(b, a, k=3) == pytest.approx(v, abs=1e-9)


class TestAverageOverlap:
    def test_mean_of_unordered_pairs(self):
        rng = np.random.default_rng(5)
        d = 16
        a = embedded_gaussian(rng, 300, d, basis(d, 0, 1), [3.0, 2.0])
        b = a.copy()
        c = embedded_gaussian(rng, 300, d, basis(d, 2, 3), [3.0, 2.0])
        # pairs: (a,b)=1, (a,c)=0, (b,c)=0 -> mean 1/3
        assert average_overlap([a, b, c], k=2) == pytest.approx(1 / 3, abs=1e-5)

    def test_needs_two(self):
        with pytest.raises(NeedTwoTasks):
            average_overlap([np.zeros((5, 3))], k=1)

    def test_matches_manual_pair_mean(self):
        rng = np.random.default_rng(6)
        tasks = [rng.normal(size=(40, 10)) for _ in range(4)]
        manual = np.mean([
            subspace_overlap(tasks[i], tasks[j], k=3)
            for i in range(4) for j in range(i + 1, 4)
        ])
        assert average_overlap(tasks, k=3) == pytest.approx(manual, abs=1e-12)


class TestClassPrototypeSimilarity:
    def test_toy_matrix_shape_and_diag(self):
        ds = toy_dataset(n_classes=4, per_class=30)
        sim, avg = class_prototype_similarity(ds)
        assert sim.shape == (4, 4)
        np.testing.assert_array_equal(np.diag(sim), np.ones(4))
        np.testing.assert_allclose(sim, sim.T, atol=1e-12)
        assert -1.0 <= avg <= 1.0

    def test_tracks_generator_target(self):
        cfg = SynthConfig(latent_dim=128, n_classes=10, samples_per_class=100,
                          test_samples_per_class=0, target_similarity=0.6,
                          within_class_noise=0.0, seed=0)
        _, avg = class_prototype_similarity(generate_synthetic(cfg))
        assert avg == pytest.approx(0.6, abs=0.05)

    def test_orthogonal_prototypes(self):
        feats = np.repeat(np.eye(3, 8, dtype=np.float32), 5, axis=0)
        ds = toy_dataset(n_classes=3, per_class=5)
        object.__setattr__(ds, "features", feats)
        sim, avg = class_prototype_similarity(ds)
        assert avg == pytest.approx(0.0, abs=1e-9)

    def test_zero_prototype_raises(self):
        ds = toy_dataset(n_classes=2, per_class=5)
        feats = ds.features.copy()
        feats[ds.labels == 1] = 0.0
        object.__setattr__(ds, "features", feats)
        with pytest.raises(ZeroPrototype):
            class_prototype_similarity(ds)

    def test_single_class_raises(self):
        ds = toy_dataset(n_classes=2, per_class=5)
        single = ds.subset_rows(np.where(ds.labels == 0)[0])
        with pytest.raises(NeedTwoTasks):
            class_prototype_similarity(single)
