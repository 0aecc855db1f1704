import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentcl.errors import TooManyTasks
from latentcl.featurestore import split_dataset
from latentcl.streams import build_class_incremental, build_multi_dataset

from factories import toy_dataset


def make_split(n_classes=10, per_class=10, seed=0):
    return split_dataset(toy_dataset(n_classes, per_class, seed=seed), (0.8, 0.1, 0.1), seed=seed)


class TestClassIncremental:
    def test_even_split(self):
        stream = build_class_incremental(make_split(10), 5, ordering_seed=1)
        assert [len(t.class_ids) for t in stream.tasks] == [2, 2, 2, 2, 2]

    def test_remainder_to_earliest(self):
        stream = build_class_incremental(make_split(10), 3, ordering_seed=1)
        assert [len(t.class_ids) for t in stream.tasks] == [4, 3, 3]

    def test_deterministic_and_seed_sensitive(self):
        split = make_split(10)
        a = build_class_incremental(split, 5, ordering_seed=7)
        b = build_class_incremental(split, 5, ordering_seed=7)
        c = build_class_incremental(split, 5, ordering_seed=8)
        assert [t.class_ids for t in a.tasks] == [t.class_ids for t in b.tasks]
        assert [t.class_ids for t in a.tasks] != [t.class_ids for t in c.tasks]

    def test_too_many_tasks(self):
        with pytest.raises(TooManyTasks):
            build_class_incremental(make_split(4), 5, 0)

    def test_class_ids_sorted_disjoint_cover(self):
        stream = build_class_incremental(make_split(10), 4, ordering_seed=3)
        seen = []
        for t in stream.tasks:
            assert list(t.class_ids) == sorted(t.class_ids)
            seen.extend(t.class_ids)
        assert sorted(seen) == list(range(10))

    @given(st.integers(0, 500), st.integers(1, 6))
    @settings(max_examples=25, deadline=None)
    def test_partition_of_samples(self, seed, n_tasks):
        split = make_split(6, 10, seed=0)
        stream = build_class_incremental(split, n_tasks, ordering_seed=seed)
        n_train = sum(t.train.n for t in stream.tasks)
        assert n_train == split.train.n
        col = np.sort(np.concatenate([t.train.features[:, 0] for t in stream.tasks]))
        np.testing.assert_array_equal(col, np.sort(split.train.features[:, 0]))


class TestMultiDataset:
    def test_offsets(self):
        splits = [make_split(4, seed=1), make_split(6, seed=2)]
        stream = build_multi_dataset(splits)
        assert stream.tasks[0].class_ids == tuple(range(4))
        assert stream.tasks[1].class_ids == tuple(range(4, 10))
        assert stream.n_classes_total == 10
        assert stream.tasks[1].train.labels.min() >= 4

    def test_single_dataset(self):
        stream = build_multi_dataset([make_split(3, seed=1)])
        assert len(stream.tasks) == 1

    def test_six_datasets_six_tasks(self):
        splits = [make_split(3, seed=s) for s in range(6)]
        stream = build_multi_dataset(splits)
        assert len(stream.tasks) == 6
