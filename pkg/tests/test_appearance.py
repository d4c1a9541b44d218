import numpy as np
import pytest

from octrack.appearance import (
    DISTANCE_FNS,
    DISTANCE_MAX,
    AppearanceStore,
    cosine_distance,
    euclidean_distance,
)


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


class TestDistances:
    def test_cosine_range_and_landmarks(self):
        a = unit([1, 0, 0])
        assert cosine_distance(a, a) == 0.0
        assert cosine_distance(a, unit([0, 1, 0])) == pytest.approx(1.0)
        assert cosine_distance(a, -a) == pytest.approx(2.0)

    def test_cosine_scale_invariant(self):
        rng = np.random.default_rng(3)
        u, v = rng.standard_normal(16), rng.standard_normal(16)
        assert cosine_distance(u, v) == pytest.approx(cosine_distance(3 * u, 0.1 * v))

    def test_cosine_rejects_degenerate_input(self):
        with pytest.raises(ValueError):
            cosine_distance([1, 0], [1, 0, 0])
        with pytest.raises(ValueError):
            cosine_distance([0, 0, 0], [1, 0, 0])

    def test_euclidean(self):
        assert euclidean_distance([0, 0], [3, 4]) == pytest.approx(5.0)
        with pytest.raises(ValueError):
            euclidean_distance([1], [1, 2])

    def test_registry(self):
        assert set(DISTANCE_FNS) == {"cosine", "euclidean"}
        assert set(DISTANCE_MAX) == {"cosine", "euclidean"}
        # unit-norm features keep both distances within the normalizer
        rng = np.random.default_rng(5)
        for _ in range(50):
            u, v = unit(rng.standard_normal(8)), unit(rng.standard_normal(8))
            for name, fn in DISTANCE_FNS.items():
                assert 0.0 <= fn(u, v) <= DISTANCE_MAX[name]


class TestAppearanceStore:
    def test_register_new_never_overwrites(self):
        store = AppearanceStore()
        store.register_new(1, [1.0, 0.0], frame=3)
        store.register_new(1, [0.0, 1.0], frame=9)
        np.testing.assert_array_equal(store.get(1), [1.0, 0.0])
        assert store.stored_at(1) == 3

    def test_update_suppressed_by_row_or_column_overlap(self):
        store = AppearanceStore()
        store.register_new(1, [1.0, 0.0], frame=0)
        store.register_new(2, [0.0, 1.0], frame=0)
        store.register_new(3, [1.0, 1.0], frame=0)
        # only the (1,2) pair overlaps; asymmetric entries exercise both the
        # row and the column direction of the suppression test
        mat = np.array([
            [1.0, 0.5, 0.0],
            [0.1, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ])
        store.filter_and_update([1, 2, 3], [[9.0, 9.0]] * 3, mat,
                                tau_update=0.3, frame=7)
        np.testing.assert_array_equal(store.get(1), [1.0, 0.0])   # retained
        np.testing.assert_array_equal(store.get(2), [0.0, 1.0])   # retained
        np.testing.assert_array_equal(store.get(3), [9.0, 9.0])   # refreshed
        assert store.stored_at(3) == 7

    def test_single_tracklet_always_updates(self):
        store = AppearanceStore()
        store.register_new(4, [1.0, 0.0], frame=0)
        store.filter_and_update([4], [[2.0, 2.0]], np.ones((1, 1)),
                                tau_update=0.3, frame=1)
        np.testing.assert_array_equal(store.get(4), [2.0, 2.0])

    def test_nested_boxes_both_retained(self):
        store = AppearanceStore()
        store.register_new(1, [1.0, 0.0], frame=0)
        store.register_new(2, [0.0, 1.0], frame=0)
        mat = np.array([[1.0, 1.0], [0.4, 1.0]])
        store.filter_and_update([1, 2], [[5.0, 5.0]] * 2, mat,
                                tau_update=0.3, frame=2)
        np.testing.assert_array_equal(store.get(1), [1.0, 0.0])
        np.testing.assert_array_equal(store.get(2), [0.0, 1.0])

    def test_shape_mismatch_is_internal_error(self):
        store = AppearanceStore()
        with pytest.raises(RuntimeError):
            store.filter_and_update([1, 2], [[1.0]] * 2, np.ones((3, 3)),
                                    tau_update=0.3, frame=0)

    def test_drop_and_membership(self):
        store = AppearanceStore()
        store.register_new(1, [1.0], frame=0)
        assert 1 in store and len(store) == 1
        store.drop(1)
        store.drop(1)  # idempotent
        assert 1 not in store and store.ids() == []
