import numpy as np
import pytest

import setforest as sf
from setforest.model import (
    count_leaves,
    count_nodes,
    forest_from_json,
    forest_to_json,
    leaf_depths,
    route,
    route_with_index,
    tree_apply,
)

from helpers import build_complete_tree, random_mixed_dataset


def _trained(seed=0, algorithm="rf", **kw):
    ds, _ = random_mixed_dataset(seed, n=150)
    if algorithm == "rf":
        config = sf.TrainConfig.random_forest(num_trees=4, max_depth=5, seed=seed,
                                              sampling_rate=0.8, **kw)
        return ds, sf.train_random_forest(ds, config)
    config = sf.TrainConfig.mart(num_trees=6, seed=seed, sampling_rate=0.8, **kw)
    return ds, sf.train_mart(ds, config)


class TestSerialization:
    @pytest.mark.parametrize("algorithm", ["rf", "mart"])
    def test_round_trip_is_identity(self, algorithm):
        _, forest = _trained(seed=3, algorithm=algorithm)
        text = forest_to_json(forest)
        again = forest_to_json(forest_from_json(text))
        assert text == again

    def test_round_trip_preserves_predictions(self):
        ds, forest = _trained(seed=5)
        restored = forest_from_json(forest_to_json(forest))
        for row in ds.rows()[:25]:
            assert sf.predict(restored, row) == sf.predict(forest, row)

    def test_save_and_load(self, tmp_path):
        _, forest = _trained(seed=1)
        path = tmp_path / "model.json"
        sf.save_forest(forest, path)
        restored = sf.load_forest(path)
        assert forest_to_json(restored) == forest_to_json(forest)

    def test_masks_serialized_as_sorted_arrays(self):
        _, forest = _trained(seed=7)
        doc = sf.model.forest_to_dict(forest)

        def check(node):
            if "leaf" in node:
                return
            split = node["split"]
            if split["kind"] == "set_intersects":
                assert split["mask"] == sorted(split["mask"])
            if split["kind"] == "category_in":
                assert split["values"] == sorted(split["values"])
            check(node["negative"])
            check(node["positive"])

        for tree in doc["trees"]:
            check(tree)

    def test_rejects_foreign_documents(self):
        with pytest.raises(ValueError):
            forest_from_json('{"format": "other", "version": 1}')
        with pytest.raises(ValueError):
            forest_from_json(
                '{"format": "setforest-model", "version": 99, "kind": "rf",'
                ' "initial_score": 0, "features": [], "trees": []}')


class TestTreeWalkers:
    def test_complete_tree_counts(self):
        tree = build_complete_tree(3)
        assert count_leaves(tree) == 8
        assert count_nodes(tree) == 15
        assert leaf_depths(tree) == [3] * 8

    def test_route_with_index_enumerates_left_to_right(self):
        tree = build_complete_tree(2, leaf_values=[10.0, 11.0, 12.0, 13.0])
        # feature 0 thresholds are 0.0 at the root, 1.0 one level down
        value, index = route_with_index(tree, (-5.0,))
        assert (value, index) == (10.0, 0)
        value, index = route_with_index(tree, (5.0,))
        assert (value, index) == (13.0, 3)

    def test_tree_apply_matches_scalar_route(self):
        ds, forest = _trained(seed=2)
        idx = np.arange(ds.n_examples)
        for tree in forest.trees:
            bulk = tree_apply(tree, ds, idx)
            scalar = np.array([route(tree, ds.row(i)).value for i in idx])
            np.testing.assert_array_equal(bulk, scalar)

    def test_predict_schema_mismatch(self):
        _, forest = _trained(seed=4)
        with pytest.raises(ValueError, match="schema"):
            sf.predict(forest, (1.0,))
