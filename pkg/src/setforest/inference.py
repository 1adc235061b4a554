"""Compiled forest evaluation with per-tree leaf bitmasks.

Instead of routing an example from the root down, the compiled evaluator
keeps one word per tree whose bits stand for the tree's leaves in
left-to-right order, all set initially. Every node contributes masks that
clear the leaves of its *negative* subtree, and a mask is applied exactly
when the node's condition holds:

* a numerical node stores (threshold, mask) under its feature; entries are
  sorted by threshold and applied while ``threshold <= value``;
* a categorical-set node stores, for every term of its mask, a per-term
  entry applied when the example contains that term;
* a categorical node stores one entry per value of its value set, applied
  when the example carries that value.

Masks of the same (feature, term, tree) coming from several nodes are
AND-combined into a single entry. Missing values apply nothing. Once all
masks are in, the lowest set bit of each tree's word is the leaf the
top-down walk would have reached: conditions that held cleared everything
to the left of the true path, conditions that failed (or were missing)
cleared nothing of it, and the negative-first leaf order makes the
fall-through leaf the leftmost one.

Trees wider than 64 leaves do not fit one word; they are kept aside and
evaluated top-down, and their outputs merge with the compiled trees in tree
order, so the result is bit-identical to the reference evaluator either way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditions import NumericalGE, SetIntersects
from .dataset import Dataset, Feature, FeatureType, MISSING_CATEGORY
from .model import (
    DecisionForest,
    Leaf,
    TreeNode,
    aggregate,
    count_leaves,
    predict,
    route,
    route_with_index,
)

MAX_COMPILED_LEAVES = 64

_ONE = np.uint64(1)


@dataclass
class NumericalEntries:
    """Per-feature node masks sorted ascending by threshold."""

    thresholds: np.ndarray  # float64
    tree_ids: np.ndarray  # int64
    masks: np.ndarray  # uint64


@dataclass
class KeyedEntries:
    """Per-feature term (or category value) masks.

    ``index`` maps a term id to its [begin, end) range in the flat arrays;
    ranges tile the arrays in ascending key order and tree ids are strictly
    increasing inside each range.
    """

    index: dict[int, tuple[int, int]]
    tree_ids: np.ndarray  # int64
    masks: np.ndarray  # uint64


@dataclass
class CompiledForest:
    kind: str
    initial_score: float
    num_trees: int
    features: list[Feature]
    leaf_values: np.ndarray  # (num_trees, MAX_COMPILED_LEAVES) float64, padded
    num_leaves: np.ndarray  # int64 per tree
    default_masks: np.ndarray  # uint64 per tree, all leaves set
    numerical: dict[int, NumericalEntries]
    keyed: dict[int, KeyedEntries]
    overflow: dict[int, TreeNode]  # too-wide trees, evaluated top-down


def _full_mask(width: int) -> int:
    return (1 << width) - 1


def compile_forest(forest: DecisionForest) -> CompiledForest:
    num_trees = len(forest.trees)
    leaf_values = np.zeros((num_trees, MAX_COMPILED_LEAVES), dtype=np.float64)
    num_leaves = np.zeros(num_trees, dtype=np.int64)
    default_masks = np.zeros(num_trees, dtype=np.uint64)
    overflow: dict[int, TreeNode] = {}
    numerical_raw: dict[int, list] = {}
    keyed_raw: dict[int, dict] = {}

    for tree_id, tree in enumerate(forest.trees):
        n_leaves = count_leaves(tree)
        num_leaves[tree_id] = n_leaves
        if n_leaves > MAX_COMPILED_LEAVES:
            overflow[tree_id] = tree
            default_masks[tree_id] = _ONE
            continue
        full = _full_mask(n_leaves)
        default_masks[tree_id] = np.uint64(full)
        seq = 0

        def walk(node: TreeNode, lo: int):
            nonlocal seq
            if isinstance(node, Leaf):
                leaf_values[tree_id, lo] = node.value
                return 1
            n_left = count_leaves(node.negative)
            # condition true -> positive branch; the negative span is dead
            mask = full ^ (_full_mask(n_left) << lo)
            cond = node.condition
            if isinstance(cond, NumericalGE):
                numerical_raw.setdefault(cond.feature, []).append(
                    (cond.threshold, tree_id, seq, mask))
            elif isinstance(cond, SetIntersects):
                per_feature = keyed_raw.setdefault(cond.feature, {})
                for term in cond.mask:
                    key = (term, tree_id)
                    per_feature[key] = per_feature.get(key, ~0) & mask
            else:
                per_feature = keyed_raw.setdefault(cond.feature, {})
                for value in sorted(cond.values):
                    key = (value, tree_id)
                    per_feature[key] = per_feature.get(key, ~0) & mask
            seq += 1
            walk(node.negative, lo)
            used = n_left + walk(node.positive, lo + n_left)
            return used

        walk(tree, 0)

    numerical = {}
    for feature, entries in numerical_raw.items():
        entries.sort(key=lambda e: (e[0], e[1], e[2]))
        numerical[feature] = NumericalEntries(
            thresholds=np.array([e[0] for e in entries], dtype=np.float64),
            tree_ids=np.array([e[1] for e in entries], dtype=np.int64),
            masks=np.array([e[3] & ((1 << 64) - 1) for e in entries], dtype=np.uint64),
        )

    keyed = {}
    for feature, per_key in keyed_raw.items():
        items = sorted(per_key.items())  # by (key, tree_id)
        index: dict[int, tuple[int, int]] = {}
        begin = 0
        for pos, ((key, _), _mask) in enumerate(items):
            if pos + 1 == len(items) or items[pos + 1][0][0] != key:
                index[key] = (begin, pos + 1)
                begin = pos + 1
        keyed[feature] = KeyedEntries(
            index=index,
            tree_ids=np.array([tid for (_, tid), _ in items], dtype=np.int64),
            masks=np.array([m & ((1 << 64) - 1) for _, m in items], dtype=np.uint64),
        )

    return CompiledForest(
        kind=forest.kind,
        initial_score=forest.initial_score,
        num_trees=num_trees,
        features=list(forest.features),
        leaf_values=leaf_values,
        num_leaves=num_leaves,
        default_masks=default_masks,
        numerical=numerical,
        keyed=keyed,
        overflow=overflow,
    )


def _apply_masks(compiled: CompiledForest, row: tuple) -> np.ndarray:
    leafidx = compiled.default_masks.copy()
    tid_chunks = []
    mask_chunks = []
    for feature, group in compiled.numerical.items():
        value = row[feature]
        if value != value:  # NaN: missing skips the feature entirely
            continue
        k = int(np.searchsorted(group.thresholds, value, side="right"))
        if k:
            tid_chunks.append(group.tree_ids[:k])
            mask_chunks.append(group.masks[:k])
    for feature, group in compiled.keyed.items():
        value = row[feature]
        if compiled.features[feature].ftype == FeatureType.CATEGORICAL:
            if value == MISSING_CATEGORY:
                continue
            terms = (int(value),)
        else:
            if not value:  # missing or empty set: nothing to apply
                continue
            terms = value
        index = group.index
        for term in terms:
            span = index.get(term)
            if span is not None:
                tid_chunks.append(group.tree_ids[span[0]:span[1]])
                mask_chunks.append(group.masks[span[0]:span[1]])
    if tid_chunks:
        np.bitwise_and.at(leafidx, np.concatenate(tid_chunks),
                          np.concatenate(mask_chunks))
    return leafidx


def compiled_leaf_indices(compiled: CompiledForest, row: tuple) -> np.ndarray:
    """Per-tree active leaf position (left-to-right), overflow trees included."""
    leafidx = _apply_masks(compiled, row)
    # index of the lowest set bit: popcount of the trailing-zero run
    low = np.bitwise_count((leafidx - _ONE) & ~leafidx).astype(np.int64)
    for tree_id, tree in compiled.overflow.items():
        # overflow trees may hold far more than 2**8 leaves
        low[tree_id] = route_with_index(tree, row)[1]
    return low


def predict_compiled(compiled: CompiledForest, row: tuple) -> float:
    """Probability from the compiled evaluator; bit-identical to ``predict``."""
    if len(row) != len(compiled.features):
        raise ValueError(
            f"row has {len(row)} values, schema has {len(compiled.features)}")
    leafidx = _apply_masks(compiled, row)
    low = np.bitwise_count((leafidx - _ONE) & ~leafidx)
    values = compiled.leaf_values[np.arange(compiled.num_trees), low]
    for tree_id, tree in compiled.overflow.items():
        values[tree_id] = route(tree, row).value
    return aggregate(compiled.kind, compiled.initial_score, values)


def predict_top_down(forest: DecisionForest, row: tuple) -> float:
    """Reference evaluator: route the example root-to-leaf in every tree.

    Set-intersection conditions are evaluated by a linear merge over the
    sorted example set and the sorted condition mask.
    """
    return predict(forest, row)


def predict_dataset(compiled: CompiledForest, dataset: Dataset) -> np.ndarray:
    rows = dataset.rows()
    return np.fromiter((predict_compiled(compiled, row) for row in rows),
                       dtype=np.float64, count=len(rows))
