"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

import setforest as sf
from setforest.dataset import Feature, FeatureType, Vocabulary


def make_vocab(terms):
    return Vocabulary(tuple(terms), tuple([1] * len(terms)))


def set_dataset(sets, labels, vocab_size=None, weights=None, name="text"):
    """Dataset with a single set feature from already-encoded id tuples."""
    if vocab_size is None:
        vocab_size = 1 + max((max(x) for x in sets if x), default=0)
    vocab = make_vocab([f"t{i}" for i in range(vocab_size)])
    column = [None if x is None else tuple(sorted(x)) for x in sets]
    feature = Feature(name, FeatureType.CATEGORICAL_SET, vocab)
    return sf.Dataset.create([feature], [column], labels, weights)


def random_mixed_dataset(seed, n=200, with_labels=True):
    """Random schema with numerical, categorical, and set features.

    Labels correlate with the features so that trees actually grow. Returns
    (dataset, vocabularies-per-set-feature).
    """
    rng = np.random.default_rng(seed)
    n_num = int(rng.integers(1, 3))
    n_cat = int(rng.integers(1, 2 + 1))
    n_set = int(rng.integers(1, 3))
    features = []
    columns = []
    signal = np.zeros(n)

    for i in range(n_num):
        col = rng.normal(size=n)
        col[rng.random(n) < 0.1] = np.nan
        features.append(Feature(f"num{i}", FeatureType.NUMERICAL))
        columns.append(col)
        signal += np.where(np.isnan(col), 0.0, col)

    for i in range(n_cat):
        k = int(rng.integers(2, 7))
        col = rng.integers(0, k, size=n)
        col[rng.random(n) < 0.1] = sf.MISSING_CATEGORY
        vocab = make_vocab([f"c{i}v{j}" for j in range(k)])
        features.append(Feature(f"cat{i}", FeatureType.CATEGORICAL, vocab))
        columns.append(col.astype(np.int64))
        signal += np.where(col >= 0, (col % 2) * 0.8, 0.0)

    set_vocabs = []
    for i in range(n_set):
        m = int(rng.integers(5, 16))
        vocab = make_vocab([f"s{i}w{j}" for j in range(m)])
        set_vocabs.append(vocab)
        col = []
        for r in range(n):
            if rng.random() < 0.06:
                col.append(None)
            else:
                size = int(rng.integers(0, min(6, m)))
                ids = tuple(sorted(rng.choice(m, size=size, replace=False).tolist()))
                col.append(ids)
                if ids and min(ids) < m // 3:
                    signal[r] += 1.0
        features.append(Feature(f"set{i}", FeatureType.CATEGORICAL_SET, vocab))
        columns.append(col)

    noise = rng.normal(scale=0.8, size=n)
    labels = (signal + noise > np.median(signal + noise)).astype(np.int64)
    if not with_labels:
        labels = np.zeros(n, dtype=np.int64)
    if labels.min() == labels.max():
        labels[: n // 2] = 1 - labels[0]
    ds = sf.Dataset.create(features, columns, labels)
    return ds, set_vocabs


def random_rows_for(dataset, seed, n=1000):
    """Evaluation rows for a schema: empty sets, missing values, and
    out-of-vocabulary tokens (dropped through the encode path) included."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        row = []
        for feat in dataset.features:
            if feat.ftype == FeatureType.NUMERICAL:
                row.append(np.nan if rng.random() < 0.15 else float(rng.normal()))
            elif feat.ftype == FeatureType.CATEGORICAL:
                k = len(feat.vocabulary)
                row.append(sf.MISSING_CATEGORY if rng.random() < 0.15
                           else int(rng.integers(0, k)))
            else:
                u = rng.random()
                if u < 0.1:
                    row.append(None)
                elif u < 0.25:
                    row.append(())
                else:
                    vocab = feat.vocabulary
                    size = int(rng.integers(1, 7))
                    tokens = [vocab.terms[int(rng.integers(0, len(vocab)))]
                              if rng.random() < 0.8 else f"oov{int(rng.integers(0, 5))}"
                              for _ in range(size)]
                    row.append(sf.encode_tokens(tokens, vocab))
        rows.append(tuple(row))
    return rows


def build_complete_tree(depth, leaf_values=None):
    """Complete binary tree of the given depth over a numerical feature."""
    counter = {"leaf": 0}

    def build(d):
        if d == depth:
            value = (leaf_values[counter["leaf"]]
                     if leaf_values is not None else float(counter["leaf"]))
            counter["leaf"] += 1
            return sf.Leaf(value)
        return sf.Internal(sf.NumericalGE(0, float(d)), build(d + 1), build(d + 1))

    return build(0)


def enumerate_mask_gains(sets, targets, weights, vocab_size, objective="classification"):
    """Oracle: gains of every nonempty mask over a small vocabulary.

    Examples are turned into integer bitsets and every mask in
    [1, 2**vocab_size) is scored from the branch statistics its bit
    intersection induces. Returns (masks, gains) aligned arrays.
    """
    from setforest.splits import gain_from_stats

    bits = np.array([sum(1 << t for t in x) for x in sets], dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    wt = w * np.asarray(targets, dtype=np.float64)
    masks = np.arange(1, 1 << vocab_size, dtype=np.int64)
    inter = (bits[None, :] & masks[:, None]) != 0
    gains = gain_from_stats(w.sum(), wt.sum(), inter @ w, inter @ wt, objective)
    return masks, gains


def best_singleton(masks, gains, vocab_size):
    """(term id, gain) of the best single-term mask.

    Exact float comparison with ties going to the lowest id, mirroring the
    splitter's arg-max discipline."""
    best_term, best_gain = None, -1.0
    for t in range(vocab_size):
        g = float(gains[(1 << t) - 1])
        if g > best_gain:
            best_term, best_gain = t, g
    return best_term, best_gain


def golden_two_tree_forest():
    """Two trees over one set feature with vocabulary (a, b, c, d).

    Tree 0 (leaves l0, l1, l2): the root tests intersection with {c}; its
    negative child tests intersection with {b}. Tree 1 (leaves l0, l1):
    the root tests intersection with {c, d}.
    """
    vocab = make_vocab(["a", "b", "c", "d"])
    a, b, c, d = 0, 1, 2, 3
    tree0 = sf.Internal(
        sf.SetIntersects(0, (c,)),
        sf.Internal(sf.SetIntersects(0, (b,)), sf.Leaf(0.0), sf.Leaf(0.25)),
        sf.Leaf(1.0),
    )
    tree1 = sf.Internal(sf.SetIntersects(0, (c, d)), sf.Leaf(0.125), sf.Leaf(0.5))
    feature = Feature("text", FeatureType.CATEGORICAL_SET, vocab)
    forest = sf.DecisionForest(kind="rf", trees=[tree0, tree1], initial_score=0.0,
                               features=[feature], metadata={})
    return forest, (a, b, c, d)
