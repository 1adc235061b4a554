"""Baseline conversions of categorical-set columns to flat columns.

These exist to compare the native set splitter against classic encodings:

* ``BagOfWords``  -- one numerical 0/1 column per vocabulary term;
* ``OneHot``      -- the same membership test typed categorical, and for a
  plain categorical input one present/absent column per observed value;
* ``MaxHash``     -- k columns, each the maximum of a seeded 64-bit hash over
  the terms of the set; outputs can be consumed categorically or numerically;
* ``TargetMean``  -- replaces a categorical column by the smoothed positive
  label ratio of its value, estimated on the training fold only.

Steps compose left to right in a ``TransformChain``. Fitting walks the chain
on the training dataset and stores whatever state each step needs (observed
values, hash seeds, target tables); evaluation folds reuse that state.

The hash is pinned so outputs are reproducible anywhere: FNV-1a over the
UTF-8 bytes with the 64-bit offset basis XORed with the seed, followed by a
splitmix64 finalizer, truncated to 63 bits (always non-negative). The empty
set maps to the sentinel value 0 in every hash slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import (
    MISSING_CATEGORY,
    Dataset,
    Feature,
    FeatureType,
    Vocabulary,
)
from .rng import derive_seed, splitmix64

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

EMPTY_SET_HASH = 0


def hash64(text: str, seed: int) -> int:
    """Seeded FNV-1a/splitmix64 hash of a string, in [0, 2**63)."""
    h = (_FNV_OFFSET ^ (seed & _MASK64)) & _MASK64
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return splitmix64(h) >> 1


def bag_of_words(term_ids, vocab_size: int) -> np.ndarray:
    """Counts of each vocabulary term in the set; binary since sets dedupe."""
    out = np.zeros(vocab_size, dtype=np.float64)
    out[list(term_ids)] = 1.0
    return out


def one_hot(term_ids, vocab_size: int) -> np.ndarray:
    """Same membership vector as ``bag_of_words`` but typed categorical."""
    out = np.zeros(vocab_size, dtype=np.int64)
    out[list(term_ids)] = 1
    return out


def max_hash(term_ids, vocab: Vocabulary, seeds) -> np.ndarray:
    """Per seed, the max of ``hash64`` over the set's terms; empty set -> 0."""
    ids = list(term_ids)
    if not ids:
        return np.zeros(len(seeds), dtype=np.int64)
    return np.array(
        [max(hash64(vocab.terms[i], s) for i in ids) for s in seeds],
        dtype=np.int64,
    )


@dataclass(frozen=True)
class TargetMeanTable:
    """Smoothed positive-label ratio per categorical value.

    ``table[v] = (pos_weight(v) + smoothing * prior) / (weight(v) + smoothing)``
    with ``prior`` the global weighted positive ratio. Unseen values map to
    the prior; missing stays missing (NaN).
    """

    ratios: dict[int, float]
    prior: float
    smoothing: float

    def lookup(self, value: int) -> float:
        if value == MISSING_CATEGORY:
            return float("nan")
        return self.ratios.get(value, self.prior)


def fit_target_mean(dataset: Dataset, feature: int, smoothing: float = 10.0) -> TargetMeanTable:
    if dataset.n_examples == 0:
        raise ValueError("cannot fit a target-mean table on an empty dataset")
    if dataset.features[feature].ftype != FeatureType.CATEGORICAL:
        raise ValueError("target-mean needs a categorical column")
    values = np.asarray(dataset.columns[feature])
    w = dataset.weights
    wy = w * dataset.labels
    prior = float(wy.sum() / w.sum())
    present = values != MISSING_CATEGORY
    cats, inv = np.unique(values[present], return_inverse=True)
    c_w = np.bincount(inv, weights=w[present], minlength=cats.size)
    c_wy = np.bincount(inv, weights=wy[present], minlength=cats.size)
    ratios = {
        int(v): float((c_wy[i] + smoothing * prior) / (c_w[i] + smoothing))
        for i, v in enumerate(cats)
    }
    return TargetMeanTable(ratios, prior, float(smoothing))


def _replace_columns(dataset: Dataset, replacements: dict[int, list]) -> Dataset:
    """Swap columns in place; a replacement is a list of (Feature, column)."""
    features: list[Feature] = []
    columns: list = []
    for i, (feat, col) in enumerate(zip(dataset.features, dataset.columns)):
        if i in replacements:
            for new_feat, new_col in replacements[i]:
                features.append(new_feat)
                columns.append(new_col)
        else:
            features.append(feat)
            columns.append(col)
    return Dataset(features, columns, dataset.labels, dataset.weights)


class BagOfWords:
    """Set columns -> one numerical membership column per vocabulary term."""

    name = "bow"

    def fit(self, dataset: Dataset) -> "BagOfWords":
        return self

    def transform(self, dataset: Dataset) -> Dataset:
        replacements: dict[int, list] = {}
        for i, feat in enumerate(dataset.features):
            if feat.ftype != FeatureType.CATEGORICAL_SET:
                continue
            vocab = feat.vocabulary
            m = len(vocab)
            matrix = np.zeros((dataset.n_examples, m), dtype=np.float64)
            for r, x in enumerate(dataset.columns[i]):
                if x is None:
                    matrix[r, :] = np.nan
                elif x:
                    matrix[r, list(x)] = 1.0
            replacements[i] = [
                (Feature(f"{feat.name}:{vocab.terms[j]}", FeatureType.NUMERICAL),
                 matrix[:, j])
                for j in range(m)
            ]
        if not replacements:
            raise ValueError("bag-of-words found no set columns to expand")
        return _replace_columns(dataset, replacements)

    def to_dict(self) -> dict:
        return {"step": self.name}

    @classmethod
    def from_dict(cls, data: dict) -> "BagOfWords":
        return cls()


class OneHot:
    """Membership columns typed categorical (domain {0 absent, 1 present}).

    Set columns expand per vocabulary term. Categorical columns expand per
    value observed at fit time, which makes hash outputs one-hot encodable.
    """

    name = "onehot"

    def __init__(self, observed: dict[str, list[int]] | None = None):
        self.observed = observed or {}

    def fit(self, dataset: Dataset) -> "OneHot":
        self.observed = {}
        for feat, col in zip(dataset.features, dataset.columns):
            if feat.ftype == FeatureType.CATEGORICAL:
                vals = np.unique(np.asarray(col))
                self.observed[feat.name] = [
                    int(v) for v in vals if v != MISSING_CATEGORY
                ]
        return self

    def transform(self, dataset: Dataset) -> Dataset:
        replacements: dict[int, list] = {}
        for i, feat in enumerate(dataset.features):
            if feat.ftype == FeatureType.CATEGORICAL_SET:
                vocab = feat.vocabulary
                m = len(vocab)
                matrix = np.zeros((dataset.n_examples, m), dtype=np.int64)
                for r, x in enumerate(dataset.columns[i]):
                    if x is None:
                        matrix[r, :] = MISSING_CATEGORY
                    elif x:
                        matrix[r, list(x)] = 1
                replacements[i] = [
                    (Feature(f"{feat.name}:{vocab.terms[j]}", FeatureType.CATEGORICAL),
                     matrix[:, j])
                    for j in range(m)
                ]
            elif feat.ftype == FeatureType.CATEGORICAL and feat.name in self.observed:
                col = np.asarray(dataset.columns[i])
                new = []
                for v in self.observed[feat.name]:
                    out = (col == v).astype(np.int64)
                    out[col == MISSING_CATEGORY] = MISSING_CATEGORY
                    new.append(
                        (Feature(f"{feat.name}={v}", FeatureType.CATEGORICAL), out))
                replacements[i] = new
        if not replacements:
            raise ValueError("one-hot found no set or categorical columns")
        return _replace_columns(dataset, replacements)

    def to_dict(self) -> dict:
        return {"step": self.name, "observed": self.observed}

    @classmethod
    def from_dict(cls, data: dict) -> "OneHot":
        return cls({k: [int(v) for v in vs] for k, vs in data.get("observed", {}).items()})


class MaxHash:
    """Set columns -> k hash-max columns, categorical or numerical.

    Seeds derive from a master seed via splitmix64, so the whole transform is
    reproducible from (seed, k). Numerical treatment casts the 63-bit hash
    to float64 after taking the max over int values.
    """

    name = "maxhash"

    def __init__(self, k: int = 32, seed: int = 0, treat: str = "categorical",
                 seeds: list[int] | None = None):
        if k < 1:
            raise ValueError("k must be >= 1")
        if treat not in ("categorical", "numerical"):
            raise ValueError("treat must be 'categorical' or 'numerical'")
        self.k = k
        self.seed = seed
        self.treat = treat
        self.seeds = seeds or [derive_seed(seed, 0x5EED, i) for i in range(k)]
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("hash seeds must be distinct")

    def fit(self, dataset: Dataset) -> "MaxHash":
        return self

    def transform(self, dataset: Dataset) -> Dataset:
        replacements: dict[int, list] = {}
        for i, feat in enumerate(dataset.features):
            if feat.ftype != FeatureType.CATEGORICAL_SET:
                continue
            vocab = feat.vocabulary
            # hash every vocabulary term once, then reduce per row
            table = np.array(
                [[hash64(t, s) for s in self.seeds] for t in vocab.terms],
                dtype=np.int64,
            ).reshape(len(vocab), self.k)
            matrix = np.zeros((dataset.n_examples, self.k), dtype=np.int64)
            missing = np.zeros(dataset.n_examples, dtype=bool)
            for r, x in enumerate(dataset.columns[i]):
                if x is None:
                    missing[r] = True
                elif x:
                    matrix[r] = table[list(x)].max(axis=0)
            new = []
            for j in range(self.k):
                if self.treat == "categorical":
                    col = matrix[:, j].copy()
                    col[missing] = MISSING_CATEGORY
                    new.append(
                        (Feature(f"{feat.name}#h{j}", FeatureType.CATEGORICAL), col))
                else:
                    col = matrix[:, j].astype(np.float64)
                    col[missing] = np.nan
                    new.append(
                        (Feature(f"{feat.name}#h{j}", FeatureType.NUMERICAL), col))
            replacements[i] = new
        if not replacements:
            raise ValueError("max-hash found no set columns")
        return _replace_columns(dataset, replacements)

    def to_dict(self) -> dict:
        return {"step": self.name, "k": self.k, "seed": self.seed,
                "treat": self.treat, "seeds": list(self.seeds)}

    @classmethod
    def from_dict(cls, data: dict) -> "MaxHash":
        return cls(k=int(data["k"]), seed=int(data["seed"]), treat=data["treat"],
                   seeds=[int(s) for s in data["seeds"]])


class TargetMean:
    """Categorical columns -> numerical smoothed positive-label ratios."""

    name = "targetmean"

    def __init__(self, smoothing: float = 10.0,
                 tables: dict[str, TargetMeanTable] | None = None):
        if smoothing < 0:
            raise ValueError("smoothing must be non-negative")
        self.smoothing = smoothing
        self.tables = tables or {}

    def fit(self, dataset: Dataset) -> "TargetMean":
        self.tables = {}
        for i, feat in enumerate(dataset.features):
            if feat.ftype == FeatureType.CATEGORICAL:
                self.tables[feat.name] = fit_target_mean(dataset, i, self.smoothing)
        if not self.tables:
            raise ValueError("target-mean found no categorical columns")
        return self

    def transform(self, dataset: Dataset) -> Dataset:
        replacements: dict[int, list] = {}
        for i, feat in enumerate(dataset.features):
            table = self.tables.get(feat.name)
            if feat.ftype != FeatureType.CATEGORICAL or table is None:
                continue
            col = np.asarray(dataset.columns[i])
            out = np.fromiter((table.lookup(int(v)) for v in col),
                              dtype=np.float64, count=len(col))
            replacements[i] = [(Feature(feat.name, FeatureType.NUMERICAL), out)]
        if not replacements:
            raise ValueError("target-mean found no fitted categorical columns")
        return _replace_columns(dataset, replacements)

    def to_dict(self) -> dict:
        return {
            "step": self.name,
            "smoothing": self.smoothing,
            "tables": {
                name: {
                    "prior": t.prior,
                    "ratios": [[v, t.ratios[v]] for v in sorted(t.ratios)],
                }
                for name, t in sorted(self.tables.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TargetMean":
        tables = {
            name: TargetMeanTable(
                {int(v): float(r) for v, r in spec["ratios"]},
                float(spec["prior"]),
                float(data["smoothing"]),
            )
            for name, spec in data.get("tables", {}).items()
        }
        return cls(float(data["smoothing"]), tables)


_STEP_TYPES = {cls.name: cls for cls in (BagOfWords, OneHot, MaxHash, TargetMean)}
_ALIASES = {"bagofwords": "bow"}


class TransformChain:
    """Ordered transform steps fitted once and reapplied to any fold."""

    def __init__(self, steps: list):
        self.steps = list(steps)

    def fit(self, dataset: Dataset) -> "TransformChain":
        for step in self.steps:
            step.fit(dataset)
            dataset = step.transform(dataset)
        return self

    def transform(self, dataset: Dataset) -> Dataset:
        for step in self.steps:
            dataset = step.transform(dataset)
        return dataset

    def fit_transform(self, dataset: Dataset) -> Dataset:
        self.fit(dataset)
        return self.transform(dataset)

    def to_dict(self) -> dict:
        return {"steps": [s.to_dict() for s in self.steps]}

    @classmethod
    def from_dict(cls, data: dict) -> "TransformChain":
        steps = []
        for spec in data.get("steps", []):
            steps.append(_STEP_TYPES[spec["step"]].from_dict(spec))
        return cls(steps)


def make_chain(
    names,
    seed: int = 0,
    maxhash_k: int = 32,
    maxhash_treat: str = "categorical",
    smoothing: float = 10.0,
) -> TransformChain:
    """Build an unfitted chain from step names like ("maxhash", "targetmean")."""
    steps = []
    for raw in names:
        name = _ALIASES.get(raw.strip().lower(), raw.strip().lower())
        if name == "bow":
            steps.append(BagOfWords())
        elif name == "onehot":
            steps.append(OneHot())
        elif name == "maxhash":
            steps.append(MaxHash(k=maxhash_k, seed=seed, treat=maxhash_treat))
        elif name == "targetmean":
            steps.append(TargetMean(smoothing=smoothing))
        else:
            raise ValueError(f"unknown transform step {raw!r}")
    return TransformChain(steps)
