"""Datasets mixing numerical, categorical, and categorical-set features.

A categorical-set value is a sorted, duplicate-free tuple of vocabulary term
ids, e.g. the unigrams of a sentence. The empty tuple is a legal value and is
distinct from a missing value (``None``): an empty set simply contains no
terms, while a missing value means the field was absent.

Column storage is columnar:

* numerical   -> ``float64`` array, NaN marks missing;
* categorical -> ``int64`` array of value ids, ``-1`` marks missing;
* set         -> python list of sorted id tuples, ``None`` marks missing.
"""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

MISSING_CATEGORY = -1

_ASCII_WS = re.compile(r"[ \t\n\r\f\v]+")


class DataError(Exception):
    """Raised for malformed input files or rows that violate a schema."""


class FeatureType(str, Enum):
    NUMERICAL = "numerical"
    CATEGORICAL = "categorical"
    CATEGORICAL_SET = "set"


@dataclass(frozen=True)
class Vocabulary:
    """Dense term -> id mapping ordered by descending document frequency.

    Ids are 0-based and assigned in descending frequency with a lexicographic
    tie-break, so the mapping is a pure function of the corpus.
    """

    terms: tuple[str, ...]
    frequencies: tuple[int, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index

    def id_of(self, term: str) -> int | None:
        return self.index.get(term)

    def to_dict(self) -> dict:
        return {"terms": list(self.terms), "frequencies": list(self.frequencies)}

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        return cls(tuple(data["terms"]), tuple(int(f) for f in data["frequencies"]))


@dataclass(frozen=True)
class Feature:
    name: str
    ftype: FeatureType
    vocabulary: Vocabulary | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "type": self.ftype.value,
            "vocabulary": self.vocabulary.to_dict() if self.vocabulary else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Feature":
        vocab = data.get("vocabulary")
        return cls(
            name=data["name"],
            ftype=FeatureType(data["type"]),
            vocabulary=Vocabulary.from_dict(vocab) if vocab else None,
        )


def tokenize(text: str) -> frozenset[str]:
    """Split on runs of ASCII whitespace and deduplicate.

    No lowercasing, no stemming; surface forms are kept as-is. An empty
    string yields an empty set.
    """
    return frozenset(t for t in _ASCII_WS.split(text) if t)


def build_vocabulary(
    corpus: Iterable[Iterable[str]],
    max_size: int = 5000,
    min_frequency: int = 5,
) -> Vocabulary:
    """Build a pruned vocabulary from a collection of token sets.

    Frequency means document frequency: the number of examples containing the
    term. Terms seen in fewer than ``min_frequency`` examples are dropped,
    the survivors are ranked by (descending frequency, term) and the top
    ``max_size`` keep dense ids in rank order.
    """
    if max_size < 1 or min_frequency < 1:
        raise ValueError("max_size and min_frequency must be >= 1")
    counts: Counter[str] = Counter()
    for tokens in corpus:
        counts.update(set(tokens))
    items = [(t, c) for t, c in counts.items() if c >= min_frequency]
    items.sort(key=lambda tc: (-tc[1], tc[0]))
    items = items[:max_size]
    return Vocabulary(tuple(t for t, _ in items), tuple(c for _, c in items))


def encode_tokens(tokens: Iterable[str], vocab: Vocabulary) -> tuple[int, ...]:
    """Map tokens to sorted term ids, silently dropping out-of-vocabulary ones.

    Already-encoded input round-trips: encoding the decoded form of a sorted
    id tuple returns the same tuple.
    """
    index = vocab.index
    ids = {index[t] for t in tokens if t in index}
    return tuple(sorted(ids))


@dataclass
class Dataset:
    """Schema, columns, binary labels and per-example weights."""

    features: list[Feature]
    columns: list
    labels: np.ndarray
    weights: np.ndarray

    @classmethod
    def create(cls, features, columns, labels, weights=None) -> "Dataset":
        labels = np.asarray(labels, dtype=np.int64)
        if weights is None:
            weights = np.ones(len(labels), dtype=np.float64)
        else:
            weights = np.asarray(weights, dtype=np.float64)
        ds = cls(list(features), list(columns), labels, weights)
        ds.validate()
        return ds

    @property
    def n_examples(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return len(self.features)

    def column(self, i: int):
        return self.columns[i]

    def validate(self) -> None:
        n = self.n_examples
        if len(self.weights) != n:
            raise ValueError("labels and weights length mismatch")
        if len(self.features) != len(self.columns):
            raise ValueError("schema and column count mismatch")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be binary 0/1")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        for feat, col in zip(self.features, self.columns):
            if feat.ftype == FeatureType.NUMERICAL:
                if len(col) != n or np.asarray(col).dtype != np.float64:
                    raise ValueError(f"bad numerical column {feat.name}")
            elif feat.ftype == FeatureType.CATEGORICAL:
                if len(col) != n:
                    raise ValueError(f"bad categorical column {feat.name}")
            else:
                if len(col) != n:
                    raise ValueError(f"bad set column {feat.name}")
                size = len(feat.vocabulary) if feat.vocabulary else None
                for x in col:
                    if x is None:
                        continue
                    if size is not None and any(i >= size for i in x):
                        raise ValueError(f"term id out of range in {feat.name}")

    def row(self, i: int) -> tuple:
        return tuple(col[i] for col in self.columns)

    def rows(self, indices=None) -> list[tuple]:
        if indices is None:
            indices = range(self.n_examples)
        return [self.row(i) for i in indices]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        cols = []
        for feat, col in zip(self.features, self.columns):
            if feat.ftype == FeatureType.CATEGORICAL_SET:
                cols.append([col[i] for i in indices])
            else:
                cols.append(np.asarray(col)[indices])
        return Dataset(list(self.features), cols, self.labels[indices], self.weights[indices])


def dataset_from_token_sets(
    token_sets: Sequence[Iterable[str]],
    vocab: Vocabulary,
    labels,
    weights=None,
    name: str = "text",
) -> Dataset:
    """Single set-feature dataset from raw token sets (OOV tokens dropped)."""
    column = [encode_tokens(tokens, vocab) for tokens in token_sets]
    feature = Feature(name, FeatureType.CATEGORICAL_SET, vocab)
    return Dataset.create([feature], [column], labels, weights)


def load_labeled_text(path) -> tuple[list[frozenset[str]], np.ndarray]:
    """Read ``<label><TAB><text>`` lines; label must be 0 or 1."""
    token_sets: list[frozenset[str]] = []
    labels: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            head, _, text = line.partition("\t")
            if head not in ("0", "1"):
                raise DataError(f"{path}:{lineno}: label must be 0 or 1, got {head!r}")
            labels.append(int(head))
            token_sets.append(tokenize(text))
    return token_sets, np.asarray(labels, dtype=np.int64)


def _parse_set_cell(cell: str) -> list[str] | None:
    # "{a b c}" -> tokens, "{}" -> empty set, "" -> missing
    if cell == "":
        return None
    if not (cell.startswith("{") and cell.endswith("}")):
        raise DataError("set cell must look like '{tok tok}' or '{}'")
    inner = cell[1:-1]
    return [t for t in _ASCII_WS.split(inner) if t]


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        return header, list(reader)


def load_csv(
    path,
    column_types: dict[str, str],
    label_column: str = "label",
    weight_column: str | None = None,
) -> Dataset:
    """Load a UTF-8 comma-separated file with a header row.

    ``column_types`` maps feature column names to ``numerical`` /
    ``categorical`` / ``set``. Set cells hold space-separated tokens inside
    braces (``{blue red}``); ``{}`` is the empty set; a fully empty cell is
    missing. Empty numerical/categorical cells are missing.

    Categorical string values and set tokens get ids from per-column value
    tables built over the whole file (descending frequency, lexicographic
    tie-break); labels play no part in the id assignment.
    """
    header, raw_rows = _read_csv(path)

    for name, ftype in column_types.items():
        if name not in header:
            raise DataError(f"{path}: column {name!r} not in header")
        if ftype not in ("numerical", "categorical", "set"):
            raise DataError(f"{path}: unknown column type {ftype!r} for {name!r}")
    if label_column not in header:
        raise DataError(f"{path}: label column {label_column!r} not in header")

    col_of = {name: header.index(name) for name in header}
    feature_names = [n for n in header if n in column_types]

    labels = []
    weights = [] if weight_column else None
    raw_cols: dict[str, list] = {n: [] for n in feature_names}
    for rowno, row in enumerate(raw_rows, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{rowno}: expected {len(header)} cells, got {len(row)}")
        cell = row[col_of[label_column]]
        if cell not in ("0", "1"):
            raise DataError(f"{path}:{rowno}: label must be 0 or 1, got {cell!r}")
        labels.append(int(cell))
        if weight_column:
            try:
                weights.append(float(row[col_of[weight_column]]))
            except ValueError:
                raise DataError(f"{path}:{rowno}: bad weight") from None
        for name in feature_names:
            raw_cols[name].append(row[col_of[name]])

    features: list[Feature] = []
    columns: list = []
    for name in feature_names:
        ftype = column_types[name]
        cells = raw_cols[name]
        if ftype == "numerical":
            out = np.empty(len(cells), dtype=np.float64)
            for i, cell in enumerate(cells):
                if cell == "":
                    out[i] = np.nan
                else:
                    try:
                        out[i] = float(cell)
                    except ValueError:
                        raise DataError(
                            f"{path}:{i + 2}: column {name!r}: bad number {cell!r}"
                        ) from None
            features.append(Feature(name, FeatureType.NUMERICAL))
            columns.append(out)
        elif ftype == "categorical":
            vocab = build_vocabulary(([c] for c in cells if c != ""), max_size=len(cells) or 1,
                                     min_frequency=1)
            out = np.full(len(cells), MISSING_CATEGORY, dtype=np.int64)
            for i, cell in enumerate(cells):
                if cell != "":
                    out[i] = vocab.index[cell]
            features.append(Feature(name, FeatureType.CATEGORICAL, vocab))
            columns.append(out)
        else:
            parsed = []
            for i, cell in enumerate(cells):
                try:
                    parsed.append(_parse_set_cell(cell))
                except DataError as exc:
                    raise DataError(f"{path}:{i + 2}: column {name!r}: {exc}") from None
            vocab = build_vocabulary((p for p in parsed if p is not None),
                                     max_size=max(len(cells), 1) * 64, min_frequency=1)
            col = [None if p is None else encode_tokens(p, vocab) for p in parsed]
            features.append(Feature(name, FeatureType.CATEGORICAL_SET, vocab))
            columns.append(col)

    return Dataset.create(features, columns, labels, weights)


def load_csv_with_schema(
    path,
    features: list[Feature],
    label_column: str | None = None,
    weight_column: str | None = None,
) -> Dataset:
    """Load a CSV against an existing schema (e.g. a trained model's).

    Categorical values and set tokens are encoded with the schema's value
    tables; unseen categorical values become missing, unseen set tokens are
    dropped. Without a label column, labels default to 0.
    """
    header, raw_rows = _read_csv(path)
    for feat in features:
        if feat.name not in header:
            raise DataError(f"{path}: column {feat.name!r} not in header")
    col_of = {name: header.index(name) for name in header}
    n = len(raw_rows)

    labels = np.zeros(n, dtype=np.int64)
    if label_column is not None:
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header")
        for i, row in enumerate(raw_rows):
            cell = row[col_of[label_column]]
            if cell not in ("0", "1"):
                raise DataError(f"{path}:{i + 2}: label must be 0 or 1, got {cell!r}")
            labels[i] = int(cell)
    weights = None
    if weight_column is not None:
        weights = np.array(
            [float(row[col_of[weight_column]]) for row in raw_rows], dtype=np.float64)

    columns: list = []
    for feat in features:
        j = col_of[feat.name]
        cells = [row[j] if len(row) > j else "" for row in raw_rows]
        if feat.ftype == FeatureType.NUMERICAL:
            out = np.empty(n, dtype=np.float64)
            for i, cell in enumerate(cells):
                if cell == "":
                    out[i] = np.nan
                else:
                    try:
                        out[i] = float(cell)
                    except ValueError:
                        raise DataError(
                            f"{path}:{i + 2}: column {feat.name!r}: bad number {cell!r}"
                        ) from None
            columns.append(out)
        elif feat.ftype == FeatureType.CATEGORICAL:
            index = feat.vocabulary.index if feat.vocabulary else {}
            out = np.full(n, MISSING_CATEGORY, dtype=np.int64)
            for i, cell in enumerate(cells):
                if cell != "":
                    out[i] = index.get(cell, MISSING_CATEGORY)
            columns.append(out)
        else:
            col = []
            for i, cell in enumerate(cells):
                try:
                    parsed = _parse_set_cell(cell)
                except DataError as exc:
                    raise DataError(f"{path}:{i + 2}: column {feat.name!r}: {exc}") from None
                col.append(None if parsed is None
                           else encode_tokens(parsed, feat.vocabulary))
            columns.append(col)

    return Dataset.create(list(features), columns, labels, weights)
