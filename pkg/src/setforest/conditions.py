"""Per-node routing tests.

Three condition kinds route an example to the positive or negative branch:

* ``NumericalGE``  -- value >= threshold;
* ``CategoryIn``   -- categorical value is one of a fixed value set;
* ``SetIntersects`` -- the example's term set shares at least one term with
  a fixed term set (the condition's mask).

A missing value always evaluates to False, i.e. routes to the negative
branch, for every condition kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .dataset import MISSING_CATEGORY, Dataset, FeatureType


@dataclass(frozen=True)
class NumericalGE:
    feature: int
    threshold: float


@dataclass(frozen=True)
class CategoryIn:
    feature: int
    values: frozenset[int]


@dataclass(frozen=True)
class SetIntersects:
    feature: int
    mask: tuple[int, ...]  # strictly increasing term ids, nonempty


SplitCondition = Union[NumericalGE, CategoryIn, SetIntersects]


def sets_intersect(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    """Merge walk over two sorted id tuples; linear in len(a) + len(b)."""
    i = j = 0
    na, nb = len(a), len(b)
    while i < na and j < nb:
        ai, bj = a[i], b[j]
        if ai == bj:
            return True
        if ai < bj:
            i += 1
        else:
            j += 1
    return False


def evaluate(condition: SplitCondition, row: tuple) -> bool:
    """Evaluate a condition on one example row (missing -> False)."""
    if isinstance(condition, NumericalGE):
        v = row[condition.feature]
        return (not math.isnan(v)) and v >= condition.threshold
    if isinstance(condition, CategoryIn):
        v = row[condition.feature]
        return v != MISSING_CATEGORY and v in condition.values
    x = row[condition.feature]
    return x is not None and sets_intersect(x, condition.mask)


def evaluate_column(condition: SplitCondition, dataset: Dataset, indices) -> np.ndarray:
    """Vectorised `evaluate` over ``dataset`` rows selected by ``indices``."""
    indices = np.asarray(indices)
    ftype = dataset.features[condition.feature].ftype
    col = dataset.columns[condition.feature]
    if ftype == FeatureType.NUMERICAL:
        vals = np.asarray(col)[indices]
        with np.errstate(invalid="ignore"):
            return ~np.isnan(vals) & (vals >= condition.threshold)
    if ftype == FeatureType.CATEGORICAL:
        vals = np.asarray(col)[indices]
        wanted = np.fromiter(sorted(condition.values), dtype=np.int64,
                             count=len(condition.values))
        return np.isin(vals, wanted)
    mask = condition.mask
    return np.fromiter(
        (col[i] is not None and sets_intersect(col[i], mask) for i in indices),
        dtype=bool,
        count=len(indices),
    )


def condition_to_dict(condition: SplitCondition) -> dict:
    if isinstance(condition, NumericalGE):
        return {"kind": "numerical_ge", "feature": condition.feature,
                "threshold": float(condition.threshold)}
    if isinstance(condition, CategoryIn):
        return {"kind": "category_in", "feature": condition.feature,
                "values": sorted(int(v) for v in condition.values)}
    return {"kind": "set_intersects", "feature": condition.feature,
            "mask": [int(t) for t in condition.mask]}


def condition_from_dict(data: dict) -> SplitCondition:
    kind = data["kind"]
    if kind == "numerical_ge":
        return NumericalGE(int(data["feature"]), float(data["threshold"]))
    if kind == "category_in":
        return CategoryIn(int(data["feature"]), frozenset(int(v) for v in data["values"]))
    if kind == "set_intersects":
        return SetIntersects(int(data["feature"]), tuple(int(t) for t in data["mask"]))
    raise ValueError(f"unknown condition kind {kind!r}")
