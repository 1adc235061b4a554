"""Split search over numerical, categorical, and categorical-set features.

All searches share one gain convention:

* classification trees score a candidate partition by weighted Shannon
  information gain (bits);
* regression trees score by weighted variance reduction (sum-of-squares
  decrease divided by the node weight).

A degenerate partition (one empty side) scores exactly 0, and missing
values always sit on the negative side of every candidate.

The categorical-set splitter grows a term mask greedily: starting from the
empty mask it repeatedly adds the candidate term whose inclusion maximises
the split gain, and stops as soon as no remaining term improves on the
current gain. Candidate terms are the terms present in the node's examples,
each kept independently with probability ``sampling_rate``. Statistics are
updated incrementally: extending the mask by one term only moves the
examples containing that term (and not already routed positive) across the
partition, so each pass over the candidates costs one sweep of the node's
tokens rather than a full rescan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditions import (
    CategoryIn,
    NumericalGE,
    SetIntersects,
    SplitCondition,
    evaluate_column,
)
from .dataset import MISSING_CATEGORY, Dataset

CLASSIFICATION = "classification"
REGRESSION = "regression"


@dataclass(frozen=True)
class SplitCandidate:
    """A positive-gain split with its branch sizes.

    ``steps`` records the greedy mask splitter's acceptance trace as
    (term id, gain after accepting) pairs; empty for other splitters.
    """

    condition: SplitCondition
    gain: float
    n_positive: int
    n_negative: int
    steps: tuple[tuple[int, float], ...] = ()


def _xlog2x(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.zeros_like(z)
    np.log2(z, out=out, where=z > 0)
    out *= z
    return out


def weighted_entropy(w, w1):
    """w * H(w1/w) in bits; exactly 0 for empty or pure inputs."""
    return _xlog2x(w) - _xlog2x(w1) - _xlog2x(np.asarray(w, dtype=np.float64) - w1)


def gain_from_stats(w, wt, pos_w, pos_wt, objective=CLASSIFICATION):
    """Split gain from node totals and positive-branch totals.

    ``w``/``wt`` are the node's weight sum and weighted-target sum, the
    ``pos_*`` arguments the same sums over the positive branch (targets are
    labels for classification, arbitrary reals for regression). Accepts
    scalars or aligned arrays of candidate branches.
    """
    w = np.asarray(w, dtype=np.float64)
    wt = np.asarray(wt, dtype=np.float64)
    pos_w = np.asarray(pos_w, dtype=np.float64)
    pos_wt = np.asarray(pos_wt, dtype=np.float64)
    neg_w = w - pos_w
    neg_wt = wt - pos_wt
    if objective == CLASSIFICATION:
        gain = (
            weighted_entropy(w, wt)
            - weighted_entropy(pos_w, pos_wt)
            - weighted_entropy(neg_w, neg_wt)
        ) / w
    elif objective == REGRESSION:
        pos_term = np.divide(pos_wt * pos_wt, pos_w,
                             out=np.zeros_like(pos_w), where=pos_w > 0)
        neg_term = np.divide(neg_wt * neg_wt, neg_w,
                             out=np.zeros_like(neg_w), where=neg_w > 0)
        gain = (pos_term + neg_term - wt * wt / w) / w
    else:
        raise ValueError(f"unknown objective {objective!r}")
    # children never exceed the parent's impurity; negatives are float noise
    return np.maximum(gain, 0.0)


def split_gain(
    dataset: Dataset,
    condition: SplitCondition,
    indices=None,
    targets=None,
    objective: str = CLASSIFICATION,
) -> float:
    """Gain of an arbitrary condition, scored by routing every example.

    This is the reference scorer: it evaluates the condition on each selected
    row and derives the gain from the two branches' statistics. The
    feature-specific searches below must agree with it.
    """
    if indices is None:
        indices = np.arange(dataset.n_examples)
    indices = np.asarray(indices)
    w = dataset.weights[indices]
    t = dataset.labels[indices] if targets is None else np.asarray(targets, dtype=np.float64)[indices]
    wt = w * t
    pos = evaluate_column(condition, dataset, indices)
    return float(gain_from_stats(w.sum(), wt.sum(), w[pos].sum(), wt[pos].sum(), objective))


def find_numerical_split(
    values,
    targets,
    weights,
    feature: int,
    min_examples_per_leaf: int = 1,
    objective: str = CLASSIFICATION,
) -> SplitCandidate | None:
    """Exact search over midpoints between consecutive distinct values.

    Missing (NaN) values stay on the negative side of every candidate. Ties
    in gain break toward the smaller threshold. Returns None when no
    positive-gain split exists.
    """
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    wt = weights * np.asarray(targets, dtype=np.float64)
    n = len(values)
    present = ~np.isnan(values)
    if present.sum() < 2:
        return None
    order = np.argsort(values[present], kind="stable")
    sv = values[present][order]
    cw = np.cumsum(weights[present][order])
    cwt = np.cumsum(wt[present][order])
    bounds = np.flatnonzero(sv[1:] != sv[:-1]) + 1
    if bounds.size == 0:
        return None
    thresholds = (sv[bounds - 1] + sv[bounds]) / 2.0
    n_pos = sv.size - bounds
    n_neg = n - n_pos
    valid = (n_pos >= min_examples_per_leaf) & (n_neg >= min_examples_per_leaf)
    if not valid.any():
        return None
    pos_w = cw[-1] - cw[bounds - 1]
    pos_wt = cwt[-1] - cwt[bounds - 1]
    gains = gain_from_stats(weights.sum(), wt.sum(), pos_w, pos_wt, objective)
    gains[~valid] = -np.inf
    best = int(np.argmax(gains))
    if gains[best] <= 0.0:
        return None
    return SplitCandidate(
        NumericalGE(feature, float(thresholds[best])),
        float(gains[best]),
        int(n_pos[best]),
        int(n_neg[best]),
    )


def find_categorical_split(
    values,
    targets,
    weights,
    feature: int,
    min_examples_per_leaf: int = 1,
    objective: str = CLASSIFICATION,
) -> SplitCandidate | None:
    """One-dimensional category scan in mean-target order.

    Categories are sorted by mean target (positive-label ratio for
    classification) with ties broken by category id; every prefix/suffix cut
    of that order is scored. Without missing values this scan reaches the
    optimum over all category bipartitions for binary labels. The returned
    value set is the high-mean suffix unless the node holds missing values,
    in which case low-mean prefixes are scanned as well: missing examples
    are pinned to the negative branch, the orientations stop being
    gain-equivalent, and the contiguity guarantee no longer binds (the scan
    is the contract, and can sit marginally below the unrestricted optimum).
    """
    values = np.asarray(values, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    wt = weights * np.asarray(targets, dtype=np.float64)
    n = len(values)
    present = values != MISSING_CATEGORY
    cats, inv = np.unique(values[present], return_inverse=True)
    if cats.size < 2:
        return None
    c_w = np.bincount(inv, weights=weights[present], minlength=cats.size)
    c_wt = np.bincount(inv, weights=wt[present], minlength=cats.size)
    c_n = np.bincount(inv, minlength=cats.size)
    order = np.lexsort((cats, c_wt / c_w))
    pre_w = np.cumsum(c_w[order])
    pre_wt = np.cumsum(c_wt[order])
    pre_n = np.cumsum(c_n[order])
    w_total, wt_total = weights.sum(), wt.sum()
    n_missing = int(n - present.sum())

    cuts = np.arange(1, cats.size)
    variants = [("suffix", pre_w[-1] - pre_w[cuts - 1], pre_wt[-1] - pre_wt[cuts - 1],
                 pre_n[-1] - pre_n[cuts - 1])]
    if n_missing > 0:
        variants.append(("prefix", pre_w[cuts - 1], pre_wt[cuts - 1], pre_n[cuts - 1]))

    best = None
    for side, pos_w, pos_wt, pos_n in variants:
        n_neg = n - pos_n
        valid = (pos_n >= min_examples_per_leaf) & (n_neg >= min_examples_per_leaf)
        if not valid.any():
            continue
        gains = gain_from_stats(w_total, wt_total, pos_w, pos_wt, objective)
        gains[~valid] = -np.inf
        i = int(np.argmax(gains))
        if gains[i] <= 0.0 or (best is not None and gains[i] <= best[0]):
            continue
        cut = int(cuts[i])
        in_cats = cats[order[cut:]] if side == "suffix" else cats[order[:cut]]
        best = (float(gains[i]), frozenset(int(c) for c in in_cats),
                int(pos_n[i]), int(n_neg[i]))
    if best is None:
        return None
    gain, in_values, n_pos, n_neg = best
    return SplitCandidate(CategoryIn(feature, in_values), gain, n_pos, n_neg)


class SetColumnIndex:
    """CSR view of a set column for per-node candidate-term statistics."""

    def __init__(self, column):
        lengths = np.fromiter((len(x) if x else 0 for x in column),
                              dtype=np.int64, count=len(column))
        self.indptr = np.zeros(len(column) + 1, dtype=np.int64)
        np.cumsum(lengths, out=self.indptr[1:])
        flat = np.empty(int(self.indptr[-1]), dtype=np.int64)
        pos = 0
        for x in column:
            if x:
                flat[pos:pos + len(x)] = x
                pos += len(x)
        self.term_ids = flat

    def node_tokens(self, indices) -> tuple[np.ndarray, np.ndarray]:
        """(node-row positions, term ids) of every token in the selected rows."""
        indices = np.asarray(indices)
        starts = self.indptr[indices]
        lengths = self.indptr[indices + 1] - starts
        total = int(lengths.sum())
        if total == 0:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        first = np.cumsum(lengths) - lengths
        flat_pos = np.arange(total, dtype=np.int64) + np.repeat(starts - first, lengths)
        rows = np.repeat(np.arange(len(indices), dtype=np.int64), lengths)
        return rows, self.term_ids[flat_pos]


def find_set_mask_split(
    set_index: SetColumnIndex,
    indices,
    targets,
    weights,
    feature: int,
    sampling_rate: float = 1.0,
    rng: np.random.Generator | None = None,
    min_examples_per_leaf: int = 1,
    objective: str = CLASSIFICATION,
) -> SplitCandidate | None:
    """Greedy mask growth for a categorical-set feature.

    ``targets`` and ``weights`` are node-local (aligned with ``indices``).
    Candidates are the terms present in the node's examples, each kept with
    probability ``sampling_rate`` (terms absent from the node cannot change
    any routing, so skipping them is a pure optimisation). Each iteration
    scores every remaining candidate as an extension of the current mask,
    accepts the arg-max (ties to the lowest term id) if it strictly improves
    the current gain, and stops otherwise. Accepted gains are therefore
    strictly increasing.
    """
    if not 0.0 < sampling_rate <= 1.0:
        raise ValueError("sampling_rate must be in (0, 1]")
    rows, terms = set_index.node_tokens(indices)
    if terms.size == 0:
        return None
    present, compact = np.unique(terms, return_inverse=True)
    if sampling_rate < 1.0:
        if rng is None:
            raise ValueError("sampling_rate < 1 requires an rng")
        keep = rng.random(present.size) < sampling_rate
        if not keep.any():
            return None
        remap = np.cumsum(keep) - 1
        token_keep = keep[compact]
        rows = rows[token_keep]
        compact = remap[compact[token_keep]]
        present = present[keep]

    n_node = len(indices)
    weights = np.asarray(weights, dtype=np.float64)
    wt = weights * np.asarray(targets, dtype=np.float64)
    token_w = weights[rows]
    token_wt = wt[rows]
    w_total, wt_total = weights.sum(), wt.sum()

    order = np.argsort(compact, kind="stable")
    term_bounds = np.searchsorted(compact[order], np.arange(present.size + 1))

    in_pos = np.zeros(n_node, dtype=bool)
    active = np.ones(present.size, dtype=bool)
    pos_w = pos_wt = 0.0
    current_gain = 0.0
    accepted: list[int] = []
    steps: list[tuple[int, float]] = []
    while active.any():
        movable = ~in_pos[rows]
        add_w = np.bincount(compact[movable], weights=token_w[movable],
                            minlength=present.size)
        add_wt = np.bincount(compact[movable], weights=token_wt[movable],
                             minlength=present.size)
        gains = gain_from_stats(w_total, wt_total, pos_w + add_w, pos_wt + add_wt,
                                objective)
        gains[~active] = -np.inf
        best = int(np.argmax(gains))
        gain = float(gains[best])
        if gain <= current_gain:
            break
        span = order[term_bounds[best]:term_bounds[best + 1]]
        in_pos[rows[span]] = True
        pos_w += float(add_w[best])
        pos_wt += float(add_wt[best])
        current_gain = gain
        active[best] = False
        accepted.append(int(present[best]))
        steps.append((int(present[best]), gain))

    if not accepted:
        return None
    n_pos = int(in_pos.sum())
    n_neg = n_node - n_pos
    if n_pos < min_examples_per_leaf or n_neg < min_examples_per_leaf:
        return None
    return SplitCandidate(
        SetIntersects(feature, tuple(sorted(accepted))),
        current_gain,
        n_pos,
        n_neg,
        tuple(steps),
    )
