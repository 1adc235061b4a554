"""Bundled miniature corpora, generated deterministically from a seed.

Two tasks ship with the library so the test suite and the demos run fully
offline: a planted-keyword classification task whose positive class carries
one of a handful of signal terms, and a pure-noise task whose labels are
independent of the text (any sound evaluation protocol must score ~0.5 AUC
on it).
"""

from __future__ import annotations

import numpy as np

from .rng import make_rng

_TAG_PLANTED = 0x5EA
_TAG_NOISE = 0x0FF


def planted_keyword_corpus(
    n: int = 5000,
    vocab_terms: int = 500,
    signal_terms: int = 10,
    seed: int = 7,
    signal_rate_positive: float = 0.99,
    signal_rate_negative: float = 0.02,
) -> tuple[list[frozenset[str]], np.ndarray]:
    """Binary corpus where positives carry one of ``signal_terms`` keywords.

    Every example holds 8..16 noise tokens drawn from the remaining
    vocabulary; a positive example additionally holds exactly one signal
    term with probability ``signal_rate_positive`` (negatives with
    ``signal_rate_negative``). No single term separates the classes, but the
    union of the signal terms nearly does.
    """
    if signal_terms >= vocab_terms:
        raise ValueError("need more vocabulary than signal terms")
    rng = make_rng(seed, _TAG_PLANTED)
    noise_words = [f"w{i:03d}" for i in range(vocab_terms - signal_terms)]
    signal_words = [f"key{i}" for i in range(signal_terms)]
    token_sets: list[frozenset[str]] = []
    labels = rng.integers(0, 2, size=n)
    for label in labels:
        count = int(rng.integers(8, 17))
        tokens = {noise_words[j] for j in rng.integers(0, len(noise_words), size=count)}
        rate = signal_rate_positive if label == 1 else signal_rate_negative
        if rng.random() < rate:
            tokens.add(signal_words[int(rng.integers(0, signal_terms))])
        token_sets.append(frozenset(tokens))
    return token_sets, labels.astype(np.int64)


def noise_corpus(
    n: int = 2000,
    vocab_terms: int = 200,
    seed: int = 11,
) -> tuple[list[frozenset[str]], np.ndarray]:
    """Labels independent of the text; a sanity floor for evaluation code."""
    rng = make_rng(seed, _TAG_NOISE)
    words = [f"n{i:03d}" for i in range(vocab_terms)]
    token_sets = []
    labels = rng.integers(0, 2, size=n)
    for _ in range(n):
        count = int(rng.integers(5, 15))
        token_sets.append(
            frozenset(words[j] for j in rng.integers(0, vocab_terms, size=count)))
    return token_sets, labels.astype(np.int64)


def write_corpus_tsv(path, token_sets, labels) -> None:
    """Materialise a corpus as ``<label><TAB><text>`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for tokens, label in zip(token_sets, labels):
            fh.write(f"{int(label)}\t{' '.join(sorted(tokens))}\n")
