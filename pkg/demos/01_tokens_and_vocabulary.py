"""
From raw text to categorical-set features
==========================================

A text field becomes a *set* of vocabulary term ids per example: tokenize on
whitespace, deduplicate, prune the vocabulary, encode. The empty set and a
missing value stay distinct the whole way through.
"""

import setforest as sf

# tokenization splits on runs of ASCII whitespace and deduplicates;
# case is preserved
print(sorted(sf.tokenize("the cat sat   on\tthe mat")))
# -> ['cat', 'mat', 'on', 'sat', 'the']

# a small labeled corpus: 1 = about animals, 0 = not
corpus = [
    (1, "the cat sat on the mat"),
    (1, "a dog and a cat"),
    (1, "the dog barked"),
    (0, "stock markets fell today"),
    (0, "markets rallied on the news"),
    (0, "the news was dull"),
]
token_sets = [sf.tokenize(text) for _, text in corpus]
labels = [label for label, _ in corpus]

# keep terms that appear in at least 2 documents, at most 8 terms;
# ids go to the most frequent terms first, ties alphabetical
vocab = sf.build_vocabulary(token_sets, max_size=8, min_frequency=2)
for term, freq in zip(vocab.terms, vocab.frequencies):
    print(f"id {vocab.index[term]}: {term!r} in {freq} documents")

# encoding maps tokens to sorted ids and silently drops
# out-of-vocabulary tokens
print(sf.encode_tokens(sf.tokenize("the unknown cat"), vocab))

dataset = sf.dataset_from_token_sets(token_sets, vocab, labels)
print(f"{dataset.n_examples} examples, {dataset.n_features} set feature")
print("first row:", dataset.row(0))

# CSV cells spell sets inside braces: '{blue red}'; '{}' is the empty set
# and a fully empty cell is a missing value. See load_csv for the schema
# declaration.
