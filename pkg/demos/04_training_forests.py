"""
Random forests and boosted trees on token sets
==============================================

Both ensemble trainers consume set features natively through mask splits.
Random forests bootstrap examples and sample features per node; boosted
trees fit regression trees to log-loss residuals with Newton leaf values
and truncate to the best validation round. Everything is reproducible from
(dataset, config, seed), and models round-trip through JSON bit-exactly.
"""

import numpy as np

import setforest as sf

token_sets, labels = sf.planted_keyword_corpus(n=1500, vocab_terms=200,
                                               signal_terms=8, seed=5)
vocab = sf.build_vocabulary(token_sets, max_size=200, min_frequency=2)
dataset = sf.dataset_from_token_sets(token_sets, vocab, labels)

# --- random forest -----------------------------------------------------------
rf_config = sf.TrainConfig.random_forest(num_trees=20, max_depth=10,
                                         sampling_rate=0.2, seed=0)
rf = sf.train_random_forest(dataset, rf_config)
scores = [sf.predict(rf, row) for row in dataset.rows()]
print(f"random forest: {len(rf.trees)} trees, "
      f"training AUC {sf.auc(scores, labels):.4f}")
print("structure:", sf.structure_stats(rf))

# --- boosted trees -----------------------------------------------------------
mart_config = sf.TrainConfig.mart(num_trees=60, seed=0, sampling_rate=0.2)
mart = sf.train_mart(dataset, mart_config)
val = mart.metadata["validation_losses"]
print(f"boosted: kept {len(mart.trees)} of 60 rounds "
      f"(best validation loss {min(val):.4f} at round {int(np.argmin(val))})")

# --- serialization -----------------------------------------------------------
text = sf.forest_to_json(rf)
again = sf.forest_to_json(sf.forest_from_json(text))
print("serialize -> parse -> serialize is the identity:", text == again)
print(f"model document: {len(text) / 1024:.0f} KiB")

# same config + seed => byte-identical model
rf2 = sf.train_random_forest(dataset, rf_config)
print("retrain with same seed is bit-identical:",
      sf.forest_to_json(rf2) == text)
