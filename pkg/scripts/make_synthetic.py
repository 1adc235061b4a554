#!/usr/bin/env python3
"""Materialise the bundled synthetic corpora as TSV files.

The generators are deterministic given their seed, so these files are
byte-reproducible; the test suite calls the generators directly and never
needs the files. Writing them out is handy for driving the CLI:

    python scripts/make_synthetic.py --out data
    setforest evaluate --set data=data/planted.tsv --set methods='rf; rf:bow' \
        --set vocab_size=500 --set min_frequency=2 --set num_trees=15 \
        --set max_depth=8 --set output=runs/planted
"""

import argparse
from pathlib import Path

from setforest import noise_corpus, planted_keyword_corpus, write_corpus_tsv


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    parser.add_argument("--n", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    tokens, labels = planted_keyword_corpus(n=args.n, seed=args.seed)
    write_corpus_tsv(out / "planted.tsv", tokens, labels)
    print(f"wrote {out / 'planted.tsv'} ({args.n} examples, "
          f"{labels.mean():.3f} positive)")

    tokens, labels = noise_corpus(n=args.n // 2, seed=args.seed + 1)
    write_corpus_tsv(out / "noise.tsv", tokens, labels)
    print(f"wrote {out / 'noise.tsv'} ({args.n // 2} examples, labels "
          f"independent of text)")


if __name__ == "__main__":
    main()
