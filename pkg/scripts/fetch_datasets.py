#!/usr/bin/env python3
"""Fetch the five public sentence-classification corpora as TSV files.

Downloads the cleaned binary corpora (SST-2 sentences, movie reviews,
customer reviews, subjectivity, opinion polarity) from well-known public
mirrors of the standard cleaned distribution, converts them to this
project's ``<label><TAB><text>`` format, and writes
``data/{sst,mr,cr,subj,mpqa}.tsv``.

Network access required; nothing in the test suite depends on these files
except the opt-in ``-m paper_repro`` reproduction tests, which skip
themselves when the files are absent.
"""

import argparse
import sys
import urllib.request
from pathlib import Path

BASE = "https://raw.githubusercontent.com/harvardnlp/sent-conv-torch/master/data"

# dataset -> list of source files; each line is "<label> <text>"
SOURCES = {
    "sst": [f"{BASE}/stsa.binary.train", f"{BASE}/stsa.binary.dev",
            f"{BASE}/stsa.binary.test"],
    "mr": [f"{BASE}/rt-polarity.all"],
    "cr": [f"{BASE}/custrev.all"],
    "subj": [f"{BASE}/subj.all"],
    "mpqa": [f"{BASE}/mpqa.all"],
}


def fetch(url: str) -> str:
    print(f"  fetching {url}")
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read().decode("utf-8", errors="replace")


def convert(text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw:
            continue
        label, _, body = raw.partition(" ")
        if label not in ("0", "1"):
            raise ValueError(f"unexpected line format: {raw[:60]!r}")
        lines.append(f"{label}\t{body}")
    return lines


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    parser.add_argument("--only", nargs="*", choices=sorted(SOURCES),
                        help="subset of datasets to fetch")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    failures = []
    for name in (args.only or sorted(SOURCES)):
        print(f"{name}:")
        try:
            lines = []
            for url in SOURCES[name]:
                lines.extend(convert(fetch(url)))
            path = out / f"{name}.tsv"
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            positives = sum(1 for l in lines if l.startswith("1\t"))
            print(f"  wrote {path} ({len(lines)} examples, "
                  f"{positives / len(lines):.3f} positive)")
        except Exception as exc:  # noqa: BLE001 - report and continue
            print(f"  FAILED: {exc}", file=sys.stderr)
            failures.append(name)
    if failures:
        print(f"failed: {', '.join(failures)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
