#!/usr/bin/env python3
"""Wall-time scaling check for frequent-substring mining.

Mines corpora of doubling size and reports the time ratio; near-linear
construction should stay well under 4x when the input doubles.
"""

import argparse
import random
import time

from ldi.mining import DocumentSet, frequent_substrings


def corpus(total_chars, doc_len, seed):
    rng = random.Random(seed)
    words = [
        "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(rng.randint(3, 9)))
        for _ in range(2000)
    ]
    docs, made = [], 0
    while made < total_chars:
        parts, length = [], 0
        while length < doc_len:
            w = rng.choice(words)
            parts.append(w)
            length += len(w) + 1
        doc = " ".join(parts)
        docs.append(doc)
        made += len(doc)
    return tuple(docs)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--base-mb", type=float, default=1.0)
    parser.add_argument("--doublings", type=int, default=1)
    parser.add_argument("--doc-len", type=int, default=200)
    parser.add_argument("--q", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    previous = None
    size = int(args.base_mb * 1_000_000)
    for _ in range(args.doublings + 1):
        docs = corpus(size, args.doc_len, args.seed)
        t0 = time.perf_counter()
        result = frequent_substrings(DocumentSet(docs), args.q)
        elapsed = time.perf_counter() - t0
        line = (
            f"{size/1e6:5.1f} MB  {len(docs):>6} docs  {elapsed:7.2f}s  "
            f"{result.stats.nodes_built:>9} nodes  {len(result.entries):>6} reported"
        )
        if previous is not None:
            line += f"  ratio {elapsed / previous:.2f}"
        print(line)
        previous = elapsed
        size *= 2


if __name__ == "__main__":
    main()
