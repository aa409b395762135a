#!/usr/bin/env python3
"""Write the synthetic desk-scale corpus and its paraphrase rule table.

Produces normal.txt / simple.txt (aligned, one sentence per line) and
rules.tsv, ready for the train / simplify / kb-check subcommands.
"""

import argparse
import os

from sentsimp.toydata import build_toy_corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="toy_data")
    parser.add_argument("--pairs", type=int, default=50)
    parser.add_argument("--seed", type=int, default=17)
    args = parser.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)
    data = build_toy_corpus(args.pairs, seed=args.seed)
    src = os.path.join(args.out_dir, "normal.txt")
    tgt = os.path.join(args.out_dir, "simple.txt")
    kb = os.path.join(args.out_dir, "rules.tsv")
    data.write(src, tgt, kb)
    print(f"wrote {args.pairs} sentence pairs to {src} and {tgt}")
    print(f"wrote {len(data.kb_rows)} paraphrase rules to {kb}")


if __name__ == "__main__":
    main()
