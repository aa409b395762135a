"""Tokenization, vocabulary, and parallel-corpus ingestion.

Text is lowercased and punctuation marks are detached into separate tokens
before whitespace splitting. Vocabularies reserve ids 0..3 for the padding,
sentence-start, sentence-end, and unknown tokens; out-of-vocabulary tokens
map to "unk".
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .errors import ContractError, IngestionError

PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN = "<pad>", "<s>", "</s>", "unk"
SPECIAL_TOKENS = (PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN)
NUM_SPECIALS = 4

PUNCTUATION = (".", ",", ";", ":", "!", "?", '"', "'", "(", ")")
_PUNCT_SET = set(PUNCTUATION)


def tokenize(text: str) -> list[str]:
    """Lowercase, detach punctuation marks, split on whitespace."""
    lowered = text.lower()
    pieces = []
    for ch in lowered:
        if ch in _PUNCT_SET:
            pieces.append(f" {ch} ")
        else:
            pieces.append(ch)
    return "".join(pieces).split()


def detokenize(tokens: Sequence[str]) -> str:
    """Cosmetic inverse of tokenize: punctuation reattaches to the left."""
    out: list[str] = []
    for tok in tokens:
        if out and tok in _PUNCT_SET:
            out[-1] += tok
        else:
            out.append(tok)
    return " ".join(out)


class Vocabulary:
    """Bidirectional token/id mapping with four reserved specials."""

    def __init__(self, tokens: Sequence[str], max_size: int):
        if max_size <= NUM_SPECIALS:
            raise ContractError(f"max_size must exceed {NUM_SPECIALS}, got {max_size}")
        kept = list(tokens)
        if len(kept) > max_size - NUM_SPECIALS:
            raise ContractError(
                f"{len(kept)} tokens do not fit a vocabulary of max_size {max_size}"
            )
        for special in SPECIAL_TOKENS:
            if special in kept:
                raise ContractError(f"reserved token {special!r} cannot be a vocabulary entry")
        self.max_size = max_size
        self._id_to_token = list(SPECIAL_TOKENS) + kept
        self._token_to_id = {tok: i for i, tok in enumerate(self._id_to_token)}
        if len(self._token_to_id) != len(self._id_to_token):
            raise ContractError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def lookup(self, token: str) -> int:
        return self._token_to_id.get(token, UNK_ID)

    def render(self, token_id: int) -> str:
        if not 0 <= token_id < len(self._id_to_token):
            raise ContractError(f"token id {token_id} out of range for size {len(self)}")
        return self._id_to_token[token_id]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.lookup(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.render(i) for i in ids]

    def kept_tokens(self) -> list[str]:
        return self._id_to_token[NUM_SPECIALS:]

    def save(self, path: str) -> None:
        """One kept token per line; line index (0-based) is id minus 4."""
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.kept_tokens():
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path: str, max_size: int | None = None) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh if line.strip()]
        cap = max_size if max_size is not None else len(tokens) + NUM_SPECIALS
        return cls(tokens, cap)


def build_vocab(corpus: Iterable[Sequence[str]], max_size: int) -> Vocabulary:
    """Keep the (max_size - 4) most frequent tokens; ties break lexicographically."""
    if max_size <= NUM_SPECIALS:
        raise ContractError(f"max_size must exceed {NUM_SPECIALS}, got {max_size}")
    counts: dict[str, int] = {}
    for seq in corpus:
        for tok in seq:
            if tok in SPECIAL_TOKENS:
                continue
            counts[tok] = counts.get(tok, 0) + 1
    ordered = sorted(counts, key=lambda t: (-counts[t], t))
    return Vocabulary(ordered[: max_size - NUM_SPECIALS], max_size)


@dataclass(frozen=True)
class SentencePair:
    """An id-mapped (normal, simple) sentence pair."""

    source: tuple[int, ...]
    target: tuple[int, ...]

    def __post_init__(self):
        if not self.source or not self.target:
            raise ContractError("sentence pairs must have non-empty source and target")


@dataclass
class CorpusSplit:
    train: list[SentencePair] = field(default_factory=list)
    validation: list[SentencePair] = field(default_factory=list)
    test: list[SentencePair] = field(default_factory=list)


class LoadResult(NamedTuple):
    pairs: list[SentencePair]
    skipped: list[tuple[int, str]]  # (1-based line number, reason)


def read_parallel_tokens(
    source_path: str, target_path: str | None = None
) -> tuple[list[tuple[list[str], list[str]]], list[tuple[int, str]]]:
    """Aligned token pairs from two one-sentence-per-line files or one TSV.

    Blank or unsplittable lines reject the pair and are reported with their
    line number; unequal line counts raise.
    """
    try:
        if target_path is None:
            with open(source_path, encoding="utf-8") as fh:
                rows = []
                for raw in fh:
                    parts = raw.rstrip("\n").split("\t")
                    rows.append((parts[0], parts[1]) if len(parts) == 2 else None)
        else:
            with open(source_path, encoding="utf-8") as fh:
                src_lines = fh.read().splitlines()
            with open(target_path, encoding="utf-8") as fh:
                tgt_lines = fh.read().splitlines()
            if len(src_lines) != len(tgt_lines):
                raise IngestionError(
                    f"line counts differ: {len(src_lines)} source lines vs {len(tgt_lines)} target lines"
                )
            rows = list(zip(src_lines, tgt_lines))
    except OSError as exc:
        raise IngestionError(f"cannot read corpus: {exc}") from None

    pairs: list[tuple[list[str], list[str]]] = []
    skipped: list[tuple[int, str]] = []
    for lineno, row in enumerate(rows, start=1):
        if row is None:
            skipped.append((lineno, "expected two tab-separated fields"))
            continue
        src, tgt = tokenize(row[0]), tokenize(row[1])
        if not src or not tgt:
            skipped.append((lineno, "blank sentence"))
            continue
        pairs.append((src, tgt))
    return pairs, skipped


def load_parallel(
    source_path: str, target_path: str | None, vocab: Vocabulary
) -> LoadResult:
    """Tokenize, id-map, and pair up two aligned files (or one TSV)."""
    token_pairs, skipped = read_parallel_tokens(source_path, target_path)
    pairs = [
        SentencePair(tuple(vocab.encode(src)), tuple(vocab.encode(tgt)))
        for src, tgt in token_pairs
    ]
    return LoadResult(pairs, skipped)


def filter_identical(pairs: Sequence[SentencePair]) -> list[SentencePair]:
    """Drop pairs whose source and target token sequences are equal."""
    return [p for p in pairs if p.source != p.target]


def split_corpus(
    pairs: Sequence[SentencePair],
    valid_size: int,
    test_size: int,
    seed: int,
) -> CorpusSplit:
    """Seeded random split into disjoint train/validation/test lists."""
    if valid_size + test_size > len(pairs):
        raise ContractError(
            f"cannot hold out {valid_size}+{test_size} pairs from {len(pairs)}"
        )
    order = list(range(len(pairs)))
    random.Random(seed).shuffle(order)
    test_idx = order[:test_size]
    valid_idx = order[test_size : test_size + valid_size]
    train_idx = order[test_size + valid_size :]
    return CorpusSplit(
        train=[pairs[i] for i in sorted(train_idx)],
        validation=[pairs[i] for i in sorted(valid_idx)],
        test=[pairs[i] for i in sorted(test_idx)],
    )
