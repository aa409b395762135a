"""Joint teacher-forced training of both decoders with Adadelta.

Each pair contributes the negative log-likelihood of its backward sequence
(target tokens before the constraint position, reversed, ending at the
sentence-start boundary) plus its forward sequence (tokens after the
constraint plus end-of-sentence, with the prefix teacher-forced). Batches
are gradient-accumulation groups; the optimizer step is Adadelta with a
global-norm gradient clip.
"""

from __future__ import annotations

import csv
import os
import random
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .corpus import BOS_ID, EOS_ID, PUNCTUATION, CorpusSplit, SentencePair, Vocabulary
from .errors import ContractError, TrainingError
from .lexsub import FrequencyTable, KnowledgeBase
from .model import Seq2SeqModel, decode_step, encode, init_decoder_state, save_checkpoint

_PUNCT_SET = set(PUNCTUATION)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 16
    rho: float = 0.95
    eps: float = 1e-6
    clip_norm: float = 5.0
    seed: int = 13
    checkpoint_every: int = 1

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ContractError(f"rho must lie in (0, 1), got {self.rho}")
        if self.eps <= 0.0:
            raise ContractError(f"eps must be positive, got {self.eps}")
        if self.batch_size < 1:
            raise ContractError("batch_size must be at least 1")


class AdadeltaState:
    """Per-parameter running averages of squared gradients and updates."""

    def __init__(self, named_params: Sequence[tuple[str, Tensor]]):
        self.avg_sq_grad = {name: np.zeros_like(t.data) for name, t in named_params}
        self.avg_sq_update = {name: np.zeros_like(t.data) for name, t in named_params}


def adadelta_step(
    named_params: Sequence[tuple[str, Tensor]],
    state: AdadeltaState,
    rho: float,
    eps: float,
) -> None:
    """One accumulate/update/accumulate cycle; a missing grad counts as zero."""
    for name, param in named_params:
        grad = param.grad if param.grad is not None else np.zeros_like(param.data)
        if not np.all(np.isfinite(grad)):
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
        sq = state.avg_sq_grad[name]
        sq *= rho
        sq += (1.0 - rho) * grad * grad
        delta = -np.sqrt(state.avg_sq_update[name] + eps) / np.sqrt(sq + eps) * grad
        param.data += delta
        up = state.avg_sq_update[name]
        up *= rho
        up += (1.0 - rho) * delta * delta


def clip_gradients(params: Sequence[Tensor], clip_norm: float) -> float:
    """Scale all grads so their global L2 norm is at most clip_norm.

    Returns the pre-clip norm; clip_norm <= 0 disables clipping.
    """
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float(np.sum(p.grad * p.grad))
    norm = float(np.sqrt(total))
    if clip_norm > 0.0 and norm > clip_norm:
        factor = clip_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= factor
    return norm


def select_training_constraint(
    pair: SentencePair,
    kb: KnowledgeBase | None,
    freq_table: FrequencyTable,
    vocab: Vocabulary,
) -> int:
    """1-based target position to train the backward/forward split on.

    Prefers a target token that is the (single-token) simple side of a rule
    whose complex side occurs in the source, picking the rule with the
    rarest complex side; falls back to the least-frequent non-punctuation
    target token. Deterministic.
    """
    if not pair.target:
        raise ContractError("cannot pick a constraint position in an empty target")
    source_tokens = vocab.decode(pair.source)
    target_tokens = vocab.decode(pair.target)

    if kb is not None:
        candidates = []
        for rule in kb.rules():
            if len(rule.simple) != 1 or rule.simple[0] not in target_tokens:
                continue
            if _occurs(source_tokens, rule.complex):
                position = target_tokens.index(rule.simple[0]) + 1
                candidates.append((freq_table.phrase_count(rule.complex), position, rule.complex))
        if candidates:
            return min(candidates)[1]

    fallback = [
        (freq_table.count(tok), i + 1)
        for i, tok in enumerate(target_tokens)
        if tok not in _PUNCT_SET
    ]
    if not fallback:  # all punctuation: least-frequent token of any kind
        fallback = [(freq_table.count(tok), i + 1) for i, tok in enumerate(target_tokens)]
    return min(fallback)[1]


def _occurs(tokens: Sequence[str], phrase: Sequence[str]) -> bool:
    phrase = tuple(phrase)
    return any(
        tuple(tokens[i : i + len(phrase)]) == phrase
        for i in range(len(tokens) - len(phrase) + 1)
    )


def training_loss(pair: SentencePair, position: int, model: Seq2SeqModel) -> Tensor:
    """Joint NLL of the backward and forward sequences at a constraint position.

    Backward: predict target[s-2]..target[0] then BOS from inputs starting
    at the constraint token. Forward: teacher-force BOS..target[s-1] without
    loss, then predict the remaining tokens and EOS.
    """
    target = pair.target
    m = len(target)
    if not 1 <= position <= m:
        raise ContractError(f"constraint position {position} outside target of length {m}")

    annotations, h_mean = encode(pair.source, model.encoder)
    total = ad.zeros(())

    # backward pass: inputs target[s-1], target[s-2], ..., target[0]
    params = model.backward_decoder
    state = init_decoder_state(h_mean, params)
    inputs = [target[i] for i in range(position - 1, -1, -1)]
    predictions = inputs[1:] + [BOS_ID]
    for prev, expected in zip(inputs, predictions):
        state, dist = decode_step(prev, state, annotations, params)
        total = ad.add(total, ad.neg(ad.log(ad.pick(dist, expected))))

    # forward pass: inputs BOS, target[0], ..., target[m-1]
    params = model.forward_decoder
    state = init_decoder_state(h_mean, params)
    inputs = [BOS_ID, *target]
    predictions = [*target, EOS_ID]
    for step, (prev, expected) in enumerate(zip(inputs, predictions)):
        state, dist = decode_step(prev, state, annotations, params)
        if step >= position:  # the prefix y_1..y_s is given, not predicted
            total = ad.add(total, ad.neg(ad.log(ad.pick(dist, expected))))
    return total


def loss_token_count(pair: SentencePair) -> int:
    """Number of NLL terms contributed by one pair (m + 1)."""
    return len(pair.target) + 1


@dataclass
class EpochStats:
    epoch: int
    train_loss: float  # per-token
    valid_loss: float  # per-token
    seconds: float


@dataclass
class TrainResult:
    history: list[EpochStats] = field(default_factory=list)
    checkpoint_paths: list[str] = field(default_factory=list)


def _corpus_loss(
    pairs: Sequence[SentencePair], positions: Sequence[int], model: Seq2SeqModel
) -> float:
    """Per-token loss without gradient recording or parameter updates."""
    total = 0.0
    tokens = 0
    for pair, pos in zip(pairs, positions):
        total += training_loss(pair, pos, model).item()
        tokens += loss_token_count(pair)
    return total / max(tokens, 1)


def write_atomic_checkpoint(path: str, model: Seq2SeqModel, **kwargs) -> None:
    tmp = path + ".tmp"
    save_checkpoint(tmp, model, **kwargs)
    os.replace(tmp, path)


def train(
    corpus: CorpusSplit,
    model: Seq2SeqModel,
    config: TrainConfig,
    vocab: Vocabulary,
    kb: KnowledgeBase | None = None,
    freq_table: FrequencyTable | None = None,
    out_dir: str | None = None,
    log_name: str = "training_log.csv",
    checkpoint_kwargs: dict | None = None,
) -> TrainResult:
    """Mini-batch training loop over the train split.

    Constraint positions are selected once, deterministically. Validation
    loss is computed without gradient updates on the validation split (the
    train split when empty). Checkpoints and a CSV log are written under
    out_dir when given; checkpoint writes are atomic.
    """
    if not corpus.train:
        raise ContractError("training needs a non-empty train split")
    if freq_table is None:
        freq_table = FrequencyTable.from_sequences(
            vocab.decode(p.source) for p in corpus.train
        )
    positions = [
        select_training_constraint(pair, kb, freq_table, vocab) for pair in corpus.train
    ]
    valid_pairs = corpus.validation if corpus.validation else corpus.train
    valid_positions = (
        [select_training_constraint(p, kb, freq_table, vocab) for p in corpus.validation]
        if corpus.validation
        else positions
    )

    named = list(model.named_parameters())
    params = [t for _, t in named]
    state = AdadeltaState(named)
    rng = random.Random(config.seed)
    result = TrainResult()

    ckpt_kwargs = checkpoint_kwargs or {}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    for epoch in range(1, config.epochs + 1):
        started = time.monotonic()
        order = list(range(len(corpus.train)))
        rng.shuffle(order)
        epoch_nll = 0.0
        epoch_tokens = 0
        for lo in range(0, len(order), config.batch_size):
            batch = order[lo : lo + config.batch_size]
            model.zero_grad()
            for idx in batch:
                pair = corpus.train[idx]
                with Tape() as tape:
                    loss = training_loss(pair, positions[idx], model)
                    tape.backward(loss)
                epoch_nll += loss.item()
                epoch_tokens += loss_token_count(pair)
            inv = 1.0 / len(batch)
            for p in params:
                if p.grad is not None:
                    p.grad *= inv
            clip_gradients(params, config.clip_norm)
            adadelta_step(named, state, config.rho, config.eps)
        model.zero_grad()

        valid_loss = _corpus_loss(valid_pairs, valid_positions, model)
        stats = EpochStats(
            epoch=epoch,
            train_loss=epoch_nll / max(epoch_tokens, 1),
            valid_loss=valid_loss,
            seconds=time.monotonic() - started,
        )
        result.history.append(stats)

        if out_dir is not None and (
            epoch % config.checkpoint_every == 0 or epoch == config.epochs
        ):
            path = os.path.join(out_dir, f"epoch{epoch:04d}.ckpt")
            write_atomic_checkpoint(path, model, **ckpt_kwargs)
            result.checkpoint_paths.append(path)

    if out_dir is not None:
        with open(os.path.join(out_dir, log_name), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "valid_loss", "seconds"])
            for s in result.history:
                writer.writerow([s.epoch, repr(s.train_loss), repr(s.valid_loss), f"{s.seconds:.3f}"])
    return result
