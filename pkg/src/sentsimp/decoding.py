"""Constraint-guaranteeing backward/forward beam decoding.

Generation with one constraint runs in two stages: the backward decoder
starts from the constraint block and emits the preceding tokens in reverse
until it produces the sentence-start boundary; the forward decoder then
consumes the realized prefix and continues until the end-of-sentence token.
Splicing reverse(backward) + block + forward makes the constraint's presence
a construction invariant rather than a search outcome. Multiple constraints
are handled by re-encoding each pass's output as the next pass's source.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .autodiff import Tensor
from .corpus import BOS_ID, EOS_ID, NUM_SPECIALS
from .errors import ConstraintError, ContractError
from .model import DecoderParams, Seq2SeqModel, decode_step, encode, init_decoder_state


@dataclass(frozen=True)
class Hypothesis:
    """A partial decode: generated tokens, their summed log-prob, the
    decoder state after the last consumed token, and whether it stopped."""

    tokens: tuple[int, ...]
    log_prob: float
    state: Tensor
    finished: bool = False


@dataclass(frozen=True)
class PassTrace:
    """One generation pass: its constraint block, full output, the block's
    1-based start position, and the two stage scores."""

    constraint: tuple[int, ...]
    output: tuple[int, ...]
    position: int
    backward_log_prob: float
    forward_log_prob: float


@dataclass(frozen=True)
class ConstraintOutcome:
    block: tuple[int, ...]
    skipped: bool
    pass_index: int | None  # 1-based pass that applied it, None when skipped
    final_position: int | None  # 1-based start in the final output, None if absent


@dataclass(frozen=True)
class DecodeResult:
    tokens: tuple[int, ...]
    outcomes: tuple[ConstraintOutcome, ...]
    passes: tuple[PassTrace, ...]


def _find_block(haystack: Sequence[int], block: Sequence[int]) -> int | None:
    """1-based start of the first contiguous occurrence, else None."""
    block = tuple(block)
    for i in range(len(haystack) - len(block) + 1):
        if tuple(haystack[i : i + len(block)]) == block:
            return i + 1
    return None


def _check_constraint_ids(constraint_ids: Sequence[int], vocab_size: int) -> None:
    if not constraint_ids:
        raise ContractError("constraint block must be non-empty")
    for tok in constraint_ids:
        if not 0 <= tok < vocab_size:
            raise ConstraintError(f"constraint token id {tok} outside vocabulary of size {vocab_size}")
        if tok < NUM_SPECIALS:
            raise ConstraintError(
                f"constraint token id {tok} is reserved (out-of-vocabulary simple phrase?)"
            )


def _rank_key(hyp: Hypothesis, length_norm: float):
    score = hyp.log_prob
    if length_norm > 0.0:
        score /= (len(hyp.tokens) + 1) ** length_norm
    return (-score, len(hyp.tokens), hyp.tokens)


def beam_search(
    step_fn,
    init_state: Tensor,
    seed_token: int,
    boundary_id: int,
    beam_size: int,
    max_new: int,
    length_norm: float = 0.0,
) -> Hypothesis:
    """Breadth-limited best-first search over token continuations.

    step_fn(prev_token, state) -> (new_state, distribution ndarray). A
    hypothesis finishes when it emits boundary_id (scored) or reaches
    max_new generated tokens (length cap, unscored stop). Scores are summed
    log-probabilities; an optional length-normalization exponent divides by
    (length + 1) ** length_norm when ranking.
    """
    if beam_size < 1:
        raise ContractError(f"beam size must be at least 1, got {beam_size}")
    if max_new <= 0:
        return Hypothesis((), 0.0, init_state, finished=True)

    active = [Hypothesis((), 0.0, init_state)]
    finished: list[Hypothesis] = []
    if beam_size > 1:
        # seed the pool with the greedy rollout so that widening the beam can
        # never fall below the beam-1 score (plain beam search does not
        # guarantee that: the greedy prefix can be pruned mid-way)
        finished.append(
            beam_search(step_fn, init_state, seed_token, boundary_id, 1, max_new, length_norm)
        )
    for _ in range(max_new):
        candidates: list[Hypothesis] = []
        for hyp in active:
            prev = hyp.tokens[-1] if hyp.tokens else seed_token
            state, dist = step_fn(prev, hyp.state)
            log_dist = np.log(dist)
            # beam 1 is the greedy argmax chain; wider beams expand one extra
            # slot so a boundary token cannot crowd out content candidates
            width = 1 if beam_size == 1 else min(beam_size + 1, log_dist.shape[0])
            top = np.argpartition(-log_dist, width - 1)[:width]
            top = top[np.argsort(-log_dist[top], kind="stable")]
            for tok in top:
                tok = int(tok)
                score = hyp.log_prob + float(log_dist[tok])
                if tok == boundary_id:
                    finished.append(Hypothesis(hyp.tokens, score, state, finished=True))
                else:
                    candidates.append(Hypothesis(hyp.tokens + (tok,), score, state))
        candidates.sort(key=lambda h: _rank_key(h, length_norm))
        active = candidates[:beam_size]
        finished.sort(key=lambda h: _rank_key(h, length_norm))
        finished = finished[: beam_size * (max_new + 1)]
        if not active:
            break
        if (
            length_norm == 0.0
            and finished
            and finished[0].log_prob > active[0].log_prob
        ):
            break  # log-probs only decrease, no active path can catch up
    for hyp in active:  # length cap: stop without a boundary factor
        finished.append(Hypothesis(hyp.tokens, hyp.log_prob, hyp.state, finished=True))
    return min(finished, key=lambda h: _rank_key(h, length_norm))


def _teacher_force(
    tokens: Sequence[int], state: Tensor, annotations: Tensor, params: DecoderParams
) -> Tensor:
    for tok in tokens:
        state, _ = decode_step(tok, state, annotations, params)
    return state


def _stepper(annotations: Tensor, params: DecoderParams):
    def step(prev_token: int, state: Tensor):
        new_state, dist = decode_step(prev_token, state, annotations, params)
        return new_state, dist.data

    return step


def decode_backward(
    source: Sequence[int],
    constraint_ids: Sequence[int],
    model: Seq2SeqModel,
    beam_size: int | None = None,
    length_norm: float = 0.0,
) -> Hypothesis:
    """Tokens before the constraint, generated in reverse order.

    The backward decoder is seeded with the constraint block fed in reverse
    block order (teacher forcing, unscored) and searches until it emits the
    sentence-start boundary. The returned tokens read right-to-left.
    """
    _check_constraint_ids(constraint_ids, model.config.vocab_size)
    params = model.backward_decoder
    annotations, h_mean = encode(source, model.encoder)
    state = init_decoder_state(h_mean, params)
    reversed_block = list(reversed(constraint_ids))
    state = _teacher_force(reversed_block[:-1], state, annotations, params)
    budget = max(0, model.config.max_decode_len - len(constraint_ids))
    return beam_search(
        _stepper(annotations, params),
        state,
        seed_token=reversed_block[-1],
        boundary_id=BOS_ID,
        beam_size=beam_size or model.config.beam_size,
        max_new=budget,
        length_norm=length_norm,
    )


def decode_forward(
    source: Sequence[int],
    prefix: Sequence[int],
    model: Seq2SeqModel,
    beam_size: int | None = None,
    length_norm: float = 0.0,
) -> Hypothesis:
    """Continuation after a realized prefix, until end-of-sentence.

    The forward decoder consumes BOS plus the prefix with teacher forcing
    (no search, no scoring over given tokens), then beam-searches the rest.
    """
    if not prefix:
        raise ContractError("forward decoding needs a non-empty prefix")
    params = model.forward_decoder
    annotations, h_mean = encode(source, model.encoder)
    state = init_decoder_state(h_mean, params)
    state = _teacher_force([BOS_ID, *prefix[:-1]], state, annotations, params)
    budget = max(0, model.config.max_decode_len - len(prefix))
    return beam_search(
        _stepper(annotations, params),
        state,
        seed_token=prefix[-1],
        boundary_id=EOS_ID,
        beam_size=beam_size or model.config.beam_size,
        max_new=budget,
        length_norm=length_norm,
    )


def decode_unconstrained(
    source: Sequence[int],
    model: Seq2SeqModel,
    beam_size: int | None = None,
    length_norm: float = 0.0,
) -> Hypothesis:
    """Plain beam decode with the forward decoder from its initial state."""
    params = model.forward_decoder
    annotations, h_mean = encode(source, model.encoder)
    state = init_decoder_state(h_mean, params)
    return beam_search(
        _stepper(annotations, params),
        state,
        seed_token=BOS_ID,
        boundary_id=EOS_ID,
        beam_size=beam_size or model.config.beam_size,
        max_new=model.config.max_decode_len,
        length_norm=length_norm,
    )


def _single_pass(
    source: Sequence[int],
    block: Sequence[int],
    model: Seq2SeqModel,
    beam_size: int | None,
    length_norm: float,
) -> PassTrace:
    back = decode_backward(source, block, model, beam_size, length_norm)
    prefix = tuple(reversed(back.tokens)) + tuple(block)
    fwd = decode_forward(source, prefix, model, beam_size, length_norm)
    output = prefix + fwd.tokens
    position = len(back.tokens) + 1
    if tuple(output[position - 1 : position - 1 + len(block)]) != tuple(block):
        raise AssertionError("constraint block lost during splicing")
    return PassTrace(
        constraint=tuple(block),
        output=output,
        position=position,
        backward_log_prob=back.log_prob,
        forward_log_prob=fwd.log_prob,
    )


def decode_constrained(
    source: Sequence[int],
    constraint_ids: Sequence[int],
    model: Seq2SeqModel,
    beam_size: int | None = None,
    length_norm: float = 0.0,
) -> DecodeResult:
    """Single-constraint generation: reverse(backward) + block + forward."""
    trace = _single_pass(source, constraint_ids, model, beam_size, length_norm)
    outcome = ConstraintOutcome(
        block=trace.constraint,
        skipped=False,
        pass_index=1,
        final_position=trace.position,
    )
    return DecodeResult(tokens=trace.output, outcomes=(outcome,), passes=(trace,))


def decode_multi(
    source: Sequence[int],
    constraint_blocks: Sequence[Sequence[int]],
    model: Seq2SeqModel,
    max_passes: int | None = None,
    beam_size: int | None = None,
    length_norm: float = 0.0,
) -> DecodeResult:
    """Multi-constraint generation by repeated re-encoding.

    Blocks must arrive ordered least-frequent first. Pass 1 decodes the
    given source with the first constraint; pass i re-encodes the previous
    output as its source. From the second constraint on, a block already
    present verbatim in the current output is skipped. At most max_passes
    (default: the number of constraints) generation passes run; with no
    constraints this is a plain unconstrained beam decode.
    """
    blocks = [tuple(b) for b in constraint_blocks]
    if not blocks:
        hyp = decode_unconstrained(source, model, beam_size, length_norm)
        return DecodeResult(tokens=hyp.tokens, outcomes=(), passes=())
    cap = len(blocks) if max_passes is None else max_passes
    if cap < 1:
        raise ContractError(f"max_passes must be at least 1, got {cap}")

    current = tuple(source)
    passes: list[PassTrace] = []
    outcomes: list[ConstraintOutcome] = []
    for block in blocks:
        if passes and _find_block(passes[-1].output, block) is not None:
            outcomes.append(ConstraintOutcome(block, skipped=True, pass_index=None, final_position=None))
            continue
        if len(passes) >= cap:
            outcomes.append(ConstraintOutcome(block, skipped=True, pass_index=None, final_position=None))
            continue
        trace = _single_pass(current, block, model, beam_size, length_norm)
        passes.append(trace)
        outcomes.append(
            ConstraintOutcome(block, skipped=False, pass_index=len(passes), final_position=None)
        )
        current = trace.output

    final = passes[-1].output if passes else tuple(source)
    outcomes = [
        ConstraintOutcome(o.block, o.skipped, o.pass_index, _find_block(final, o.block))
        for o in outcomes
    ]
    return DecodeResult(tokens=final, outcomes=tuple(outcomes), passes=tuple(passes))
