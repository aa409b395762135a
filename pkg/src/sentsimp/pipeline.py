"""End-to-end two-step simplification and configuration plumbing.

Step 1 substitutes complex phrases from the knowledge base; Step 2 runs the
constrained decoder over the substituted sentence, one pass per surviving
constraint. Configuration files are flat `key = value` text with `#`
comments; the effective configuration is echoed next to training outputs so
runs are reproducible from their artifacts.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

from .corpus import UNK_ID, Vocabulary, detokenize, tokenize
from .decoding import decode_multi
from .errors import ConfigError, ConstraintError
from .lexsub import ConstraintSet, FrequencyTable, KnowledgeBase, identify_and_substitute
from .model import ModelConfig, Seq2SeqModel, load_checkpoint
from .training import TrainConfig


@dataclass(frozen=True)
class PipelineConfig:
    # paths
    source: str = ""
    target: str = ""
    kb: str = ""
    checkpoint: str = ""
    out_dir: str = ""
    # model (desk-scale defaults; the full-scale constants live in
    # ModelConfig.full_scale and configs/full_scale.cfg)
    vocab_size: int = 2000
    embed_dim: int = 64
    hidden_dim: int = 128
    beam: int = 5
    max_decode_len: int = 100
    share_decoders: int = 0  # 1: one decoder parameter set for both directions
    # training
    epochs: int = 10
    batch_size: int = 16
    rho: float = 0.95
    eps: float = 1e-6
    clip_norm: float = 5.0
    checkpoint_every: int = 1
    valid_size: int = 0
    test_size: int = 0
    # decoding / step 1
    max_constraints: int = 3
    max_passes: int = 0  # 0: one pass per constraint
    length_norm: float = 0.0
    complexity_percentile: float = 30.0
    seed: int = 13

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            vocab_size=self.vocab_size,
            embed_dim=self.embed_dim,
            hidden_dim=self.hidden_dim,
            beam_size=self.beam,
            max_decode_len=self.max_decode_len,
            share_decoders=bool(self.share_decoders),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            rho=self.rho,
            eps=self.eps,
            clip_norm=self.clip_norm,
            seed=self.seed,
            checkpoint_every=self.checkpoint_every,
        )


_PATH_FIELDS = ("source", "target", "kb", "checkpoint", "out_dir")

_RANGE_CHECKS = {
    "vocab_size": lambda v: v > 4,
    "embed_dim": lambda v: v >= 1,
    "hidden_dim": lambda v: v >= 1,
    "beam": lambda v: v >= 1,
    "max_decode_len": lambda v: v >= 2,
    "share_decoders": lambda v: v in (0, 1),
    "epochs": lambda v: v >= 0,
    "batch_size": lambda v: v >= 1,
    "rho": lambda v: 0.0 < v < 1.0,
    "eps": lambda v: v > 0.0,
    "clip_norm": lambda v: v >= 0.0,
    "checkpoint_every": lambda v: v >= 1,
    "valid_size": lambda v: v >= 0,
    "test_size": lambda v: v >= 0,
    "max_constraints": lambda v: v >= 0,
    "max_passes": lambda v: v >= 0,
    "length_norm": lambda v: v >= 0.0,
    "complexity_percentile": lambda v: 0.0 <= v <= 100.0,
}


def _convert(key: str, raw: str, kind: type, lineno: int):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(
            f"line {lineno}: key {key!r} expects {kind.__name__}, got {raw!r}"
        ) from None


def parse_config(path: str) -> PipelineConfig:
    """Read `key = value` lines; unknown keys and bad values are rejected
    with their key name and line number, absent keys take defaults."""
    fields = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}
    kinds = {name: (int if t == "int" else float if t == "float" else str) for name, t in fields.items()}
    values: dict[str, object] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in fields:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        value = _convert(key, raw_value, kinds[key], lineno)
        check = _RANGE_CHECKS.get(key)
        if check is not None and not check(value):
            raise ConfigError(f"line {lineno}: key {key!r} has out-of-range value {raw_value}")
        values[key] = value
    return PipelineConfig(**values)


def echo_config(config: PipelineConfig, path: str) -> None:
    """Write the effective configuration; parse_config inverts this."""
    with open(path, "w", encoding="utf-8") as fh:
        for f in dataclasses.fields(PipelineConfig):
            value = getattr(config, f.name)
            if f.name in _PATH_FIELDS and value == "":
                continue
            fh.write(f"{f.name} = {value!r}\n" if isinstance(value, float) else f"{f.name} = {value}\n")


class SimplifyPipeline:
    """Loaded model plus Step-1 resources, reusable across input lines."""

    def __init__(
        self,
        model: Seq2SeqModel,
        vocab: Vocabulary,
        kb: KnowledgeBase,
        freq_table: FrequencyTable,
        beam: int | None = None,
        max_constraints: int = 3,
        max_passes: int | None = None,
        length_norm: float = 0.0,
    ):
        self.model = model
        self.vocab = vocab
        self.kb = kb
        self.freq_table = freq_table
        self.beam = beam
        self.max_constraints = max_constraints
        self.max_passes = max_passes
        self.length_norm = length_norm

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "SimplifyPipeline":
        ckpt = load_checkpoint(config.checkpoint)
        kb = load_kb_or_empty(config.kb)
        vocab = Vocabulary(ckpt.vocab_tokens, max_size=ckpt.model.config.vocab_size)
        return cls(
            ckpt.model,
            vocab,
            kb,
            ckpt.frequency_table(config.complexity_percentile),
            beam=config.beam,
            max_constraints=config.max_constraints,
            max_passes=config.max_passes or None,
            length_norm=config.length_norm,
        )

    def simplify(self, sentence: str) -> tuple[str, dict]:
        """One line through both steps; returns (output text, trace)."""
        tokens = tokenize(sentence)
        trace: dict = {"input": sentence, "tokens": tokens}
        if not tokens:
            trace.update({"substituted": [], "constraints": [], "passes": [], "output": ""})
            return "", trace

        constraints, substituted = identify_and_substitute(
            tokens, self.kb, self.freq_table, self.max_constraints
        )
        blocks = _constraint_blocks(constraints, self.vocab)
        source_ids = self.vocab.encode(substituted)
        result = decode_multi(
            source_ids,
            blocks,
            self.model,
            max_passes=self.max_passes,
            beam_size=self.beam,
            length_norm=self.length_norm,
        )
        output = detokenize(self.vocab.decode(result.tokens))
        trace.update(
            {
                "substituted": substituted,
                "constraints": [
                    {
                        "simple": list(c.simple),
                        "span": list(c.span),
                        "frequency": c.complex_freq,
                        "skipped": o.skipped,
                        "pass": o.pass_index,
                        "final_position": o.final_position,
                    }
                    for c, o in zip(constraints, result.outcomes)
                ],
                "passes": [
                    {
                        "constraint": self.vocab.decode(t.constraint),
                        "output": detokenize(self.vocab.decode(t.output)),
                        "position": t.position,
                        "backward_log_prob": t.backward_log_prob,
                        "forward_log_prob": t.forward_log_prob,
                    }
                    for t in result.passes
                ],
                "output": output,
            }
        )
        return output, trace


def _constraint_blocks(constraints: ConstraintSet, vocab: Vocabulary) -> list[list[int]]:
    blocks = []
    for c in constraints:
        ids = vocab.encode(c.simple)
        if UNK_ID in ids:
            missing = [tok for tok in c.simple if vocab.lookup(tok) == UNK_ID]
            raise ConstraintError(
                f"simple phrase {' '.join(c.simple)!r} is out of vocabulary: {missing}"
            )
        blocks.append(ids)
    return blocks


def load_kb_or_empty(path: str) -> KnowledgeBase:
    from .lexsub import load_kb

    return load_kb(path) if path else KnowledgeBase([])


def run_simplify_pipeline(sentence: str, config: PipelineConfig) -> tuple[str, dict]:
    """Load everything from config paths and simplify one sentence."""
    return SimplifyPipeline.from_config(config).simplify(sentence)


def ensure_out_dir(config: PipelineConfig) -> str:
    if not config.out_dir:
        raise ConfigError("out_dir is required")
    os.makedirs(config.out_dir, exist_ok=True)
    return config.out_dir
