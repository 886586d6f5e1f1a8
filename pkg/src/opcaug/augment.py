"""Online opcode-sequence augmentation.

Six methods, each parameterized by a strength ``alpha`` and applied only
when a Bernoulli gate with probability ``beta`` fires:

- input_dropout: selected positions become the blank token (0).
- random_replacement: selected positions get a different opcode drawn
  uniformly from the instruction set (blank excluded).
- similar_instructions: selected positions get a uniform draw from their
  prefix group; opcodes with no group fall back to random replacement.
- correlated_input_dropout: a fraction of the *instruction set* is
  chosen and every occurrence of the chosen opcodes becomes blank.
- language_model: selected positions get a uniform draw from their
  top-k embedding neighbours (table built offline from a CBOW model).
- self_embedding: same replacement rule, but the table is rebuilt from
  the classifier's own embedding once per training epoch.

Strength is realized as an exact count round(alpha * L) of distinct
positions (half rounded away from zero), sampled without replacement.
All methods are pure functions of (input, parameters, random stream).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, OutOfVocabulary
from .vocab import PrefixSimilarityTable, Vocabulary

METHODS = (
    "input_dropout",
    "random_replacement",
    "similar_instructions",
    "correlated_input_dropout",
    "language_model",
    "self_embedding",
    "composite",
)

GATE_MODES = ("per_method", "per_sample")


@dataclass(frozen=True)
class AugmentationSpec:
    method: str
    alpha: float = 0.0
    beta: float = 1.0
    parts: tuple["AugmentationSpec", ...] = ()
    gate_mode: str = "per_method"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown augmentation method {self.method!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must be in [0, 1], got {self.beta}")
        if self.gate_mode not in GATE_MODES:
            raise ConfigError(f"gate_mode must be one of {GATE_MODES}")
        if self.method == "composite":
            if not self.parts:
                raise ConfigError("composite needs at least one part")
            if any(p.method == "composite" for p in self.parts):
                raise ConfigError("composites cannot nest")
        elif self.parts:
            raise ConfigError(f"{self.method} takes no parts")


@dataclass
class SimilarityTable:
    """Per-opcode ranked neighbour lists (nearest first, self and blank
    excluded). Backing arrays for vectorized lookup are built lazily."""

    neighbours: dict[int, tuple[int, ...]]
    k: int = 10
    _padded: np.ndarray | None = field(default=None, repr=False, compare=False)
    _lengths: np.ndarray | None = field(default=None, repr=False, compare=False)

    def _arrays(self):
        if self._padded is None:
            top = max(self.neighbours, default=0) + 1
            width = max((len(v) for v in self.neighbours.values()), default=0)
            padded = np.zeros((top, max(width, 1)), dtype=np.int64)
            lengths = np.full(top, -1, dtype=np.int64)
            lengths[0] = 0
            for idx, lst in self.neighbours.items():
                lengths[idx] = len(lst)
                padded[idx, : len(lst)] = lst
            self._padded = padded
            self._lengths = lengths
        return self._padded, self._lengths


@dataclass
class AugmentContext:
    """Everything a method may need beyond the sequence itself."""

    vocab: Vocabulary
    prefix_table: PrefixSimilarityTable | None = None
    lm_table: SimilarityTable | None = None
    self_table: SimilarityTable | None = None


def round_count(x: float) -> int:
    """Round half away from zero (x is never negative here)."""
    return int(math.floor(x + 0.5))


def gate(spec: AugmentationSpec, rng: np.random.Generator) -> bool:
    """True with probability beta; False means the sample passes through."""
    return rng.random() < spec.beta


def select_positions(seq_len: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Exactly round(alpha * seq_len) distinct positions, uniform without
    replacement."""
    n = round_count(alpha * seq_len)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    return rng.choice(seq_len, size=n, replace=False).astype(np.int64)


def input_dropout(seq: np.ndarray, alpha: float, rng) -> np.ndarray:
    out = np.array(seq, dtype=np.int64)
    pos = select_positions(len(out), alpha, rng)
    out[pos] = 0
    return out


def _replacement_draws(originals: np.ndarray, vocab_size: int, rng) -> np.ndarray:
    """Uniform draws from [1, vocab_size) \\ {original} for each entry.

    Entries equal to 0 (blanks produced by an earlier method in a
    composite) draw from the full opcode range instead.
    """
    if originals.size and int(originals.max()) >= vocab_size:
        raise OutOfVocabulary(int(originals.max()), vocab_size)
    base = rng.integers(1, vocab_size - 1, size=originals.size)
    vals = np.where(base >= originals, base + 1, base)
    blanks = originals == 0
    if blanks.any():
        vals[blanks] = rng.integers(1, vocab_size, size=int(blanks.sum()))
    return vals


def random_replacement(seq: np.ndarray, alpha: float, vocab: Vocabulary, rng) -> np.ndarray:
    if vocab.size < 3:
        raise ConfigError("random replacement needs a vocabulary of size >= 3")
    out = np.array(seq, dtype=np.int64)
    pos = select_positions(len(out), alpha, rng)
    if pos.size == 0:
        return out
    out[pos] = _replacement_draws(out[pos], vocab.size, rng)
    return out


def similar_instructions(seq, alpha, table: PrefixSimilarityTable, vocab: Vocabulary, rng) -> np.ndarray:
    """Prefix-group replacement with random-replacement fallback.

    Draws the fallback values first, exactly as random_replacement
    would, so an all-empty-group vocabulary reproduces that method's
    output for the same seed.
    """
    out = np.array(seq, dtype=np.int64)
    pos = select_positions(len(out), alpha, rng)
    if pos.size == 0:
        return out
    originals = out[pos]
    fallback = _replacement_draws(originals, vocab.size, rng)
    values = fallback
    for j, orig in enumerate(originals):
        group = table.groups.get(int(orig), ())
        if group:
            values[j] = group[rng.integers(0, len(group))]
    out[pos] = values
    return out


def correlated_dropout(seq, alpha, vocab: Vocabulary, rng) -> np.ndarray:
    """Blank out every occurrence of round(alpha * (|V|-1)) opcodes drawn
    uniformly from the instruction set."""
    out = np.array(seq, dtype=np.int64)
    n = round_count(alpha * (vocab.size - 1))
    if n == 0:
        return out
    chosen = rng.choice(vocab.size - 1, size=n, replace=False) + 1
    out[np.isin(out, chosen)] = 0
    return out


def embedding_replacement(seq, alpha, sim: SimilarityTable, rng) -> np.ndarray:
    """Replace selected positions with a uniform draw from their neighbour
    list; positions with empty lists (including blanks) stay unchanged."""
    out = np.array(seq, dtype=np.int64)
    pos = select_positions(len(out), alpha, rng)
    if pos.size == 0:
        return out
    padded, lengths = sim._arrays()
    originals = out[pos]
    if int(originals.max()) >= len(lengths):
        raise OutOfVocabulary(int(originals.max()), len(lengths))
    lens = lengths[originals]
    if (lens < 0).any():
        missing = int(originals[lens < 0][0])
        raise OutOfVocabulary(missing, len(lengths))
    ok = lens > 0
    if ok.any():
        picks = rng.integers(0, lens[ok])
        out[pos[ok]] = padded[originals[ok], picks]
    return out


def methods_in(spec: AugmentationSpec) -> set[str]:
    if spec.method == "composite":
        return {p.method for p in spec.parts}
    return {spec.method}


def _apply_method(spec, seq, ctx: AugmentContext, rng) -> np.ndarray:
    m = spec.method
    if m == "input_dropout":
        return input_dropout(seq, spec.alpha, rng)
    if m == "random_replacement":
        return random_replacement(seq, spec.alpha, ctx.vocab, rng)
    if m == "similar_instructions":
        if ctx.prefix_table is None:
            raise ConfigError("similar_instructions needs a prefix table")
        return similar_instructions(seq, spec.alpha, ctx.prefix_table, ctx.vocab, rng)
    if m == "correlated_input_dropout":
        return correlated_dropout(seq, spec.alpha, ctx.vocab, rng)
    if m == "language_model":
        if ctx.lm_table is None:
            raise ConfigError("language_model needs an offline similarity table")
        return embedding_replacement(seq, spec.alpha, ctx.lm_table, rng)
    if m == "self_embedding":
        if ctx.self_table is None:
            raise ConfigError("self_embedding needs the per-epoch similarity table")
        return embedding_replacement(seq, spec.alpha, ctx.self_table, rng)
    raise ConfigError(f"cannot apply method {m!r}")


def apply_augmentation(spec, seq, ctx: AugmentContext, rng, counts: dict | None = None) -> np.ndarray:
    """Gate and apply one spec (or a composite of specs) to a sequence.

    Composite gating follows ``spec.gate_mode``: "per_method" gives each
    part its own beta gate, applied in list order so later parts see
    earlier output; "per_sample" rolls a single gate with the composite's
    beta and then applies every part unconditionally.
    """
    if spec.method == "composite":
        if spec.gate_mode == "per_sample":
            if not gate(spec, rng):
                return np.array(seq, dtype=np.int64)
            out = seq
            for part in spec.parts:
                out = _apply_method(part, out, ctx, rng)
                if counts is not None:
                    counts[part.method] = counts.get(part.method, 0) + 1
            return np.array(out, dtype=np.int64)
        out = seq
        for part in spec.parts:
            out = apply_augmentation(part, out, ctx, rng, counts)
        return out
    if not gate(spec, rng):
        return np.array(seq, dtype=np.int64)
    out = _apply_method(spec, seq, ctx, rng)
    if counts is not None:
        counts[spec.method] = counts.get(spec.method, 0) + 1
    return out


def compose(specs, seq, ctx: AugmentContext, rng, counts: dict | None = None) -> np.ndarray:
    """Apply a list of specs sequentially, each with its own gate."""
    if not specs:
        raise ConfigError("compose needs at least one spec")
    out = seq
    for spec in specs:
        out = apply_augmentation(spec, out, ctx, rng, counts)
    return np.array(out, dtype=np.int64)


def apply_counting_changes(spec, seq, ctx: AugmentContext, rng):
    """Like apply_augmentation, but returns (output, per-method counts of
    positions each method changed). Used by the augmentation preview."""
    changes: dict[str, int] = {}
    seq = np.array(seq, dtype=np.int64)
    if spec.method == "composite":
        if spec.gate_mode == "per_sample" and not gate(spec, rng):
            return seq, changes
        out = seq
        for part in spec.parts:
            before = out
            if spec.gate_mode == "per_sample" or gate(part, rng):
                out = _apply_method(part, before, ctx, rng)
                diff = int((out != before).sum())
                changes[part.method] = changes.get(part.method, 0) + diff
        return np.array(out, dtype=np.int64), changes
    if gate(spec, rng):
        out = _apply_method(spec, seq, ctx, rng)
        changes[spec.method] = int((out != seq).sum())
        return out, changes
    return seq, changes


def spec_to_dict(spec: AugmentationSpec) -> dict:
    if spec.method == "composite":
        return {
            "method": "composite",
            "beta": spec.beta,
            "gate_mode": spec.gate_mode,
            "parts": [spec_to_dict(p) for p in spec.parts],
        }
    return {"method": spec.method, "alpha": spec.alpha, "beta": spec.beta}


def spec_from_dict(data: dict) -> AugmentationSpec:
    if not isinstance(data, dict):
        raise ConfigError("augmentation spec must be an object")
    allowed = {"method", "alpha", "beta", "parts", "gate_mode"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown augmentation keys: {sorted(unknown)}")
    method = data.get("method")
    if method == "composite":
        parts = tuple(spec_from_dict(p) for p in data.get("parts", []))
        return AugmentationSpec(
            method="composite",
            beta=float(data.get("beta", 1.0)),
            parts=parts,
            gate_mode=data.get("gate_mode", "per_method"),
        )
    return AugmentationSpec(
        method=method,
        alpha=float(data.get("alpha", 0.0)),
        beta=float(data.get("beta", 1.0)),
    )
