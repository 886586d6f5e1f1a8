"""Labeled opcode-sequence corpora: loading, dedup, truncation,
stratified cross-validation folds, and a synthetic planted-motif
generator for desk-scale experiments.

Corpus file format (one sample per line, tab separated):

    <id>\t<label 0|1>\t<space-separated mnemonics>

A pre-encoded variant carries decimal indices instead of mnemonics.
"""

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ConfigError,
    DuplicateSampleId,
    EmptyCorpus,
    EmptyMotifSignal,
    InsufficientClassSamples,
    MalformedLabel,
    MotifTooLong,
    OutOfVocabulary,
    UnknownOpcode,
)
from .rng import substream
from .vocab import Vocabulary, decode

LABEL_BENIGN = 0
LABEL_MALWARE = 1


@dataclass(frozen=True)
class Sample:
    """One program: an id, its opcode index sequence, and a binary label."""

    id: str
    opcodes: np.ndarray
    label: int

    def content_hash(self) -> str:
        data = np.ascontiguousarray(self.opcodes, dtype=np.int64).tobytes()
        return hashlib.sha256(data).hexdigest()


@dataclass
class Corpus:
    samples: list[Sample]
    vocab_size: int
    duplicates_dropped: int = 0

    def __len__(self) -> int:
        return len(self.samples)

    def by_label(self, label: int) -> list[Sample]:
        return [s for s in self.samples if s.label == label]


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: dict[str, int]
    seed: int

    def test_samples(self, corpus: Corpus, fold: int) -> list[Sample]:
        return [s for s in corpus.samples if self.assignments[s.id] == fold]

    def train_samples(self, corpus: Corpus, fold: int) -> list[Sample]:
        return [s for s in corpus.samples if self.assignments[s.id] != fold]


@dataclass(frozen=True)
class SynthConfig:
    """Planted-motif corpus settings.

    Malware sequences get each motif inserted with probability
    ``plant_rate`` at uniformly random non-overlapping positions; benign
    sequences are pure uniform background over indices [1, vocab_size).
    """

    vocab_size: int = 32
    seq_len: int = 512
    n_malware: int = 250
    n_benign: int = 250
    motifs: tuple[tuple[int, ...], ...] = ((3, 17, 9, 23, 5), (11, 4, 28, 7, 19, 2))
    plant_rate: float = 0.9


def _freeze(sample: Sample) -> Sample:
    sample.opcodes.setflags(write=False)
    return sample


def make_sample(sample_id: str, opcodes, label: int) -> Sample:
    arr = np.asarray(opcodes, dtype=np.int64)
    return _freeze(Sample(id=sample_id, opcodes=arr, label=int(label)))


def build_corpus(samples, vocab_size: int) -> Corpus:
    """Assemble a corpus, dropping content-duplicate sequences (first
    occurrence wins) and rejecting duplicate ids and out-of-range indices."""
    kept: list[Sample] = []
    seen_hashes: set[str] = set()
    seen_ids: set[str] = set()
    dropped = 0
    for s in samples:
        if s.id in seen_ids:
            raise DuplicateSampleId(s.id)
        seen_ids.add(s.id)
        if len(s.opcodes) and int(s.opcodes.max()) >= vocab_size:
            raise OutOfVocabulary(int(s.opcodes.max()), vocab_size)
        h = s.content_hash()
        if h in seen_hashes:
            dropped += 1
            continue
        seen_hashes.add(h)
        kept.append(s)
    if not kept:
        raise EmptyCorpus("no samples after parsing")
    return Corpus(samples=kept, vocab_size=vocab_size, duplicates_dropped=dropped)


def _parse_label(text: str, source, line_no: int) -> int:
    if text not in ("0", "1"):
        raise MalformedLabel(text, source=source, line=line_no)
    return int(text)


def load_corpus(path, vocab: Vocabulary, fmt: str = "mnemonic") -> Corpus:
    """Load a corpus file. ``fmt`` is "mnemonic" or "indices"."""
    if fmt not in ("mnemonic", "indices"):
        raise ConfigError(f"unknown corpus format {fmt!r}")
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedLabel(line, source=str(path), line=line_no)
            sample_id, label_text, body = parts
            label = _parse_label(label_text.strip(), str(path), line_no)
            tokens = body.split()
            if not tokens:
                raise EmptyCorpus(f"sample {sample_id!r} has no opcodes ({path}:{line_no})")
            if fmt == "mnemonic":
                idx = np.empty(len(tokens), dtype=np.int64)
                for pos, tok in enumerate(tokens):
                    j = vocab.index_of.get(tok)
                    if j is None:
                        raise UnknownOpcode(tok, pos, source=str(path), line=line_no)
                    idx[pos] = j
            else:
                try:
                    idx = np.array([int(t) for t in tokens], dtype=np.int64)
                except ValueError:
                    raise UnknownOpcode(body, 0, source=str(path), line=line_no) from None
                if idx.min() < 1 or idx.max() >= vocab.size:
                    bad = int(idx.min()) if idx.min() < 1 else int(idx.max())
                    raise OutOfVocabulary(bad, vocab.size)
            samples.append(make_sample(sample_id, idx, label))
    return build_corpus(samples, vocab.size)


def save_corpus(corpus: Corpus, path, vocab: Vocabulary | None = None, fmt: str = "indices") -> None:
    if fmt == "mnemonic" and vocab is None:
        raise ConfigError("mnemonic format needs a vocabulary")
    with open(path, "w", encoding="utf-8") as fh:
        for s in corpus.samples:
            if fmt == "mnemonic":
                body = " ".join(decode(vocab, s.opcodes))
            else:
                body = " ".join(str(int(i)) for i in s.opcodes)
            fh.write(f"{s.id}\t{s.label}\t{body}\n")


def truncate(sample: Sample, max_len: int) -> Sample:
    """Keep the first ``max_len`` opcodes; shorter sequences pass through."""
    if max_len < 1:
        raise ConfigError("max_len must be >= 1")
    if len(sample.opcodes) <= max_len:
        return sample
    return _freeze(replace(sample, opcodes=sample.opcodes[:max_len].copy()))


def make_folds(corpus: Corpus, k: int, seed: int) -> FoldPlan:
    """Stratified fold assignment: per-class shuffle, then round-robin.

    Deterministic for a fixed seed; per-class fold sizes differ by at
    most one.
    """
    if k < 2:
        raise ConfigError("fold count must be >= 2")
    assignments: dict[str, int] = {}
    for label in (LABEL_BENIGN, LABEL_MALWARE):
        ids = [s.id for s in corpus.samples if s.label == label]
        if len(ids) < k:
            raise InsufficientClassSamples(label, len(ids), k)
        order = substream(seed, "folds", label).permutation(len(ids))
        for slot, j in enumerate(order):
            assignments[ids[j]] = slot % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def generate_synthetic(config: SynthConfig, seed: int) -> Corpus:
    """Deterministic planted-motif corpus; the motifs are the only label
    signal, so a substring detector gives a known oracle."""
    if config.vocab_size < 8:
        raise ConfigError("synthetic vocab_size must be >= 8")
    if not config.motifs:
        raise EmptyMotifSignal("at least one motif required")
    if config.plant_rate <= 0.0:
        raise EmptyMotifSignal("plant rate must be in (0, 1]")
    if config.plant_rate > 1.0:
        raise ConfigError("plant rate must be in (0, 1]")
    for m in config.motifs:
        if not 3 <= len(m) <= 8:
            raise ConfigError(f"motif length must be in [3, 8], got {len(m)}")
        if len(m) > config.seq_len:
            raise MotifTooLong(f"motif of length {len(m)} exceeds sequence length {config.seq_len}")
        if min(m) < 1 or max(m) >= config.vocab_size:
            raise OutOfVocabulary(int(max(m)), config.vocab_size)

    samples = []
    for i in range(config.n_malware):
        rng = substream(seed, "synth", "mal", i)
        seq = rng.integers(1, config.vocab_size, size=config.seq_len)
        occupied: list[tuple[int, int]] = []
        for motif in config.motifs:
            if rng.random() >= config.plant_rate:
                continue
            span = len(motif)
            for _ in range(1000):
                start = int(rng.integers(0, config.seq_len - span + 1))
                if all(start + span <= a or start >= b for a, b in occupied):
                    occupied.append((start, start + span))
                    seq[start:start + span] = motif
                    break
            else:
                raise ConfigError("could not place motifs without overlap")
        samples.append(make_sample(f"mal-{i:04d}", seq, LABEL_MALWARE))
    for i in range(config.n_benign):
        rng = substream(seed, "synth", "ben", i)
        seq = rng.integers(1, config.vocab_size, size=config.seq_len)
        samples.append(make_sample(f"ben-{i:04d}", seq, LABEL_BENIGN))
    return build_corpus(samples, config.vocab_size)
