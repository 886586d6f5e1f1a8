"""Opcode vocabulary, the reserved blank token, and prefix-based
similar-instruction groups.

The vocabulary maps opcode mnemonics to dense integer indices. Index 0
is always the reserved blank token "<blank>": it never occurs in raw
corpora and only dropout-style augmentations may write it. A 218-entry
Dalvik mnemonic list ships as a default asset; any other instruction set
can be supplied as a plain text file, one mnemonic per line.
"""

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import ConfigError, DuplicateMnemonic, InvalidPrefix, ReservedName, UnknownOpcode

BLANK_TOKEN = "<blank>"
BLANK_INDEX = 0

# Prefix groups for the similar-instruction table. Matching is anchored
# at the start of the mnemonic, so e.g. "get" deliberately does not
# match "iget"; opcodes matching no prefix get an empty group.
DEFAULT_PREFIXES = ("move", "const", "goto", "cmp", "if", "get", "put", "cast")


@dataclass(frozen=True)
class Vocabulary:
    """Dense mnemonic <-> index mapping with the blank token at index 0."""

    mnemonics: tuple[str, ...]
    index_of: dict[str, int] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.mnemonics)

    def __contains__(self, mnemonic: str) -> bool:
        return mnemonic in self.index_of

    def name(self, index: int) -> str:
        return self.mnemonics[index]


@dataclass(frozen=True)
class PrefixSimilarityTable:
    """Per-opcode groups of same-prefix opcodes (own index excluded)."""

    groups: dict[int, tuple[int, ...]]
    prefixes: tuple[str, ...]


def build_vocabulary(mnemonic_list) -> Vocabulary:
    """Build a Vocabulary with "<blank>" prepended at index 0.

    Raises DuplicateMnemonic on repeated entries and ReservedName if the
    input already contains the blank token.
    """
    mnemonics = list(mnemonic_list)
    if not mnemonics:
        raise ConfigError("vocabulary must contain at least one mnemonic")
    seen = set()
    for m in mnemonics:
        if m == BLANK_TOKEN:
            raise ReservedName(m)
        if m in seen:
            raise DuplicateMnemonic(m)
        seen.add(m)
    ordered = (BLANK_TOKEN, *mnemonics)
    index_of = {m: i for i, m in enumerate(ordered)}
    return Vocabulary(mnemonics=ordered, index_of=index_of)


def encode(vocab: Vocabulary, tokens) -> np.ndarray:
    """Element-wise index lookup; raises UnknownOpcode with position."""
    out = np.empty(len(tokens), dtype=np.int64)
    index_of = vocab.index_of
    for pos, tok in enumerate(tokens):
        idx = index_of.get(tok)
        if idx is None:
            raise UnknownOpcode(tok, pos)
        out[pos] = idx
    return out


def decode(vocab: Vocabulary, indices) -> list[str]:
    return [vocab.mnemonics[int(i)] for i in indices]


def build_prefix_table(vocab: Vocabulary, prefixes=DEFAULT_PREFIXES) -> PrefixSimilarityTable:
    """Group opcodes whose mnemonics start with the same prefix.

    When one prefix is a prefix of another, the longest match wins.
    Punctuation in mnemonics ('/', '-') is treated like any other
    character. The blank token never joins a group.
    """
    prefixes = tuple(prefixes)
    if not prefixes:
        raise InvalidPrefix("prefix list is empty")
    for p in prefixes:
        if not p:
            raise InvalidPrefix("empty prefix string")

    by_length = sorted(prefixes, key=len, reverse=True)
    members: dict[str, list[int]] = {p: [] for p in prefixes}
    assigned: dict[int, str] = {}
    for idx in range(1, vocab.size):
        name = vocab.mnemonics[idx]
        for p in by_length:
            if name.startswith(p):
                members[p].append(idx)
                assigned[idx] = p
                break

    groups: dict[int, tuple[int, ...]] = {}
    for idx in range(1, vocab.size):
        p = assigned.get(idx)
        if p is None:
            groups[idx] = ()
        else:
            groups[idx] = tuple(i for i in members[p] if i != idx)
    return PrefixSimilarityTable(groups=groups, prefixes=prefixes)


def load_vocabulary(path) -> Vocabulary:
    """Read a vocabulary file: one mnemonic per line, '#' comments and
    blank lines ignored, line order defines indices 1..n."""
    mnemonics = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            mnemonics.append(line)
    return build_vocabulary(mnemonics)


def save_vocabulary(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in vocab.mnemonics[1:]:
            fh.write(m + "\n")


def default_dalvik_vocabulary() -> Vocabulary:
    """The bundled 218-mnemonic Dalvik instruction set (vocab size 219)."""
    text = resources.files("opcaug.assets").joinpath("dalvik_mnemonics.txt").read_text("utf-8")
    mnemonics = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    return build_vocabulary(mnemonics)


def synthetic_vocabulary(n_opcodes: int) -> Vocabulary:
    """A placeholder instruction set op001..opNNN for generated corpora."""
    width = max(3, len(str(n_opcodes)))
    return build_vocabulary([f"op{i:0{width}d}" for i in range(1, n_opcodes + 1)])
