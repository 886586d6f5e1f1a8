"""CBOW word2vec over opcode sequences, trained with negative sampling,
plus extraction of Euclidean top-k similarity tables.

The model keeps an input matrix W_in and an output matrix W_out, both
|V| x d. For a center position t the hidden vector h is the mean of the
W_in rows of the surrounding window (clipped at sequence boundaries).
The loss per position is

    -log sigmoid(h . W_out[center]) - sum_neg log(1 - sigmoid(h . W_out[neg]))

with negatives drawn from the unigram^(3/4) distribution. Plain SGD
with a learning rate decaying linearly to 1/100 of its start value over
all (epoch, position) steps. W_in is returned as the embedding.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .augment import SimilarityTable
from .corpus import Corpus
from .errors import ConfigError, EmptyTrainingSignal, NonFiniteEmbedding
from .rng import substream

_SIG_CLIP = 1e-12


@dataclass(frozen=True)
class CbowConfig:
    dim: int = 8
    window: int = 5
    epochs: int = 5
    negatives: int = 5
    learning_rate: float = 0.025
    seed: int = 0
    subsample: float = 0.0  # disabled by default; opcode counts are too skewed

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.epochs < 1 or self.negatives < 1:
            raise ConfigError("dim, window, epochs, negatives must all be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")


@dataclass
class EmbeddingMatrix:
    rows: np.ndarray
    d: int
    epoch_losses: list | None = field(default=None, compare=False)

    @property
    def vocab_size(self) -> int:
        return self.rows.shape[0]


def _sigmoid(x):
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def position_loss(w_in, w_out, ctx_idx, center, negs) -> float:
    """Loss of one (context, center, negatives) triple. Shared by the
    training loop and the finite-difference oracle."""
    h = w_in[ctx_idx].mean(axis=0)
    out_idx = np.concatenate(([center], negs))
    scores = _sigmoid(w_out[out_idx] @ h)
    pos = np.clip(scores[0], _SIG_CLIP, 1.0 - _SIG_CLIP)
    neg = np.clip(scores[1:], _SIG_CLIP, 1.0 - _SIG_CLIP)
    return float(-np.log(pos) - np.log(1.0 - neg).sum())


def position_loss_and_grads(w_in, w_out, ctx_idx, center, negs):
    """Loss plus sparse gradients for one position.

    Returns (loss, d_in_row, out_idx, d_out_rows): every context row of
    W_in receives d_in_row (duplicates accumulate), and row out_idx[j]
    of W_out receives d_out_rows[j].
    """
    ctx_idx = np.asarray(ctx_idx, dtype=np.int64)
    h = w_in[ctx_idx].mean(axis=0)
    out_idx = np.concatenate((np.asarray([center], dtype=np.int64), np.asarray(negs, dtype=np.int64)))
    rows = w_out[out_idx]
    scores = _sigmoid(rows @ h)
    labels = np.zeros(len(out_idx))
    labels[0] = 1.0
    pos = np.clip(scores[0], _SIG_CLIP, 1.0 - _SIG_CLIP)
    neg = np.clip(scores[1:], _SIG_CLIP, 1.0 - _SIG_CLIP)
    loss = float(-np.log(pos) - np.log(1.0 - neg).sum())
    err = scores - labels  # d loss / d score_logit
    d_out_rows = err[:, None] * h[None, :]
    d_h = err @ rows
    d_in_row = d_h / len(ctx_idx)
    return loss, d_in_row, out_idx, d_out_rows


def _noise_cumulative(corpus: Corpus):
    counts = np.zeros(corpus.vocab_size)
    for s in corpus.samples:
        counts += np.bincount(s.opcodes, minlength=corpus.vocab_size)
    weights = counts ** 0.75
    cum = np.cumsum(weights)
    return cum, counts


def _keep_probability(counts, total, threshold):
    freq = counts / total
    with np.errstate(divide="ignore", invalid="ignore"):
        keep = (np.sqrt(freq / threshold) + 1.0) * (threshold / freq)
    return np.clip(np.nan_to_num(keep, nan=1.0, posinf=1.0), 0.0, 1.0)


def train_cbow(corpus: Corpus, config: CbowConfig) -> EmbeddingMatrix:
    """Train CBOW over the corpus and return W_in with per-epoch mean
    losses attached."""
    v = corpus.vocab_size
    d = config.dim
    rng = substream(config.seed, "cbow")
    w_in = rng.uniform(-0.5 / d, 0.5 / d, size=(v, d))
    w_out = np.zeros((v, d))

    usable = [s for s in corpus.samples if len(s.opcodes) >= 2]
    skipped = len(corpus.samples) - len(usable)
    if skipped:
        warnings.warn(f"skipped {skipped} sequences shorter than 2 opcodes", stacklevel=2)
    if not usable:
        raise EmptyTrainingSignal("no sequence of length >= 2")

    cum, counts = _noise_cumulative(corpus)
    total_tokens = cum[-1]
    keep = None
    if config.subsample > 0:
        keep = _keep_probability(counts, counts.sum(), config.subsample)

    total_steps = config.epochs * sum(len(s.opcodes) for s in usable)
    lr0 = config.learning_rate
    lr1 = lr0 / 100.0
    denom = max(total_steps - 1, 1)

    step = 0
    losses = []
    with threadpool_limits(limits=1, user_api="blas"):
        for epoch in range(config.epochs):
            epoch_loss = 0.0
            epoch_positions = 0
            for s in usable:
                seq = s.opcodes
                if keep is not None:
                    mask = rng.random(len(seq)) < keep[seq]
                    seq = seq[mask]
                    if len(seq) < 2:
                        continue
                n = len(seq)
                for t in range(n):
                    lr = lr0 + (lr1 - lr0) * (step / denom)
                    step += 1
                    lo = max(0, t - config.window)
                    hi = min(n, t + config.window + 1)
                    ctx = np.concatenate((seq[lo:t], seq[t + 1:hi]))
                    if ctx.size == 0:
                        continue
                    center = int(seq[t])
                    negs = _draw_negatives(rng, cum, total_tokens, config.negatives, center)
                    loss, d_in_row, out_idx, d_out_rows = position_loss_and_grads(
                        w_in, w_out, ctx, center, negs
                    )
                    np.add.at(w_out, out_idx, -lr * d_out_rows)
                    np.add.at(w_in, ctx, np.broadcast_to(-lr * d_in_row, (len(ctx), d)))
                    epoch_loss += loss
                    epoch_positions += 1
            losses.append(epoch_loss / max(epoch_positions, 1))
    return EmbeddingMatrix(rows=w_in, d=d, epoch_losses=losses)


def _draw_negatives(rng, cum, total, count, center):
    negs = np.searchsorted(cum, rng.random(count) * total)
    while True:
        clash = negs == center
        if not clash.any():
            return negs
        negs[clash] = np.searchsorted(cum, rng.random(int(clash.sum())) * total)


def similarity_table(emb: EmbeddingMatrix, k: int = 10) -> SimilarityTable:
    """Top-k neighbours per opcode by ascending Euclidean distance, ties
    broken toward the smaller index. Blank (index 0) is excluded both as
    key and as candidate."""
    rows = np.asarray(emb.rows, dtype=np.float64)
    if not np.isfinite(rows).all():
        raise NonFiniteEmbedding("embedding contains non-finite entries")
    v = rows.shape[0]
    if v < 3:
        raise ConfigError("similarity table needs a vocabulary of size >= 3")
    if k < 1:
        raise ConfigError("k must be >= 1")
    ops = rows[1:]
    # squared distances keep the same order as Euclidean ones
    d2 = ((ops[:, None, :] - ops[None, :, :]) ** 2).sum(axis=-1)
    indices = np.arange(1, v)
    neighbours = {}
    for i in range(v - 1):
        order = np.lexsort((indices, d2[i]))
        ranked = [int(indices[j]) for j in order if indices[j] != i + 1]
        neighbours[i + 1] = tuple(ranked[:k])
    return SimilarityTable(neighbours=neighbours, k=k)


def save_embedding(emb: EmbeddingMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"cbow {emb.vocab_size} {emb.d}\n")
        for row in emb.rows:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def load_embedding(path) -> EmbeddingMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "cbow":
            raise ConfigError(f"not an embedding file: {path}")
        v, d = int(header[1]), int(header[2])
        rows = np.loadtxt(fh, ndmin=2)
    if rows.shape != (v, d):
        raise ConfigError(f"embedding shape {rows.shape} does not match header ({v}, {d})")
    return EmbeddingMatrix(rows=rows, d=d)
