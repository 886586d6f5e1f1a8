"""From-scratch 1D convolutional malware classifier.

Architecture: trainable opcode embedding -> single valid (no-pad)
convolution, stride 1 -> ReLU -> global max-pool over time -> linear
layer -> sigmoid, giving the probability a sample is malicious.

For sequence X (L x d after embedding lookup) and filter f:

    a[t, f] = conv_b[f] + sum_{i<w, j<d} conv_w[f, i, j] * X[t+i, j]
    r[t, f] = max(a[t, f], 0)
    m[f]    = max_t r[t, f]
    z       = lin_b + lin_w . m
    p       = sigmoid(z)

Sequences shorter than the filter length are right-padded with the
blank token. All arithmetic is float64. Backward is exact: max-pool
routes gradient to the first argmax, ReLU uses subgradient 0 at 0, and
only embedding rows of opcodes present in the sequence get gradient.
"""

from dataclasses import dataclass

import numpy as np

from .cbow import EmbeddingMatrix
from .errors import CacheMismatch, ConfigError, OutOfVocabulary
from .rng import substream

P_EPS = 1e-12


@dataclass(frozen=True)
class ModelShape:
    vocab_size: int
    emb_dim: int = 8
    num_filters: int = 64
    filter_len: int = 8

    def __post_init__(self):
        if min(self.vocab_size, self.emb_dim, self.num_filters, self.filter_len) < 1:
            raise ConfigError("all shape fields must be >= 1")


@dataclass
class ModelParams:
    embedding: np.ndarray  # (V, d)
    conv_w: np.ndarray     # (F, w, d)
    conv_b: np.ndarray     # (F,)
    lin_w: np.ndarray      # (F,)
    lin_b: np.ndarray      # ()

    @property
    def shape(self) -> ModelShape:
        v, d = self.embedding.shape
        f, w, _ = self.conv_w.shape
        return ModelShape(vocab_size=v, emb_dim=d, num_filters=f, filter_len=w)

    def copy(self) -> "ModelParams":
        return ModelParams(*(getattr(self, name).copy() for name in FIELDS))


FIELDS = ("embedding", "conv_w", "conv_b", "lin_w", "lin_b")


@dataclass
class AdamState:
    first_moment: ModelParams
    second_moment: ModelParams
    step_count: int = 0


def count_parameters(shape: ModelShape) -> int:
    v, d, f, w = shape.vocab_size, shape.emb_dim, shape.num_filters, shape.filter_len
    return v * d + f * w * d + f + f + 1


def zero_params(shape: ModelShape) -> ModelParams:
    return ModelParams(
        embedding=np.zeros((shape.vocab_size, shape.emb_dim)),
        conv_w=np.zeros((shape.num_filters, shape.filter_len, shape.emb_dim)),
        conv_b=np.zeros(shape.num_filters),
        lin_w=np.zeros(shape.num_filters),
        lin_b=np.zeros(()),
    )


def init_params(shape: ModelShape, seed: int) -> ModelParams:
    """Embedding uniform in [-0.05, 0.05]; conv and linear weights
    Glorot-uniform; biases zero."""
    rng = substream(seed, "init")
    conv_limit = np.sqrt(6.0 / (shape.filter_len * shape.emb_dim + shape.num_filters))
    lin_limit = np.sqrt(6.0 / (shape.num_filters + 1))
    return ModelParams(
        embedding=rng.uniform(-0.05, 0.05, size=(shape.vocab_size, shape.emb_dim)),
        conv_w=rng.uniform(-conv_limit, conv_limit, size=(shape.num_filters, shape.filter_len, shape.emb_dim)),
        conv_b=np.zeros(shape.num_filters),
        lin_w=rng.uniform(-lin_limit, lin_limit, size=shape.num_filters),
        lin_b=np.zeros(()),
    )


def init_adam_state(shape: ModelShape) -> AdamState:
    return AdamState(first_moment=zero_params(shape), second_moment=zero_params(shape))


def _sigmoid_scalar(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


def forward(params: ModelParams, seq) -> tuple[float, dict]:
    """Probability the sample is malware, plus the activation cache the
    matching backward pass needs."""
    shape = params.shape
    seq_in = np.asarray(seq, dtype=np.int64)
    if seq_in.size < 1:
        raise ConfigError("sequence must contain at least one opcode")
    if int(seq_in.max()) >= shape.vocab_size or int(seq_in.min()) < 0:
        bad = int(seq_in.max()) if int(seq_in.max()) >= shape.vocab_size else int(seq_in.min())
        raise OutOfVocabulary(bad, shape.vocab_size)
    w = shape.filter_len
    if seq_in.size < w:
        padded = np.zeros(w, dtype=np.int64)
        padded[: seq_in.size] = seq_in
    else:
        padded = seq_in

    x = params.embedding[padded]                       # (L, d)
    windows = np.lib.stride_tricks.sliding_window_view(x, (w, shape.emb_dim))
    windows = windows.reshape(len(padded) - w + 1, w * shape.emb_dim)
    wf = params.conv_w.reshape(shape.num_filters, w * shape.emb_dim)
    preact = wf @ windows.T + params.conv_b[:, None]   # (F, L'), filter-major
    act = np.maximum(preact, 0.0)
    t_star = np.argmax(act, axis=1)                    # first (lowest-t) argmax on ties
    pooled = act[np.arange(shape.num_filters), t_star]
    z = float(params.lin_w @ pooled + params.lin_b)
    s = _sigmoid_scalar(z)
    p = min(max(s, P_EPS), 1.0 - P_EPS)
    cache = {
        "params": params,
        "seq_in": seq_in,
        "padded": padded,
        "windows": windows,
        "preact": preact,
        "t_star": t_star,
        "pooled": pooled,
        "z": z,
        "s_raw": s,
        "p": p,
    }
    return p, cache


def bce_loss(p: float, y: int) -> float:
    """Binary cross entropy with the probability clamped away from 0/1."""
    ph = min(max(p, P_EPS), 1.0 - P_EPS)
    return float(-(y * np.log(ph) + (1 - y) * np.log(1.0 - ph)))


def backward(params: ModelParams, seq, y: int, cache: dict) -> ModelParams:
    """Exact gradients of bce_loss(forward(params, seq), y)."""
    if cache.get("params") is not params:
        raise CacheMismatch("cache was produced for different parameters")
    seq_in = np.asarray(seq, dtype=np.int64)
    if not np.array_equal(cache["seq_in"], seq_in):
        raise CacheMismatch("cache was produced for a different sequence")

    shape = params.shape
    f_idx = np.arange(shape.num_filters)
    s = cache["s_raw"]
    # clamped probabilities have zero gradient through the clamp
    dz = (cache["p"] - y) if P_EPS < s < 1.0 - P_EPS else 0.0

    pooled = cache["pooled"]
    d_lin_w = dz * pooled
    d_lin_b = np.asarray(dz, dtype=np.float64)
    d_pooled = dz * params.lin_w

    t_star = cache["t_star"]
    active = cache["preact"][f_idx, t_star] > 0.0
    coeff = d_pooled * active                         # (F,)

    d_conv_b = coeff.copy()
    d_wf = coeff[:, None] * cache["windows"][t_star]  # (F, w*d)
    d_conv_w = d_wf.reshape(shape.num_filters, shape.filter_len, shape.emb_dim)

    padded = cache["padded"]
    d_x = np.zeros((len(padded), shape.emb_dim))
    for f in np.nonzero(coeff)[0]:
        t = t_star[f]
        d_x[t:t + shape.filter_len] += coeff[f] * params.conv_w[f]

    d_emb = np.zeros_like(params.embedding)
    np.add.at(d_emb, padded, d_x)
    return ModelParams(
        embedding=d_emb, conv_w=d_conv_w, conv_b=d_conv_b, lin_w=d_lin_w, lin_b=d_lin_b
    )


def loss_and_grads(params: ModelParams, seq, y: int) -> tuple[float, float, ModelParams]:
    p, cache = forward(params, seq)
    return bce_loss(p, y), p, backward(params, seq, y, cache)


def adam_step(params: ModelParams, grads: ModelParams, state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> tuple[ModelParams, AdamState]:
    """One Adam update; returns fresh parameter and state objects."""
    t = state.step_count + 1
    new_p, new_m, new_v = {}, {}, {}
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name in FIELDS:
        g = getattr(grads, name)
        m = beta1 * getattr(state.first_moment, name) + (1.0 - beta1) * g
        v = beta2 * getattr(state.second_moment, name) + (1.0 - beta2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        new_p[name] = getattr(params, name) - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name] = m
        new_v[name] = v
    return (
        ModelParams(**new_p),
        AdamState(first_moment=ModelParams(**new_m), second_moment=ModelParams(**new_v), step_count=t),
    )


def snapshot_embedding(params: ModelParams) -> EmbeddingMatrix:
    """Deep copy of the embedding tensor; later updates do not leak in."""
    rows = params.embedding.copy()
    return EmbeddingMatrix(rows=rows, d=rows.shape[1])


def save_checkpoint(params: ModelParams, path) -> None:
    shape = params.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("opcaug-model v1\n")
        fh.write(f"shape {shape.vocab_size} {shape.emb_dim} {shape.num_filters} {shape.filter_len}\n")
        for name in FIELDS:
            tensor = np.asarray(getattr(params, name))
            fh.write(f"tensor {name} {tensor.size}\n")
            flat = tensor.reshape(-1)
            for start in range(0, flat.size, 8):
                fh.write(" ".join(f"{x:.17g}" for x in flat[start:start + 8]) + "\n")


def load_checkpoint(path) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        if fh.readline().strip() != "opcaug-model v1":
            raise ConfigError(f"not a model checkpoint: {path}")
        head = fh.readline().split()
        if len(head) != 5 or head[0] != "shape":
            raise ConfigError("checkpoint missing shape line")
        v, d, f, w = (int(x) for x in head[1:])
        shape = ModelShape(vocab_size=v, emb_dim=d, num_filters=f, filter_len=w)
        dims = {
            "embedding": (v, d),
            "conv_w": (f, w, d),
            "conv_b": (f,),
            "lin_w": (f,),
            "lin_b": (),
        }
        tensors = {}
        line = fh.readline()
        while line:
            head = line.split()
            if head[0] != "tensor" or len(head) != 3:
                raise ConfigError(f"malformed checkpoint section: {line!r}")
            name, size = head[1], int(head[2])
            values = []
            while len(values) < size:
                values.extend(float(x) for x in fh.readline().split())
            tensors[name] = np.array(values).reshape(dims[name])
            line = fh.readline()
    missing = set(FIELDS) - set(tensors)
    if missing:
        raise ConfigError(f"checkpoint missing tensors: {sorted(missing)}")
    params = ModelParams(**{k: tensors[k] for k in FIELDS})
    if params.shape != shape:
        raise ConfigError("checkpoint tensors disagree with shape line")
    return params
