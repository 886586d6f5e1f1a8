"""Training orchestration: epochs, online augmentation, the per-epoch
self-embedding similarity refresh, evaluation, cross-validation, and
strength sweeps.

Online augmentation means every training sample is independently gated
and re-augmented at every epoch; evaluation never augments. Each
sample's randomness comes from a substream keyed on
(seed, epoch, sample id), so results do not depend on iteration order.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np
from threadpoolctl import threadpool_limits

from .augment import AugmentationSpec, AugmentContext, apply_augmentation, methods_in
from .cbow import CbowConfig, similarity_table, train_cbow
from .corpus import Corpus, FoldPlan, Sample, truncate
from .errors import ConfigError, DegenerateLabels, DivergedTraining, OpcaugError
from .net import (
    FIELDS,
    ModelParams,
    ModelShape,
    adam_step,
    forward,
    init_adam_state,
    init_params,
    loss_and_grads,
    snapshot_embedding,
    zero_params,
)
from .rng import derive_seed, substream
from .vocab import PrefixSimilarityTable, Vocabulary


@dataclass(frozen=True)
class TrainConfig:
    shape: ModelShape
    epochs: int = 120
    batch_size: int = 48
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    max_seq_len: int = 128_000
    seed: int = 0
    augmentation: AugmentationSpec | None = None
    sim_table_k: int = 10
    cbow: CbowConfig = CbowConfig()

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.max_seq_len < self.shape.filter_len:
            raise ConfigError("max_seq_len must be >= filter_len")


@dataclass
class TrainHistory:
    epoch_losses: list[float] = field(default_factory=list)
    adam_steps: int = 0
    augment_counts: dict[str, int] = field(default_factory=dict)
    self_tables: list[dict[int, tuple[int, ...]]] = field(default_factory=list)


@dataclass(frozen=True)
class EvalReport:
    f1: float
    precision: float
    recall: float
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float = 0.5


@dataclass
class CvReport:
    k: int
    per_fold: list[EvalReport]
    mean_f1: float
    config: TrainConfig
    train_seconds: list[float]
    infer_seconds_per_example: list[float]


@dataclass
class SweepReport:
    method: str
    beta: float
    baseline_f1: float
    rows: list[tuple[float, float]]  # (alpha, mean f1)
    max_f1: float
    delta: float


def _mean_grads(grads: list[ModelParams], shape: ModelShape) -> ModelParams:
    total = zero_params(shape)
    for g in grads:
        for name in FIELDS:
            acc = getattr(total, name)
            acc += getattr(g, name)
    n = float(len(grads))
    for name in FIELDS:
        acc = getattr(total, name)
        acc /= n
    return total


def train(config: TrainConfig, train_set: list[Sample], vocab: Vocabulary,
          prefix_table: PrefixSimilarityTable | None = None) -> tuple[ModelParams, TrainHistory]:
    """Fit the classifier on the given samples.

    If the augmentation spec uses language_model, a CBOW model is first
    trained on exactly these samples and its similarity table frozen.
    If it uses self_embedding, the table is instead rebuilt at the start
    of every epoch from a snapshot of the classifier's own embedding, so
    all samples within an epoch see the same (lagging) table.
    """
    if not train_set:
        raise ConfigError("training set is empty")
    labels = {s.label for s in train_set}
    if labels != {0, 1}:
        raise DegenerateLabels(f"training set contains only label(s) {sorted(labels)}")

    samples = [truncate(s, config.max_seq_len) for s in train_set]
    active = methods_in(config.augmentation) if config.augmentation else set()
    ctx = AugmentContext(vocab=vocab, prefix_table=prefix_table)

    if "language_model" in active:
        cbow_cfg = replace(config.cbow, seed=derive_seed(config.seed, "cbow"))
        sub = Corpus(samples=samples, vocab_size=vocab.size)
        emb = train_cbow(sub, cbow_cfg)
        ctx.lm_table = similarity_table(emb, k=config.sim_table_k)

    params = init_params(config.shape, config.seed)
    state = init_adam_state(config.shape)
    history = TrainHistory()
    use_self = "self_embedding" in active

    # the per-sample matmuls are too small for threaded BLAS to help
    with threadpool_limits(limits=1, user_api="blas"):
        for epoch in range(config.epochs):
            if use_self:
                table = similarity_table(snapshot_embedding(params), k=config.sim_table_k)
                ctx.self_table = table
                history.self_tables.append(dict(table.neighbours))

            order = substream(config.seed, "shuffle", epoch).permutation(len(samples))
            epoch_loss = 0.0
            for start in range(0, len(order), config.batch_size):
                batch = order[start:start + config.batch_size]
                grads = []
                for j in batch:
                    s = samples[j]
                    seq = s.opcodes
                    if config.augmentation is not None:
                        rng = substream(config.seed, "augment", epoch, s.id)
                        seq = apply_augmentation(config.augmentation, seq, ctx, rng,
                                                 counts=history.augment_counts)
                    loss, _, g = loss_and_grads(params, seq, s.label)
                    epoch_loss += loss
                    grads.append(g)
                params, state = adam_step(
                    params, _mean_grads(grads, config.shape), state,
                    lr=config.learning_rate, beta1=config.adam_beta1,
                    beta2=config.adam_beta2, eps=config.adam_eps,
                )
                history.adam_steps += 1
            mean_loss = epoch_loss / len(samples)
            if not np.isfinite(mean_loss):
                raise DivergedTraining(epoch, f"mean loss {mean_loss}")
            history.epoch_losses.append(mean_loss)
    return params, history


def _classify(params: ModelParams, samples: list[Sample], config: TrainConfig,
              timed: bool = False):
    probs = np.empty(len(samples))
    elapsed = 0.0
    with threadpool_limits(limits=1, user_api="blas"):
        for i, s in enumerate(samples):
            seq = truncate(s, config.max_seq_len).opcodes
            if timed:
                t0 = time.perf_counter()
                p, _ = forward(params, seq)
                elapsed += time.perf_counter() - t0
            else:
                p, _ = forward(params, seq)
            probs[i] = p
    mean_latency = elapsed / len(samples) if timed and samples else 0.0
    return probs, mean_latency


def report_from_counts(tp: int, fp: int, tn: int, fn: int, threshold: float = 0.5) -> EvalReport:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
    return EvalReport(f1=f1, precision=precision, recall=recall,
                      tp=tp, fp=fp, tn=tn, fn=fn, threshold=threshold)


def evaluate(params: ModelParams, test_set: list[Sample], config: TrainConfig) -> EvalReport:
    """Score a test set with no augmentation; probability >= 0.5 means
    predicted malware. f1 is 0 when its denominator is 0."""
    report, _ = _evaluate_timed(params, test_set, config, timed=False)
    return report


def _evaluate_timed(params, test_set, config, timed=True):
    if not test_set:
        raise ConfigError("test set is empty")
    probs, latency = _classify(params, test_set, config, timed=timed)
    predictions = probs >= 0.5
    tp = fp = tn = fn = 0
    for s, pred in zip(test_set, predictions):
        if s.label == 1:
            tp, fn = (tp + 1, fn) if pred else (tp, fn + 1)
        else:
            fp, tn = (fp + 1, tn) if pred else (fp, tn + 1)
    return report_from_counts(tp, fp, tn, fn), latency


def cross_validate(config: TrainConfig, corpus: Corpus, fold_plan: FoldPlan,
                   vocab: Vocabulary, prefix_table: PrefixSimilarityTable | None = None) -> CvReport:
    """Train/evaluate once per fold with independently derived seeds and
    record wall-clock training and per-example inference times."""
    per_fold = []
    train_seconds = []
    infer_seconds = []
    for fold in range(fold_plan.k):
        fold_cfg = replace(config, seed=derive_seed(config.seed, "fold", fold))
        try:
            t0 = time.perf_counter()
            params, _ = train(fold_cfg, fold_plan.train_samples(corpus, fold), vocab, prefix_table)
            train_seconds.append(time.perf_counter() - t0)
            report, latency = _evaluate_timed(params, fold_plan.test_samples(corpus, fold), fold_cfg)
        except OpcaugError as err:
            err.fold = fold
            raise
        per_fold.append(report)
        infer_seconds.append(latency)
    mean_f1 = float(np.mean([r.f1 for r in per_fold]))
    return CvReport(k=fold_plan.k, per_fold=per_fold, mean_f1=mean_f1, config=config,
                    train_seconds=train_seconds, infer_seconds_per_example=infer_seconds)


def with_alpha(spec: AugmentationSpec, alpha: float) -> AugmentationSpec:
    """The same spec at a different strength (applied to every composite
    part, matching a single-knob sweep)."""
    if spec.method == "composite":
        return replace(spec, parts=tuple(replace(p, alpha=alpha) for p in spec.parts))
    return replace(spec, alpha=alpha)


def sweep(base_config: TrainConfig, alphas, corpus: Corpus, fold_plan: FoldPlan,
          vocab: Vocabulary, prefix_table: PrefixSimilarityTable | None = None) -> SweepReport:
    """Cross-validate a no-augmentation baseline plus one run per alpha,
    holding beta and every other hyperparameter fixed."""
    alphas = list(alphas)
    if not alphas:
        raise ConfigError("sweep needs at least one alpha")
    if base_config.augmentation is None:
        raise ConfigError("sweep needs an augmentation spec to vary")

    baseline_cfg = replace(base_config, augmentation=None)
    baseline = cross_validate(baseline_cfg, corpus, fold_plan, vocab, prefix_table)
    rows = []
    for alpha in alphas:
        cfg = replace(base_config, augmentation=with_alpha(base_config.augmentation, alpha))
        result = cross_validate(cfg, corpus, fold_plan, vocab, prefix_table)
        rows.append((float(alpha), result.mean_f1))
    max_f1 = max(f1 for _, f1 in rows)
    spec = base_config.augmentation
    return SweepReport(
        method=spec.method if spec.method != "composite" else "+".join(p.method for p in spec.parts),
        beta=spec.beta,
        baseline_f1=baseline.mean_f1,
        rows=rows,
        max_f1=max_f1,
        delta=max_f1 - baseline.mean_f1,
    )
