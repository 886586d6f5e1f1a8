from dataclasses import replace

import numpy as np
import pytest

from opcaug.augment import AugmentationSpec
from opcaug.corpus import SynthConfig, generate_synthetic, make_folds
from opcaug.errors import ConfigError, DegenerateLabels, DivergedTraining
from opcaug.net import ModelShape
from opcaug.trainer import (
    TrainConfig,
    cross_validate,
    evaluate,
    report_from_counts,
    sweep,
    train,
    with_alpha,
)
from opcaug.vocab import build_prefix_table, synthetic_vocabulary

VOCAB_SIZE = 16


@pytest.fixture(scope="module")
def tiny_corpus():
    cfg = SynthConfig(vocab_size=VOCAB_SIZE, seq_len=48, n_malware=20, n_benign=20,
                      motifs=((2, 9, 4, 7),), plant_rate=1.0)
    return generate_synthetic(cfg, seed=5)


@pytest.fixture(scope="module")
def vocab():
    return synthetic_vocabulary(VOCAB_SIZE - 1)


def tiny_config(**overrides):
    base = dict(
        shape=ModelShape(vocab_size=VOCAB_SIZE, emb_dim=4, num_filters=6, filter_len=4),
        epochs=2, batch_size=8, seed=3, max_seq_len=48,
    )
    base.update(overrides)
    return TrainConfig(**base)


class TestTrain:
    def test_adam_step_count(self, tiny_corpus, vocab):
        cfg = tiny_config(epochs=1)
        _, history = train(cfg, tiny_corpus.samples, vocab)
        assert history.adam_steps == int(np.ceil(len(tiny_corpus) / cfg.batch_size))

    def test_single_class_rejected(self, tiny_corpus, vocab):
        only_malware = [s for s in tiny_corpus.samples if s.label == 1]
        with pytest.raises(DegenerateLabels):
            train(tiny_config(), only_malware, vocab)

    def test_empty_train_set_rejected(self, vocab):
        with pytest.raises(ConfigError):
            train(tiny_config(), [], vocab)

    def test_deterministic_for_fixed_seed(self, tiny_corpus, vocab):
        cfg = tiny_config(augmentation=AugmentationSpec(method="input_dropout", alpha=0.2, beta=0.5))
        params_a, hist_a = train(cfg, tiny_corpus.samples, vocab)
        params_b, hist_b = train(cfg, tiny_corpus.samples, vocab)
        np.testing.assert_array_equal(params_a.embedding, params_b.embedding)
        np.testing.assert_array_equal(params_a.conv_w, params_b.conv_w)
        assert hist_a.epoch_losses == hist_b.epoch_losses

    def test_self_embedding_table_refreshed_each_epoch(self, tiny_corpus, vocab):
        spec = AugmentationSpec(method="self_embedding", alpha=0.2, beta=1.0)
        cfg = tiny_config(epochs=4, augmentation=spec)
        _, history = train(cfg, tiny_corpus.samples, vocab)
        assert len(history.self_tables) == 4
        assert history.self_tables[0] != history.self_tables[-1]

    def test_epoch_one_self_table_is_chance_level(self, vocab):
        """A freshly initialized embedding carries no structure, so its
        top-k lists overlap prefix groups no better than random draws."""
        from opcaug.cbow import similarity_table
        from opcaug.net import init_params, snapshot_embedding
        from opcaug.vocab import default_dalvik_vocabulary

        dalvik = default_dalvik_vocabulary()
        prefix = build_prefix_table(dalvik)
        shape = ModelShape(vocab_size=dalvik.size, emb_dim=8, num_filters=4, filter_len=4)
        params = init_params(shape, seed=0)
        table = similarity_table(snapshot_embedding(params), k=10)

        candidates = dalvik.size - 2  # excluding self and blank
        observed = expected = variance = 0.0
        for idx, group in prefix.groups.items():
            if not group:
                continue
            top = set(table.neighbours[idx])
            observed += len(top & set(group))
            # hypergeometric draw of 10 from the candidate pool
            m = len(group)
            expected += 10 * m / candidates
            variance += 10 * (m / candidates) * (1 - m / candidates) * (candidates - 10) / (candidates - 1)
        assert abs(observed - expected) < 4 * np.sqrt(variance)

    def test_language_model_table_built_once_before_training(self, tiny_corpus, vocab):
        spec = AugmentationSpec(method="language_model", alpha=0.2, beta=1.0)
        cfg = tiny_config(epochs=2, augmentation=spec)
        params, history = train(cfg, tiny_corpus.samples, vocab)
        assert history.augment_counts.get("language_model", 0) > 0
        assert history.self_tables == []

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_loss_raises_with_epoch(self, tiny_corpus, vocab):
        cfg = tiny_config(epochs=8, learning_rate=1e200)
        with pytest.raises(DivergedTraining) as exc:
            train(cfg, tiny_corpus.samples, vocab)
        assert exc.value.epoch >= 0

    def test_composite_smoke_and_counts(self, tiny_corpus, vocab):
        spec = AugmentationSpec(
            method="composite",
            parts=(
                AugmentationSpec(method="self_embedding", alpha=0.05, beta=1.0),
                AugmentationSpec(method="input_dropout", alpha=0.05, beta=1.0),
            ),
        )
        cfg = tiny_config(epochs=2, augmentation=spec)
        _, history = train(cfg, tiny_corpus.samples, vocab, build_prefix_table(vocab))
        assert history.augment_counts["self_embedding"] == 2 * len(tiny_corpus)
        assert history.augment_counts["input_dropout"] == 2 * len(tiny_corpus)


class TestEvaluate:
    def test_confusion_arithmetic(self):
        report = report_from_counts(tp=8, fp=2, tn=8, fn=2)
        assert report.precision == pytest.approx(0.8)
        assert report.recall == pytest.approx(0.8)
        assert report.f1 == pytest.approx(0.8)

    def test_zero_denominator_convention(self):
        report = report_from_counts(tp=0, fp=0, tn=10, fn=5)
        assert report.f1 == 0.0
        assert report.precision == 0.0

    def test_perfect_predictions(self):
        report = report_from_counts(tp=10, fp=0, tn=10, fn=0)
        assert report.f1 == 1.0

    def test_augmentation_never_touches_evaluation(self, tiny_corpus, vocab):
        cfg_plain = tiny_config()
        params, _ = train(cfg_plain, tiny_corpus.samples, vocab)
        cfg_aug = replace(cfg_plain, augmentation=AugmentationSpec(
            method="input_dropout", alpha=0.9, beta=1.0))
        a = evaluate(params, tiny_corpus.samples, cfg_plain)
        b = evaluate(params, tiny_corpus.samples, cfg_aug)
        assert a == b


class TestCrossValidate:
    def test_structure_and_exhaustiveness(self, tiny_corpus, vocab):
        folds = make_folds(tiny_corpus, 4, seed=2)
        cfg = tiny_config(epochs=1)
        report = cross_validate(cfg, tiny_corpus, folds, vocab)
        assert report.k == 4
        assert len(report.per_fold) == 4
        total = sum(r.tp + r.fp + r.tn + r.fn for r in report.per_fold)
        assert total == len(tiny_corpus)
        assert len(report.train_seconds) == 4
        assert len(report.infer_seconds_per_example) == 4

    def test_mean_f1_arithmetic(self):
        reports = [report_from_counts(tp=1, fp=0, tn=1, fn=0)] * 4 + [
            report_from_counts(tp=1, fp=2, tn=0, fn=0)
        ]
        mean = float(np.mean([r.f1 for r in reports]))
        assert mean == pytest.approx(0.9)

    def test_bit_identical_reruns(self, tiny_corpus, vocab):
        folds = make_folds(tiny_corpus, 3, seed=7)
        cfg = tiny_config(epochs=1, augmentation=AugmentationSpec(
            method="input_dropout", alpha=0.1, beta=0.5))
        a = cross_validate(cfg, tiny_corpus, folds, vocab)
        b = cross_validate(cfg, tiny_corpus, folds, vocab)
        assert a.mean_f1 == b.mean_f1
        assert a.per_fold == b.per_fold


class TestSweep:
    def test_row_structure_and_delta(self, tiny_corpus, vocab):
        folds = make_folds(tiny_corpus, 3, seed=1)
        cfg = tiny_config(epochs=1, augmentation=AugmentationSpec(
            method="input_dropout", alpha=0.2, beta=0.5))
        report = sweep(cfg, [0.05, 0.2], tiny_corpus, folds, vocab)
        assert [a for a, _ in report.rows] == [0.05, 0.2]
        assert report.max_f1 == max(f1 for _, f1 in report.rows)
        assert report.delta == pytest.approx(report.max_f1 - report.baseline_f1)

    def test_empty_alphas_rejected(self, tiny_corpus, vocab):
        folds = make_folds(tiny_corpus, 3, seed=1)
        cfg = tiny_config(augmentation=AugmentationSpec(method="input_dropout"))
        with pytest.raises(ConfigError):
            sweep(cfg, [], tiny_corpus, folds, vocab)

    def test_with_alpha_rewrites_composites(self):
        spec = AugmentationSpec(
            method="composite",
            parts=(
                AugmentationSpec(method="input_dropout", alpha=0.1),
                AugmentationSpec(method="random_replacement", alpha=0.3),
            ),
        )
        out = with_alpha(spec, 0.5)
        assert all(p.alpha == 0.5 for p in out.parts)
