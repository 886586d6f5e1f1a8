"""Run configuration: one JSON document drives every command.

Structured as nested sections (train, augmentation, cbow, synth). Flag
overrides applied by the CLI always win. Unknown keys are rejected so a
typo cannot silently fall back to a default.
"""

import json
from dataclasses import dataclass

from .augment import AugmentationSpec, spec_from_dict, spec_to_dict
from .cbow import CbowConfig
from .corpus import SynthConfig
from .errors import ConfigError
from .net import ModelShape
from .trainer import TrainConfig


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out_dir: str = "out"
    corpus: str | None = None
    vocab: str | None = None
    corpus_format: str = "mnemonic"
    k: int = 5
    emb_dim: int = 8
    num_filters: int = 64
    filter_len: int = 8
    epochs: int = 120
    batch_size: int = 48
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    max_seq_len: int = 128_000
    sim_table_k: int = 10
    augmentation: AugmentationSpec | None = None
    cbow: CbowConfig = CbowConfig()
    synth: SynthConfig = SynthConfig()
    charts: bool = True

    def train_config(self, vocab_size: int) -> TrainConfig:
        shape = ModelShape(vocab_size=vocab_size, emb_dim=self.emb_dim,
                           num_filters=self.num_filters, filter_len=self.filter_len)
        return TrainConfig(
            shape=shape, epochs=self.epochs, batch_size=self.batch_size,
            learning_rate=self.learning_rate, adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2, adam_eps=self.adam_eps,
            max_seq_len=self.max_seq_len, seed=self.seed,
            augmentation=self.augmentation, sim_table_k=self.sim_table_k,
            cbow=self.cbow,
        )


_TOP_KEYS = {"seed", "out_dir", "corpus", "vocab", "corpus_format", "k",
             "train", "augmentation", "cbow", "synth", "report"}
_TRAIN_KEYS = {"epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2",
               "adam_eps", "max_seq_len", "sim_table_k", "shape"}
_SHAPE_KEYS = {"emb_dim", "num_filters", "filter_len"}
_CBOW_KEYS = {"dim", "window", "epochs", "negatives", "learning_rate", "subsample"}
_SYNTH_KEYS = {"vocab_size", "seq_len", "n_malware", "n_benign", "motifs", "plant_rate"}
_REPORT_KEYS = {"charts"}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(data, _TOP_KEYS, "config")
    train = data.get("train", {})
    _check_keys(train, _TRAIN_KEYS, "train")
    shape = train.get("shape", {})
    _check_keys(shape, _SHAPE_KEYS, "train.shape")
    cbow = data.get("cbow", {})
    _check_keys(cbow, _CBOW_KEYS, "cbow")
    synth = data.get("synth", {})
    _check_keys(synth, _SYNTH_KEYS, "synth")
    rep = data.get("report", {})
    _check_keys(rep, _REPORT_KEYS, "report")

    aug = data.get("augmentation")
    spec = spec_from_dict(aug) if aug is not None else None
    synth_cfg = SynthConfig(
        vocab_size=int(synth.get("vocab_size", 32)),
        seq_len=int(synth.get("seq_len", 512)),
        n_malware=int(synth.get("n_malware", 250)),
        n_benign=int(synth.get("n_benign", 250)),
        motifs=tuple(tuple(int(x) for x in m) for m in synth.get("motifs", SynthConfig().motifs)),
        plant_rate=float(synth.get("plant_rate", 0.9)),
    )
    cbow_cfg = CbowConfig(
        dim=int(cbow.get("dim", 8)),
        window=int(cbow.get("window", 5)),
        epochs=int(cbow.get("epochs", 5)),
        negatives=int(cbow.get("negatives", 5)),
        learning_rate=float(cbow.get("learning_rate", 0.025)),
        seed=int(data.get("seed", 0)),
        subsample=float(cbow.get("subsample", 0.0)),
    )
    return RunConfig(
        seed=int(data.get("seed", 0)),
        out_dir=str(data.get("out_dir", "out")),
        corpus=data.get("corpus"),
        vocab=data.get("vocab"),
        corpus_format=str(data.get("corpus_format", "mnemonic")),
        k=int(data.get("k", 5)),
        emb_dim=int(shape.get("emb_dim", 8)),
        num_filters=int(shape.get("num_filters", 64)),
        filter_len=int(shape.get("filter_len", 8)),
        epochs=int(train.get("epochs", 120)),
        batch_size=int(train.get("batch_size", 48)),
        learning_rate=float(train.get("learning_rate", 1e-3)),
        adam_beta1=float(train.get("adam_beta1", 0.9)),
        adam_beta2=float(train.get("adam_beta2", 0.999)),
        adam_eps=float(train.get("adam_eps", 1e-8)),
        max_seq_len=int(train.get("max_seq_len", 128_000)),
        sim_table_k=int(train.get("sim_table_k", 10)),
        augmentation=spec,
        cbow=cbow_cfg,
        synth=synth_cfg,
        charts=bool(rep.get("charts", True)),
    )


def config_to_dict(cfg: RunConfig) -> dict:
    return {
        "seed": cfg.seed,
        "out_dir": cfg.out_dir,
        "corpus": cfg.corpus,
        "vocab": cfg.vocab,
        "corpus_format": cfg.corpus_format,
        "k": cfg.k,
        "train": {
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "learning_rate": cfg.learning_rate,
            "adam_beta1": cfg.adam_beta1,
            "adam_beta2": cfg.adam_beta2,
            "adam_eps": cfg.adam_eps,
            "max_seq_len": cfg.max_seq_len,
            "sim_table_k": cfg.sim_table_k,
            "shape": {
                "emb_dim": cfg.emb_dim,
                "num_filters": cfg.num_filters,
                "filter_len": cfg.filter_len,
            },
        },
        "augmentation": spec_to_dict(cfg.augmentation) if cfg.augmentation else None,
        "cbow": {
            "dim": cfg.cbow.dim,
            "window": cfg.cbow.window,
            "epochs": cfg.cbow.epochs,
            "negatives": cfg.cbow.negatives,
            "learning_rate": cfg.cbow.learning_rate,
            "subsample": cfg.cbow.subsample,
        },
        "synth": {
            "vocab_size": cfg.synth.vocab_size,
            "seq_len": cfg.synth.seq_len,
            "n_malware": cfg.synth.n_malware,
            "n_benign": cfg.synth.n_benign,
            "motifs": [list(m) for m in cfg.synth.motifs],
            "plant_rate": cfg.synth.plant_rate,
        },
        "report": {"charts": cfg.charts},
    }


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON in {path}: {err}") from err
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    return config_from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"
