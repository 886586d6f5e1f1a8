"""opcaug: opcode-sequence malware classification with online data
augmentation, built on numpy.

The public surface mirrors the module layout:

- vocab: mnemonic/index mapping, blank token, prefix similarity groups
- corpus: corpora, folds, truncation, synthetic generation
- augment: the six augmentation methods and their composition
- cbow: CBOW word2vec training and Euclidean similarity tables
- net: the from-scratch embedding/conv/max-pool/linear classifier
- trainer: epochs, cross-validation, strength sweeps
- cli: the `opcaug` command
"""

from .augment import (
    AugmentationSpec,
    AugmentContext,
    SimilarityTable,
    apply_augmentation,
    compose,
    correlated_dropout,
    embedding_replacement,
    gate,
    input_dropout,
    random_replacement,
    select_positions,
    similar_instructions,
)
from .cbow import CbowConfig, EmbeddingMatrix, similarity_table, train_cbow
from .corpus import (
    Corpus,
    FoldPlan,
    Sample,
    SynthConfig,
    generate_synthetic,
    load_corpus,
    make_folds,
    truncate,
)
from .net import (
    AdamState,
    ModelParams,
    ModelShape,
    adam_step,
    backward,
    bce_loss,
    count_parameters,
    forward,
    init_params,
    snapshot_embedding,
)
from .trainer import (
    CvReport,
    EvalReport,
    SweepReport,
    TrainConfig,
    cross_validate,
    evaluate,
    sweep,
    train,
)
from .vocab import (
    PrefixSimilarityTable,
    Vocabulary,
    build_prefix_table,
    build_vocabulary,
    decode,
    default_dalvik_vocabulary,
    encode,
    load_vocabulary,
)

__version__ = "0.1.0"
