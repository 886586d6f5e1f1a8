"""Exception hierarchy shared by every module.

Each error carries a ``category`` used by the command-line layer to pick
an exit code: "config" -> 1, "data" -> 2, "divergence" -> 3.
"""


class OpcaugError(Exception):
    category = "data"


class ConfigError(OpcaugError):
    category = "config"


class DuplicateMnemonic(OpcaugError):
    def __init__(self, mnemonic):
        super().__init__(f"duplicate mnemonic: {mnemonic!r}")
        self.mnemonic = mnemonic


class ReservedName(OpcaugError):
    def __init__(self, mnemonic):
        super().__init__(f"mnemonic {mnemonic!r} is reserved")
        self.mnemonic = mnemonic


class UnknownOpcode(OpcaugError):
    def __init__(self, token, position, source=None, line=None):
        where = f" ({source}:{line})" if source is not None else ""
        super().__init__(f"unknown opcode {token!r} at position {position}{where}")
        self.token = token
        self.position = position
        self.source = source
        self.line = line


class InvalidPrefix(OpcaugError):
    category = "config"


class MalformedLabel(OpcaugError):
    def __init__(self, text, source=None, line=None):
        where = f" ({source}:{line})" if source is not None else ""
        super().__init__(f"label must be 0 or 1, got {text!r}{where}")
        self.text = text


class EmptyCorpus(OpcaugError):
    pass


class DuplicateSampleId(OpcaugError):
    def __init__(self, sample_id):
        super().__init__(f"duplicate sample id: {sample_id!r}")
        self.sample_id = sample_id


class InsufficientClassSamples(OpcaugError):
    def __init__(self, label, count, k):
        super().__init__(f"class {label} has {count} samples, need at least {k}")
        self.label = label
        self.count = count
        self.k = k


class MotifTooLong(ConfigError):
    pass


class EmptyMotifSignal(ConfigError):
    pass


class OutOfVocabulary(OpcaugError):
    def __init__(self, index, vocab_size):
        super().__init__(f"opcode index {index} out of range for vocabulary of size {vocab_size}")
        self.index = index
        self.vocab_size = vocab_size


class NonFiniteEmbedding(OpcaugError):
    pass


class EmptyTrainingSignal(OpcaugError):
    pass


class DegenerateLabels(OpcaugError):
    pass


class DivergedTraining(OpcaugError):
    category = "divergence"

    def __init__(self, epoch, detail=""):
        msg = f"training diverged at epoch {epoch}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.epoch = epoch


class CacheMismatch(OpcaugError):
    pass


EXIT_CODES = {"config": 1, "data": 2, "divergence": 3}


def exit_code(err: OpcaugError) -> int:
    return EXIT_CODES.get(getattr(err, "category", "data"), 2)
