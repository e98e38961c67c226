"""Exception hierarchy.

Every exception carries a short ``category`` string; the CLI prints it as the
machine-readable part of its one-line error message.
"""


class RecoveryError(Exception):
    category = "Error"


class MissingFile(RecoveryError):
    category = "MissingFile"


class MalformedDataset(RecoveryError):
    category = "MalformedDataset"


class NoNodeLabels(RecoveryError):
    category = "NoNodeLabels"


class EmptyPartition(RecoveryError):
    category = "EmptyPartition"


class EmptyInput(RecoveryError):
    category = "EmptyInput"


class IndexOutOfRange(RecoveryError, IndexError):
    category = "IndexOutOfRange"


class ShapeMismatch(RecoveryError, ValueError):
    category = "ShapeMismatch"


class UnsupportedPrimitive(RecoveryError):
    category = "UnsupportedPrimitive"


class DivergedTraining(RecoveryError):
    category = "DivergedTraining"


class EmptyMatrix(RecoveryError):
    category = "EmptyMatrix"


class DegenerateCloud(RecoveryError):
    category = "DegenerateCloud"


class NoDonorAvailable(RecoveryError):
    category = "NoDonorAvailable"


class EmptyNeighborSet(RecoveryError):
    category = "EmptyNeighborSet"


class ZeroReference(RecoveryError):
    category = "ZeroReference"


class EmptyTestSet(RecoveryError):
    category = "EmptyTestSet"


class UnknownKey(RecoveryError):
    category = "UnknownKey"


class InvalidValue(RecoveryError, ValueError):
    category = "InvalidValue"


class UnreadableFile(RecoveryError):
    category = "UnreadableFile"


class IoFailure(RecoveryError):
    category = "IoFailure"
