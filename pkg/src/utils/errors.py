from typing import Optional


class AcousticSensingError(Exception):
    """Base class for every error raised by the toolkit"""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# signal_gen
class SignalError(AcousticSensingError):
    pass


class InvalidSpec(SignalError):
    def __init__(self, field: str, message: str):
        super().__init__(f"invalid sound spec field '{field}': {message}")
        self.field = field


class InvalidBand(SignalError):
    pass


class InvalidFraction(SignalError):
    pass


class FullScaleExceeded(SignalError):
    pass


# virtual_actuator
class SimulationError(AcousticSensingError):
    pass


class RateMismatch(SimulationError):
    pass


class UnstableFilter(SimulationError):
    pass


class InvalidState(SimulationError):
    pass


class InvalidExternal(SimulationError):
    pass


# features
class FeatureError(AcousticSensingError):
    pass


class MixedSampleRates(FeatureError):
    pass


class TargetTooLong(FeatureError):
    pass


class TooShort(FeatureError):
    pass


# models
class ModelError(AcousticSensingError):
    pass


class EmptyData(ModelError):
    pass


class KTooLarge(ModelError):
    pass


class WrongTargetType(ModelError):
    pass


class DimMismatch(ModelError):
    pass


class SingleClass(ModelError):
    pass


class TooFewPerClass(ModelError):
    pass


class NotConverged(UserWarning):
    """Emitted (not raised) when the SVC stops at max_epochs"""


# eval
class EvaluationError(AcousticSensingError):
    pass


class MissingTarget(EvaluationError):
    pass


class ClassTooSmall(EvaluationError):
    pass


# dataset_io
class DatasetError(AcousticSensingError):
    pass


class IoFailure(DatasetError):
    pass


class UnsupportedRate(DatasetError):
    pass


class MissingAudio(DatasetError):
    def __init__(self, path: str, message: Optional[str] = None):
        super().__init__(message or f"missing audio file: {path}")
        self.path = path


class SchemaMismatch(DatasetError):
    pass


class CorruptAudio(DatasetError):
    def __init__(self, path: str, message: Optional[str] = None):
        super().__init__(message or f"corrupt audio file: {path}")
        self.path = path


# cli
class UsageError(AcousticSensingError):
    pass
