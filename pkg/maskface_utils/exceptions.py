"""Custom exceptions for maskface-utils"""

from typing import List, Optional, Sequence


class MaskFaceError(Exception):
    """Base exception for all maskface-utils errors"""
    pass


class ValidationError(MaskFaceError):
    """Invalid input, configuration or file contents (CLI exit code 1)"""
    pass


class ConfigurationError(ValidationError):
    """Error with configuration"""
    pass


class ParameterError(ValidationError):
    """Operation parameter outside its valid range"""
    pass


class DimensionError(ValidationError):
    """Tensor or image shapes do not satisfy an operation's contract"""
    pass


class ManifestError(ValidationError):
    """Error reading or validating a dataset manifest"""
    pass


class ManifestParseError(ManifestError):
    """Malformed manifest row"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class ManifestValidationError(ManifestError):
    """Manifest rows parse but violate a record invariant"""
    pass


class SetError(ValidationError):
    """Embedding sets or pair lists do not cover the same keys"""

    def __init__(self, message: str, missing: Sequence[str] = ()):
        self.missing: List[str] = sorted(missing)
        if self.missing:
            shown = ", ".join(self.missing[:10])
            more = f" (+{len(self.missing) - 10} more)" if len(self.missing) > 10 else ""
            message = f"{message}: {shown}{more}"
        super().__init__(message)


class LabelIndexError(ValidationError, IndexError):
    """Class label outside [0, class_count)"""
    pass


class CheckpointError(ValidationError):
    """Checkpoint contents do not match the model they are loaded into"""

    def __init__(self, message: str, tensor: Optional[str] = None):
        super().__init__(f"{tensor}: {message}" if tensor else message)
        self.tensor = tensor


class FileFormatError(ValidationError):
    """Error with file format"""
    pass


class OutputExistsError(ValidationError):
    """Refusing to write into a non-empty output location"""
    pass


class GraphError(MaskFaceError):
    """Backward pass requested through a tensor the tape did not record"""
    pass


class StateError(MaskFaceError):
    """Stateful component used before initialization or with drifted shapes"""
    pass


class GeometryError(MaskFaceError):
    """Degenerate landmark configuration or non-invertible transform"""
    pass


class MetricError(MaskFaceError):
    """Metric undefined for the given scores or sets"""
    pass


class NumericalError(MaskFaceError):
    """NaN or Inf produced by a forward or backward computation"""
    pass


class TrainingDivergedError(NumericalError):
    """Training loss became non-finite"""

    def __init__(self, step: int, lr: float, loss_history: Sequence[float], reason: str = ""):
        recent = ", ".join(f"{v:.6g}" for v in list(loss_history)[-10:])
        detail = f" ({reason})" if reason else ""
        super().__init__(
            f"non-finite loss at step {step} (lr={lr:.6g}){detail}; recent losses: [{recent}]"
        )
        self.step = step
        self.lr = lr
        self.loss_history = list(loss_history)
