class MpqDpgError(Exception):
    """Base exception for every domain error; carries the CLI exit code"""

    def __init__(self, exit_code: int, detail: str):
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail


class ConfigurationError(MpqDpgError):
    """Base exception for invalid model, network or run configuration"""

    def __init__(self, detail: str):
        super().__init__(exit_code=2, detail=detail)


class ModelConfigurationError(ConfigurationError):
    def __init__(self, determinant: float):
        super().__init__(f"Inertia matrix is singular (|det M| = {abs(determinant):.3e})")


class NetworkShapeError(ConfigurationError):
    def __init__(self, expected, got, what: str = "input"):
        super().__init__(f"Network {what} shape mismatch: expected {expected}, got {got}")


class EnsembleSizeError(ConfigurationError):
    def __init__(self, m_critics: int):
        super().__init__(f"MPQ targets need at least 2 critics, got {m_critics}")


class InvalidRunConfigError(ConfigurationError):
    def __init__(self, error: str):
        super().__init__(f"Invalid run configuration: {error}")


class UsageError(MpqDpgError):
    """Base exception for operations called outside their preconditions"""

    def __init__(self, detail: str):
        super().__init__(exit_code=2, detail=detail)


class EpisodeExhaustedError(UsageError):
    def __init__(self, steps_per_episode: int):
        super().__init__(f"Episode already ran its {steps_per_episode} steps; call reset first")


class EmptyMinibatchError(UsageError):
    def __init__(self):
        super().__init__("Minibatch must contain at least one transition")


class EmptyBufferError(UsageError):
    def __init__(self):
        super().__init__("Cannot sample from an empty replay buffer")


class StatsWindowError(UsageError):
    def __init__(self, window: tuple[int, int], length: int):
        super().__init__(f"Window [{window[0]}, {window[1]}] does not fit a sequence of {length} episodes")


class ArtifactError(MpqDpgError):
    """Base exception for reading or writing run artifacts"""

    def __init__(self, detail: str):
        super().__init__(exit_code=3, detail=detail)


class ArtifactIOError(ArtifactError):
    def __init__(self, path, error: str):
        super().__init__(f"I/O failure on {path}: {error}")


class CheckpointVersionError(ArtifactError):
    def __init__(self, path, reason: str):
        super().__init__(f"Checkpoint {path} rejected: {reason}")


class CsvParseError(ArtifactError):
    def __init__(self, path, row: int, reason: str):
        super().__init__(f"Malformed CSV {path} at row {row}: {reason}")


class NumericalError(MpqDpgError):
    """Base exception for non-finite values detected during simulation or training"""

    def __init__(self, detail: str):
        super().__init__(exit_code=4, detail=detail)


class CorruptedStateError(NumericalError):
    def __init__(self, what: str):
        super().__init__(f"Non-finite value in {what}")


class NonFiniteLossError(NumericalError):
    def __init__(self, which: str, value: float):
        super().__init__(f"Non-finite {which} loss detected: {value}")
