"""Exception types shared across the package."""


class SceneryflowError(Exception):
    """Base class for all library errors."""


class DomainError(SceneryflowError):
    """Input outside an operation's stated domain."""


class ResolutionError(SceneryflowError):
    """A grid operation would under- or overflow the admissible cell width."""


class NormalizationError(SceneryflowError):
    """A measure cannot be normalized (zero mass on the target window)."""


class OutsideSupportError(SceneryflowError):
    """A point query hit a zero-mass ball."""


class InsufficientDigitsError(SceneryflowError):
    """A sampled point does not carry enough digits for the requested zoom."""


class LowSignalError(SceneryflowError):
    """A spectral average is too weak to define a phase."""


class ConfigError(SceneryflowError):
    """An experiment configuration failed validation."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
