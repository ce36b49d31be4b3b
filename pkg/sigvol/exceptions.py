class SigvolError(Exception):
    """Base class for errors raised by the library."""


class AlgebraError(SigvolError, ValueError):
    pass


class InsufficientDepthError(AlgebraError):
    def __init__(self, needed: int, available: int) -> None:
        super().__init__(
            f"insufficient signature depth: need level {needed}, have {available}"
        )
        self.needed = needed
        self.available = available


class SignatureError(SigvolError, ValueError):
    pass


class ModelError(SigvolError, ValueError):
    pass


class HypothesisViolated(SigvolError):
    pass


class FitError(SigvolError):
    pass


class NumericalFailure(SigvolError):
    pass


class ConfigError(SigvolError, ValueError):
    """An experiment configuration failed validation."""

    def __init__(self, messages: list[str]) -> None:
        super().__init__("; ".join(messages))
        self.messages = messages
