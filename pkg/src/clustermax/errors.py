"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid model or experiment configuration.

    ``line`` is the 1-based line in the config file when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(ValueError):
    """Argument outside the domain of a function."""


class CappedRealizationError(RuntimeError):
    """A stopping time or branching cascade exceeded its iteration cap.

    The partial state reached before the cap is kept on ``partial`` so the
    caller can report how far the realization got.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial or {}
