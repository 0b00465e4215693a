"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConfigurationError(ValueError):
    """A model or experiment configuration is invalid.

    ``path`` is a JSON-path-like locator (``.simulate.T``) when the error comes
    from a parsed configuration document.
    """

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
        self.message = message


class ContractError(RuntimeError):
    """An operation was called in a state its contract excludes."""


class SimulationAbort(RuntimeError):
    """A run stopped early; the partial result is attached as ``partial``."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
