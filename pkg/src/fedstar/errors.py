"""Exception types shared across the package."""


class FedstarError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(FedstarError, ValueError):
    """An argument or configuration value is out of its legal range."""


class ShapeError(FedstarError, ValueError):
    """Array dimensions do not line up."""


class SpecError(FedstarError, ValueError):
    """An experiment spec file failed to parse or validate."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}:"
            loc += f"{line}: " if line is not None else " "
        super().__init__(f"{loc}{message}")
