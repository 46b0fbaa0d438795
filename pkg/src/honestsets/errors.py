"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """An input violates a documented precondition."""


class InfeasibleWindow(InvalidArgument):
    """No variance-estimation window fits inside the available coordinates."""


class InfeasibleCutoff(InvalidArgument):
    """The bias/variance cut-off cannot be realized in a finite model."""


class ConfigError(InvalidArgument):
    """Malformed experiment configuration."""
