"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-contract input (dimension mismatch, bad parameter)."""


class ClearanceError(InputError):
    """Evaluation point too close to the domain boundary for the step schedule."""


class PremiseError(RuntimeError):
    """A check's stated premise failed on the sampled data."""


class ConfigError(ValueError):
    """Unusable lab configuration (unknown scenario, suite, or key)."""
