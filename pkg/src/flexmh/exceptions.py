class ConfigError(ValueError):
    """Instance description does not validate."""


class AssumptionError(ValueError):
    """A solver precondition on the environment does not hold."""


class PropertyViolation(AssertionError):
    """A structural property that must hold by construction failed numerically."""


