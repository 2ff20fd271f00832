"""Exception types raised across the package."""


class ParameterError(ValueError):
    """A parameter lies outside its admissible range."""


class PreconditionError(ValueError):
    """An input field violates an operation's precondition."""


class ResolutionError(ValueError):
    """The grid cannot resolve the requested construction."""


class CoverageError(ValueError):
    """A spectrum is not covered by the supplied frequency covering."""


class ConstructionError(RuntimeError):
    """A covering or partition of unity could not be built."""


class CFLError(RuntimeError):
    """Time step exceeds the CFL bound."""


class DivergenceError(FloatingPointError):
    """Non-finite values appeared during time integration."""


class DomainExitError(RuntimeError):
    """A trajectory left the safe interior of the periodic domain."""


class ConfigError(ValueError):
    """Experiment configuration violates a named predicate."""


class ResourceError(RuntimeError):
    """Requested grid exceeds the declared memory budget."""
