"""Exception types shared across the package."""


class SteersimError(Exception):
    """Base class for all steersim errors."""


class InvalidStateError(SteersimError, ValueError):
    """A density matrix or Bloch vector violates a state invariant."""


class InvalidEffectError(SteersimError, ValueError):
    """A measurement operator is not a valid effect (0 <= E <= I)."""


class InvalidParameterError(SteersimError, ValueError):
    """A parameter or argument is outside its documented range."""


class InsufficientDataError(SteersimError, ValueError):
    """A tally or run list does not contain enough counts to evaluate."""


class ConfigurationError(SteersimError, ValueError):
    """A timing or session configuration is internally inconsistent."""


class MalformedInputError(SteersimError, ValueError):
    """An event log, trial log, CSV table or config file cannot be parsed."""


class InvalidProbesError(SteersimError, ValueError):
    """A tomography probe set is not informationally complete."""


class UndefinedDirectionError(SteersimError, ValueError):
    """An effect has no principal axis (degenerate eigenvalues)."""


class ReconstructionError(SteersimError, RuntimeError):
    """Tomography reconstruction failed or too many replicas failed."""
