"""Exception types shared across the package."""


class FormatError(ValueError):
    """A file does not conform to its documented on-disk format."""


class NoMisalignmentError(ValueError):
    """All translation-pair difference vectors are numerically zero."""


class ConvergenceError(RuntimeError):
    """An iterative kernel failed to converge within its sweep budget."""


class UnscorableError(ValueError):
    """A sentence pair cannot be scored (e.g. no in-vocabulary token)."""
