"""Exception hierarchy shared by all modules."""


class KatoSobolevError(Exception):
    """Base class for every error raised by the toolkit."""


class GridError(KatoSobolevError, ValueError):
    """Invalid grid construction or mismatched grids/domains."""


class FieldFormatError(KatoSobolevError, ValueError):
    """A KSF1 field file could not be decoded."""


class PreconditionError(KatoSobolevError, ValueError):
    """An operation was called outside its domain of validity."""


class ConvergenceError(KatoSobolevError, RuntimeError):
    """A numerical procedure did not reach its certified accuracy."""


class IndeterminateError(KatoSobolevError, RuntimeError):
    """The answer cannot be decided at the current grid resolution."""
