"""Exception hierarchy for zenolab.

Every error raised by the library derives from :class:`ZenoLabError`, and
argument problems additionally derive from :class:`ValueError` so callers
can catch them generically.
"""


class ZenoLabError(Exception):
    pass


# linear algebra
class NotHermitianError(ZenoLabError, ValueError):
    pass


class NoConvergenceError(ZenoLabError, ArithmeticError):
    pass


class DomainError(ZenoLabError, ValueError):
    pass


class NegativeSpectrumError(ZenoLabError, ValueError):
    pass


class OverflowMatrixError(ZenoLabError, OverflowError):
    pass


class NotIdempotentError(ZenoLabError, ValueError):
    pass


class NotSelfAdjointError(ZenoLabError, ValueError):
    pass


# operator builders
class BadGridError(ZenoLabError, ValueError):
    pass


class EmptyMaskError(ZenoLabError, ValueError):
    pass


class NegativeValueError(ZenoLabError, ValueError):
    pass


class DependentVectorsError(ZenoLabError, ValueError):
    pass


class BadParamsError(ZenoLabError, ValueError):
    pass


# zeno core
class BadZetaError(ZenoLabError, ValueError):
    pass


class ZeroZetaError(ZenoLabError, ValueError):
    pass


class ZeroArgumentError(ZenoLabError, ValueError):
    pass


class BadNError(ZenoLabError, ValueError):
    pass


class SamplingOutOfRangeError(ZenoLabError, ValueError):
    pass


class SingularSystemError(ZenoLabError, ArithmeticError):
    pass


class NotContractionError(ZenoLabError, ValueError):
    pass


# diagnostics
class GridMismatchError(ZenoLabError, ValueError):
    pass


class SupportMismatchError(ZenoLabError, ValueError):
    pass


# counterexample
class BadTError(ZenoLabError, ValueError):
    pass


class PhaseNotReachedError(ZenoLabError, ValueError):
    pass


# cli
class ConfigInvalidError(ZenoLabError, ValueError):
    pass


class NumericalFailureError(ZenoLabError, ArithmeticError):
    pass


class MalformedCSVError(ZenoLabError, ValueError):
    pass
