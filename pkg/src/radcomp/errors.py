"""Exception types raised by radcomp."""


class RadcompError(Exception):
    """Base class for all library errors."""


class DomainError(RadcompError, ValueError):
    """An argument lies outside the domain of the operation."""


class CutLocusError(DomainError):
    """A point sits on (or too close to) the cut locus of the pole."""


class ConvergenceError(RadcompError, RuntimeError):
    """An iterative solve did not reach its tolerance."""


class DivergentMomentError(RadcompError, ArithmeticError):
    """The requested moment of an untruncated law is infinite."""


class EnvelopeError(RadcompError, RuntimeError):
    """A rejection sampler met a ratio above its declared envelope."""


class StepSizeUnderflow(RadcompError, RuntimeError):
    """The adaptive ODE step size fell below the admissible minimum."""
