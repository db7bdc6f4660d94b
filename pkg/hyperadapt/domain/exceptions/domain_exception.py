from .hyperadapt_exception import HyperAdaptException

DEFAULT_MESSAGE = "value outside the domain of the operation"


class DomainException(HyperAdaptException):
    """
    Raised when an input lies outside the domain of a geometric operation,
    e.g. a point on or outside the Poincare ball or a non-finite value
    """

    def __init__(self, message=DEFAULT_MESSAGE):
        super().__init__(message)
