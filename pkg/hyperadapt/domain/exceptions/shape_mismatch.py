from .hyperadapt_exception import HyperAdaptException

DEFAULT_MESSAGE = "operand shapes do not agree"


class ShapeMismatchException(HyperAdaptException):
    """
    Raised when operands disagree in dimension or curvature
    """

    def __init__(self, message=DEFAULT_MESSAGE):
        super().__init__(message)
