from .hyperadapt_exception import HyperAdaptException

DEFAULT_MESSAGE = "invalid tensor file"


class InvalidTensorFileException(HyperAdaptException):
    """
    Raised when a tensor file has a bad header or a truncated payload
    """

    def __init__(self, message=DEFAULT_MESSAGE):
        super().__init__(message)
