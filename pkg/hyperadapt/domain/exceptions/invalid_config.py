from .hyperadapt_exception import HyperAdaptException

DEFAULT_MESSAGE = "invalid configuration"


class InvalidConfigException(HyperAdaptException):
    """
    Raised when a configuration or structural parameter violates its invariants
    """

    def __init__(self, message=DEFAULT_MESSAGE):
        super().__init__(message)
