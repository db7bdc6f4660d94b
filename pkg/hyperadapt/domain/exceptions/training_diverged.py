from .hyperadapt_exception import HyperAdaptException

DEFAULT_MESSAGE = "training diverged"


class TrainingDivergedException(HyperAdaptException):
    """
    Raised when the training loss stops being finite. `partial_result` holds
    the loss curve and scaling operator of the last finite step
    """

    def __init__(self, message=DEFAULT_MESSAGE, partial_result=None):
        self.partial_result = partial_result
        super().__init__(message)
