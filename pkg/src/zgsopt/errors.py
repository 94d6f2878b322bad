"""Exception hierarchy shared across the package."""


class ZGSError(Exception):
    """Base class for every error raised by zgsopt."""


class ValidationError(ZGSError, ValueError):
    pass


class ConnectivityError(ZGSError):
    pass


class NumericalError(ZGSError):
    pass


class DerivativeError(ZGSError):
    pass


class ConvexityError(ZGSError):
    pass


class ParameterError(ZGSError, ValueError):
    pass


class AssumptionError(ZGSError):
    pass


class SingularHessianError(NumericalError):
    def __init__(self, message, agent=None, time=None):
        super().__init__(message)
        self.agent = agent
        self.time = time


class DivergenceError(NumericalError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
