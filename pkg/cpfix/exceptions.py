"""Error hierarchy shared by the numerical modules and the command layer."""


class CpfixError(Exception):
    pass


class NotHermitian(CpfixError):
    pass


class NotPSD(CpfixError):
    pass


class NoConvergence(CpfixError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class NotProjection(CpfixError):
    pass


class NotUnitary(CpfixError):
    pass


class ShapeMismatch(CpfixError):
    pass


class NotCompletelyPositive(CpfixError):
    pass


class NotContractive(CpfixError):
    pass


class NotCommuting(CpfixError):
    pass


class CoInvarianceViolated(CpfixError):
    pass


class SemigroupLawViolated(CpfixError):
    pass


class Divergent(CpfixError):
    """Raised when a diagonal orbit is not Cauchy within the iteration cap."""

    def __init__(self, message, iterations=None, increment=None):
        super().__init__(message)
        self.iterations = iterations
        self.increment = increment


class NotInCStar(CpfixError):
    pass


class NotFixed(CpfixError):
    pass


class Inconsistent(CpfixError):
    pass


class UnknownFamily(CpfixError):
    pass


class ParseError(CpfixError):
    def __init__(self, message, path=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.message = message
        self.path = path


class ValidationFailed(CpfixError):
    def __init__(self, message, subject=None):
        super().__init__(f"{subject}: {message}" if subject else message)
        self.subject = subject
