

class WNSFError(Exception):
    """Base class for every identification failure raised by the package."""
    def __init__(self, message="Identification failed"):
        super().__init__(message)
        self.message = message


class InsufficientDataError(WNSFError):
    """Exception raised when there are too few samples or Markov parameters for the requested orders."""
    def __init__(self, message="Insufficient data for the requested order"):
        super().__init__(message)


class SingularMatrixError(WNSFError):
    """Exception raised when a Gram, weighting or regression matrix is numerically singular."""
    def __init__(self, message="Matrix is numerically singular", smallest_eigenvalue=None, condition_number=None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue
        self.condition_number = condition_number


class NotAdmissibleError(WNSFError):
    """Exception raised when a Kronecker index does not give an admissible parameterization."""
    def __init__(self, message="Canonical structure is not admissible", test=None):
        super().__init__(message)
        self.test = test


class ConvergenceError(WNSFError):
    """Exception raised when an iterative solve or a rejection sampler gives up."""
    def __init__(self, message="Iteration did not converge", iterations=None):
        super().__init__(message)
        self.iterations = iterations


class UnstableSystemError(WNSFError):
    """Exception raised for models or loops violating the stability assumptions."""
    def __init__(self, message="System is unstable"):
        super().__init__(message)


class DegenerateSignalError(WNSFError):
    """Exception raised when a score is undefined because a reference signal is constant."""
    def __init__(self, message="Reference signal is constant"):
        super().__init__(message)


class StepError(WNSFError):
    """Exception raised by a pipeline step; tags the underlying failure with the step name."""
    def __init__(self, step, message="Step failed", diagnostic=None):
        super().__init__(f"step '{step}': {message}")
        self.step = step
        self.diagnostic = diagnostic or {}


class SerializationError(WNSFError):
    """Exception raised for errors while reading or writing models, datasets and reports."""
    def __init__(self, message="Serialization error occurred"):
        super().__init__(message)
