"""Exception hierarchy shared by all spinstep modules."""


class SpinStepError(Exception):
    """Base class for every error raised by spinstep."""


class DimensionMismatchError(SpinStepError, ValueError):
    """Inputs disagree on the number of spheres or have the wrong shape."""


class DomainError(SpinStepError, ValueError):
    """A point lies outside the set where a map or Hamiltonian is defined.

    Implicit solvers treat these as a rejected trial point rather than a fatal
    error, as long as the initial guess itself is admissible.
    """


class ZeroVectorError(DomainError):
    def __init__(self, message="zero vector has no direction", index=None):
        self.index = index
        if index is not None:
            message = f"{message} (sphere {index})"
        super().__init__(message)


class AntipodalPairError(DomainError):
    def __init__(self, message="antipodal pair: w + W vanishes", index=None):
        self.index = index
        if index is not None:
            message = f"{message} (sphere {index})"
        super().__init__(message)


class VortexCollisionError(DomainError):
    def __init__(self, i, j):
        self.pair = (i, j)
        super().__init__(f"vortices {i} and {j} collide")


class InvalidLevelError(DomainError):
    """C(w)/c is not positive, so the Casimir rescaling is undefined."""


class NoConvergenceError(SpinStepError, RuntimeError):
    """The implicit solve did not reach the requested residual tolerance.

    Attributes:
        residual_norm: max-norm of the last residual.
        iterations: total number of iterations performed.
        step_index: index of the failing step when raised from a driver loop.
    """

    def __init__(self, residual_norm, iterations, message=None):
        self.residual_norm = float(residual_norm)
        self.iterations = int(iterations)
        self.step_index = None
        if message is None:
            message = (
                f"implicit solve failed after {iterations} iterations "
                f"(residual {residual_norm:.3e})"
            )
        super().__init__(message)
