"""Exception types.

Two families: `PreconditionError` (bad input, CLI exit code 2) and
`ConvergenceError` (numerical non-convergence, CLI exit code 3).
"""


class CanonsysError(Exception):
    pass


class PreconditionError(CanonsysError, ValueError):
    pass


class ConvergenceError(CanonsysError, ArithmeticError):
    pass


class NonTraceFree(PreconditionError):
    pass


class NotPositiveDefinite(PreconditionError):
    pass


class PoleHit(PreconditionError):
    pass


class EtaUnreachable(PreconditionError):
    def __init__(self, n, xi_max):
        super().__init__(f"eta_{n} unreachable: xi(inf) = {xi_max} < {n}")
        self.n = n
        self.xi_max = xi_max


class NotSL2(PreconditionError):
    pass


class DegenerateCell(PreconditionError):
    pass


class NotUnitDeterminant(PreconditionError):
    pass


class SingularWindow(PreconditionError):
    pass


class GridMismatch(PreconditionError):
    pass


class DerivativeUnstable(ConvergenceError):
    pass


class StepUnderflow(ConvergenceError):
    pass


class QuadratureNotConverged(ConvergenceError):
    def __init__(self, last, previous):
        super().__init__(f"quadrature not converged: last estimates {previous!r}, {last!r}")
        self.last = last
        self.previous = previous
