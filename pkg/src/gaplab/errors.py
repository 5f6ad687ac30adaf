"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A user-supplied parameter is outside its legal range.

    The first constructor argument names the offending field so CLI
    diagnostics can point at it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ContractViolation(RuntimeError):
    """An input violated a documented precondition, or a result violated
    an inequality that is supposed to hold unconditionally."""


class ConvergenceError(RuntimeError):
    """The iterative eigensolver exceeded its sweep budget.

    Carries the index range of the tridiagonal sub-block that failed to
    split, plus the diagonal/off-diagonal state at failure time.
    """

    def __init__(self, lo, hi, diag=None, offdiag=None):
        self.lo = int(lo)
        self.hi = int(hi)
        self.diag = diag
        self.offdiag = offdiag
        super().__init__(
            f"implicit-shift iteration did not converge on sub-block [{lo}, {hi}]"
        )
