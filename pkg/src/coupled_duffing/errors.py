"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Malformed arguments: dimension mismatch, bad sizes, out-of-range indices."""


class SingularParameterError(ValueError):
    """A physical parameter sits on a pole of the coefficient formulas."""


class PreconditionError(ValueError):
    """An operation was called on data that violates its stated precondition."""


class NearSingularError(ArithmeticError):
    """A Jacobian is numerically singular at the requested point."""


class UnsupportedInputError(ValueError):
    """The input lies outside the family an exact routine can handle."""


class ResourceError(RuntimeError):
    """A brute-force enumeration would exceed its configured budget."""
