"""Exception types raised by the spline kernel, the solver and the harness."""


class TBIGAError(Exception):
    """Base class for all errors raised by this package."""


class DimensionOverflow(TBIGAError, ValueError):
    pass


class DuplicateRoot(TBIGAError, ValueError):
    pass


class SingularHermiteSystem(TBIGAError, ArithmeticError):
    pass


class ConstraintRankDeficiency(TBIGAError, ArithmeticError):
    pass


class MonomialAbsent(TBIGAError, ValueError):
    """The identity function is not in the space (fewer than two zero roots)."""


class UnsupportedWeights(TBIGAError, ValueError):
    pass


class InterpolationSingular(TBIGAError, ArithmeticError):
    pass


class DegenerateJacobian(TBIGAError, ArithmeticError):
    pass


class AssemblyNaN(TBIGAError, ArithmeticError):
    pass


class SingularSystem(TBIGAError, ArithmeticError):
    pass


class DegenerateError(TBIGAError, ArithmeticError):
    pass
