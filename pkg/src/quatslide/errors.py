"""Exception hierarchy.  ``exit_code`` maps each failure onto the CLI's exit status."""


class QuatSlideError(Exception):
    exit_code = 1


class DegenerateQuaternion(QuatSlideError, ValueError):
    pass


class DegenerateAxis(QuatSlideError, ValueError):
    pass


class DomainError(QuatSlideError, ValueError):
    pass


class ConfigError(QuatSlideError, ValueError):
    pass


class OutOfRange(QuatSlideError, ValueError):
    pass


class UnreachableTrajectory(QuatSlideError):
    pass


class SingularJacobian(QuatSlideError):
    exit_code = 2

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class NumericalDivergence(QuatSlideError, ArithmeticError):
    exit_code = 3
