"""Quaternion sliding-variable control of 6-R manipulator end-effectors."""
from .errors import (
    ConfigError,
    DegenerateAxis,
    DegenerateQuaternion,
    DomainError,
    NumericalDivergence,
    OutOfRange,
    QuatSlideError,
    SingularJacobian,
    UnreachableTrajectory,
)

__version__ = "0.1.0"
