"""Exception types shared across the package."""


class EquibifError(Exception):
    """Base class for all package-specific failures."""


class NotIdempotent(EquibifError):
    pass


class ImageNotInvariant(EquibifError):
    pass


class SubspaceNotInvariant(EquibifError):
    pass


class NonIntegerMultiplicity(EquibifError):
    pass


class ActionMismatch(EquibifError):
    pass


class OrbitBasisNotInvariant(EquibifError):
    pass


class DegenerateLinearization(EquibifError):
    pass


class RadiusNotIsolating(EquibifError):
    pass


class NotSymmetric(EquibifError):
    pass


class GridTooCoarse(EquibifError):
    pass


class StiffIntegration(EquibifError):
    pass


class BlowUp(EquibifError):
    """IVP escaped the overflow guard; carries the escape location."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class CutoffTooSmall(EquibifError):
    pass


class NoSolution(EquibifError):
    pass


class AxisCollision(EquibifError):
    pass


class ProfileNotCertified(EquibifError):
    pass


class NoChangeDetected(EquibifError):
    pass


class OutOfDomain(EquibifError):
    pass


class ConfigError(EquibifError):
    pass
