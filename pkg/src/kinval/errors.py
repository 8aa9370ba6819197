"""Exception types raised across the package."""


class KinvalError(Exception):
    """Base class for all package errors."""


class NonTransverse(KinvalError):
    """Two regions do not meet transversely; the caller should perturb."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class NonGeneric(KinvalError):
    """A stratum point of one set lies on the boundary of the localizing region."""


class InteriorPoint(KinvalError):
    """The normal cone is empty at interior points."""


class QuadratureFailure(KinvalError):
    """Adaptive refinement hit its panel limit before converging."""


class NotMorse(KinvalError):
    pass


class CriticalValue(KinvalError):
    pass


class NonVertical(KinvalError):
    """A 2-form expected to be a multiple of the contact form is not."""


class InvalidRegion(KinvalError, ValueError):
    pass


class SceneError(KinvalError):
    """Scene parse or validation failure; carries a list of messages."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
