"""Exception types shared across the package."""


class RelBohmError(Exception):
    pass


class NodeProximity(RelBohmError):
    """The wave function is too close to a node for the phase gradient to be defined."""

    def __init__(self, message, amplitude=None, threshold=None):
        super().__init__(message)
        self.amplitude = amplitude
        self.threshold = threshold


class StepLimitExceeded(RelBohmError):
    pass


class ZeroNorm(RelBohmError):
    pass


class ZeroMarginal(RelBohmError):
    pass


class EnvelopeViolation(RelBohmError):
    pass


class DomainError(RelBohmError, ValueError):
    pass
