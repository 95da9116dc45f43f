"""Exception types shared across the toolkit."""


class ValidationError(ValueError):
    """A scenario, matrix, or parameter fails its declared contract."""


class DomainError(ValueError):
    """An evaluation left the mathematical domain of a function."""


class FunnelViolation(RuntimeError):
    """The normalized error reached the funnel boundary.

    Carries the simulation time, the offending channel indices (0-based)
    and the normalized-error values at the failure point.
    """

    def __init__(self, t, channels, zeta):
        self.t = float(t)
        self.channels = list(channels)
        self.zeta = zeta
        chans = ", ".join(str(c + 1) for c in self.channels)
        super().__init__(
            f"funnel boundary reached at t={self.t:.6g} on channel(s) {chans}"
        )


class NumericError(RuntimeError):
    """A non-finite value appeared during integration."""

    def __init__(self, t, location):
        self.t = float(t)
        self.location = location
        super().__init__(f"non-finite value in {location} at t={self.t:.6g}")
