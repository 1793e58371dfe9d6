"""Exception types.

Everything deriving from :class:`PhysicsError` signals a request that is
well-formed but outside the physical domain of the model (the CLI maps
these to exit status 1).
"""


class PhysicsError(ValueError):
    pass


class OutOfBandError(PhysicsError):
    """Energy lies outside the propagating band [omega_c - 2 xi, omega_c + 2 xi]."""

    def __init__(self, energy: float, lower: float, upper: float):
        self.energy = energy
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"energy {energy!r} is outside the band [{lower!r}, {upper!r}]"
        )


class BandEdgeError(PhysicsError):
    """Wavenumber at (or outside) a band edge, where the group velocity vanishes."""


class SolverError(PhysicsError):
    def __init__(self, message: str, bracket: tuple[float, float] | None = None):
        self.bracket = bracket
        if bracket is not None:
            message = f"{message} (bracket {bracket[0]!r}, {bracket[1]!r})"
        super().__init__(message)


class ModelViolationError(PhysicsError):
    """Numerical output contradicts a structural property of the model."""


class GeometryError(PhysicsError):
    """Wavepacket simulation box too small for the requested packet."""


class StiffnessError(PhysicsError):
    """Adaptive integrator failed (step size underflow)."""
