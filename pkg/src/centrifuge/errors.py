"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when arguments violate an operation's preconditions."""


class IntegrationError(RuntimeError):
    """Raised when an ODE integration cannot meet its tolerance.

    Attributes
    ----------
    tau : float
        Dimensionless time at which the integrator gave up.
    member : tuple or None
        Identity of the ensemble member (e.g. ``(l0, m0)``) being evolved,
        when the failure happened inside an ensemble run.
    """

    def __init__(self, message, tau=float("nan"), member=None):
        self.tau = tau
        self.member = member
        if member is not None:
            message = f"{message} (member {member})"
        super().__init__(f"{message} at tau={tau:.6g}")
