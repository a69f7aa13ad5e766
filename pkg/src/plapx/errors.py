"""Exception types shared across the package.

Exit-code mapping used by the CLI: ConfigurationError -> 2, everything
else that is reported as a failed run -> 1.
"""


class ConfigurationError(ValueError):
    """Bad user input: config files, field definitions, orderings."""


class NumericsError(ArithmeticError):
    """A numeric evaluation produced a non-finite value or failed to converge.

    Carries an optional location payload (cell index, coordinates) so the
    offending quadrature point can be reported.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class AnticoercivityError(RuntimeError):
    """Scaling along the endpoint ray never produced a negative energy."""

    def __init__(self, message, potential_name=None, history=None):
        super().__init__(message)
        self.potential_name = potential_name
        self.history = history or []


class UnboundedEnergyError(RuntimeError):
    """Descent fell through the bounded-below guard."""
