"""Exception hierarchy shared by all boxgauge modules."""


class BoxGaugeError(Exception):
    """Base class for errors raised by this package."""


class DomainRangeError(BoxGaugeError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConfigurationError(BoxGaugeError, ValueError):
    """Invalid or inconsistent user configuration."""


class NumericalFailure(BoxGaugeError, RuntimeError):
    """A numerical procedure did not converge or became degenerate.

    ``diagnostic`` carries whatever context helps reproduce the failure
    (brackets, iteration counts, offending values).
    """

    def __init__(self, message, **diagnostic):
        super().__init__(message)
        self.diagnostic = diagnostic


class HorizonError(NumericalFailure):
    """A grid wavepacket leaked into the guard band of its window."""


class AnalysisError(NumericalFailure):
    """Endpoint classification of a defect solution was not possible."""
