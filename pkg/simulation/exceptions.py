"""
Exceptions raised by the simulation library
"""


class SimulationError(Exception):
    """Base class for every error raised by the simulation package"""


class ConfigurationError(SimulationError, ValueError):
    """A precondition on an input or configuration value does not hold"""


class BracketingError(SimulationError):
    """A root-finding bracket does not contain a sign change or is not monotone"""
