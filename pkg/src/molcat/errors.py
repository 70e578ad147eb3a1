"""Exception and warning types raised across the package."""


class MolcatError(Exception):
    """Base class for all package errors."""


class IndexRangeError(MolcatError, IndexError):
    pass


class ShapeError(MolcatError, ValueError):
    pass


class ArgumentError(MolcatError, ValueError):
    pass


class DegenerateMixingError(MolcatError, ValueError):
    """Mixing angle undefined: omega_v == omega_c with g == 0."""


class ResonantLimitError(MolcatError, ValueError):
    """Closed-form RWA solution requested at zero detuning."""


class DegenerateCatError(MolcatError, ValueError):
    """Cat-state superposition with (numerically) vanishing norm."""


class VanishingBranchError(MolcatError, ValueError):
    """Projection onto an electronic branch with negligible probability."""


class TruncationError(MolcatError, RuntimeError):
    pass


class MonitorError(MolcatError, RuntimeError):
    """An integration monitor left its allowed band."""

    def __init__(self, message, time=None, record=None):
        super().__init__(message)
        self.time = time
        self.record = record


class PositivityError(MonitorError):
    pass


class ConfigError(MolcatError, ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


class RWAConditionWarning(UserWarning):
    pass
