"""Exception types shared across the toolkit."""


class WaveridgeError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(WaveridgeError, ValueError):
    """A parameter violates its documented range or shape constraint."""


class DegenerateInputError(WaveridgeError, ValueError):
    """Input carries no usable content (e.g. an all-zero TFR or weight vector)."""


class DegeneratePhaseError(WaveridgeError, ValueError):
    """A phase track is too flat to support a harmonic least-squares fit."""


class InfeasibleRidgeError(WaveridgeError, RuntimeError):
    """No integer bin path satisfies the harmonic band constraints.

    ``time_index`` is the first time sample (1-based) where the constraint
    set is empty and ``harmonic`` the harmonic index k at which feasibility
    first fails.
    """

    def __init__(self, time_index, harmonic, message=None):
        self.time_index = int(time_index)
        self.harmonic = int(harmonic)
        if message is None:
            message = (
                f"no feasible bin for harmonic {self.harmonic} "
                f"at time sample {self.time_index}; widen the similarity "
                f"bandwidth or lower the harmonic count"
            )
        super().__init__(message)


class EmptyRidgeError(WaveridgeError, RuntimeError):
    """A decomposition pass found no remaining component to extract."""


class DataFormatError(WaveridgeError, ValueError):
    """An input file does not match any supported layout."""
