"""Exception types shared by all chainbath modules."""


class ChainBathError(Exception):
    """Base class for all library-specific errors."""


class NonincreasingSpectrum(ChainBathError, ValueError):
    """Bath frequencies are not strictly increasing."""


class NonpositiveParameter(ChainBathError, ValueError):
    """A frequency, coupling, or temperature that must be positive is not."""


class Breakdown(ChainBathError):
    """Chain construction broke down: an intermediate coupling is numerically
    zero, i.e. the spectrum/coupling combination is effectively reducible."""


class DimensionMismatch(ChainBathError, ValueError):
    """Array dimensions of related objects disagree."""


class IndexOutOfRange(ChainBathError, IndexError):
    """A mode or minor index lies outside [0, N]."""


class DegenerateFrequencies(ChainBathError):
    """Two kernel frequencies coincide; the sine-series closed form has a pole.
    Fall back to Taylor evaluation or quadrature."""


class ToleranceNotReached(ChainBathError):
    """Adaptive quadrature hit its refinement cap before converging."""


class UnstableMode(ChainBathError):
    """The evolution matrix has a non-positive eigenvalue (outside the
    oscillatory regime)."""


class ComplexResolvent(ChainBathError):
    """The lower resolvent frequency is not real (coupling too strong:
    D >= Omega*Omega_1)."""


class DegenerateResolvent(ChainBathError):
    """The two resolvent frequencies coincide; the closed solution kernel
    is singular."""


class GridMismatch(ChainBathError, ValueError):
    """Two sampled series do not share the same time grid."""


class GridTooCoarse(ChainBathError):
    """The sample grid is too coarse for the requested quadrature accuracy."""
