"""Exception types shared across the solver."""


class SimulationError(Exception):
    """Base class for all framehydro errors."""


class GridMismatch(SimulationError):
    """Field shape does not match the differentiation backend's lattice."""


class NonFiniteField(SimulationError):
    """A field handed to a grid operation contains NaN or Inf entries."""


class SingularFrame(SimulationError):
    """Frame matrix too degenerate to project back onto SO(3)."""


class StepUnstable(SimulationError):
    """A time step blew up (field norm grew by more than 10x)."""


class SLimitExceeded(SimulationError):
    """Requested spectral power of the Laplacian beyond the float64 limit."""


class BadSpec(SimulationError):
    """Invalid initial-data or configuration specification."""


class IoError(SimulationError):
    """Snapshot/ledger file could not be read or written."""


class FormatError(IoError):
    """Snapshot file has bad magic, bad version, or is truncated."""


class ChecksumMismatch(IoError):
    """Snapshot payload does not match its stored CRC32."""
