"""Exception types raised by caimbench."""


class CaimError(Exception):
    """Base class for caimbench errors."""


class ShapeError(CaimError, ValueError):
    """Tensor extents are incompatible with an operation."""


class GradientError(CaimError, RuntimeError):
    """Reverse-mode differentiation was driven incorrectly."""


class ContractError(CaimError, RuntimeError):
    """A training contract (frozen backbone, trainable set) is violated."""


class CheckpointError(CaimError, ValueError):
    """A checkpoint file is malformed, corrupted or has unexpected entries."""


class ProtocolError(CaimError, ValueError):
    """An evaluation protocol is inconsistent with its dataset."""
