"""Exception hierarchy shared by the factorization pipeline."""


class MSFError(Exception):
    """Base class for every error raised by :mod:`msfact`."""


class DimensionError(MSFError, ValueError):
    pass


class FormatError(MSFError, ValueError):
    """Malformed MSFC/MSFG byte stream; ``offset`` locates the problem."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class NonPositiveSampleError(MSFError):
    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"density sample {index} is not strictly positive: {value!r}")


class OverflowInExpError(MSFError):
    pass


class NotHermitianError(MSFError):
    def __init__(self, node, residual):
        self.node = node
        self.residual = residual
        super().__init__(f"S(z_{node}) is not Hermitian (residual {residual:.3e})")


class NotPositiveDefiniteError(MSFError):
    def __init__(self, node, pivot):
        self.node = node
        self.pivot = pivot
        super().__init__(f"S(z_{node}) is not positive definite (pivot {pivot!r})")


class PaleyWienerError(MSFError):
    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(
            f"diagonal entry {index} fails the log-integrability check (mean log = {value:.3e})"
        )


class FNearSingularError(MSFError):
    pass


class LemmaViolatedError(MSFError):
    pass


class KNotPDError(MSFError):
    pass


class SolveFailedError(MSFError):
    pass


class DetVanishesError(MSFError):
    def __init__(self, node):
        self.node = node
        where = "z = 0" if node is None else f"z_{node}"
        super().__init__(f"det S+ vanishes at {where}")


class StageFailedError(MSFError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"classic stage m={stage} failed: {cause}")


class LevelFailedError(MSFError):
    def __init__(self, block, k, cause):
        self.block = block
        self.k = k
        self.cause = cause
        super().__init__(f"doubling level (block size {block}) superblock k={k} failed: {cause}")
