"""Exception types shared across the library."""


class BlockHyperGError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(BlockHyperGError):
    pass


class RankDeficient(BlockHyperGError):
    pass


class DomainError(BlockHyperGError):
    """Input outside the supported parameter regime."""


class NoConvergence(BlockHyperGError):
    """A numerical routine failed to reach its accuracy target."""


class NotBlockOrthogonal(BlockHyperGError):
    """Block prior operations require a block-orthogonal design.

    Apply block_orthogonalize first (or pass --orthogonalize on the CLI).
    """


class IntegralDiverges(BlockHyperGError):
    pass


class OutOfInterior(BlockHyperGError):
    """Closed-form maximizer fell outside (0,1)^k; caller should fall back."""


class PreconditionViolated(BlockHyperGError):
    pass


class BudgetExceeded(BlockHyperGError):
    pass


class SimulationBudgetExceeded(BlockHyperGError):
    pass


class EmptyModelList(BlockHyperGError):
    pass


class ConfigError(BlockHyperGError):
    pass


class DataError(BlockHyperGError):
    pass
