"""Exception types shared across the simulator."""


class IrisLabError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(IrisLabError, ValueError):
    """An argument is outside its documented domain."""


class CapacityError(IrisLabError):
    """More nodes were requested than the address space can hold."""


class StateError(IrisLabError):
    """The network is in a state that does not support the operation."""


class RoutingAttackError(IrisLabError):
    """A relayed node failed the secure-routing bound check."""

    def __init__(self, hop, queried, relayed, d_x, threshold):
        self.hop = hop
        self.queried = queried
        self.relayed = relayed
        self.d_x = d_x
        self.threshold = threshold
        super().__init__(
            f"hop {hop}: node {queried} relayed to {relayed} at distance {d_x}, "
            f"below bound-check threshold {threshold:.1f}"
        )


class AnalysisError(IrisLabError):
    """A trace cannot be analyzed with the supplied parameters."""


class SetupError(IrisLabError):
    """An experiment's inputs (network files, config) are missing or broken."""
