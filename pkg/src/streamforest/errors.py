"""Exception taxonomy for the forest model, scheduler, and simulator."""

from __future__ import annotations


class StreamForestError(Exception):
    """Base class for every error raised by this package."""


class NotFoundError(StreamForestError):
    """Unknown peer id or tree index."""


class NotSubscribedError(StreamForestError):
    """Peer has no parent in the requested tree."""


class ExcludedFromMetricError(StreamForestError):
    """Metric undefined for this peer (zero budget)."""


class ReconfigError(StreamForestError):
    """Base class for rejected reconfiguration primitives.

    A raised ReconfigError guarantees the forest was not modified.
    """


class NoFreeCapacityError(ReconfigError):
    pass


class ProviderBrokeError(ReconfigError):
    pass


class AlreadySubscribedError(ReconfigError):
    pass


class SellerSaturatedError(ReconfigError):
    pass


class InsufficientBalanceError(ReconfigError):
    pass


class InsufficientSlotsError(ReconfigError):
    pass


class PriceExceededError(ReconfigError):
    pass


class NoChildToGiveError(ReconfigError):
    pass


class TreeIsGiversDominantError(ReconfigError):
    pass


class InvalidReconfigError(ReconfigError):
    """Catch-all for structural precondition violations (self-adoption,
    selling the server's position, unsubscribed counterparty, ...)."""


class FreeSetError(StreamForestError):
    pass


class AlreadyMemberError(FreeSetError):
    pass


class NotMemberError(FreeSetError):
    pass


class FreeSetExhaustedError(StreamForestError):
    """A lookup found no member able to donate a slot."""


class SpareGroupExhaustedError(StreamForestError):
    """Baseline spare-capacity group has no usable member."""


class DegenerateInputError(StreamForestError):
    """Analysis input outside the formula's domain (e.g. no peers)."""


class ConfigInvalidError(StreamForestError):
    """Scenario configuration failed validation."""


class IncompleteRunError(StreamForestError):
    """A run finished with peers still missing subscriptions.

    Carries the metrics report so callers can still inspect/emit it.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ValidationFailedError(StreamForestError):
    """validate_forest found invariant violations."""

    def __init__(self, violations):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = list(violations)
