"""Exception types raised across the repair engine."""

from __future__ import annotations


class RepairError(Exception):
    """Base class for all engine errors."""


class InvalidBugSpec(RepairError):
    pass


class IoFailure(RepairError):
    pass


class RegionOutOfRange(RepairError):
    pass


class NoEligibleNode(RepairError):
    """No node in the tree can be expanded any further."""


class UnknownNode(RepairError):
    pass


class UnknownParent(UnknownNode):
    pass


class IneligibleParent(RepairError):
    pass


class BackendUnavailable(RepairError):
    """Transport failure that survived all retries, or a non-retryable HTTP error."""


class MalformedResponse(RepairError):
    pass


class MalformedEntry(RepairError):
    """A corpus entry could not be parsed; the message carries file/line detail."""
