"""Tree-search program repair: a Monte-Carlo patch tree expanded by a language model."""

from .engine import repair, verify_snapshot
from .errors import BackendUnavailable, InvalidBugSpec, NoEligibleNode
from .model import BugSpec, PatchNode, RepairReport, SearchConfig, load_bugspec, normalize_code
from .tree import PatchTree, uct

__version__ = "0.1.0"

__all__ = [
    "BackendUnavailable",
    "BugSpec",
    "InvalidBugSpec",
    "NoEligibleNode",
    "PatchNode",
    "PatchTree",
    "RepairReport",
    "SearchConfig",
    "load_bugspec",
    "normalize_code",
    "repair",
    "uct",
    "verify_snapshot",
]
