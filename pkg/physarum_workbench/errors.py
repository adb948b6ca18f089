"""
Exception hierarchy shared by the workbench engines and the command line.

The CLI maps UsageError to exit code 1 and every other WorkbenchError to
exit code 2.
"""

from typing import List, Tuple


class WorkbenchError(Exception):
    """Base class for workbench errors."""
    pass


class UsageError(WorkbenchError, ValueError):
    """Invalid arguments: bad indices, probabilities, windows or flags."""
    pass


class IngestionError(WorkbenchError):
    """A point-set file could not be ingested."""
    pass


class ConfigurationError(WorkbenchError):
    """A swarm configuration is malformed or cannot be realised."""
    pass


class ContainmentError(WorkbenchError):
    """
    The MST ⊆ RNG ⊆ Gabriel ⊆ Delaunay chain does not hold.

    Attributes:
        violations (list): (inner family, outer family, edge) triples
    """

    def __init__(self, violations: List[Tuple[str, str, Tuple[int, int]]]):
        self.violations = violations
        lines = [f"{inner} ⊄ {outer}: edge {edge}" for inner, outer, edge in violations]
        super().__init__("Containment chain violated:\n  " + "\n  ".join(lines))


class ReplayError(WorkbenchError):
    """A manifest cannot be replayed (missing, tampered input, version refusal)."""
    pass
