"""
Detection of travelling and stationary localizations in space-time diagrams.

A row is segmented into clusters: maximal runs of non-resting nodes (runs
separated by at most `max_gap` resting nodes are merged). A cluster of
width at most MAX_PATTERN_WIDTH is a localization when the same state
pattern reappears `period` rows later shifted by `displacement` cells, and
keeps doing so throughout the confirmation window. Non-zero displacement
is a mobile localization (glider analog). A zero-displacement pattern that
repeatedly emits mobile localizations, which start next to it and travel
away, is a generator (glider gun analog); any other zero-displacement
pattern is reported as stationary.
"""

import json
import logging
from bisect import bisect_left, bisect_right
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple, Union

import numpy as np

from .actin import RESTING, SpaceTimeDiagram
from .errors import UsageError

logger = logging.getLogger(__name__)

MAX_PATTERN_WIDTH = 32
MAX_PERIOD = 64
DEFAULT_WINDOW = 128
MIN_EMISSIONS = 2

Cluster = Tuple[int, int, bytes]  # (start, end exclusive, state pattern)


@dataclass(frozen=True)
class Localization:
    """
    One detected localization.

    Attributes:
        period: rows between recurrences of the pattern
        displacement: cells moved per period (signed, + is towards higher indices)
        first_seen: earliest row at which the recurring pattern is present
        position: start index of the pattern at first_seen
        width: pattern width in cells
        kind: 'mobile', 'generator' or 'stationary'
    """
    period: int
    displacement: int
    first_seen: int
    position: int
    width: int
    kind: str

    @property
    def mobile(self) -> bool:
        return self.displacement != 0

    def to_dict(self) -> Dict[str, Union[int, str]]:
        return asdict(self)


@dataclass(frozen=True)
class _Track:
    period: int
    displacement: int
    first: int
    last: int
    position: int
    width: int
    extent: Tuple[int, int]


def _row_clusters(row: np.ndarray, max_gap: int) -> List[Cluster]:
    active = np.concatenate(([False], row != RESTING, [False]))
    edges = np.diff(active.astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    if starts.size > 1:
        joined = starts[1:] - ends[:-1] <= max_gap
        starts = starts[np.concatenate(([True], ~joined))]
        ends = ends[np.concatenate((~joined, [True]))]
    return [(start, end, row[start:end].tobytes()) for start, end in zip(starts.tolist(), ends.tolist())]


class _Index:
    """Per-row cluster lists and pattern -> sorted starts, built on first use."""

    def __init__(self, rows: np.ndarray, max_gap: int):
        self.rows = rows
        self.max_gap = max_gap
        self._clusters: List[Optional[List[Cluster]]] = [None] * rows.shape[0]
        self._lookup: List[Optional[Dict[bytes, List[int]]]] = [None] * rows.shape[0]

    def __len__(self) -> int:
        return len(self._clusters)

    def clusters(self, row: int) -> List[Cluster]:
        if self._clusters[row] is None:
            self._clusters[row] = _row_clusters(self.rows[row], self.max_gap)
        return self._clusters[row]

    def starts(self, row: int, pattern: bytes) -> List[int]:
        if self._lookup[row] is None:
            table: Dict[bytes, List[int]] = {}
            for start, _, found in self.clusters(row):
                table.setdefault(found, []).append(start)
            self._lookup[row] = table
        return self._lookup[row].get(pattern, [])

    def has(self, row: int, pattern: bytes, start: int) -> bool:
        if not 0 <= row < len(self):
            return False
        starts = self.starts(row, pattern)
        i = bisect_left(starts, start)
        return i < len(starts) and starts[i] == start


def _find_period(index: _Index, k: int, start: int, pattern: bytes, window: int,
                 max_period: int) -> Optional[Tuple[int, int]]:
    """Smallest (period, displacement) under which the pattern recurs across the window."""
    for period in range(1, min(max_period, window // 2) + 1):
        if k + period >= len(index):
            break
        # excitation travels at most one cell per step
        starts = index.starts(k + period, pattern)
        near = starts[bisect_left(starts, start - period):bisect_right(starts, start + period)]
        for displacement in sorted((s - start for s in near), key=lambda d: (abs(d), d)):
            repeats = window // period
            if all(index.has(k + m * period, pattern, start + m * displacement) for m in range(2, repeats + 1)):
                return period, displacement
    return None


def _trace(index: _Index, k: int, start: int, pattern: bytes, period: int,
           displacement: int, direction: int) -> Tuple[int, int]:
    row, pos = k, start
    while index.has(row + direction * period, pattern, pos + direction * displacement):
        row += direction * period
        pos += direction * displacement
    return row, pos


def _extent(index: _Index, first: int, last: int, start: int, width: int, period: int) -> Tuple[int, int]:
    """Cells covered by the stationary pattern, merged clusters included, over its first period."""
    lo, hi = start, start + width
    for r in range(first, min(first + period, last + 1)):
        for c_start, c_end, _ in index.clusters(r):
            if c_start < start + width and c_end > start:
                lo, hi = min(lo, c_start), max(hi, c_end)
    return lo, hi


def _emissions(track: _Track, mobiles: List[_Track]) -> int:
    """Distinct rows at which a mobile localization leaves the stationary pattern."""
    lo, hi = track.extent
    reach = track.period + 1
    rows: Set[int] = set()
    for mobile in mobiles:
        if not track.first <= mobile.first <= track.last:
            continue
        if mobile.displacement > 0 and 0 <= mobile.position - hi <= reach:
            rows.add(mobile.first)
        elif mobile.displacement < 0 and 0 <= lo - (mobile.position + mobile.width) <= reach:
            rows.add(mobile.first)
    return len(rows)


def detect_localizations(diagram: SpaceTimeDiagram, window: int = DEFAULT_WINDOW,
                         max_width: int = MAX_PATTERN_WIDTH, max_period: int = MAX_PERIOD,
                         max_gap: int = 0) -> List[Localization]:
    """
    Find recurring patterns in a space-time diagram.

    Start rows are sampled every `window` rows; a candidate must recur at
    least twice within the window, after which its full lifetime is traced
    backwards and forwards and the nodes it covers are claimed so every
    localization is reported once. A stationary pattern is a generator when
    mobile localizations start next to it and travel away at
    MIN_EMISSIONS or more distinct rows of its lifetime.

    Args:
        diagram: Space-time record of one chain
        window: Confirmation window in rows
        max_width: Largest pattern width considered
        max_period: Largest period considered
        max_gap: Resting cells allowed inside one pattern

    Returns:
        Localizations sorted by (first_seen, position)

    Raises:
        UsageError: If the diagram has fewer than 2 x window rows
    """
    if window < 2:
        raise UsageError(f"Invalid window: {window}. Must be at least 2")
    rows = diagram.rows
    if rows.shape[0] < 2 * window:
        raise UsageError(f"Invalid window: {window}. Diagram has {rows.shape[0]} rows, needs at least {2 * window}")

    index = _Index(rows, max_gap)
    sampled = range(0, len(index) - window, window)
    claimed: Dict[int, Set[int]] = {k: set() for k in sampled}
    tracks: List[_Track] = []

    for k in sampled:
        for start, end, pattern in index.clusters(k):
            width = end - start
            if start in claimed[k] or width > max_width:
                continue
            match = _find_period(index, k, start, pattern, window, max_period)
            if match is None:
                continue
            period, displacement = match
            first, position = _trace(index, k, start, pattern, period, displacement, -1)
            last, _ = _trace(index, k, start, pattern, period, displacement, 1)
            last = min(last + period - 1, len(index) - 1)

            # only sampled rows are ever looked up again
            for r in range(-(-first // window) * window, last + 1, window):
                if r not in claimed:
                    break
                centre = position + displacement * (r - first) / period
                for c_start, c_end, _ in index.clusters(r):
                    if c_start <= centre + width and c_end >= centre - 1:
                        claimed[r].add(c_start)

            extent = _extent(index, first, last, position, width, period) if displacement == 0 else (0, 0)
            tracks.append(_Track(period, displacement, first, last, position, width, extent))

    mobiles = [track for track in tracks if track.displacement != 0]
    found = []
    for track in tracks:
        if track.displacement != 0:
            kind = 'mobile'
        elif _emissions(track, mobiles) >= MIN_EMISSIONS:
            kind = 'generator'
        else:
            kind = 'stationary'
        found.append(Localization(track.period, track.displacement, track.first, track.position,
                                  track.width, kind))

    found.sort(key=lambda loc: (loc.first_seen, loc.position))
    logger.info(f"Detected {len(found)} localizations in chain {diagram.chain_id} "
                f"({len(mobiles)} mobile, {sum(loc.kind == 'generator' for loc in found)} generators)")
    return found


def write_report(localizations: List[Localization], path: Union[str, Path]) -> Path:
    """Write detector records as a JSON list."""
    path = Path(path)
    with open(path, 'w') as f:
        json.dump([loc.to_dict() for loc in localizations], f, indent=2)
    return path
