"""
Two-chain excitable automaton of an actin filament.

Two chains x and y of three-state nodes (resting, excited, refractory) are
coupled with a half-node offset, mirroring the double helix of f-actin:
node x_i reads (x_{i-1}, x_{i+1}, y_{i-1}, y_i) and node y_i reads
(y_{i-1}, y_{i+1}, x_i, x_{i+1}). The asymmetry is part of the model and
must not be symmetrised.

A resting node becomes excited when its chain's predicate holds on the
number of excited neighbours, an excited node becomes refractory and a
refractory node returns to rest. All 2n nodes update synchronously.

Example usage:
    initial = random_init(500, seed=42)
    result = run(initial, RuleSpec(rule="c2"), steps=1000)
    result.x.to_pgm("c2_x.pgm")
    print(result.activity.mean_excited("x", start=500))
"""

import logging
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import Callable, Dict, Iterable, NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .errors import UsageError
from .seeding import make_rng
from .writers import write_pgm

logger = logging.getLogger(__name__)


class NodeState(IntEnum):
    """Node state; the integer value is the array encoding."""
    RESTING = 0
    EXCITED = 1
    REFRACTORY = 2

    @property
    def symbol(self) -> str:
        return STATE_SYMBOLS[self]


STATE_SYMBOLS = {
    NodeState.RESTING: '◦',
    NodeState.EXCITED: '+',
    NodeState.REFRACTORY: '−',
}

# accepted spellings when parsing configurations from text
SYMBOL_STATES = {
    '◦': NodeState.RESTING, 'o': NodeState.RESTING, '.': NodeState.RESTING,
    '+': NodeState.EXCITED,
    '−': NodeState.REFRACTORY, '-': NodeState.REFRACTORY,
}

RESTING = np.uint8(NodeState.RESTING)
EXCITED = np.uint8(NodeState.EXCITED)
REFRACTORY = np.uint8(NodeState.REFRACTORY)


class Rule(Enum):
    C1 = "c1"
    C2 = "c2"
    C3 = "c3"


class Boundary(Enum):
    FIXED = "fixed"
    PERIODIC = "periodic"


def at_least_one(sigma: np.ndarray) -> np.ndarray:
    return sigma > 0


def exactly_one(sigma: np.ndarray) -> np.ndarray:
    return sigma == 1


# (predicate for chain x, predicate for chain y)
RULE_PREDICATES: Dict[Rule, Tuple[Callable, Callable]] = {
    Rule.C1: (at_least_one, at_least_one),
    Rule.C2: (exactly_one, exactly_one),
    Rule.C3: (at_least_one, exactly_one),
}

# grey levels per state
PALETTES = {
    'standard': {NodeState.EXCITED: 0, NodeState.REFRACTORY: 128, NodeState.RESTING: 255},
    'two_tone': {NodeState.EXCITED: 0, NodeState.REFRACTORY: 255, NodeState.RESTING: 255},
}


@dataclass(frozen=True)
class RuleSpec:
    """
    Excitation rule and boundary policy.

    Attributes:
        rule: C1 (σ > 0 on both chains), C2 (σ == 1 on both chains) or
              C3 (σ > 0 on chain x, σ == 1 on chain y)
        boundary: FIXED reads out-of-range neighbours as resting,
                  PERIODIC wraps indices modulo n
    """
    rule: Rule = Rule.C1
    boundary: Boundary = Boundary.FIXED

    def __post_init__(self):
        try:
            if not isinstance(self.rule, Rule):
                object.__setattr__(self, 'rule', Rule(str(self.rule).lower()))
            if not isinstance(self.boundary, Boundary):
                object.__setattr__(self, 'boundary', Boundary(str(self.boundary).lower()))
        except ValueError as e:
            raise UsageError(f"Invalid rule specification: {e}") from e

    @property
    def predicates(self) -> Tuple[Callable, Callable]:
        return RULE_PREDICATES[self.rule]

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC


@dataclass(frozen=True, eq=False)
class ChainPair:
    """
    Configuration of both chains at time t.

    Attributes:
        x: state codes of chain x, length n
        y: state codes of chain y, length n
        t: time index
    """
    x: np.ndarray
    y: np.ndarray
    t: int = 0

    def __post_init__(self):
        x = np.array(self.x, dtype=np.uint8)
        y = np.array(self.y, dtype=np.uint8)
        if x.ndim != 1 or x.shape != y.shape:
            raise UsageError(f"Invalid chain shapes: {x.shape} and {y.shape}. Must be equal 1-D")
        if x.size < 2:
            raise UsageError(f"Invalid chain length: {x.size}. Must be at least 2")
        if x.max() > REFRACTORY or y.max() > REFRACTORY:
            raise UsageError("Invalid node state code. Must be 0, 1 or 2")
        if self.t < 0:
            raise UsageError(f"Invalid time index: {self.t}. Must be non-negative")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'y', y)

    @property
    def n(self) -> int:
        return int(self.x.size)

    def chain(self, chain_id: str) -> np.ndarray:
        if chain_id == 'x':
            return self.x
        if chain_id == 'y':
            return self.y
        raise UsageError(f"Invalid chain: {chain_id}. Must be one of ['x', 'y']")

    def rotated(self, k: int) -> "ChainPair":
        """Both chains rotated by k cells (node i moves to i+k)."""
        return ChainPair(np.roll(self.x, k), np.roll(self.y, k), self.t)

    def count_excited(self) -> Tuple[int, int]:
        return int(np.count_nonzero(self.x == EXCITED)), int(np.count_nonzero(self.y == EXCITED))

    @classmethod
    def quiescent(cls, n: int) -> "ChainPair":
        return cls(np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8))

    @classmethod
    def from_strings(cls, x: str, y: str, t: int = 0) -> "ChainPair":
        """Parse chains written with the symbols ◦/o/. (rest), + (excited), −/- (refractory)."""
        try:
            return cls([SYMBOL_STATES[c] for c in x], [SYMBOL_STATES[c] for c in y], t)
        except KeyError as e:
            raise UsageError(f"Invalid state symbol: {e.args[0]!r}") from e

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChainPair):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    def __str__(self) -> str:
        def render(chain):
            return ''.join(STATE_SYMBOLS[NodeState(int(v))] for v in chain)
        return f"t={self.t}\nx: {render(self.x)}\ny: {render(self.y)}"


def _node(chain: np.ndarray, j: int, periodic: bool) -> NodeState:
    n = chain.size
    if periodic:
        return NodeState(int(chain[j % n]))
    if 0 <= j < n:
        return NodeState(int(chain[j]))
    return NodeState.RESTING


def neighborhood(config: ChainPair, chain: str, i: int,
                 boundary: Union[Boundary, str] = Boundary.FIXED) -> Tuple[NodeState, NodeState, NodeState, NodeState]:
    """
    Neighbourhood tuple of one node.

    Args:
        config: Current configuration
        chain: 'x' or 'y'
        i: Node index, 0 <= i < n
        boundary: Boundary policy for out-of-range references

    Returns:
        (x_{i-1}, x_{i+1}, y_{i-1}, y_i) for chain x,
        (y_{i-1}, y_{i+1}, x_i, x_{i+1}) for chain y

    Raises:
        UsageError: If the index or chain is invalid
    """
    if not 0 <= i < config.n:
        raise UsageError(f"Invalid node index: {i}. Must be in [0, {config.n})")
    periodic = RuleSpec(boundary=boundary).periodic
    x, y = config.x, config.y
    if chain == 'x':
        return (_node(x, i - 1, periodic), _node(x, i + 1, periodic),
                _node(y, i - 1, periodic), _node(y, i, periodic))
    if chain == 'y':
        return (_node(y, i - 1, periodic), _node(y, i + 1, periodic),
                _node(x, i, periodic), _node(x, i + 1, periodic))
    raise UsageError(f"Invalid chain: {chain}. Must be one of ['x', 'y']")


def sigma(neighbors: Iterable[Union[NodeState, int]]) -> int:
    """Number of excited entries in a neighbourhood tuple."""
    return sum(1 for s in neighbors if s == NodeState.EXCITED)


def _shifted(a: np.ndarray, k: int, periodic: bool) -> np.ndarray:
    """b[..., i] = a[..., i + k]; out-of-range entries are 0 unless periodic."""
    if periodic:
        return np.roll(a, -k, axis=-1)
    out = np.zeros_like(a)
    if k > 0:
        out[..., :-k] = a[..., k:]
    elif k < 0:
        out[..., -k:] = a[..., :k]
    else:
        out[...] = a
    return out


def _advance(states: np.ndarray, fire: np.ndarray) -> np.ndarray:
    nxt = np.where(states == EXCITED, REFRACTORY, RESTING).astype(np.uint8)
    nxt[(states == RESTING) & fire] = EXCITED
    return nxt


def step_arrays(x: np.ndarray, y: np.ndarray, rule: RuleSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Synchronous update of raw state arrays.

    The last axis indexes nodes; leading axes are independent configurations,
    so a whole batch of configurations advances in one call.
    """
    periodic = rule.periodic
    ex = (x == EXCITED).astype(np.uint8)
    ey = (y == EXCITED).astype(np.uint8)

    sigma_x = _shifted(ex, -1, periodic) + _shifted(ex, 1, periodic) + _shifted(ey, -1, periodic) + ey
    sigma_y = _shifted(ey, -1, periodic) + _shifted(ey, 1, periodic) + ex + _shifted(ex, 1, periodic)

    fires_x, fires_y = rule.predicates
    return _advance(x, fires_x(sigma_x)), _advance(y, fires_y(sigma_y))


def step(config: ChainPair, rule: Optional[RuleSpec] = None) -> ChainPair:
    """Advance both chains by one time step."""
    rule = rule or RuleSpec()
    x, y = step_arrays(config.x, config.y, rule)
    return ChainPair(x, y, config.t + 1)


def random_init(n: int, p_excited: float = 0.25, p_refractory: float = 0.25,
                seed: int = 0) -> ChainPair:
    """
    Random configuration of both chains.

    Each node is independently excited with probability p_excited,
    refractory with probability p_refractory and resting otherwise.

    Args:
        n: Nodes per chain
        p_excited: Probability of the excited state
        p_refractory: Probability of the refractory state
        seed: Generator seed

    Raises:
        UsageError: If the probabilities are invalid or n < 2
    """
    for name, p in (('p_excited', p_excited), ('p_refractory', p_refractory)):
        if not 0.0 <= p <= 1.0:
            raise UsageError(f"Invalid {name}: {p}. Must be in [0, 1]")
    if p_excited + p_refractory > 1.0:
        raise UsageError(f"Invalid probabilities: p_excited + p_refractory = {p_excited + p_refractory}. Must be <= 1")
    if n < 2:
        raise UsageError(f"Invalid chain length: {n}. Must be at least 2")

    u = make_rng(seed).random((2, n))
    states = np.where(u < p_excited, EXCITED,
                      np.where(u < p_excited + p_refractory, REFRACTORY, RESTING)).astype(np.uint8)
    return ChainPair(states[0], states[1])


def place_sources(n: int, positions: Iterable[int], chain: str = 'x') -> ChainPair:
    """Quiescent configuration with isolated excited nodes at the given positions of one chain."""
    x = np.zeros(n, dtype=np.uint8)
    y = np.zeros(n, dtype=np.uint8)
    target = {'x': x, 'y': y}.get(chain)
    if target is None:
        raise UsageError(f"Invalid chain: {chain}. Must be one of ['x', 'y']")
    for i in positions:
        if not 0 <= i < n:
            raise UsageError(f"Invalid source position: {i}. Must be in [0, {n})")
        target[i] = EXCITED
    return ChainPair(x, y)


@dataclass(eq=False)
class SpaceTimeDiagram:
    """
    Row-per-timestep record of one chain.

    rows[0] is the initial configuration and rows[k] the configuration
    after k steps, so len(rows) == steps + 1.
    """
    chain_id: str
    rows: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.uint8)
        if self.rows.ndim != 2:
            raise UsageError(f"Invalid diagram shape: {self.rows.shape}. Must be (rows, n)")

    @property
    def steps(self) -> int:
        return self.rows.shape[0] - 1

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    def image(self, palette: str = 'standard') -> np.ndarray:
        """Grey-level image, one pixel per node per step, time going down."""
        if palette not in PALETTES:
            raise UsageError(f"Invalid palette: {palette}. Must be one of {list(PALETTES.keys())}")
        lut = np.zeros(3, dtype=np.uint8)
        for state, grey in PALETTES[palette].items():
            lut[state] = grey
        return lut[self.rows]

    def to_pgm(self, path: Union[str, Path], palette: str = 'standard') -> Path:
        return write_pgm(path, self.image(palette))

    def plot(self, ax=None, palette: str = 'standard'):
        """
        Plot the diagram with time going down.

        Returns:
            matplotlib axes
        """
        try:
            import matplotlib.pyplot as plt
        except ImportError:
            raise ImportError("matplotlib is required for plotting")

        if ax is None:
            _, ax = plt.subplots(figsize=(8, 8))
        ax.imshow(self.image(palette), cmap='gray', vmin=0, vmax=255,
                  interpolation='nearest', aspect='auto')
        ax.set_xlabel('Node')
        ax.set_ylabel('Step')
        ax.set_title(f'Chain {self.chain_id}')
        return ax

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpaceTimeDiagram):
            return NotImplemented
        return self.chain_id == other.chain_id and np.array_equal(self.rows, other.rows)


@dataclass
class ActivitySeries:
    """Excited-node count per chain for every recorded row."""
    excited_x: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    excited_y: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'step': np.arange(len(self.excited_x)),
            'excited_x': self.excited_x,
            'excited_y': self.excited_y,
        })

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        self.to_frame().to_csv(path, index=False)
        return path

    def mean_excited(self, chain: str, start: int = 0, stop: Optional[int] = None) -> float:
        """Mean excited count of one chain over rows start..stop-1."""
        series = {'x': self.excited_x, 'y': self.excited_y}.get(chain)
        if series is None:
            raise UsageError(f"Invalid chain: {chain}. Must be one of ['x', 'y']")
        window = series[start:stop]
        if window.size == 0:
            raise UsageError(f"Empty activity window [{start}, {stop})")
        return float(window.mean())


class RunResult(NamedTuple):
    x: SpaceTimeDiagram
    y: SpaceTimeDiagram
    activity: ActivitySeries


def run(initial: ChainPair, rule: Optional[RuleSpec] = None, steps: int = 1) -> RunResult:
    """
    Apply the step operation `steps` times, recording every row.

    Args:
        initial: Starting configuration (row 0)
        rule: Excitation rule and boundary
        steps: Number of steps, at least 1

    Returns:
        RunResult with both space-time diagrams and the activity series
    """
    rule = rule or RuleSpec()
    if steps < 1:
        raise UsageError(f"Invalid steps: {steps}. Must be at least 1")

    logger.info(f"Running rule {rule.rule.value} ({rule.boundary.value}) for {steps} steps, n={initial.n}")
    rows_x = np.empty((steps + 1, initial.n), dtype=np.uint8)
    rows_y = np.empty((steps + 1, initial.n), dtype=np.uint8)
    x, y = initial.x, initial.y
    rows_x[0], rows_y[0] = x, y
    for k in range(1, steps + 1):
        x, y = step_arrays(x, y, rule)
        rows_x[k], rows_y[k] = x, y

    activity = ActivitySeries(
        excited_x=np.count_nonzero(rows_x == EXCITED, axis=1),
        excited_y=np.count_nonzero(rows_y == EXCITED, axis=1),
    )
    return RunResult(SpaceTimeDiagram('x', rows_x), SpaceTimeDiagram('y', rows_y), activity)
