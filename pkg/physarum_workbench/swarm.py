"""
Multi-agent virtual plasmodium on a discrete lattice.

Agents sense a diffusing chemoattractant field at three forward sensors,
turn towards the strongest reading, step forward and deposit trail.
Stimulus nodes project chemoattractant into the field; once the population
covers a node (strict majority of its engulf disc) the node's projection
is suppressed, reshaping the gradient that guides further growth.

Lattice arrays are indexed [y, x]; an agent at continuous position (x, y)
lives in cell (floor(x), floor(y)).
"""

import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import ndimage

from .errors import ConfigurationError, UsageError
from .seeding import make_rng
from .writers import append_csv_row, write_pgm

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi

NETWORK_SOURCES = ['occupancy', 'trail']

# 'random': any free Moore neighbour; 'uphill': the free neighbour with the
# strongest field, and only when it beats the parent's own cell
SPAWN_RULES = ['random', 'uphill']

# Moore neighbourhood offsets (dx, dy) used for spawning
MOORE_OFFSETS = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]


@dataclass(frozen=True)
class SwarmParams:
    """
    Agent, field and growth parameters.

    The defaults are calibration choices that give visible network
    formation on a 200x200 lattice; angles are in radians.
    """
    sensor_offset: float = 9.0
    sensor_angle: float = np.pi / 4
    rotation_angle: float = np.pi / 4
    step_size: float = 1.0
    deposit_amount: float = 5.0
    diffusion_kernel_size: int = 3
    decay_factor: float = 0.9
    occupancy_limit: int = 1
    growth_radius: int = 4
    growth_min: int = 1
    growth_max: int = 10
    death_min: int = 40
    death_max: int = 80
    test_probability: float = 0.05
    spawn_rule: str = 'random'
    engulf_radius: float = 3.0
    suppression_factor: float = 0.0
    suppression_permanent: bool = False
    network_source: str = 'occupancy'
    network_threshold: float = 0.5

    def __post_init__(self):
        for name in ('sensor_offset', 'step_size', 'deposit_amount', 'engulf_radius', 'network_threshold'):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"Invalid {name}: {getattr(self, name)}. Must be > 0")
        for name in ('sensor_angle', 'rotation_angle'):
            if not 0 < getattr(self, name) <= np.pi:
                raise ConfigurationError(f"Invalid {name}: {getattr(self, name)}. Must be in (0, pi]")
        if self.diffusion_kernel_size < 1 or self.diffusion_kernel_size % 2 == 0:
            raise ConfigurationError(
                f"Invalid diffusion_kernel_size: {self.diffusion_kernel_size}. Must be a positive odd integer")
        if not 0 < self.decay_factor < 1:
            raise ConfigurationError(f"Invalid decay_factor: {self.decay_factor}. Must be in (0, 1)")
        if self.occupancy_limit < 1:
            raise ConfigurationError(f"Invalid occupancy_limit: {self.occupancy_limit}. Must be >= 1")
        if self.growth_radius < 1:
            raise ConfigurationError(f"Invalid growth_radius: {self.growth_radius}. Must be >= 1")
        if not 0 <= self.growth_min <= self.growth_max:
            raise ConfigurationError(f"Invalid growth range: [{self.growth_min}, {self.growth_max}]")
        if not 0 <= self.death_min <= self.death_max:
            raise ConfigurationError(f"Invalid death range: [{self.death_min}, {self.death_max}]")
        if not 0 <= self.test_probability <= 1:
            raise ConfigurationError(f"Invalid test_probability: {self.test_probability}. Must be in [0, 1]")
        if self.spawn_rule not in SPAWN_RULES:
            raise ConfigurationError(f"Invalid spawn_rule: {self.spawn_rule}. Must be one of {SPAWN_RULES}")
        if not 0 <= self.suppression_factor < 1:
            raise ConfigurationError(f"Invalid suppression_factor: {self.suppression_factor}. Must be in [0, 1)")
        if self.network_source not in NETWORK_SOURCES:
            raise ConfigurationError(
                f"Invalid network_source: {self.network_source}. Must be one of {NETWORK_SOURCES}")

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Dict) -> "SwarmParams":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigurationError(f"Unknown swarm parameters: {sorted(unknown)}")
        return cls(**values)


@dataclass
class Agent:
    x: float
    y: float
    heading: float

    @property
    def cell(self) -> Tuple[int, int]:
        return int(self.x), int(self.y)


@dataclass
class StimulusNode:
    """
    Chemoattractant source at a lattice cell.

    Attributes:
        x, y: Cell coordinates
        projection_value: Field units added per step while unsuppressed
        suppressed: Whether the population has engulfed the node
    """
    x: int
    y: int
    projection_value: float
    suppressed: bool = False

    def effective_projection(self, params: SwarmParams) -> float:
        if self.suppressed:
            return self.projection_value * params.suppression_factor
        return self.projection_value


@dataclass
class SwarmWorld:
    """
    Complete simulation state.

    Attributes:
        width, height: Lattice dimensions
        field: (height, width) chemoattractant / trail values, finite and >= 0
        occupancy: (height, width) agents per cell
        agents: Agent population
        nodes: Stimulus nodes
        params: Parameters the world was built with
        rng: Seeded generator; every random draw of the run comes from it
        t: Step counter
        events: (t, node index, 'suppressed' | 'released') transitions
    """
    width: int
    height: int
    field: np.ndarray
    occupancy: np.ndarray
    agents: List[Agent]
    nodes: List[StimulusNode]
    params: SwarmParams
    rng: np.random.Generator
    t: int = 0
    events: List[Tuple[int, int, str]] = field(default_factory=list)
    node_discs: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list, repr=False)

    @property
    def population(self) -> int:
        return len(self.agents)

    def field_mass(self) -> float:
        return float(self.field.sum())

    def nodes_suppressed(self) -> int:
        return sum(node.suppressed for node in self.nodes)

    def in_bounds(self, x: float, y: float) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


def disc_cells(cx: int, cy: int, radius: float, width: int, height: int) -> Tuple[np.ndarray, np.ndarray]:
    """In-bounds cells (ys, xs) with dx^2 + dy^2 <= radius^2 around (cx, cy)."""
    reach = int(np.floor(radius))
    dy, dx = np.mgrid[-reach:reach + 1, -reach:reach + 1]
    inside = dx ** 2 + dy ** 2 <= radius ** 2
    xs, ys = cx + dx[inside], cy + dy[inside]
    keep = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    return ys[keep], xs[keep]


def _normalize_heading(heading: float) -> float:
    heading = heading % TWO_PI
    return 0.0 if heading >= TWO_PI else heading


def init_world(dims: Tuple[int, int], nodes: Sequence[Union[StimulusNode, Tuple[int, int, float]]],
               inoculation: Tuple[int, int], params: Optional[SwarmParams] = None,
               seed: int = 0) -> SwarmWorld:
    """
    Build a world with a zero field and an inoculated population.

    Agents are placed at cell centres inside the engulf disc of the
    inoculation node, at most occupancy_limit per cell, with random headings.
    A node whose disc the inoculum already covers starts suppressed; it
    never projects, so no event is logged for it.

    Args:
        dims: (width, height) of the lattice
        nodes: Stimulus nodes or (x, y, projection_value) tuples
        inoculation: (node index, population size)
        params: Swarm parameters, defaults when omitted
        seed: Generator seed

    Raises:
        ConfigurationError: On an empty node list, a node outside the
                            lattice, or a population the inoculation disc
                            cannot hold
    """
    params = params or SwarmParams()
    width, height = int(dims[0]), int(dims[1])
    if width < 1 or height < 1:
        raise ConfigurationError(f"Invalid lattice dimensions: {dims}. Must be positive")
    if not nodes:
        raise ConfigurationError("Invalid node list: at least one stimulus node is required")

    stimulus = []
    for node in nodes:
        if not isinstance(node, StimulusNode):
            node = StimulusNode(int(node[0]), int(node[1]), float(node[2]))
        if not (0 <= node.x < width and 0 <= node.y < height):
            raise ConfigurationError(f"Node at ({node.x}, {node.y}) lies outside the {width}x{height} lattice")
        if node.projection_value < 0:
            raise ConfigurationError(f"Invalid projection value: {node.projection_value}. Must be >= 0")
        stimulus.append(StimulusNode(node.x, node.y, node.projection_value))
    positions = [(node.x, node.y) for node in stimulus]
    if len(set(positions)) != len(positions):
        raise ConfigurationError("Invalid node list: two nodes share a cell")

    node_index, population = int(inoculation[0]), int(inoculation[1])
    if not 0 <= node_index < len(stimulus):
        raise ConfigurationError(f"Invalid inoculation node: {node_index}. Must be in 0..{len(stimulus) - 1}")
    if population < 0:
        raise ConfigurationError(f"Invalid population: {population}. Must be >= 0")

    discs = [disc_cells(node.x, node.y, params.engulf_radius, width, height) for node in stimulus]
    ys, xs = discs[node_index]
    capacity = len(xs) * params.occupancy_limit
    if population > capacity:
        raise ConfigurationError(
            f"Overfull inoculation: {population} agents for {capacity} places around node {node_index}")

    rng = make_rng(seed)
    slots = np.tile(np.arange(len(xs)), params.occupancy_limit)
    chosen = slots[rng.choice(slots.size, size=population, replace=False)] if population else slots[:0]
    headings = rng.random(population) * TWO_PI

    occupancy = np.zeros((height, width), dtype=np.int32)
    agents = []
    for slot, heading in zip(chosen.tolist(), headings.tolist()):
        x, y = int(xs[slot]), int(ys[slot])
        agents.append(Agent(x + 0.5, y + 0.5, _normalize_heading(heading)))
        occupancy[y, x] += 1

    for index, (node, (disc_ys, disc_xs)) in enumerate(zip(stimulus, discs)):
        if 2 * int(np.count_nonzero(occupancy[disc_ys, disc_xs])) > len(disc_xs):
            node.suppressed = True
            logger.info(f"Node {index} is engulfed by the inoculum and starts suppressed")

    logger.info(f"Initialised {width}x{height} world with {len(stimulus)} nodes and "
                f"{population} agents at node {node_index} (seed {seed})")
    return SwarmWorld(width, height, np.zeros((height, width)), occupancy, agents, stimulus,
                      params, rng, node_discs=discs)


def _sample(field: np.ndarray, x: float, y: float) -> float:
    height, width = field.shape
    ix = min(max(math.floor(x), 0), width - 1)
    iy = min(max(math.floor(y), 0), height - 1)
    return field[iy, ix]


def sense_and_orient(agent: Agent, field: np.ndarray, params: SwarmParams, rng: np.random.Generator) -> float:
    """
    New heading from the left (h - sensor_angle), front (h) and right
    (h + sensor_angle) sensors.

    A strict maximum on a side turns the agent by rotation_angle towards
    it; a strict front maximum keeps the heading; exact ties are resolved by
    a random choice among the tied sensors.
    """
    readings = []
    for offset in (-params.sensor_angle, 0.0, params.sensor_angle):
        angle = agent.heading + offset
        readings.append(_sample(field,
                                agent.x + params.sensor_offset * math.cos(angle),
                                agent.y + params.sensor_offset * math.sin(angle)))

    best = max(readings)
    tied = [i for i, value in enumerate(readings) if value == best]
    choice = tied[0] if len(tied) == 1 else tied[int(rng.integers(len(tied)))]
    turn = (-params.rotation_angle, 0.0, params.rotation_angle)[choice]
    return _normalize_heading(agent.heading + turn)


def move_and_deposit(agent: Agent, world: SwarmWorld, params: SwarmParams, rng: np.random.Generator) -> bool:
    """
    Advance the agent by step_size along its heading and deposit trail.

    A destination outside the lattice, or a different cell already at
    occupancy_limit, blocks the move: the agent stays put, deposits
    nothing and takes a random heading.

    Returns:
        Whether the agent moved
    """
    x = agent.x + params.step_size * math.cos(agent.heading)
    y = agent.y + params.step_size * math.sin(agent.heading)
    old_cell = agent.cell

    blocked = not world.in_bounds(x, y)
    if not blocked:
        cell = (int(x), int(y))
        blocked = cell != old_cell and world.occupancy[cell[1], cell[0]] >= params.occupancy_limit
    if blocked:
        agent.heading = _normalize_heading(rng.random() * TWO_PI)
        return False

    world.occupancy[old_cell[1], old_cell[0]] -= 1
    world.occupancy[cell[1], cell[0]] += 1
    agent.x, agent.y = float(x), float(y)
    world.field[cell[1], cell[0]] += params.deposit_amount
    return True


def diffuse_and_decay(field: np.ndarray, params: SwarmParams) -> np.ndarray:
    """
    k x k mean filter followed by multiplicative decay.

    Cells outside the lattice count as zero, so border cells keep only the
    in-bounds share of their neighbourhood and total mass never grows.
    """
    k = params.diffusion_kernel_size
    # the k x k box is separable: one 1-D mean per axis
    weights = np.full(k, 1.0 / k)
    rows = ndimage.correlate1d(field, weights, axis=0, mode='constant', cval=0.0)
    return ndimage.correlate1d(rows, weights, axis=1, mode='constant', cval=0.0) * params.decay_factor


def project_and_suppress(world: SwarmWorld, params: Optional[SwarmParams] = None) -> SwarmWorld:
    """
    Update engulfment of every node, then add its effective projection.

    A node is suppressed while occupied cells in its engulf disc are a
    strict majority of the disc's in-bounds cells. Unless
    suppression_permanent is set, the state is re-evaluated every step.
    """
    params = params or world.params
    for index, (node, (ys, xs)) in enumerate(zip(world.nodes, world.node_discs)):
        occupied = int(np.count_nonzero(world.occupancy[ys, xs]))
        engulfed = 2 * occupied > len(xs)
        if node.suppressed and params.suppression_permanent:
            engulfed = True
        if engulfed != node.suppressed:
            node.suppressed = engulfed
            kind = 'suppressed' if engulfed else 'released'
            world.events.append((world.t, index, kind))
            logger.info(f"t={world.t}: node {index} {kind} ({occupied}/{len(xs)} disc cells occupied)")
        world.field[node.y, node.x] += node.effective_projection(params)
    return world


def _occupied_neighbours(occupancy: np.ndarray, radius: int) -> np.ndarray:
    window = np.ones(2 * radius + 1, dtype=np.int32)
    occupied = (occupancy > 0).astype(np.int32)
    rows = ndimage.correlate1d(occupied, window, axis=0, mode='constant', cval=0)
    return ndimage.correlate1d(rows, window, axis=1, mode='constant', cval=0) - occupied


def _spawn_cell(world: SwarmWorld, cx: int, cy: int, params: SwarmParams,
                rng: np.random.Generator) -> Optional[Tuple[int, int]]:
    free = [(cx + dx, cy + dy) for dx, dy in MOORE_OFFSETS
            if 0 <= cx + dx < world.width and 0 <= cy + dy < world.height
            and world.occupancy[cy + dy, cx + dx] < params.occupancy_limit]
    if params.spawn_rule == 'uphill':
        values = [world.field[y, x] for x, y in free]
        best = max(values, default=0.0)
        if not free or not best > world.field[cy, cx]:
            return None
        free = [cell for cell, value in zip(free, values) if value == best]
    if not free:
        return None
    return free[int(rng.integers(len(free)))]


def reproduce_and_die(world: SwarmWorld, params: Optional[SwarmParams] = None,
                      rng: Optional[np.random.Generator] = None) -> SwarmWorld:
    """
    Growth and shrinkage of the population.

    Each agent is tested with test_probability. Occupied cells within
    growth_radius (Chebyshev window, own cell excluded) are counted from the
    occupancy at the start of the pass. A count in the death range removes
    the agent; otherwise a count in the growth range spawns a new agent in a
    Moore-neighbour cell that still has room. Under spawn_rule 'random' the
    cell is drawn uniformly; under 'uphill' it is the free cell with the
    strongest field (ties drawn at random), and the agent only spawns when
    that cell is strictly stronger than its own.
    """
    params = params or world.params
    rng = rng or world.rng
    if not world.agents or params.test_probability == 0:
        return world

    tested = rng.random(len(world.agents)) < params.test_probability
    if not tested.any():
        return world
    counts = _occupied_neighbours(world.occupancy, params.growth_radius)

    survivors, born = [], []
    for agent, is_tested in zip(world.agents, tested.tolist()):
        if not is_tested:
            survivors.append(agent)
            continue
        cx, cy = agent.cell
        count = int(counts[cy, cx])
        if params.death_min <= count <= params.death_max:
            world.occupancy[cy, cx] -= 1
            continue
        survivors.append(agent)
        if params.growth_min <= count <= params.growth_max:
            cell = _spawn_cell(world, cx, cy, params, rng)
            if cell is not None:
                nx_, ny_ = cell
                world.occupancy[ny_, nx_] += 1
                born.append(Agent(nx_ + 0.5, ny_ + 0.5, _normalize_heading(rng.random() * TWO_PI)))

    if born or len(survivors) != len(world.agents):
        logger.debug(f"t={world.t}: {len(born)} born, {len(world.agents) - len(survivors)} died")
    world.agents = survivors + born
    return world


def step_world(world: SwarmWorld, params: Optional[SwarmParams] = None) -> SwarmWorld:
    """
    One update cycle: project and suppress; every agent in a random order
    senses then moves; diffuse and decay; reproduce and die; advance t.
    """
    params = params or world.params
    rng = world.rng
    project_and_suppress(world, params)
    for i in rng.permutation(len(world.agents)).tolist():
        agent = world.agents[i]
        agent.heading = sense_and_orient(agent, world.field, params, rng)
        move_and_deposit(agent, world, params, rng)
    world.field = diffuse_and_decay(world.field, params)
    reproduce_and_die(world, params, rng)
    world.t += 1
    return world


def _field_image(field: np.ndarray) -> np.ndarray:
    peak = float(field.max()) if field.size else 0.0
    if peak <= 0:
        return np.full(field.shape, 255, dtype=np.uint8)
    scaled = np.log1p(field) / np.log1p(peak)
    return np.round(255.0 - 255.0 * scaled).astype(np.uint8)


def snapshot(world: SwarmWorld, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """
    Write agent and field frames for the current step and append a metrics row.

    Frames are agents_<t>.pgm (occupied cells black) and field_<t>.pgm
    (log-scaled, darker is stronger, all white for a zero field). The row
    (t, population, nodes_suppressed, field_mass) goes to metrics.csv.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    agents_image = np.where(world.occupancy > 0, 0, 255).astype(np.uint8)
    written = {
        'agents': write_pgm(out_dir / f"agents_{world.t:06d}.pgm", agents_image),
        'field': write_pgm(out_dir / f"field_{world.t:06d}.pgm", _field_image(world.field)),
        'metrics': append_csv_row(out_dir / "metrics.csv", {
            't': world.t,
            'population': world.population,
            'nodes_suppressed': world.nodes_suppressed(),
            'field_mass': world.field_mass(),
        }),
    }
    return written


def _trace_row(world: SwarmWorld) -> Tuple[int, int, int, float]:
    return world.t, world.population, world.nodes_suppressed(), world.field_mass()


def run_world(world: SwarmWorld, steps: int, snapshot_every: int = 0,
              out_dir: Optional[Union[str, Path]] = None):
    """
    Advance a world and record its evolution.

    Snapshots are taken at t=0, every `snapshot_every` steps and at the end.
    When out_dir is given, events.csv, the per-step trace.csv (t,
    population, nodes_suppressed, field_mass) and the extracted
    network.json are written there as well.

    Returns:
        (network graph, network report) of the final state
    """
    from .network import extract_network

    if steps < 0:
        raise UsageError(f"Invalid steps: {steps}. Must be >= 0")
    if snapshot_every < 0:
        raise UsageError(f"Invalid snapshot interval: {snapshot_every}. Must be >= 0")

    last_snapshot = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        snapshot(world, out_dir)
        last_snapshot = world.t
    trace = [_trace_row(world)]

    for _ in range(steps):
        step_world(world)
        trace.append(_trace_row(world))
        if out_dir is not None and snapshot_every and world.t % snapshot_every == 0:
            snapshot(world, out_dir)
            last_snapshot = world.t

    graph, report = extract_network(world)
    if out_dir is not None:
        if last_snapshot != world.t:
            snapshot(world, out_dir)
        pd.DataFrame(world.events, columns=['t', 'node', 'event']).to_csv(out_dir / "events.csv", index=False)
        pd.DataFrame(trace, columns=['t', 'population', 'nodes_suppressed', 'field_mass']).to_csv(
            out_dir / "trace.csv", index=False)
        graph.write_json(out_dir / "network.json")

    logger.info(f"✅ Swarm finished at t={world.t}: population {world.population}, "
                f"{world.nodes_suppressed()}/{len(world.nodes)} nodes suppressed, "
                f"{report.component_count} blob components")
    return graph, report
