"""
Tests for the agent swarm: sensing, movement, field dynamics, engulfment,
growth and the snapshot writers.
"""

import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add the parent directory to the path so we can import physarum_workbench
sys.path.append(str(Path(__file__).parent.parent))

from scipy import ndimage

from physarum_workbench.errors import ConfigurationError, UsageError
from physarum_workbench.network import extract_network
from physarum_workbench.seeding import make_rng
from physarum_workbench.swarm import (TWO_PI, Agent, SwarmParams, diffuse_and_decay, disc_cells, init_world,
                                      move_and_deposit, project_and_suppress, reproduce_and_die, run_world,
                                      sense_and_orient, snapshot, step_world)
from physarum_workbench.writers import read_pgm

PARAMS = SwarmParams()


def empty_world(width=40, height=40, nodes=((20, 20, 10.0),), params=PARAMS, seed=0):
    return init_world((width, height), list(nodes), (0, 0), params, seed)


def place(world, x, y, heading=0.0):
    agent = Agent(x + 0.5, y + 0.5, heading)
    world.agents.append(agent)
    world.occupancy[y, x] += 1
    return agent


def assert_consistent(world):
    expected = np.zeros_like(world.occupancy)
    for agent in world.agents:
        cx, cy = agent.cell
        assert 0 <= cx < world.width and 0 <= cy < world.height
        expected[cy, cx] += 1
    assert np.array_equal(expected, world.occupancy)
    assert world.occupancy.max(initial=0) <= world.params.occupancy_limit


# --- parameters and initialisation -------------------------------------------

@pytest.mark.parametrize("overrides", [
    {'decay_factor': 1.0},
    {'decay_factor': 0.0},
    {'diffusion_kernel_size': 4},
    {'sensor_angle': 0.0},
    {'occupancy_limit': 0},
    {'growth_min': 5, 'growth_max': 2},
    {'test_probability': 1.5},
    {'network_source': 'pressure'},
    {'spawn_rule': 'sideways'},
])
def test_params_validation(overrides):
    with pytest.raises(ConfigurationError):
        SwarmParams(**overrides)


def test_params_dict_round_trip():
    params = SwarmParams(sensor_offset=7.0, suppression_permanent=True)
    assert SwarmParams.from_dict(params.to_dict()) == params
    with pytest.raises(ConfigurationError):
        SwarmParams.from_dict({'sensor_distance': 3})


def test_disc_cells_counts():
    ys, xs = disc_cells(10, 10, 3.0, 21, 21)
    assert len(xs) == 29
    ys, xs = disc_cells(0, 0, 2.0, 21, 21)
    assert len(xs) == 6


def test_init_world_without_agents():
    world = empty_world()
    assert world.population == 0
    assert world.field_mass() == 0.0
    assert world.t == 0
    assert not any(node.suppressed for node in world.nodes)


def test_init_world_places_agents_in_engulf_disc():
    params = SwarmParams(occupancy_limit=4)
    world = init_world((60, 60), [(30, 30, 5.0), (10, 50, 5.0)], (0, 100), params, seed=11)
    assert world.population == 100
    for agent in world.agents:
        cx, cy = agent.cell
        assert (cx - 30) ** 2 + (cy - 30) ** 2 <= params.engulf_radius ** 2
        assert agent.x == cx + 0.5 and agent.y == cy + 0.5
        assert 0 <= agent.heading < TWO_PI
    assert_consistent(world)


def test_init_world_is_deterministic():
    a = init_world((50, 50), [(25, 25, 5.0)], (0, 20), seed=4)
    b = init_world((50, 50), [(25, 25, 5.0)], (0, 20), seed=4)
    assert [(g.x, g.y, g.heading) for g in a.agents] == [(g.x, g.y, g.heading) for g in b.agents]


def test_init_world_rejects_bad_layouts():
    with pytest.raises(ConfigurationError):
        init_world((40, 40), [(20, 20, 5.0)], (0, 30))
    with pytest.raises(ConfigurationError):
        init_world((40, 40), [(45, 20, 5.0)], (0, 1))
    with pytest.raises(ConfigurationError):
        init_world((40, 40), [], (0, 1))
    with pytest.raises(ConfigurationError):
        init_world((40, 40), [(20, 20, 5.0)], (1, 1))


def test_inoculum_covering_node_starts_suppressed():
    params = SwarmParams(engulf_radius=1.0)
    world = init_world((30, 30), [(10, 10, 5.0), (20, 20, 5.0)], (0, 3), params, seed=0)
    assert len(world.node_discs[0][0]) == 5
    assert world.nodes[0].suppressed and not world.nodes[1].suppressed
    project_and_suppress(world)
    assert world.field[10, 10] == 0.0
    assert world.field[20, 20] == 5.0
    assert world.events == []


def test_minority_inoculum_leaves_node_active():
    params = SwarmParams(engulf_radius=1.0)
    world = init_world((30, 30), [(10, 10, 5.0)], (0, 2), params, seed=0)
    assert not world.nodes[0].suppressed
    project_and_suppress(world)
    assert world.field[10, 10] == 5.0


# --- sensing -------------------------------------------------------------------

def test_sense_turns_towards_strongest_side():
    field = np.zeros((100, 100))
    field[44, 56] = 2.0   # left sensor, heading - 45 degrees
    field[50, 59] = 1.0   # front
    field[56, 56] = 0.5   # right
    agent = Agent(50.5, 50.5, 0.0)
    heading = sense_and_orient(agent, field, PARAMS, make_rng(0))
    assert heading == pytest.approx(TWO_PI - PARAMS.rotation_angle)


def test_sense_keeps_heading_on_front_maximum():
    field = np.zeros((100, 100))
    field[50, 59] = 1.0
    agent = Agent(50.5, 50.5, 0.0)
    assert sense_and_orient(agent, field, PARAMS, make_rng(0)) == 0.0


def test_sense_follows_gradient():
    xs = np.arange(100, dtype=float)
    field = np.tile(xs, (100, 1))
    agent = Agent(50.5, 50.5, np.pi / 2)
    heading = sense_and_orient(agent, field, PARAMS, make_rng(0))
    assert heading == pytest.approx(np.pi / 4)
    assert np.cos(heading) > np.cos(agent.heading)


def test_sense_resolves_ties_randomly():
    field = np.ones((100, 100))
    agent = Agent(50.5, 50.5, 1.0)
    rng = make_rng(3)
    headings = {round(sense_and_orient(agent, field, PARAMS, rng), 9) for _ in range(200)}
    expected = {round(1.0 + turn, 9) for turn in (-PARAMS.rotation_angle, 0.0, PARAMS.rotation_angle)}
    assert headings == expected


# --- movement -------------------------------------------------------------------

def test_lone_agent_moves_and_deposits():
    world = empty_world()
    agent = place(world, 10, 10, heading=0.0)
    assert move_and_deposit(agent, world, PARAMS, world.rng)
    assert agent.cell == (11, 10)
    assert world.occupancy[10, 11] == 1 and world.occupancy[10, 10] == 0
    assert world.field[10, 11] == PARAMS.deposit_amount
    assert world.field_mass() == PARAMS.deposit_amount


def test_occupied_destination_blocks_move():
    world = empty_world()
    agent = place(world, 10, 10, heading=0.0)
    place(world, 11, 10)
    assert not move_and_deposit(agent, world, PARAMS, world.rng)
    assert agent.cell == (10, 10) and (agent.x, agent.y) == (10.5, 10.5)
    assert world.field_mass() == 0.0
    assert_consistent(world)


def test_border_blocks_move():
    world = empty_world()
    agent = place(world, 0, 5, heading=np.pi)
    assert not move_and_deposit(agent, world, PARAMS, world.rng)
    assert agent.cell == (0, 5)
    assert 0 <= agent.heading < TWO_PI


def test_move_within_own_cell_is_allowed():
    world = empty_world(params=SwarmParams(step_size=0.2))
    agent = place(world, 10, 10, heading=0.0)
    assert move_and_deposit(agent, world, world.params, world.rng)
    assert agent.cell == (10, 10)
    assert world.occupancy[10, 10] == 1


# --- diffusion -------------------------------------------------------------------

def test_diffuse_zero_field():
    assert not np.any(diffuse_and_decay(np.zeros((20, 20)), PARAMS))


def test_diffuse_single_interior_cell():
    field = np.zeros((11, 11))
    field[5, 5] = 9.0
    out = diffuse_and_decay(field, PARAMS)
    expected = np.zeros((11, 11))
    expected[4:7, 4:7] = 9.0 / 9.0 * PARAMS.decay_factor
    np.testing.assert_allclose(out, expected)
    assert out.sum() == pytest.approx(PARAMS.decay_factor * field.sum())


def test_diffuse_matches_full_box_filter():
    params = SwarmParams(diffusion_kernel_size=5, decay_factor=0.8)
    field = make_rng(9).random((25, 31)) * 4
    expected = ndimage.correlate(field, np.full((5, 5), 1.0 / 25), mode='constant', cval=0.0) * 0.8
    np.testing.assert_allclose(diffuse_and_decay(field, params), expected, atol=1e-12)


def test_diffuse_never_gains_mass():
    field = make_rng(2).random((30, 30)) * 10
    field[0, :] = 50.0
    out = diffuse_and_decay(field, PARAMS)
    assert out.sum() <= PARAMS.decay_factor * field.sum() + 1e-9
    assert out.min() >= 0


def test_zero_agent_field_converges():
    world = empty_world(width=41, height=41, nodes=((20, 20, 10.0),))
    masses = []
    for _ in range(400):
        previous = world.field.copy()
        step_world(world)
        masses.append(world.field_mass())
    bound = 10.0 * PARAMS.decay_factor / (1 - PARAMS.decay_factor)
    assert max(masses) <= bound + 1e-9
    assert np.max(np.abs(world.field - previous)) < 1e-6


# --- engulfment -------------------------------------------------------------------

def test_uncovered_node_projects():
    world = empty_world(width=21, height=21, nodes=((10, 10, 7.0),))
    project_and_suppress(world)
    assert world.field[10, 10] == 7.0
    assert world.events == []


def test_covered_node_is_suppressed():
    world = empty_world(width=21, height=21, nodes=((10, 10, 7.0),))
    ys, xs = world.node_discs[0]
    world.occupancy[ys, xs] = 1
    project_and_suppress(world)
    assert world.nodes[0].suppressed
    assert world.field[10, 10] == 0.0
    assert world.events == [(0, 0, 'suppressed')]


def test_exact_half_coverage_is_not_a_majority():
    params = SwarmParams(engulf_radius=2.0)
    world = empty_world(width=21, height=21, nodes=((0, 0, 7.0),), params=params)
    ys, xs = world.node_discs[0]
    assert len(xs) == 6
    world.occupancy[ys[:3], xs[:3]] = 1
    project_and_suppress(world)
    assert not world.nodes[0].suppressed
    world.occupancy[ys[:4], xs[:4]] = 1
    project_and_suppress(world)
    assert world.nodes[0].suppressed


def test_suppression_released_unless_permanent():
    for permanent in (False, True):
        params = SwarmParams(suppression_permanent=permanent, suppression_factor=0.5)
        world = empty_world(width=21, height=21, nodes=((10, 10, 8.0),), params=params)
        ys, xs = world.node_discs[0]
        world.occupancy[ys, xs] = 1
        project_and_suppress(world)
        assert world.field[10, 10] == 4.0
        world.occupancy[:] = 0
        world.t = 1
        project_and_suppress(world)
        assert world.nodes[0].suppressed == permanent
        if permanent:
            assert world.events == [(0, 0, 'suppressed')]
        else:
            assert world.events == [(0, 0, 'suppressed'), (1, 0, 'released')]


# --- growth and shrinkage -------------------------------------------------------

def test_reproduce_on_empty_world():
    world = empty_world()
    reproduce_and_die(world)
    assert world.population == 0


def test_no_testing_keeps_population():
    world = init_world((40, 40), [(20, 20, 5.0)], (0, 20), SwarmParams(test_probability=0.0), seed=1)
    for _ in range(10):
        reproduce_and_die(world)
    assert world.population == 20


def test_isolated_agent_dies_when_zero_is_in_death_range():
    params = SwarmParams(test_probability=1.0, death_min=0, death_max=0)
    world = empty_world(params=params)
    place(world, 5, 5)
    reproduce_and_die(world)
    assert world.population == 0
    assert world.occupancy.sum() == 0


def test_isolated_agent_spawns_into_moore_neighbourhood():
    params = SwarmParams(test_probability=1.0, growth_min=0, growth_max=0)
    world = empty_world(params=params)
    place(world, 5, 5)
    reproduce_and_die(world)
    assert world.population == 2
    child = world.agents[1].cell
    assert max(abs(child[0] - 5), abs(child[1] - 5)) == 1
    assert_consistent(world)


def test_crowded_agent_dies_before_growing():
    params = SwarmParams(test_probability=1.0, growth_radius=1, growth_min=0, growth_max=100,
                         death_min=8, death_max=8)
    world = empty_world(params=params)
    block = [place(world, 10 + dx, 10 + dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1)]
    centre = block[4]
    reproduce_and_die(world)
    # only the centre sees 8 occupied neighbours; corners see 3, edges 5
    assert all(agent is not centre for agent in world.agents)
    assert all(any(agent is survivor for agent in world.agents) for survivor in block if survivor is not centre)
    assert world.population > 8
    assert_consistent(world)


def test_uphill_spawn_picks_strongest_free_cell():
    params = SwarmParams(test_probability=1.0, growth_min=0, growth_max=0, spawn_rule='uphill')
    world = empty_world(params=params)
    place(world, 5, 5)
    world.field[5, 6] = 3.0
    world.field[6, 6] = 2.0
    reproduce_and_die(world)
    assert world.population == 2
    assert world.agents[1].cell == (6, 5)
    assert_consistent(world)


def test_uphill_spawn_needs_a_stronger_cell():
    params = SwarmParams(test_probability=1.0, growth_min=0, growth_max=0, spawn_rule='uphill')
    world = empty_world(params=params)
    place(world, 5, 5)
    world.field[5, 5] = 3.0
    world.field[5, 6] = 3.0
    world.field[4, 4] = 1.0
    for _ in range(5):
        reproduce_and_die(world)
    assert world.population == 1


def test_uphill_spawn_skips_full_cells():
    params = SwarmParams(test_probability=1.0, growth_min=0, growth_max=8, spawn_rule='uphill')
    world = empty_world(params=params)
    parent = place(world, 5, 5)
    world.occupancy[5, 6] = 1
    world.field[5, 6] = 9.0
    world.field[4, 5] = 2.0
    reproduce_and_die(world, rng=make_rng(0))
    children = [agent for agent in world.agents if agent is not parent]
    assert [child.cell for child in children] == [(5, 4)]


# --- full steps ----------------------------------------------------------------------

def test_step_is_deterministic():
    def run(seed):
        world = init_world((60, 60), [(20, 30, 10.0), (40, 30, 10.0)], (0, 20), seed=seed)
        for _ in range(25):
            step_world(world)
        return world

    a, b = run(7), run(7)
    assert [(g.x, g.y, g.heading) for g in a.agents] == [(g.x, g.y, g.heading) for g in b.agents]
    assert np.array_equal(a.field, b.field)
    assert a.t == 25


def test_occupancy_stays_consistent():
    params = SwarmParams(test_probability=0.2)
    world = init_world((60, 60), [(15, 30, 10.0), (45, 30, 10.0)], (0, 25), params, seed=5)
    for _ in range(100):
        step_world(world)
        assert_consistent(world)
        assert np.all(np.isfinite(world.field)) and world.field.min() >= 0


# --- snapshots ---------------------------------------------------------------------------

def test_snapshot_of_fresh_world(tmp_path):
    world = init_world((30, 20), [(15, 10, 5.0)], (0, 5), seed=0)
    written = snapshot(world, tmp_path)
    field_image = read_pgm(written['field'])
    assert field_image.shape == (20, 30)
    assert np.all(field_image == 255)
    agents_image = read_pgm(written['agents'])
    assert np.count_nonzero(agents_image == 0) == 5


def test_snapshot_field_is_monotone(tmp_path):
    world = empty_world(width=10, height=1, nodes=((0, 0, 1.0),))
    world.field[0, :] = np.arange(10, dtype=float) ** 2
    image = read_pgm(snapshot(world, tmp_path)['field'])[0].astype(int)
    assert image[0] == 255 and image[-1] == 0
    assert np.all(np.diff(image) <= 0)


def test_run_world_writes_frames_and_metrics(tmp_path):
    world = init_world((40, 40), [(10, 20, 10.0), (30, 20, 10.0)], (0, 10), seed=2)
    graph, report = run_world(world, steps=5, snapshot_every=2, out_dir=tmp_path)
    frames = sorted(p.name for p in tmp_path.glob("agents_*.pgm"))
    assert frames == [f"agents_{t:06d}.pgm" for t in (0, 2, 4, 5)]
    metrics = pd.read_csv(tmp_path / "metrics.csv")
    assert metrics['t'].tolist() == [0, 2, 4, 5]
    assert metrics['population'].iloc[-1] == world.population
    assert (tmp_path / "events.csv").exists() and (tmp_path / "network.json").exists()
    trace = pd.read_csv(tmp_path / "trace.csv")
    assert trace['t'].tolist() == list(range(6))
    assert trace['field_mass'].iloc[-1] == pytest.approx(world.field_mass())
    assert graph.n == 2


def test_run_world_rejects_negative_steps():
    with pytest.raises(UsageError):
        run_world(empty_world(), steps=-1)


# --- chain of nodes ----------------------------------------------------------------------

CHAIN_NODES = [(30, 85, 1000.0), (33, 62, 1000.0), (27, 39, 1000.0), (30, 16, 1000.0)]
CHAIN_PARAMS = SwarmParams(step_size=1e-5, deposit_amount=1e-4, diffusion_kernel_size=7, decay_factor=0.95,
                           growth_radius=2, growth_min=0, growth_max=8, death_min=24, death_max=24,
                           test_probability=0.1, spawn_rule='uphill', engulf_radius=1.0)


@pytest.mark.slow
@pytest.mark.parametrize("seed", [0, 1])
def test_chain_is_engulfed_bottom_to_top_as_a_tree(seed):
    world = init_world((60, 100), CHAIN_NODES, (0, 3), CHAIN_PARAMS, seed=seed)
    assert world.nodes[0].suppressed
    masses = []
    for _ in range(4000):
        step_world(world)
        masses.append(world.field_mass())

    assert [(node, kind) for _, node, kind in world.events] == [(1, 'suppressed'), (2, 'suppressed'),
                                                                 (3, 'suppressed')]
    assert all(node.suppressed for node in world.nodes)
    _, report = extract_network(world)
    assert report.all_connected
    assert report.edge_count == 3
    assert report.is_tree
    # the field loses mass within 50 steps of every suppression
    for t, _, _ in world.events:
        assert min(masses[t + 1:t + 51]) < masses[t]
    assert_consistent(world)
