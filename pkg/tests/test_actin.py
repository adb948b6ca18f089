"""
Tests for the two-chain actin automaton.

The per-node oracle below evaluates the neighbourhood tuples and predicates
literally, one node at a time, and is compared with the vectorised kernel
exhaustively for short chains and on random configurations for long ones.
"""

import itertools
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the parent directory to the path so we can import physarum_workbench
sys.path.append(str(Path(__file__).parent.parent))

from physarum_workbench.actin import (EXCITED, REFRACTORY, RESTING, ChainPair, NodeState, RuleSpec,
                                      SpaceTimeDiagram, neighborhood, place_sources, random_init, run,
                                      sigma, step, step_arrays)
from physarum_workbench.errors import UsageError
from physarum_workbench.seeding import make_rng
from physarum_workbench.writers import read_pgm

RULES = ['c1', 'c2', 'c3']
BOUNDARIES = ['fixed', 'periodic']

R, E, F = NodeState.RESTING, NodeState.EXCITED, NodeState.REFRACTORY


def oracle_step(x, y, rule, boundary):
    """Definition-literal synchronous update of both chains."""
    n = len(x)

    def node(chain, j):
        if boundary == 'periodic':
            return chain[j % n]
        return chain[j] if 0 <= j < n else 0

    def fires(count, chain_id):
        if rule == 'c1' or (rule == 'c3' and chain_id == 'x'):
            return count >= 1
        return count == 1

    def advance(state, count, chain_id):
        if state == 1:
            return 2
        if state == 2:
            return 0
        return 1 if fires(count, chain_id) else 0

    new_x, new_y = [], []
    for i in range(n):
        count_x = [node(x, i - 1), node(x, i + 1), node(y, i - 1), node(y, i)].count(1)
        count_y = [node(y, i - 1), node(y, i + 1), node(x, i), node(x, i + 1)].count(1)
        new_x.append(advance(x[i], count_x, 'x'))
        new_y.append(advance(y[i], count_y, 'y'))
    return new_x, new_y


def test_neighborhood_quiescent():
    config = ChainPair.quiescent(5)
    assert neighborhood(config, 'x', 2) == (R, R, R, R)


def test_neighborhood_chain_y_reads_x_offset():
    config = ChainPair.from_strings("◦◦+◦◦", "◦◦◦◦◦")
    assert neighborhood(config, 'y', 1) == (R, R, R, E)


def test_neighborhood_fixed_boundary_fill():
    config = ChainPair.from_strings("−+◦◦+", "+◦◦◦−")
    assert neighborhood(config, 'x', 0, 'fixed') == (R, E, R, E)
    assert neighborhood(config, 'x', 0, 'periodic') == (E, E, F, E)
    assert neighborhood(config, 'y', 4, 'fixed') == (R, R, E, R)


def test_neighborhood_index_out_of_range():
    with pytest.raises(UsageError):
        neighborhood(ChainPair.quiescent(5), 'x', 5)
    with pytest.raises(UsageError):
        neighborhood(ChainPair.quiescent(5), 'z', 0)


def test_sigma_counts_excited():
    assert sigma((R, R, R, R)) == 0
    assert sigma((E, F, R, E)) == 2
    assert sigma((E, E, E, E)) == 4


def test_quiescence_is_fixed_point():
    config = ChainPair.quiescent(5)
    for rule in RULES:
        for boundary in BOUNDARIES:
            nxt = step(config, RuleSpec(rule, boundary))
            assert np.array_equal(nxt.x, config.x) and np.array_equal(nxt.y, config.y)
            assert nxt.t == 1


def test_single_source_c1_step():
    config = ChainPair.from_strings("◦◦+◦◦", "◦◦◦◦◦")
    expected = ChainPair.from_strings("◦+−+◦", "◦++◦◦", t=1)
    assert step(config, RuleSpec('c1', 'fixed')) == expected
    assert step(config, RuleSpec('c2', 'fixed')) == expected


def test_c1_and_c2_agree_on_sparse_configuration():
    config = place_sources(50, [5, 20, 40])
    assert step(config, RuleSpec('c1')) == step(config, RuleSpec('c2'))


def test_c1_and_c2_diverge_when_two_neighbours_fire():
    # x_2 sees x_1 and x_3 excited
    config = ChainPair.from_strings("◦+◦+◦", "◦◦◦◦◦")
    assert step(config, RuleSpec('c1')).x[2] == EXCITED
    assert step(config, RuleSpec('c2')).x[2] == RESTING


@pytest.mark.parametrize("n", [2, 3, 4])
def test_step_matches_oracle_exhaustively(n):
    configs = np.array(list(itertools.product(range(3), repeat=2 * n)), dtype=np.uint8)
    xs, ys = configs[:, :n], configs[:, n:]
    for rule in RULES:
        for boundary in BOUNDARIES:
            new_x, new_y = step_arrays(xs, ys, RuleSpec(rule, boundary))
            for k in range(configs.shape[0]):
                ox, oy = oracle_step(xs[k].tolist(), ys[k].tolist(), rule, boundary)
                assert new_x[k].tolist() == ox and new_y[k].tolist() == oy, (rule, boundary, xs[k], ys[k])


def _random_batch(count, n, seed):
    states = make_rng(seed).integers(0, 3, size=(count, 2, n)).astype(np.uint8)
    return states[:, 0], states[:, 1]


def test_step_matches_oracle_random_long_chains():
    xs, ys = _random_batch(200, 64, seed=11)
    for rule in RULES:
        for boundary in BOUNDARIES:
            new_x, new_y = step_arrays(xs, ys, RuleSpec(rule, boundary))
            for k in range(xs.shape[0]):
                ox, oy = oracle_step(xs[k].tolist(), ys[k].tolist(), rule, boundary)
                assert new_x[k].tolist() == ox and new_y[k].tolist() == oy


@pytest.mark.slow
def test_step_matches_oracle_ten_thousand_configurations():
    xs, ys = _random_batch(10000, 64, seed=12)
    for rule in RULES:
        for boundary in BOUNDARIES:
            new_x, new_y = step_arrays(xs, ys, RuleSpec(rule, boundary))
            for k in range(xs.shape[0]):
                ox, oy = oracle_step(xs[k].tolist(), ys[k].tolist(), rule, boundary)
                assert new_x[k].tolist() == ox and new_y[k].tolist() == oy


def test_batch_step_equals_single_steps():
    xs, ys = _random_batch(20, 30, seed=3)
    rule = RuleSpec('c3', 'periodic')
    new_x, new_y = step_arrays(xs, ys, rule)
    for k in range(20):
        single = step(ChainPair(xs[k], ys[k]), rule)
        assert np.array_equal(single.x, new_x[k]) and np.array_equal(single.y, new_y[k])


def test_refractory_law():
    for seed in range(5):
        config = random_init(80, seed=seed)
        for rule in RULES:
            nxt = step(config, RuleSpec(rule))
            for old, new in ((config.x, nxt.x), (config.y, nxt.y)):
                assert np.all(new[old == EXCITED] == REFRACTORY)
                assert np.all(new[old == REFRACTORY] == RESTING)


def test_locality():
    base = random_init(64, seed=5)
    x = base.x.copy()
    x[30] = (x[30] + 1) % 3
    changed = ChainPair(x, base.y)
    rule = RuleSpec('c1')
    a, b = base, changed
    for k in range(1, 8):
        a, b = step(a, rule), step(b, rule)
        differing = np.flatnonzero((a.x != b.x) | (a.y != b.y))
        assert np.all(np.abs(differing - 30) <= k)


@pytest.mark.parametrize("rule", RULES)
def test_periodic_translation_equivariance(rule):
    config = random_init(40, seed=9)
    spec = RuleSpec(rule, 'periodic')
    for k in (1, 7, 39):
        assert step(config.rotated(k), spec) == step(config, spec).rotated(k)


def test_random_init_all_resting():
    config = random_init(50, p_excited=0.0, p_refractory=0.0, seed=1)
    assert np.all(config.x == RESTING) and np.all(config.y == RESTING)


def test_random_init_fractions():
    config = random_init(10000, seed=4)
    states = np.concatenate((config.x, config.y))
    assert abs(np.mean(states == EXCITED) - 0.25) < 0.02
    assert abs(np.mean(states == REFRACTORY) - 0.25) < 0.02


def test_random_init_deterministic():
    assert random_init(100, seed=42) == random_init(100, seed=42)
    assert random_init(100, seed=42) != random_init(100, seed=43)


def test_random_init_rejects_bad_probabilities():
    with pytest.raises(UsageError):
        random_init(10, p_excited=0.7, p_refractory=0.5)
    with pytest.raises(UsageError):
        random_init(10, p_excited=-0.1)
    with pytest.raises(UsageError):
        random_init(1)


def test_chain_pair_validation():
    with pytest.raises(UsageError):
        ChainPair([0, 1, 0], [0, 1])
    with pytest.raises(UsageError):
        ChainPair([0, 3], [0, 0])
    with pytest.raises(UsageError):
        ChainPair.from_strings("◦x", "◦◦")


def test_run_quiescent():
    result = run(ChainPair.quiescent(20), RuleSpec('c2'), steps=50)
    assert result.x.steps == 50 and result.x.rows.shape == (51, 20)
    assert np.all(result.x.rows == RESTING) and np.all(result.y.rows == RESTING)
    assert result.activity.to_frame()['excited_x'].sum() == 0


def test_run_rows_follow_step():
    initial = random_init(30, seed=8)
    rule = RuleSpec('c3')
    result = run(initial, rule, steps=10)
    config = initial
    for k in range(11):
        assert np.array_equal(result.x.rows[k], config.x)
        assert np.array_equal(result.y.rows[k], config.y)
        config = step(config, rule)


def test_run_rejects_zero_steps():
    with pytest.raises(UsageError):
        run(ChainPair.quiescent(5), steps=0)


def test_single_source_waves_leave_the_chain():
    n = 101
    result = run(place_sources(n, [n // 2]), RuleSpec('c1', 'fixed'), steps=60)
    rows = result.x.rows
    assert np.any(rows[:, 0] == EXCITED) and np.any(rows[:, -1] == EXCITED)
    assert np.all(rows[-1] == RESTING) and np.all(result.y.rows[-1] == RESTING)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_c1_waves_annihilate(k):
    n = 400
    for seed in range(100):
        positions = make_rng(seed).choice(np.arange(n // 10, n - n // 10 + 1), size=k, replace=False)
        result = run(place_sources(n, positions.tolist()), RuleSpec('c1', 'fixed'), steps=n)
        assert np.all(result.x.rows[-1] == RESTING), (seed, positions)
        assert np.all(result.y.rows[-1] == RESTING), (seed, positions)


def test_activity_series_bounds_and_frame():
    result = run(random_init(60, seed=2), RuleSpec('c1'), steps=25)
    frame = result.activity.to_frame()
    assert list(frame.columns) == ['step', 'excited_x', 'excited_y']
    assert len(frame) == 26
    assert frame['excited_x'].between(0, 60).all() and frame['excited_y'].between(0, 60).all()
    assert frame['excited_x'].iloc[0] == np.count_nonzero(result.x.rows[0] == EXCITED)


@pytest.mark.slow
def test_c3_chain_x_generates_more_often():
    wins = 0
    for seed in range(10):
        result = run(random_init(500, seed=seed), RuleSpec('c3'), steps=2000)
        if result.activity.mean_excited('x', 500) > result.activity.mean_excited('y', 500):
            wins += 1
    assert wins >= 9


def test_diagram_pgm_palettes(tmp_path):
    config = ChainPair.from_strings("◦+−", "◦◦◦")
    diagram = SpaceTimeDiagram('x', np.array([config.x]))
    image = read_pgm(diagram.to_pgm(tmp_path / "standard.pgm"))
    assert image.tolist() == [[255, 0, 128]]
    two_tone = read_pgm(diagram.to_pgm(tmp_path / "two_tone.pgm", palette='two_tone'))
    assert two_tone.tolist() == [[255, 0, 255]]
    with pytest.raises(UsageError):
        diagram.image('sepia')


def test_diagram_bytes_deterministic(tmp_path):
    first = run(random_init(50, seed=21), RuleSpec('c2'), steps=40)
    second = run(random_init(50, seed=21), RuleSpec('c2'), steps=40)
    a = first.x.to_pgm(tmp_path / "a.pgm").read_bytes()
    b = second.x.to_pgm(tmp_path / "b.pgm").read_bytes()
    assert a == b
    assert a.startswith(b"P5\n50 41\n255\n")
