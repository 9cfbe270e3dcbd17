import itertools
import numpy as np
import pytest
from hypothesis import given, strategies as st

from carmc.aiger import parse, simulate_step
from carmc.config import VerdictEnum
from carmc.corpus import CONST0, COUNTER2, TOGGLE, random_aig
from carmc.encoder import encode, reverse
from carmc.oracle import ExplicitSpace, OracleBudgetExceeded, bfs_reach, bmc, simulate_batch


@given(st.integers(min_value=0, max_value=5_000))
def test_batch_simulation_matches_single_steps(seed):
    aig = random_aig(seed, max_latches=4, max_inputs=2, max_ands=12)
    pairs = list(itertools.product(itertools.product((0, 1), repeat=aig.num_latches), itertools.product((0, 1), repeat=aig.num_inputs)))
    states = np.array([state for state, _ in pairs], dtype=bool).reshape(len(pairs), aig.num_latches)
    inputs = np.array([vector for _, vector in pairs], dtype=bool).reshape(len(pairs), aig.num_inputs)
    next_states, bad = simulate_batch(aig, states, inputs)
    for row, (state, vector) in enumerate(pairs):
        successor, expected_bad = simulate_step(aig, state, vector)
        assert tuple(int(bit) for bit in next_states[row]) == successor
        assert bool(bad[row]) == bool(expected_bad)


def test_batch_simulation_rejects_ragged_rows():
    aig = parse(COUNTER2)
    with pytest.raises(ValueError):
        simulate_batch(aig, np.zeros((2, 2), dtype=bool), np.zeros((3, 0), dtype=bool))


def test_bfs_on_hand_models():
    toggle = bfs_reach(parse(TOGGLE))
    assert toggle.kind == VerdictEnum.unsafe
    assert toggle.trace.states == [(0,), (1,)]
    assert toggle.trace.inputs == [(), ()]

    const0 = bfs_reach(parse(CONST0))
    assert const0.kind == VerdictEnum.safe
    assert const0.stats["reachable"] == 1

    counter = bfs_reach(parse(COUNTER2))
    assert counter.trace.states == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_bfs_refuses_large_instances():
    with pytest.raises(OracleBudgetExceeded):
        bfs_reach(parse(COUNTER2), state_budget=2)


def test_bmc_bounds():
    toggle = encode(parse(TOGGLE))
    assert bmc(toggle, 0) is None
    trace = bmc(toggle, 1)
    assert trace.states == [(0,), (1,)]
    assert bmc(encode(parse(CONST0)), 8) is None
    counter = encode(parse(COUNTER2))
    assert bmc(counter, 2) is None
    assert len(bmc(counter, 3)) == 4


def test_bmc_rejects_backward_and_negative_bounds():
    ts = encode(parse(TOGGLE))
    with pytest.raises(ValueError):
        bmc(ts, -1)
    with pytest.raises(ValueError):
        bmc(reverse(ts), 3)


@given(st.integers(min_value=0, max_value=5_000))
def test_bmc_finds_the_shortest_counterexample(seed):
    aig = random_aig(seed, max_latches=3, max_inputs=2, max_ands=10)
    expected = bfs_reach(aig)
    # eight states bound every simple path
    trace = bmc(encode(aig), 8)
    assert (trace is not None) == (expected.kind == VerdictEnum.unsafe)
    if trace is not None:
        assert len(trace) == len(expected.trace)
        assert trace.states[0] == aig.initial_state()


def test_explicit_space_regions(toggle_ts):
    space = ExplicitSpace(toggle_ts)
    low, high = space.cube((-1,)), space.cube((1,))
    assert space.shape == (2, 1)
    assert space.bad_region().tolist() == high.tolist()
    assert space.clauses([(1, -1)]).all()
    assert space.successors_within(low, high)
    assert space.successors_within(high, low)
    assert space.predecessors_of(low, high)
    assert not space.successors_within(low, low)


def test_explicit_space_backward(toggle_ts):
    backward = reverse(toggle_ts)
    space = ExplicitSpace(backward)
    # backward regions are over the post-state copy
    low, high = space.cube((-2,)), space.cube((2,))
    assert space.successors_within(high, low)
    assert space.predecessors_of(low, high)


def test_explicit_space_budget(toggle_ts):
    with pytest.raises(OracleBudgetExceeded):
        ExplicitSpace(toggle_ts, budget=1)
