import pytest
from hypothesis import given, settings, strategies as st

from carmc.aiger import parse
from carmc.config import EngineConfig, PartialAssignmentEnum, UnknownReasonEnum, VerdictEnum
from carmc.corpus import CONST0, COUNTER2, DEADBIT, TOGGLE, TRIVIAL, random_aig
from carmc.encoder import encode, reverse
from carmc.engine import BSeq, CarEngine, Obligation, car_check
from carmc.oracle import bfs_reach


# a goes high and stays, b follows a; bad is b without a
SHIFT = "aag 3 0 2 1 1\n2 1\n4 2\n6\n6 4 3\n"


def _forward(text):
    return encode(parse(text))


def _backward(text):
    return reverse(encode(parse(text)))


def test_toggle_is_caught_before_the_loop(debug_config):
    engine = CarEngine(_forward(TOGGLE), debug_config)
    verdict = engine.check()
    assert verdict.kind == VerdictEnum.unsafe
    assert verdict.trace.states == [(0,), (1,)]
    assert verdict.trace.inputs == [(), ()]
    # step 2 fires, no outer iteration runs
    assert engine.stats == []


def test_const0_is_safe_at_frame_one(debug_config):
    verdict = car_check(_forward(CONST0), debug_config)
    assert verdict.kind == VerdictEnum.safe
    certificate = verdict.certificate
    assert certificate.index == 1
    assert certificate.frames[0] == [("-l0",)]
    assert certificate.frames[1] == [("-l0",)]


def test_counter_trace(debug_config):
    verdict = car_check(_forward(COUNTER2), debug_config)
    assert verdict.kind == VerdictEnum.unsafe
    assert verdict.trace.states == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert len(verdict.trace.inputs) == 4


def test_counter_backward_trace(debug_config):
    verdict = car_check(_backward(COUNTER2), debug_config)
    assert verdict.kind == VerdictEnum.unsafe
    assert verdict.trace.states == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_dead_state_goes_to_f_inf(debug_config):
    engine = CarEngine(_forward(DEADBIT), debug_config)
    verdict = engine.check()
    assert verdict.kind == VerdictEnum.safe
    assert verdict.certificate.index == 1
    assert verdict.certificate.f_inf == [("l0",)]
    assert engine.reasoner.dead_cubes == 1


def test_deadbit_without_dead_states():
    verdict = car_check(_forward(DEADBIT), EngineConfig(dead_states=False, debug_level=2))
    assert verdict.kind == VerdictEnum.safe
    assert verdict.certificate.f_inf == []


def test_constant_false_property_is_safe(debug_config):
    for ts in (_forward(TRIVIAL), _backward(TRIVIAL)):
        verdict = car_check(ts, debug_config)
        assert verdict.kind == VerdictEnum.safe
        assert verdict.certificate.index == 1


def test_explore_on_const0_adds_nothing():
    engine = CarEngine(_forward(CONST0))
    engine.frames.extend(engine.ts.prop)
    engine._m = 1
    assert engine.explore(1) is None
    assert engine.bseq.sizes() == [1]


def test_dfscheck_at_frame_zero_blocks_into_frame_one():
    ts = _forward(COUNTER2)
    engine = CarEngine(ts)
    m = engine.frames.extend(ts.prop)
    engine._m = m
    root = engine.bseq.layers[0][0]
    node = engine.bseq.add(1, (1, 2), root, None)
    assert engine.dfscheck(Obligation(node, 0, 1)) is None
    # no edge from 00 to 11, the high bit alone is blocked
    assert (-1,) in engine.frames.clauses[1]


def test_invariant_found_needs_containment():
    ts = _forward(TOGGLE)
    engine = CarEngine(ts)
    engine.frames.extend(ts.prop)
    # F_1 = not l0 sits inside F_0 = not l0
    assert engine.invariant_found() == 1
    engine = CarEngine(_forward(COUNTER2))
    engine.frames.extend(engine.ts.prop)
    assert engine.invariant_found() is None


def test_duplicate_cubes_are_reused():
    bseq = BSeq((3,))
    root = bseq.layers[0][0]
    first = bseq.add(1, (1, -2), root, None)
    assert bseq.add(1, (1, -2), root, None) is first
    assert bseq.sizes() == [1, 1]
    assert bseq.reused == 1


def test_shift_needs_two_frames(debug_config):
    verdict = car_check(_forward(SHIFT), debug_config)
    assert verdict.kind == VerdictEnum.safe
    assert verdict.certificate.index == 2


def test_frame_limit_gives_unknown():
    verdict = car_check(_forward(SHIFT), EngineConfig(max_frames=1))
    assert verdict.kind == VerdictEnum.unknown
    assert verdict.reason == UnknownReasonEnum.step_limit


def test_cancelled_engine_gives_unknown():
    engine = CarEngine(_forward(COUNTER2))
    engine.cancel()
    verdict = engine.check()
    assert verdict.kind == VerdictEnum.unknown
    assert verdict.reason == UnknownReasonEnum.cancelled


def test_stats_are_recorded_per_iteration():
    engine = CarEngine(_forward(COUNTER2))
    engine.check()
    assert [record["iteration"] for record in engine.stats] == list(range(1, len(engine.stats) + 1))
    assert all(record["direction"] == "forward" for record in engine.stats)
    assert engine.stats[-1]["cubes_per_layer"].split()[0] == "1"


def test_same_seed_same_statistics():
    first = CarEngine(_forward(COUNTER2), EngineConfig(seed=7))
    second = CarEngine(_forward(COUNTER2), EngineConfig(seed=7))
    first.check()
    second.check()
    assert first.stats == second.stats


@settings(max_examples=30)
@given(
    st.integers(min_value=0, max_value=100_000),
    st.sampled_from([PartialAssignmentEnum.ternary, PartialAssignmentEnum.sat]),
)
def test_both_directions_agree_with_explicit_search(seed, method):
    aig = random_aig(seed, max_latches=5, max_inputs=3, max_ands=15)
    expected = bfs_reach(aig)
    config = EngineConfig(debug_level=2, partial_assignment=method)
    for ts in (encode(aig), reverse(encode(aig))):
        verdict = car_check(ts, config)
        assert verdict.kind == expected.kind
        if verdict.kind == VerdictEnum.unsafe:
            assert verdict.trace.states[0] == aig.initial_state()


def test_implied_blocking_clause_is_counted_and_skipped():
    engine = CarEngine(_forward(CONST0), EngineConfig(debug_level=1))
    engine.frames.extend(engine.ts.prop)
    before = list(engine.frames.clauses[1])
    engine._block(1, (-1,))
    assert engine.implied_clauses == 1
    assert engine.frames.clauses[1] == before
    assert engine.summary()["implied_clauses"] == 1


def test_weaker_clause_is_subsumed():
    engine = CarEngine(_forward(COUNTER2))
    engine.frames.extend(engine.ts.prop)
    assert engine.frames.add(1, (-1,))
    assert engine.frames.subsumed(1, (-1, 2))
    assert not engine.frames.add(1, (-1, 2))
    assert engine.frames.clauses[1].count((-1,)) == 1


def test_covered_cube_is_counted():
    engine = CarEngine(_forward(COUNTER2), EngineConfig(debug_level=1))
    root = engine.bseq.layers[0][0]
    first = engine._add_cube(1, (1, -2), root, None)
    assert engine.covered_cubes == 0
    assert engine._add_cube(1, (1, -2), root, None) is first
    assert engine.covered_cubes == 1
    # a smaller cube inside a stored one is new syntactically but not semantically
    engine._add_cube(2, (1,), root, None)
    engine._add_cube(2, (1, 2), root, None)
    assert engine.covered_cubes == 2
    assert engine.bseq.sizes() == [1, 1, 2]


def _counts(text):
    return [int(size) for size in text.split()]


@pytest.mark.parametrize("text", [CONST0, COUNTER2, DEADBIT, SHIFT, random_aig(3), random_aig(11), random_aig(42)])
def test_frames_and_layers_only_grow(text):
    aig = parse(text) if isinstance(text, str) else text
    for ts in (encode(aig), reverse(encode(aig))):
        engine = CarEngine(ts, EngineConfig(debug_level=1))
        engine.check()
        for prev, record in zip(engine.stats, engine.stats[1:]):
            clauses, next_clauses = _counts(prev["clauses_per_frame"]), _counts(record["clauses_per_frame"])
            cubes, next_cubes = _counts(prev["cubes_per_layer"]), _counts(record["cubes_per_layer"])
            assert len(next_clauses) == len(clauses) + 1
            assert all(a <= b for a, b in zip(clauses, next_clauses))
            assert sum(next_clauses) > sum(clauses)
            assert len(next_cubes) >= len(cubes)
            assert all(a <= b for a, b in zip(cubes, next_cubes))
        for frame in engine.frames.clauses:
            assert len(set(frame)) == len(frame)
        for layer in range(len(engine.bseq.layers)):
            cubes = engine.bseq.cubes(layer)
            assert len(set(cubes)) == len(cubes)
