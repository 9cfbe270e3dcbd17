import itertools
import pytest
from hypothesis import given, strategies as st

from carmc.aiger import parse, simulate_step
from carmc.config import DirectionEnum
from carmc.corpus import CONST0, COUNTER2, TOGGLE, TRIVIAL, random_aig
from carmc.encoder import EncodingError, canonical, cofactor_trans, encode, negate, reverse
from carmc.sat import SatSolver


def test_canonical_sorts_and_rejects_complements():
    assert canonical([3, -1, 3, 2]) == (-1, 2, 3)
    with pytest.raises(EncodingError):
        canonical([2, -2])
    assert negate((1, -2)) == (-1, 2)


def test_toggle_layout():
    ts = encode(parse(TOGGLE))
    # the bad literal is a latch, no alias needed
    assert not ts.has_alias
    assert ts.block == 1
    assert ts.init == (-1,)
    assert ts.bad == (1,)
    assert ts.prop == (-1,)
    assert sorted(ts.trans) == sorted([(1, 2), (-1, -2)])
    assert ts.prime(1) == 2 and ts.prime(-1) == -2
    assert ts.unprime(-2) == -1


def test_counter_has_three_clauses_per_gate_and_two_per_latch():
    ts = encode(parse(COUNTER2))
    assert ts.has_alias
    assert ts.block == 3
    assert ts.bad == (3,)
    assert len(ts.trans) == 3 * 4 + 2 * 2
    assert ts.num_vars == 2 * 3 + 4 + 1


def test_constant_next_state_is_folded():
    ts = encode(parse(CONST0))
    assert ts.trans == ((-2,),)


def test_constant_bad_gets_alias():
    ts = encode(parse(TRIVIAL))
    assert ts.has_alias
    assert ts.bad == (1,)
    assert (-1,) in ts.bad_defs


def test_names_round_trip():
    ts = encode(parse(COUNTER2))
    assert [ts.name_of(v) for v in ts.state_vars] == ["l0", "l1", "b"]
    assert ts.var_of("l1") == 2
    assert ts.var_of("b") == 3
    with pytest.raises(EncodingError):
        ts.var_of("i0")
    with pytest.raises(EncodingError):
        ts.prime(4)


def test_reverse_swaps_regions():
    forward = encode(parse(COUNTER2))
    backward = reverse(forward)
    assert backward.direction == DirectionEnum.backward
    assert backward.latch_vars == (4, 5)
    assert backward.init == (6,)
    assert backward.bad == (-4, -5)
    assert backward.prime(4) == 1
    assert backward.state_defs() == forward.bad_defs
    with pytest.raises(EncodingError):
        reverse(backward)


def _models(ts, assumptions):
    """All satisfying assignments of T and the bad definitions, projected onto both state blocks."""
    found = set()
    with SatSolver() as solver:
        solver.load(ts.trans + ts.bad_defs)
        while True:
            outcome = solver.solve(assumptions)
            if not outcome.sat:
                return found
            pre = outcome.bits(range(1, 2 * ts.block + 1))
            found.add(pre)
            solver.add_clause([-v if value else v for v, value in zip(range(1, 2 * ts.block + 1), pre)])


@given(st.integers(min_value=0, max_value=5_000))
def test_transition_clauses_match_simulation(seed):
    aig = random_aig(seed, max_latches=3, max_inputs=2, max_ands=8)
    ts = encode(aig)
    models = _models(ts, [])
    expected = set()
    for state in itertools.product((0, 1), repeat=aig.num_latches):
        for inputs in itertools.product((0, 1), repeat=aig.num_inputs):
            successor, bad = simulate_step(aig, state, inputs)
            for next_inputs in itertools.product((0, 1), repeat=aig.num_inputs):
                _, next_bad = simulate_step(aig, successor, next_inputs)
                alias = (bad,) if ts.has_alias else ()
                next_alias = (next_bad,) if ts.has_alias else ()
                expected.add(state + inputs + alias + successor + next_inputs + next_alias)
    assert models == expected


def test_cofactor_of_one_latch():
    ts = encode(parse(COUNTER2))
    # c0' = not c0 depends on c0 alone
    sub = cofactor_trans(ts, (5,))
    assert sub.clauses == ((-2, -5), (2, 5))
    assert sub.support == {2}
    assert cofactor_trans(ts, ()).clauses == ()


def test_cofactor_of_bad_reaches_bad_support():
    ts = encode(parse(COUNTER2))
    sub = cofactor_trans(ts, (6,))
    assert sub.support == {1, 2}
    assert any(6 in map(abs, clause) for clause in sub.clauses)
