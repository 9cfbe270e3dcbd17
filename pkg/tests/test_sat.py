import threading

import pytest
from hypothesis import given, strategies as st

from carmc.config import SolverEnum
from carmc.sat import SatSolver, SolverError, SolverInterrupted


literals = st.integers(min_value=1, max_value=6).flatmap(lambda v: st.sampled_from([v, -v]))
clauses = st.lists(st.lists(literals, min_size=1, max_size=3), max_size=12)
assumptions = st.lists(st.integers(min_value=1, max_value=6), max_size=3, unique=True).flatmap(
    lambda vs: st.tuples(*[st.sampled_from([v, -v]) for v in vs])
)


@given(clauses, assumptions)
def test_backends_agree(cnf, assumed):
    results = []
    for backend in (SolverEnum.minisat22, SolverEnum.dpll):
        with SatSolver(backend=backend, debug_level=1) as solver:
            solver.load(cnf)
            outcome = solver.solve(list(assumed))
            results.append(outcome.sat)
            if outcome.sat:
                assert all(outcome.value(lit) for lit in assumed)
                assert all(any(outcome.value(lit) for lit in clause) for clause in cnf)
            else:
                assert set(outcome.failed) <= set(assumed)
    assert results[0] == results[1]


def test_core_is_subset_of_assumptions():
    with SatSolver() as solver:
        solver.load([[-1, -2], [3]])
        outcome = solver.solve([1, 2, 4])
        assert not outcome.sat
        assert set(outcome.failed) <= {1, 2, 4}
        assert not solver.solve(list(outcome.failed)).sat


def test_activation_literals_retire_clauses():
    with SatSolver() as solver:
        # variable 1 is the payload, the activation literal comes after it
        solver.reserve(1)
        act = solver.new_var()
        solver.add_clause([-act, -1])
        assert not solver.solve([act, 1]).sat
        solver.add_clause([-act])
        assert solver.solve([1]).sat


def test_empty_clause_makes_solver_inconsistent():
    with SatSolver() as solver:
        solver.add_clause([])
        assert solver.inconsistent
        assert not solver.solve().sat


def test_new_var_is_fresh():
    with SatSolver() as solver:
        solver.reserve(10)
        assert solver.new_var() == 11
        assert solver.new_var() == 12


def test_variable_limit():
    with SatSolver() as solver:
        with pytest.raises(SolverError):
            solver.reserve(1 << 31)


def test_interrupted_solver_refuses_queries():
    with SatSolver() as solver:
        solver.add_clause([1, 2])
        solver.interrupt()
        with pytest.raises(SolverInterrupted):
            solver.solve()


def test_dimacs_dump(tmp_path):
    with SatSolver(dimacs_dir=tmp_path) as solver:
        solver.load([[1, -2], [2]])
        solver.solve([1])
    text = (tmp_path / "query_000001.cnf").read_text()
    assert "p cnf 2 3" in text
    assert "1 -2 0" in text
    assert text.splitlines()[0] == "c assumptions 1"


def test_outcome_projection():
    with SatSolver() as solver:
        solver.load([[1], [-2]])
        outcome = solver.solve()
        assert outcome.cube([1, 2]) == (1, -2)
        assert outcome.bits([2, 1]) == (0, 1)


def test_interrupt_after_delete():
    solver = SatSolver()
    solver.add_clause([1])
    solver.delete()
    solver.interrupt()
    solver.delete()
    assert solver.interrupted.is_set()


def test_interrupt_races_with_delete():
    for _ in range(50):
        solver = SatSolver()
        solver.add_clause([1, 2])
        errors = []

        def stop():
            try:
                solver.interrupt()
            except Exception as e:
                errors.append(e)

        thread = threading.Thread(target=stop)
        thread.start()
        solver.delete()
        thread.join()
        assert errors == []


def test_clause_copy_only_when_needed(tmp_path):
    with SatSolver() as solver:
        solver.add_clause([1, -2])
        assert solver.clauses == []
        assert solver.solve([2]).sat
    with SatSolver(debug_level=1) as solver:
        solver.add_clause([1, -2])
        assert solver.clauses == [(1, -2)]
    with SatSolver(dimacs_dir=tmp_path) as solver:
        solver.add_clause([1, -2])
        assert solver.clauses == [(1, -2)]
