from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple
import threading
import numpy as np
from pysat.solvers import Solver
import logging

from carmc.config import SolverEnum
from carmc.constants import MAX_VARIABLE_ID, CORE_CHECK_RATE


logger = logging.getLogger(__name__)


PYSAT_NAMES = {
    SolverEnum.minisat22: "m22",
    SolverEnum.glucose4: "g4",
    SolverEnum.cadical153: "cd15",
}


class SolverError(RuntimeError):
    pass


class SolverInterrupted(SolverError):
    pass


class SatOutcome(NamedTuple):
    sat: bool
    model: Tuple[int, ...] = ()
    failed: Tuple[int, ...] = ()

    def value(self, lit: int) -> bool:
        var = abs(lit)
        value = var <= len(self.model) and self.model[var - 1] > 0
        return value if lit > 0 else not value

    def cube(self, variables: Iterable[int]) -> Tuple[int, ...]:
        return tuple(var if self.value(var) else -var for var in variables)

    def bits(self, variables: Iterable[int]) -> Tuple[int, ...]:
        return tuple(int(self.value(var)) for var in variables)


class DpllSolver:
    """Plain DPLL with unit propagation, kept for bootstrapping and cross-checking the CDCL backends."""

    def __init__(self):
        self.clauses: List[List[int]] = []
        self.num_vars = 0

    def add_clause(self, clause: Sequence[int]):
        self.clauses.append(list(clause))
        if clause:
            self.num_vars = max(self.num_vars, max(abs(lit) for lit in clause))

    def _propagate(self, values: Dict[int, bool], trail: List[int]) -> bool:
        changed = True
        while changed:
            changed = False
            for clause in self.clauses:
                unassigned = None
                count = 0
                satisfied = False
                for lit in clause:
                    value = values.get(abs(lit))
                    if value is None:
                        count += 1
                        unassigned = lit
                    elif value == (lit > 0):
                        satisfied = True
                        break
                if satisfied:
                    continue
                if count == 0:
                    return False
                if count == 1:
                    values[abs(unassigned)] = unassigned > 0
                    trail.append(abs(unassigned))
                    changed = True
        return True

    def solve(self, assumptions: Sequence[int] = ()) -> SatOutcome:
        values: Dict[int, bool] = {}
        trail: List[int] = []
        for lit in assumptions:
            if values.get(abs(lit)) == (lit < 0):
                return SatOutcome(False, failed=tuple(assumptions))
            values[abs(lit)] = lit > 0
        num_vars = max([self.num_vars] + [abs(lit) for lit in assumptions])
        decisions: List[Tuple[int, int, bool]] = []
        while True:
            if self._propagate(values, trail):
                var = next((v for v in range(1, num_vars + 1) if v not in values), None)
                if var is None:
                    model = tuple(v if values.get(v, False) else -v for v in range(1, num_vars + 1))
                    return SatOutcome(True, model=model)
                decisions.append((len(trail), var, False))
                values[var] = True
                trail.append(var)
                continue
            while decisions and decisions[-1][2]:
                decisions.pop()
            if not decisions:
                # every assumption stays in the core
                return SatOutcome(False, failed=tuple(assumptions))
            mark, var, _ = decisions.pop()
            for assigned in trail[mark:]:
                del values[assigned]
            del trail[mark:]
            decisions.append((mark, var, True))
            values[var] = False
            trail.append(var)


class SatSolver:
    """Incremental solver owned by exactly one engine thread.

    Clauses are never deleted; callers retire them by guarding with activation literals.
    """

    backend: SolverEnum
    clauses: List[Tuple[int, ...]]
    num_vars: int
    calls: int

    def __init__(
        self,
        backend: SolverEnum = SolverEnum.minisat22,
        seed: int = 0,
        debug_level: int = 0,
        dimacs_dir: Optional[Path] = None,
        conflict_budget: Optional[int] = None,
    ):
        self.backend = SolverEnum(backend)
        self.debug_level = debug_level
        self.dimacs_dir = Path(dimacs_dir) if dimacs_dir is not None else None
        self.conflict_budget = conflict_budget
        self.rng = np.random.default_rng(seed)
        self.clauses = []
        self.num_vars = 0
        self.calls = 0
        self.inconsistent = False
        self.interrupted = threading.Event()
        # a copy of the clauses is only needed to check models or dump queries
        self.keep_clauses = debug_level >= 1 or self.dimacs_dir is not None
        self._lock = threading.Lock()
        if self.backend == SolverEnum.dpll:
            self._solver = DpllSolver()
        else:
            self._solver = Solver(name=PYSAT_NAMES[self.backend])
        if self.dimacs_dir is not None:
            self.dimacs_dir.mkdir(parents=True, exist_ok=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.delete()

    def delete(self):
        with self._lock:
            solver, self._solver = self._solver, None
            if solver is not None and self.backend != SolverEnum.dpll:
                solver.delete()

    def reserve(self, num_vars: int):
        if num_vars > MAX_VARIABLE_ID:
            raise SolverError(f"variable id {num_vars} exceeds the solver limit {MAX_VARIABLE_ID}")
        self.num_vars = max(self.num_vars, num_vars)

    def new_var(self) -> int:
        self.reserve(self.num_vars + 1)
        return self.num_vars

    def add_clause(self, clause: Sequence[int]):
        clause = tuple(clause)
        if clause:
            self.reserve(max(abs(lit) for lit in clause))
        else:
            self.inconsistent = True
        if self.keep_clauses:
            self.clauses.append(clause)
        if clause:
            self._solver.add_clause(list(clause))

    assert_clause = add_clause

    def load(self, clauses: Iterable[Sequence[int]]):
        for clause in clauses:
            self.add_clause(clause)

    def interrupt(self):
        self.interrupted.set()
        with self._lock:
            if self._solver is not None and self.backend != SolverEnum.dpll:
                try:
                    self._solver.interrupt()
                except NotImplementedError:
                    pass

    def _raw_solve(self, assumptions: List[int]) -> SatOutcome:
        if self.inconsistent:
            return SatOutcome(False)
        if self.backend == SolverEnum.dpll:
            return self._solver.solve(assumptions)
        if self.conflict_budget is not None:
            self._solver.conf_budget(self.conflict_budget)
            result = self._solver.solve_limited(assumptions=assumptions, expect_interrupt=True)
        else:
            try:
                result = self._solver.solve_limited(assumptions=assumptions, expect_interrupt=True)
            except NotImplementedError:
                result = self._solver.solve(assumptions=assumptions)
        if result is None:
            self._solver.clear_interrupt()
            raise SolverInterrupted("SAT call interrupted or out of budget")
        if result:
            return SatOutcome(True, model=tuple(self._solver.get_model()))
        core = self._solver.get_core()
        return SatOutcome(False, failed=tuple(core) if core is not None else tuple(assumptions))

    def solve(self, assumptions: Sequence[int] = ()) -> SatOutcome:
        if self.interrupted.is_set():
            raise SolverInterrupted("solver was cancelled")
        assumptions = list(assumptions)
        for lit in assumptions:
            self.reserve(abs(lit))
        self.calls += 1
        if self.dimacs_dir is not None:
            self.dump_dimacs(self.dimacs_dir / f"query_{self.calls:06d}.cnf", assumptions)
        outcome = self._raw_solve(assumptions)
        if self.debug_level >= 1:
            self._check_outcome(outcome, assumptions)
        return outcome

    def _check_outcome(self, outcome: SatOutcome, assumptions: List[int]):
        if outcome.sat:
            for lit in assumptions:
                if not outcome.value(lit):
                    raise SolverError(f"model violates assumption {lit}")
            for clause in self.clauses:
                if not any(outcome.value(lit) for lit in clause):
                    raise SolverError(f"model violates clause {clause}")
            return
        if not set(outcome.failed) <= set(assumptions):
            raise SolverError("failed assumptions are not a subset of the assumptions")
        if self.rng.integers(CORE_CHECK_RATE) == 0:
            if self._raw_solve(list(outcome.failed)).sat:
                raise SolverError(f"core {outcome.failed} is satisfiable")

    def dump_dimacs(self, path: Path, assumptions: Sequence[int] = ()):
        with open(path, "w") as f:
            f.write(f"c assumptions {' '.join(str(lit) for lit in assumptions)}\n")
            f.write(f"p cnf {self.num_vars} {len(self.clauses) + len(assumptions)}\n")
            for clause in self.clauses:
                f.write(" ".join(str(lit) for lit in clause) + " 0\n")
            for lit in assumptions:
                f.write(f"{lit} 0\n")
