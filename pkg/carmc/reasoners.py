from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple
import logging

from carmc.aiger import X, fanin_cone, lit_value, ternary_eval
from carmc.config import DirectionEnum, EngineConfig, PartialAssignmentEnum
from carmc.encoder import Cube, TransitionSystem, canonical, cofactor_trans
from carmc.sat import SatOutcome, SatSolver


logger = logging.getLogger(__name__)


class EngineInvariantError(AssertionError):
    pass


class Generalization(NamedTuple):
    kind: str
    result: Cube
    query: str


class _Target(NamedTuple):
    latches: Dict[int, int]
    bad: Optional[int]
    inputs: Tuple[int, ...]


class Reasoner:
    """Partial assignments, restricted cores and dead-state detection over one engine's solver."""

    ts: TransitionSystem
    solver: SatSolver
    trans_act: int
    pa_calls: int
    muc_calls: int
    dead_cubes: int

    def __init__(self, ts: TransitionSystem, solver: SatSolver, trans_act: int, config: EngineConfig):
        self.ts = ts
        self.solver = solver
        self.trans_act = trans_act
        self.config = config
        self.pa_calls = 0
        self.muc_calls = 0
        self.dead_cubes = 0
        self.last: Optional[Generalization] = None
        aig = ts.aig
        # AIG variable of every current-space state variable
        self.aig_var = {var: lit >> 1 for var, (lit, _, _) in zip(ts.latch_vars, aig.latches)}
        self.aig_var.update({var: lit >> 1 for var, lit in zip(ts.input_vars, aig.inputs)})
        self.sat_var = {aig_var: var for var, aig_var in self.aig_var.items()}
        self.bad_cone, bad_support = fanin_cone(aig, [aig.bad])
        self.bad_support_latches = [
            k for k, (lit, _, _) in enumerate(aig.latches) if lit >> 1 in bad_support
        ]
        self._cones: Dict[Tuple[int, ...], tuple] = {}

    def _split_target(self, target: Sequence[int]) -> _Target:
        latches: Dict[int, int] = {}
        bad = None
        inputs = []
        for lit in target:
            local = self.ts.unprime(lit)
            var = abs(local)
            if var in self.ts.latch_vars:
                latches[self.ts.latch_vars.index(var)] = int(local > 0)
            elif var == self.ts.alias_var:
                bad = int(local > 0)
            else:
                inputs.append(lit)
        return _Target(latches, bad, tuple(inputs))

    def _cone(self, positions: Tuple[int, ...]):
        cone = self._cones.get(positions)
        if cone is None:
            aig = self.ts.aig
            gates, support = fanin_cone(aig, [aig.latches[k][1] for k in positions])
            cone = (gates, sorted((self.sat_var[v] for v in support), reverse=True))
            self._cones[positions] = cone
        return cone

    def partial_assignment(self, target: Sequence[int], outcome: SatOutcome) -> Cube:
        """Generalizes the current-space part of ``outcome`` to a cube whose every completion
        steps into ``target`` (a primed cube)."""
        self.pa_calls += 1
        if not all(outcome.value(lit) for lit in target):
            raise EngineInvariantError("model does not satisfy the target cube")
        if self.ts.direction == DirectionEnum.backward:
            # every successor latch is forced by the predecessor fixed in the model
            result = canonical(outcome.cube(self.ts.latch_vars))
        elif self.config.partial_assignment == PartialAssignmentEnum.ternary:
            result = self._ternary(target, outcome)
        else:
            result = self._dropping(target, outcome)
        if self.config.debug_level >= 1 and self.ts.direction == DirectionEnum.forward:
            if not self._steps_into(result, target, outcome):
                raise EngineInvariantError(f"partial assignment {result} has a completion leaving {target}")
        self.last = Generalization("pa", result, f"T & {target}'")
        return result

    def _ternary(self, target: Sequence[int], outcome: SatOutcome) -> Cube:
        aig = self.ts.aig
        split = self._split_target(target)
        positions = set(split.latches)
        if split.bad is not None:
            positions.update(self.bad_support_latches)
        gates, support = self._cone(tuple(sorted(positions)))
        next_inputs = {lit >> 1: int(outcome.value(self.ts.prime(var))) for var, lit in zip(self.ts.input_vars, aig.inputs)}

        def determined(known: Dict[int, int]) -> bool:
            values = ternary_eval(aig, known, gates)
            for k, required in split.latches.items():
                if lit_value(values, aig.latches[k][1]) != required:
                    return False
            if split.bad is None:
                return True
            post = dict(next_inputs)
            for k in self.bad_support_latches:
                post[aig.latches[k][0] >> 1] = lit_value(values, aig.latches[k][1])
            return lit_value(ternary_eval(aig, post, self.bad_cone), aig.bad) == split.bad

        known = {self.aig_var[var]: int(outcome.value(var)) for var in support}
        if not determined(known):
            raise EngineInvariantError("model does not satisfy the transition query")
        for var in support:
            value = known.pop(self.aig_var[var])
            if not determined(known):
                known[self.aig_var[var]] = value
        return canonical(self.sat_var[v] if value else -self.sat_var[v] for v, value in known.items() if value != X)

    def _guarded_negation(self, target: Sequence[int]) -> Optional[int]:
        split = self._split_target(target)
        lits = [lit for lit in target if lit not in split.inputs]
        if not lits:
            return None
        guard = self.solver.new_var()
        self.solver.add_clause([-guard] + [-lit for lit in lits])
        return guard

    def _fixed_next_inputs(self, outcome: SatOutcome) -> List[int]:
        return [lit for lit in outcome.cube(self.ts.prime(var) for var in self.ts.input_vars)]

    def _dropping(self, target: Sequence[int], outcome: SatOutcome) -> Cube:
        support = cofactor_trans(self.ts, target).support
        candidate = [lit for lit in outcome.cube(sorted(support))]
        guard = self._guarded_negation(target)
        if guard is None:
            return ()
        base = [self.trans_act, guard] + self._fixed_next_inputs(outcome)
        try:
            check = self.solver.solve(base + candidate)
            if check.sat:
                raise EngineInvariantError("model does not satisfy the transition query")
            failed = set(check.failed)
            candidate = [lit for lit in candidate if lit in failed]
            for lit in sorted(candidate, key=abs, reverse=True):
                if lit not in candidate:
                    continue
                trial = [other for other in candidate if other != lit]
                check = self.solver.solve(base + trial)
                if not check.sat:
                    failed = set(check.failed)
                    candidate = [other for other in trial if other in failed]
        finally:
            self.solver.add_clause([-guard])
        return canonical(candidate)

    def _steps_into(self, cube: Cube, target: Sequence[int], outcome: SatOutcome) -> bool:
        guard = self._guarded_negation(target)
        if guard is None:
            return True
        try:
            return not self.solver.solve([self.trans_act, guard] + self._fixed_next_inputs(outcome) + list(cube)).sat
        finally:
            self.solver.add_clause([-guard])

    def muc_restricted(self, frame_acts: Sequence[int], cube: Sequence[int]) -> Cube:
        """Minimal sub-cube of the primed ``cube`` that keeps ``frame & T & cube`` unsatisfiable."""
        self.muc_calls += 1
        base = list(frame_acts) + [self.trans_act]
        outcome = self.solver.solve(base + list(cube))
        if outcome.sat:
            raise EngineInvariantError(f"core requested for a satisfiable query on {cube}")
        failed = set(outcome.failed)
        core = [lit for lit in cube if lit in failed]
        # deletion order: highest variable first
        for lit in sorted(core, key=abs, reverse=True):
            if lit not in core:
                continue
            trial = [other for other in core if other != lit]
            outcome = self.solver.solve(base + trial)
            if not outcome.sat:
                failed = set(outcome.failed)
                core = [other for other in trial if other in failed]
        if self.solver.solve(base + core).sat:
            raise EngineInvariantError(f"core {core} is satisfiable")
        if self.config.debug_level >= 1:
            for lit in core:
                if not self.solver.solve(base + [other for other in core if other != lit]).sat:
                    raise EngineInvariantError(f"core {core} is not minimal, {lit} is redundant")
        result = canonical(core)
        self.last = Generalization("muc", result, f"F & T & {list(cube)}'")
        return result

    def detect_dead(self, cube: Sequence[int]) -> Optional[Cube]:
        """Sub-cube of ``cube`` (current space) without any predecessor, if there is one."""
        if self.ts.direction != DirectionEnum.forward:
            raise EngineInvariantError("dead-state detection runs in forward mode only")
        primed = self.ts.prime_cube(cube)
        if self.solver.solve([self.trans_act] + list(primed)).sat:
            return None
        dead = self.ts.unprime_cube(self.muc_restricted([], primed))
        self.dead_cubes += 1
        logger.debug(f"Dead cube {dead}")
        self.last = Generalization("dead", dead, f"T & {list(primed)}'")
        return dead
