from collections import deque
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np
import logging

from carmc.aiger import Aig
from carmc.config import DirectionEnum, SolverEnum
from carmc.constants import ORACLE_STATE_BUDGET
from carmc.encoder import Clause, Cube, TransitionSystem
from carmc.sat import SatSolver
from carmc.verdict import Trace, Verdict


logger = logging.getLogger(__name__)


class OracleBudgetExceeded(RuntimeError):
    pass


def _bits(count: int) -> np.ndarray:
    """All ``2**count`` bit vectors, row ``k`` holds the binary digits of ``k`` (bit 0 first)."""
    index = np.arange(1 << count, dtype=np.int64)
    return ((index[:, None] >> np.arange(count, dtype=np.int64)) & 1).astype(bool)


def _index(bits: np.ndarray) -> np.ndarray:
    weights = 1 << np.arange(bits.shape[-1], dtype=np.int64)
    return (bits.astype(np.int64) * weights).sum(axis=-1)


def simulate_batch(aig: Aig, states: np.ndarray, inputs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluates one step for many (state, input) rows at once.

    ``states`` has shape (N, latches) and ``inputs`` (N, inputs); returns the next states (N, latches)
    and the bad flag (N,).
    """
    states = np.asarray(states, dtype=bool)
    inputs = np.asarray(inputs, dtype=bool)
    if states.ndim == 1:
        states = states[None, :]
    if inputs.ndim == 1:
        inputs = inputs[None, :]
    if states.shape[0] != inputs.shape[0]:
        raise ValueError(f"{states.shape[0]} states but {inputs.shape[0]} input rows")
    rows = states.shape[0]
    values = np.zeros((aig.max_var + 1, rows), dtype=bool)
    for k, lit in enumerate(aig.inputs):
        values[lit >> 1] = inputs[:, k]
    for k, (lit, _, _) in enumerate(aig.latches):
        values[lit >> 1] = states[:, k]

    def lit_values(lit: int) -> np.ndarray:
        column = values[lit >> 1]
        return ~column if lit & 1 else column

    for lhs, rhs0, rhs1 in aig.ands:
        values[lhs >> 1] = lit_values(rhs0) & lit_values(rhs1)
    next_states = np.stack([lit_values(nxt) for _, nxt, _ in aig.latches], axis=1) if aig.latches else np.zeros((rows, 0), dtype=bool)
    return next_states, lit_values(aig.bad)


class _Tables:
    """Successor index and bad flag for every (latch state, input vector) pair."""

    def __init__(self, aig: Aig):
        self.aig = aig
        self.states = _bits(aig.num_latches)
        self.inputs = _bits(aig.num_inputs)
        num_states, num_inputs = len(self.states), len(self.inputs)
        pairs_s = np.repeat(self.states, num_inputs, axis=0)
        pairs_u = np.tile(self.inputs, (num_states, 1))
        next_states, bad = simulate_batch(aig, pairs_s, pairs_u)
        self.next_index = _index(next_states).reshape(num_states, num_inputs)
        self.bad = bad.reshape(num_states, num_inputs)

    def state(self, index: int) -> Tuple[int, ...]:
        return tuple(int(bit) for bit in self.states[index])

    def input(self, index: int) -> Tuple[int, ...]:
        return tuple(int(bit) for bit in self.inputs[index])


def bfs_reach(aig: Aig, state_budget: int = ORACLE_STATE_BUDGET) -> Verdict:
    """Exact forward reachability over the explicit state graph. Refuses instances beyond the budget."""
    if (1 << aig.num_latches) > state_budget or (1 << aig.num_inputs) > state_budget:
        logger.warning(f"Refusing explicit search over {aig.num_latches} latches and {aig.num_inputs} inputs")
        raise OracleBudgetExceeded(f"2^{aig.num_latches} states exceed the budget of {state_budget}")
    tables = _Tables(aig)
    init = int(_index(np.array(aig.initial_state(), dtype=bool)))
    parent: Dict[int, Optional[Tuple[int, int]]] = {init: None}
    queue = deque([init])
    while queue:
        current = queue.popleft()
        hits = np.flatnonzero(tables.bad[current])
        if hits.size:
            return Verdict.unsafe(_bfs_trace(tables, parent, current, int(hits[0])), direction=DirectionEnum.forward)
        for u in range(len(tables.inputs)):
            successor = int(tables.next_index[current, u])
            if successor not in parent:
                parent[successor] = (current, u)
                queue.append(successor)
    logger.debug(f"Explicit search reached {len(parent)} states")
    return Verdict.safe(direction=DirectionEnum.forward, stats={"reachable": len(parent)})


def _bfs_trace(tables: _Tables, parent: Dict[int, Optional[Tuple[int, int]]], last: int, last_input: int) -> Trace:
    states = [last]
    inputs = [last_input]
    link = parent[last]
    while link is not None:
        previous, u = link
        states.append(previous)
        inputs.append(u)
        link = parent[previous]
    states.reverse()
    inputs.reverse()
    return Trace(states=[tables.state(s) for s in states], inputs=[tables.input(u) for u in inputs])


def bmc(ts: TransitionSystem, bound: int, backend: SolverEnum = SolverEnum.minisat22) -> Optional[Trace]:
    """Shortest counterexample of length at most ``bound`` transitions, by unrolling T over timed copies."""
    if bound < 0:
        raise ValueError("bound must not be negative")
    if ts.direction != DirectionEnum.forward:
        raise ValueError("bounded model checking runs on the forward system")
    block = ts.block
    aux = ts.num_vars - 2 * block
    with SatSolver(backend=backend) as solver:
        frames: List[List[int]] = []

        def frame(t: int) -> List[int]:
            while len(frames) <= t:
                frames.append([solver.new_var() for _ in range(block)])
            return frames[t]

        def rename(clause: Clause, t: int, gates: List[int]) -> List[int]:
            renamed = []
            for lit in clause:
                var = abs(lit)
                if var <= block:
                    new = frame(t)[var - 1]
                elif var <= 2 * block:
                    new = frame(t + 1)[var - block - 1]
                else:
                    new = gates[var - 2 * block - 1]
                renamed.append(new if lit > 0 else -new)
            return renamed

        def at(cube: Cube, t: int) -> List[int]:
            return rename(cube, t, [])

        solver.load([lit] for lit in at(ts.init, 0))
        for depth in range(bound + 1):
            gates = [solver.new_var() for _ in range(aux)]
            solver.load(rename(clause, depth, gates) for clause in ts.trans + ts.bad_defs)
            outcome = solver.solve(at(ts.bad, depth))
            if outcome.sat:
                states = [outcome.bits(frame(t)[: ts.num_latches]) for t in range(depth + 1)]
                inputs = [outcome.bits(frame(t)[ts.num_latches : ts.num_latches + ts.num_inputs]) for t in range(depth + 1)]
                logger.debug(f"Bounded search hit bad at depth {depth}")
                return Trace(states=states, inputs=inputs)
    return None


class ExplicitSpace:
    """Every assignment to the current-space variables of a system, as a (states, inputs) grid.

    Used by the debug checks that compare frames and layers against the concrete relation.
    """

    def __init__(self, ts: TransitionSystem, budget: int = ORACLE_STATE_BUDGET):
        aig = ts.aig
        if 1 << (aig.num_latches + aig.num_inputs) > budget:
            raise OracleBudgetExceeded(f"{aig.num_latches} latches and {aig.num_inputs} inputs exceed the budget")
        self.ts = ts
        self.tables = _Tables(aig)
        shape = self.tables.bad.shape
        self.columns: Dict[int, np.ndarray] = {}
        for k, var in enumerate(ts.latch_vars):
            self.columns[var] = np.broadcast_to(self.tables.states[:, k][:, None], shape)
        for k, var in enumerate(ts.input_vars):
            self.columns[var] = np.broadcast_to(self.tables.inputs[:, k][None, :], shape)
        if ts.has_alias:
            self.columns[ts.alias_var] = self.tables.bad

    @property
    def shape(self) -> Tuple[int, int]:
        return self.tables.bad.shape

    def literal(self, lit: int) -> np.ndarray:
        column = self.columns[abs(lit)]
        return column if lit > 0 else ~column

    def cube(self, cube: Sequence[int]) -> np.ndarray:
        result = np.ones(self.shape, dtype=bool)
        for lit in cube:
            result &= self.literal(lit)
        return result

    def clauses(self, clauses: Sequence[Clause]) -> np.ndarray:
        result = np.ones(self.shape, dtype=bool)
        for clause in clauses:
            satisfied = np.zeros(self.shape, dtype=bool)
            for lit in clause:
                satisfied |= self.literal(lit)
            result &= satisfied
        return result

    def successors_within(self, source: np.ndarray, target: np.ndarray) -> bool:
        """Every step of the engine's relation leaving ``source`` lands in ``target``."""
        next_index = self.tables.next_index
        if self.ts.direction == DirectionEnum.forward:
            # a forward successor of (s, u) is (next(s, u), v) for every v
            closed = target.all(axis=1)
            return bool(closed[next_index[source]].all())
        # a backward successor of (t, u) is any (p, v) with next(p, v) = t
        reached = source.any(axis=1)
        return bool(target[reached[next_index]].all())

    def predecessors_of(self, source: np.ndarray, target: np.ndarray) -> bool:
        """Every point of ``source`` has a step of the engine's relation into ``target``."""
        next_index = self.tables.next_index
        if self.ts.direction == DirectionEnum.forward:
            hit = target.any(axis=1)
            return bool(hit[next_index][source].all())
        has_pred = np.zeros(self.shape[0], dtype=bool)
        has_pred[np.unique(next_index[target])] = True
        return bool(has_pred[:, None].repeat(self.shape[1], axis=1)[source].all())

    def bad_region(self) -> np.ndarray:
        return self.cube(self.ts.bad)
