from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple
import threading
import time
import logging

from carmc.aiger import simulate_step
from carmc.config import DirectionEnum, EngineConfig, UnknownReasonEnum
from carmc.constants import ORACLE_STATE_BUDGET
from carmc.encoder import Clause, Cube, TransitionSystem, negate
from carmc.oracle import ExplicitSpace, OracleBudgetExceeded
from carmc.reasoners import EngineInvariantError, Reasoner
from carmc.sat import SatOutcome, SatSolver, SolverInterrupted
from carmc.verdict import Certificate, IterationStats, Trace, Verdict


logger = logging.getLogger(__name__)


class StepLimitReached(RuntimeError):
    pass


class RoundStopped(RuntimeError):
    pass


class Edge(NamedTuple):
    """Concrete transition behind a B-cube, in the relation's own pre/post terms."""

    pre_latches: Tuple[int, ...]
    pre_inputs: Tuple[int, ...]
    post_latches: Tuple[int, ...]
    post_inputs: Tuple[int, ...]


class BNode:
    __slots__ = ("cube", "layer", "parent", "edge", "serial")

    def __init__(self, cube: Cube, layer: int, parent: Optional["BNode"], edge: Optional[Edge], serial: int):
        self.cube = cube
        self.layer = layer
        self.parent = parent
        self.edge = edge
        self.serial = serial

    def __repr__(self):
        return f"BNode({self.cube}, layer={self.layer})"


class Obligation(NamedTuple):
    node: BNode
    findex: int
    bindex: int


class BSeq:
    """Layers B_0..B_n of cubes, each cube linked to the cube of the layer below it steps into."""

    def __init__(self, bad: Cube):
        self.layers: List[List[BNode]] = [[BNode(bad, 0, None, None, 0)]]
        self._index: List[Dict[Cube, BNode]] = [{bad: self.layers[0][0]}]
        self.created = 1
        self.reused = 0

    def add(self, layer: int, cube: Cube, parent: BNode, edge: Edge) -> BNode:
        while len(self.layers) <= layer:
            self.layers.append([])
            self._index.append({})
        existing = self._index[layer].get(cube)
        if existing is not None:
            # the same cube reached again from a lower frame
            self.reused += 1
            return existing
        node = BNode(cube, layer, parent, edge, self.created)
        self.created += 1
        self.layers[layer].append(node)
        self._index[layer][cube] = node
        logger.debug(f"B_{layer} += {cube}")
        return node

    def sizes(self) -> List[int]:
        return [len(layer) for layer in self.layers]

    def cubes(self, layer: int) -> List[Cube]:
        return [node.cube for node in self.layers[layer]]


class FrameSeq:
    """F_0..F_m and F∞, each frame guarded by its own activation literal in the shared solver.

    Every stored clause also gets a selector ``s`` with ``s -> not clause``, so the negation of a
    frame is the disjunction of its selectors.
    """

    def __init__(self, solver: SatSolver, init: Cube):
        self.solver = solver
        self.acts: List[int] = []
        self.clauses: List[List[Clause]] = []
        self.selectors: List[List[int]] = []
        self.inf_act = solver.new_var()
        self.inf: List[Clause] = []
        self._new_frame()
        for lit in init:
            self._store(0, (lit,))

    def __len__(self):
        return len(self.clauses)

    @property
    def top(self) -> int:
        return len(self.clauses) - 1

    def _new_frame(self) -> int:
        self.acts.append(self.solver.new_var())
        self.clauses.append([])
        self.selectors.append([])
        return self.top

    def _store(self, j: int, clause: Clause):
        self.solver.add_clause((-self.acts[j],) + clause)
        selector = self.solver.new_var()
        for lit in clause:
            self.solver.add_clause((-selector, -lit))
        self.clauses[j].append(clause)
        self.selectors[j].append(selector)

    def extend(self, prop: Clause) -> int:
        j = self._new_frame()
        self._store(j, prop)
        return j

    def subsumed(self, j: int, clause: Clause) -> bool:
        lits = set(clause)
        return any(set(other) <= lits for other in self.clauses[j])

    def add(self, j: int, clause: Clause) -> bool:
        if self.subsumed(j, clause):
            return False
        self._store(j, clause)
        logger.debug(f"F_{j} += {clause}")
        return True

    def add_inf(self, clause: Clause) -> bool:
        lits = set(clause)
        if any(set(other) <= lits for other in self.inf):
            return False
        self.solver.add_clause((-self.inf_act,) + clause)
        self.inf.append(clause)
        logger.debug(f"F_inf += {clause}")
        return True

    def acts_for(self, j: int) -> List[int]:
        return [self.acts[j]] + ([self.inf_act] if j >= 1 else [])

    def effective(self, j: int) -> List[Clause]:
        return self.clauses[j] + (self.inf if j >= 1 else [])


class CarEngine:
    """Complementary approximate reachability in one direction.

    The F-sequence over-approximates the states reachable from the initial region in j steps,
    the B-sequence under-approximates the states that reach the bad region. The engine stops when
    a B-cube meets F_0 (unsafe) or when some F_j is contained in the union of the frames before it
    (safe).
    """

    ts: TransitionSystem
    config: EngineConfig
    stats: List[IterationStats]

    def __init__(
        self,
        ts: TransitionSystem,
        config: EngineConfig = EngineConfig(),
        cancel: Optional[threading.Event] = None,
        sync: Optional[Callable[["CarEngine", bool], bool]] = None,
    ):
        self.ts = ts
        # called at the end of every round with whether the engine concluded; False stops it
        self.sync = sync
        self.config = config
        self.forward = ts.direction == DirectionEnum.forward
        self.cancel_event = cancel if cancel is not None else threading.Event()
        self.cancel_reason: Optional[UnknownReasonEnum] = None
        self.solver = SatSolver(
            backend=config.solver,
            seed=config.seed,
            debug_level=config.debug_level,
            dimacs_dir=config.dimacs_dir,
            conflict_budget=config.conflict_budget,
        )
        self.solver.reserve(ts.num_vars)
        self.trans_act = self.solver.new_var()
        self.solver.load((-self.trans_act,) + clause for clause in ts.trans)
        self.solver.load(ts.bad_defs)
        # T restricts the T-next block, which is the current space of a backward engine
        self.defs_acts = [self.trans_act] if self.forward else []
        self.reasoner = Reasoner(ts, self.solver, self.trans_act, config)
        self.frames = FrameSeq(self.solver, ts.init)
        self.bseq = BSeq(ts.bad)
        self.stats = []
        self.iteration = 0
        self._m = 0
        self._space: Optional[ExplicitSpace] = None
        # progress violations seen by the debug checks
        self.implied_clauses = 0
        self.covered_cubes = 0

    @property
    def name(self) -> str:
        return self.ts.direction.values[1]

    def cancel(self, reason: UnknownReasonEnum = UnknownReasonEnum.cancelled):
        if self.cancel_reason is None:
            self.cancel_reason = reason
        self.cancel_event.set()
        self.solver.interrupt()

    def _query(self, assumptions: Sequence[int]) -> SatOutcome:
        if self.cancel_event.is_set():
            raise SolverInterrupted("engine cancelled")
        return self.solver.solve(assumptions)

    def _edge(self, outcome: SatOutcome) -> Edge:
        latches, inputs, block = self.ts.num_latches, self.ts.num_inputs, self.ts.block
        pre_latches = range(1, latches + 1)
        pre_inputs = range(latches + 1, latches + inputs + 1)
        return Edge(
            outcome.bits(pre_latches),
            outcome.bits(pre_inputs),
            outcome.bits(v + block for v in pre_latches),
            outcome.bits(v + block for v in pre_inputs),
        )

    def check(self, timeout: Optional[float] = None) -> Verdict:
        timer = None
        if timeout is not None:
            timer = threading.Timer(timeout, self.cancel, args=(UnknownReasonEnum.timeout,))
            timer.daemon = True
            timer.start()
        start = time.perf_counter()
        try:
            verdict = self._check()
        except SolverInterrupted:
            reason = self.cancel_reason or UnknownReasonEnum.step_limit
            logger.info(f"{self.name} engine stopped: {reason.values[1]}")
            verdict = Verdict.unknown(reason)
        except RoundStopped as e:
            logger.info(str(e))
            verdict = Verdict.unknown(UnknownReasonEnum.cancelled)
        except StepLimitReached as e:
            logger.info(f"{self.name} engine stopped: {e}")
            verdict = Verdict.unknown(UnknownReasonEnum.step_limit)
        except MemoryError:
            logger.warning(f"{self.name} engine ran out of memory")
            verdict = Verdict.unknown(UnknownReasonEnum.memout)
        finally:
            if timer is not None:
                timer.cancel()
            self.solver.delete()
        verdict.direction = self.ts.direction
        verdict.frames = len(self.frames)
        verdict.stats = self.summary()
        logger.info(f"{self.name} engine: {verdict} after {time.perf_counter() - start:.2f}s")
        return verdict

    def summary(self) -> Dict[str, int]:
        return {
            "frames": len(self.frames),
            "clauses": sum(len(frame) for frame in self.frames.clauses) + len(self.frames.inf),
            "sat_calls": self.solver.calls,
            "muc_calls": self.reasoner.muc_calls,
            "pa_calls": self.reasoner.pa_calls,
            "dead_cubes": self.reasoner.dead_cubes,
            "implied_clauses": self.implied_clauses,
            "covered_cubes": self.covered_cubes,
        }

    def _check(self) -> Verdict:
        verdict = self._initial_steps()
        self._end_round(verdict)
        if verdict is not None:
            return verdict
        while True:
            verdict = self._iterate()
            self._end_round(verdict)
            if verdict is not None:
                return verdict

    def _end_round(self, verdict: Optional[Verdict]):
        if self.sync is None:
            return
        keep_going = self.sync(self, verdict is not None)
        if verdict is None and not keep_going:
            raise RoundStopped(f"{self.name} engine stopped after round {self.iteration}")

    def _initial_steps(self) -> Optional[Verdict]:
        ts = self.ts
        # zero steps: an initial state is already bad
        outcome = self._query(self.frames.acts_for(0) + self.defs_acts + list(ts.bad))
        if outcome.sat:
            latches, inputs = outcome.bits(ts.latch_vars), outcome.bits(ts.input_vars)
            return self._unsafe(Trace(states=[latches], inputs=[inputs]))
        # one step
        outcome = self._query(self.frames.acts_for(0) + [self.trans_act] + list(ts.prime_cube(ts.bad)))
        if outcome.sat:
            edge = self._edge(outcome)
            return self._unsafe(
                Trace(states=[edge.pre_latches, edge.post_latches], inputs=[edge.pre_inputs, edge.post_inputs])
            )
        return None

    def _iterate(self) -> Optional[Verdict]:
        m = self.frames.extend(self.ts.prop)
        if m > self.config.max_frames:
            raise StepLimitReached(f"frame limit {self.config.max_frames} reached")
        self._m = m
        self.iteration += 1
        found = self.explore(m)
        if found is not None:
            self._record()
            return self._unsafe(self._trace(found))
        if self.config.debug_level >= 2:
            self._check_explore(m)
            self._check_semantics()
        j = self.invariant_found()
        self._record()
        if j is not None:
            return Verdict.safe(self._certificate(j))
        return None

    def _record(self):
        record = IterationStats(
            direction=self.ts.direction.value,
            iteration=self.iteration,
            frames=len(self.frames),
            clauses_per_frame=" ".join(str(len(frame)) for frame in self.frames.clauses),
            f_inf=len(self.frames.inf),
            cubes_per_layer=" ".join(str(size) for size in self.bseq.sizes()),
            sat_calls=self.solver.calls,
            muc_calls=self.reasoner.muc_calls,
            pa_calls=self.reasoner.pa_calls,
            dead_cubes=self.reasoner.dead_cubes,
        )
        self.stats.append(record)
        logger.info(
            f"{self.name} iteration {self.iteration}: frames {record['frames']} "
            f"clauses [{record['clauses_per_frame']}] f_inf {record['f_inf']} "
            f"cubes [{record['cubes_per_layer']}]"
        )

    def _generalize(self, target: Cube, outcome: SatOutcome, findex: int) -> Optional[Cube]:
        """Predecessor cube of ``target`` out of a model, or None when a dead cube was blocked instead."""
        cube = self.reasoner.partial_assignment(self.ts.prime_cube(target), outcome)
        if self.forward and self.config.dead_states and findex >= 1:
            dead = self.reasoner.detect_dead(cube)
            if dead is not None:
                self.frames.add_inf(negate(dead))
                return None
        return cube

    def explore(self, m: int) -> Optional[BNode]:
        """Makes F_m & T & B' unsatisfiable for every layer, returning the B-node that met F_0 if any."""
        pending = [node for layer in reversed(self.bseq.layers) for node in layer]
        while pending:
            first = self.bseq.created
            for node in pending:
                target = self.ts.prime_cube(node.cube)
                while True:
                    outcome = self._query(self.frames.acts_for(m) + [self.trans_act] + list(target))
                    if not outcome.sat:
                        break
                    cube = self._generalize(node.cube, outcome, m)
                    if cube is None:
                        continue
                    child = self._add_cube(node.layer + 1, cube, node, self._edge(outcome))
                    found = self.dfscheck(Obligation(child, m - 1, node.layer + 1))
                    if found is not None:
                        return found
            # cubes added during the pass have not been checked against F_m yet
            pending = [node for layer in reversed(self.bseq.layers) for node in layer if node.serial >= first]
        return None

    def dfscheck(self, obligation: Obligation) -> Optional[BNode]:
        stack = [obligation]
        while stack:
            node, findex, bindex = stack[-1]
            target = self.ts.prime_cube(node.cube)
            outcome = self._query(self.frames.acts_for(findex) + [self.trans_act] + list(target))
            if outcome.sat:
                if findex == 0:
                    cube = self.reasoner.partial_assignment(target, outcome)
                    return self._add_cube(bindex + 1, cube, node, self._edge(outcome))
                cube = self._generalize(node.cube, outcome, findex)
                if cube is None:
                    continue
                child = self._add_cube(bindex + 1, cube, node, self._edge(outcome))
                if len(stack) >= self.config.max_depth:
                    raise StepLimitReached(f"obligation depth {self.config.max_depth} reached")
                stack.append(Obligation(child, findex - 1, bindex + 1))
                continue
            core = self.reasoner.muc_restricted(self.frames.acts_for(findex), target)
            self._block(findex + 1, negate(self.ts.unprime_cube(core)))
            if findex + 1 < self._m:
                stack[-1] = Obligation(node, findex + 1, bindex)
            else:
                stack.pop()
        return None

    def _block(self, j: int, clause: Clause):
        if self.config.debug_level >= 1:
            # the clause has to cut at least one state out of F_j
            outcome = self._query(self.frames.acts_for(j) + self.defs_acts + list(negate(clause)))
            if not outcome.sat:
                self.implied_clauses += 1
                logger.warning(f"No progress: F_{j} already implies {clause}")
                return
        self.frames.add(j, clause)

    def _add_cube(self, layer: int, cube: Cube, parent: BNode, edge: Optional[Edge]) -> BNode:
        if self.config.debug_level >= 1 and self._covered(layer, cube):
            self.covered_cubes += 1
            logger.warning(f"No progress: {cube} is already covered by B_{layer}")
        return self.bseq.add(layer, cube, parent, edge)

    def _covered(self, layer: int, cube: Cube) -> bool:
        """Whether every state of ``cube`` already lies in a cube of the layer."""
        if layer >= len(self.bseq.layers) or not self.bseq.layers[layer]:
            return False
        guard = self.solver.new_var()
        try:
            for other in self.bseq.cubes(layer):
                self.solver.add_clause((-guard,) + negate(other))
            return not self._query(list(cube) + [guard]).sat
        finally:
            self.solver.add_clause([-guard])

    def invariant_found(self) -> Optional[int]:
        """Least j with F_j contained in the union of F_0..F_{j-1}."""
        frames = self.frames
        for j in range(1, len(frames)):
            guards = []
            trivially = False
            for k in range(j):
                if not frames.selectors[k]:
                    # F_k is every state, the union covers F_j
                    trivially = True
                    break
                guard = self.solver.new_var()
                self.solver.add_clause([-guard] + frames.selectors[k])
                guards.append(guard)
            try:
                if trivially or not self._query(frames.acts_for(j) + self.defs_acts + guards).sat:
                    return j
            finally:
                for guard in guards:
                    self.solver.add_clause([-guard])
        return None

    def _certificate(self, j: int) -> Certificate:
        ts = self.ts

        def named(clause: Clause) -> Tuple[str, ...]:
            return tuple(ts.name_of(lit) if lit > 0 else "-" + ts.name_of(lit) for lit in clause)

        return Certificate(
            direction=ts.direction,
            index=j,
            num_latches=ts.num_latches,
            num_inputs=ts.num_inputs,
            frames=[[named(clause) for clause in self.frames.clauses[k]] for k in range(j + 1)],
            f_inf=[named(clause) for clause in self.frames.inf],
        )

    def _unsafe(self, trace: Trace) -> Verdict:
        return Verdict.unsafe(_trim(self.ts, trace))

    def _trace(self, last: BNode) -> Trace:
        aig = self.ts.aig
        path = []
        node = last
        while node.parent is not None:
            path.append(node)
            node = node.parent
        if not self.forward:
            # backward nodes are successors of their parents, the chain starts at the root I
            path.reverse()
        state = path[0].edge.pre_latches
        states = [state]
        inputs = []
        for node in path:
            inputs.append(node.edge.pre_inputs)
            state, _ = simulate_step(aig, state, node.edge.pre_inputs)
            states.append(state)
            if not self.forward and state != node.edge.post_latches:
                raise EngineInvariantError(f"re-simulation left the B-chain at {node}")
        inputs.append(path[-1].edge.post_inputs)
        return Trace(states=states, inputs=inputs)

    def _check_explore(self, m: int):
        """Literal check that no B-cube has a predecessor in F_m, on a fresh encoding."""
        cubes = [node.cube for layer in self.bseq.layers for node in layer]
        for j in range(m + 1):
            with SatSolver(backend=self.config.solver) as fresh:
                fresh.reserve(self.ts.num_vars)
                fresh.load(self.ts.trans + self.ts.bad_defs)
                fresh.load(self.frames.effective(j))
                selectors = []
                for cube in cubes:
                    selector = fresh.new_var()
                    fresh.load((-selector, lit) for lit in self.ts.prime_cube(cube))
                    selectors.append(selector)
                fresh.add_clause(selectors)
                if fresh.solve().sat:
                    if j == m:
                        raise EngineInvariantError(f"F_{m} still has a successor in the B-sequence")
                    logger.warning(f"F_{j} has a successor in the B-sequence after exploring F_{m}")

    def _check_semantics(self):
        """Explicit enumeration of the frame and layer properties on small systems."""
        if self._space is None:
            try:
                self._space = ExplicitSpace(self.ts, ORACLE_STATE_BUDGET)
            except OracleBudgetExceeded:
                logger.warning("System too large for explicit frame checks, skipping them")
                self.config = self.config.copy(update={"debug_level": 1})
                return
        space = self._space
        regions = [space.clauses(self.frames.effective(j)) for j in range(len(self.frames))]
        bad = space.bad_region()
        for j in range(1, len(regions)):
            if (regions[j] & bad).any():
                raise EngineInvariantError(f"F_{j} contains a bad state")
        for j in range(len(regions) - 1):
            if not space.successors_within(regions[j], regions[j + 1]):
                raise EngineInvariantError(f"F_{j + 1} misses a successor of F_{j}")
        for layer in range(1, len(self.bseq.layers)):
            below = space.cube(self.bseq.layers[layer - 1][0].cube)
            for node in self.bseq.layers[layer - 1][1:]:
                below = below | space.cube(node.cube)
            for node in self.bseq.layers[layer]:
                if not space.predecessors_of(space.cube(node.cube), below):
                    raise EngineInvariantError(f"{node} has a state that does not step into B_{layer - 1}")


def _trim(ts: TransitionSystem, trace: Trace) -> Trace:
    """Cuts the trace at the first step where bad holds, checking every step on the way."""
    aig = ts.aig
    if tuple(trace.states[0]) != aig.initial_state():
        raise EngineInvariantError(f"trace starts in {trace.states[0]}, not in the initial state")
    for t, (state, inputs) in enumerate(zip(trace.states, trace.inputs)):
        successor, bad = simulate_step(aig, state, inputs)
        if bad:
            return Trace(states=trace.states[: t + 1], inputs=trace.inputs[: t + 1])
        if t + 1 < len(trace.states) and successor != tuple(trace.states[t + 1]):
            raise EngineInvariantError(f"trace step {t} does not follow the circuit")
    raise EngineInvariantError("trace never reaches a bad state")


def car_check(ts: TransitionSystem, config: EngineConfig = EngineConfig(), timeout: Optional[float] = None) -> Verdict:
    return CarEngine(ts, config).check(timeout=timeout)
