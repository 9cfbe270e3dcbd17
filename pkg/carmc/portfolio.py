from queue import Queue
from typing import Dict, List, Optional, Tuple
import threading
import logging

from carmc.aiger import Aig
from carmc.config import DirectionEnum, RunConfig, UnknownReasonEnum, VerdictEnum
from carmc.encoder import TransitionSystem, encode, reverse
from carmc.engine import CarEngine
from carmc.oracle import OracleBudgetExceeded, bfs_reach
from carmc.reasoners import EngineInvariantError
from carmc.verdict import IterationStats, Verdict


logger = logging.getLogger(__name__)


class PortfolioResult:
    """Winning verdict plus the per-iteration statistics of every engine that ran."""

    def __init__(self, verdict: Verdict, stats: List[IterationStats], verdicts: Dict[DirectionEnum, Verdict]):
        self.verdict = verdict
        self.stats = stats
        self.verdicts = verdicts


def _systems(aig: Aig, direction: DirectionEnum) -> List[TransitionSystem]:
    forward = encode(aig)
    if direction == DirectionEnum.forward:
        return [forward]
    if direction == DirectionEnum.backward:
        return [reverse(forward)]
    return [forward, reverse(forward)]


class Lockstep:
    """Round barrier for the engines of one portfolio run.

    Every engine reports at the end of each round whether it concluded. The round closes once
    every engine still running has reported; if any of them concluded, all of them stop there.
    An engine that ends for any other reason leaves, and the rest carry on without it.
    """

    def __init__(self, engines: List[CarEngine]):
        self._cond = threading.Condition()
        self._active = {id(engine) for engine in engines}
        self._arrived: Dict[int, bool] = {}
        self.round = 0
        self.stopped = False

    def arrive(self, engine: CarEngine, concluded: bool) -> bool:
        with self._cond:
            self._arrived[id(engine)] = concluded
            current = self.round
            self._close_if_complete()
            while self.round == current:
                self._cond.wait()
            return not self.stopped

    def leave(self, engine: CarEngine):
        with self._cond:
            self._active.discard(id(engine))
            self._arrived.pop(id(engine), None)
            self._close_if_complete()

    def _close_if_complete(self):
        if not self._active or not self._active <= set(self._arrived):
            return
        if any(self._arrived.values()):
            self.stopped = True
        self._arrived.clear()
        self.round += 1
        self._cond.notify_all()


def _pick(verdicts: Dict[DirectionEnum, Verdict]) -> Optional[Verdict]:
    # engines stop in the same round, so ties go to the forward engine
    for direction in (DirectionEnum.forward, DirectionEnum.backward):
        verdict = verdicts.get(direction)
        if verdict is not None and verdict.conclusive:
            return verdict
    return None


def run_portfolio(aig: Aig, config: RunConfig) -> PortfolioResult:
    """Runs the selected directions concurrently in lockstep rounds.

    The first round in which some engine concludes ends the run, so the verdict and the
    statistics of every engine depend on the seed only, not on thread timing.
    """
    cancel = threading.Event()
    engines = [CarEngine(ts, config.engine, cancel) for ts in _systems(aig, config.direction)]
    lockstep = Lockstep(engines)
    for engine in engines:
        engine.sync = lockstep.arrive
    results: "Queue[Tuple[CarEngine, Optional[Verdict], Optional[BaseException]]]" = Queue()

    def work(engine: CarEngine):
        try:
            results.put((engine, engine.check(), None))
        except BaseException as e:
            results.put((engine, None, e))
        finally:
            lockstep.leave(engine)

    def stop(reason: UnknownReasonEnum):
        for engine in engines:
            engine.cancel(reason)

    timer = threading.Timer(config.timeout, stop, args=(UnknownReasonEnum.timeout,))
    timer.daemon = True
    timer.start()
    threads = [threading.Thread(target=work, args=(engine,), daemon=True) for engine in engines]
    for thread in threads:
        thread.start()

    verdicts: Dict[DirectionEnum, Verdict] = {}
    error: Optional[BaseException] = None
    try:
        for _ in engines:
            engine, verdict, exc = results.get()
            if exc is not None:
                logger.error(f"{engine.name} engine failed: {exc}")
                error = error or exc
                stop(UnknownReasonEnum.cancelled)
                continue
            verdicts[engine.ts.direction] = verdict
    finally:
        timer.cancel()
        for thread in threads:
            thread.join()
    if error is not None:
        raise error
    winner = _pick(verdicts)
    if winner is None:
        # every engine gave up; report the first reason
        winner = verdicts[engines[0].ts.direction]
    else:
        logger.info(f"{winner.direction.values[1]} engine won with {winner}")
    stats = [record for engine in engines for record in engine.stats]
    result = PortfolioResult(winner, stats, verdicts)
    if config.oracle_check:
        cross_check(aig, result, config.oracle_budget)
    return result


def cross_check(aig: Aig, result: PortfolioResult, budget: int) -> Optional[Verdict]:
    """Compares every conclusive verdict against explicit reachability, when the system is small enough."""
    try:
        expected = bfs_reach(aig, budget)
    except OracleBudgetExceeded:
        logger.warning("Oracle check skipped, the instance exceeds the state budget")
        return None
    for direction, verdict in result.verdicts.items():
        if verdict.conclusive and verdict.kind != expected.kind:
            logger.error(f"{direction.values[1]} engine said {verdict.kind.value}, explicit search says {expected.kind.value}")
            raise EngineInvariantError(f"{direction.value} verdict disagrees with explicit reachability")
    if result.verdict.kind == VerdictEnum.unsafe and len(result.verdict.trace) < len(expected.trace):
        raise EngineInvariantError("counterexample shorter than the shortest one found by explicit search")
    logger.info(f"Oracle agrees: {expected.kind.value}")
    return expected
