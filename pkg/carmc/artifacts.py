from typing import List, NamedTuple, Optional, Sequence, Tuple, Union
import logging

from carmc.aiger import Aig, simulate_step
from carmc.config import DirectionEnum, SolverEnum, VerdictEnum
from carmc.constants import CERTIFICATE_MAGIC, CERTIFICATE_VERSION, WITNESS_END, WITNESS_PROPERTY, WITNESS_SAT
from carmc.encoder import Clause, EncodingError, TransitionSystem, reverse
from carmc.sat import SatSolver
from carmc.verdict import Certificate, Trace, Verdict


logger = logging.getLogger(__name__)


class WitnessError(ValueError):
    pass


class CertificateError(ValueError):
    pass


def _bits(values: Sequence[int]) -> str:
    return "".join(str(int(v)) for v in values)


def emit_witness(result: Union[Trace, Verdict]) -> str:
    """Text in the competition witness layout: ``1``, ``b0``, the initial latches, one input line per step, ``.``."""
    if isinstance(result, Verdict):
        if result.kind != VerdictEnum.unsafe or result.trace is None:
            raise WitnessError(f"a {result.kind.value} verdict has no witness")
        result = result.trace
    lines = [WITNESS_SAT, WITNESS_PROPERTY, _bits(result.states[0])]
    lines += [_bits(inputs) for inputs in result.inputs]
    lines.append(WITNESS_END)
    return "\n".join(lines)


def _parse_bits(line: str, width: int, what: str) -> Tuple[int, ...]:
    if len(line) != width:
        raise WitnessError(f"{what} has {len(line)} bits, expected {width}")
    bits = []
    for char in line:
        if char not in "01x":
            raise WitnessError(f"{what} contains {char!r}")
        bits.append(-1 if char == "x" else int(char))
    return tuple(bits)


def parse_witness(aig: Aig, text: str) -> Trace:
    """Initial state and input vectors of a witness; the states are filled in by replay."""
    lines = [line.strip() for line in text.strip().splitlines()]
    if len(lines) < 4 or lines[0] != WITNESS_SAT or lines[1] != WITNESS_PROPERTY or lines[-1] != WITNESS_END:
        raise WitnessError("witness must start with '1', 'b0' and end with '.'")
    init = _parse_bits(lines[2], aig.num_latches, "initial state")
    reset = aig.initial_state()
    state = []
    for k, bit in enumerate(init):
        if bit == -1:
            state.append(reset[k])
        elif k not in aig.undefined_resets and bit != reset[k]:
            raise WitnessError(f"latch {k} starts at {bit}, its reset is {reset[k]}")
        else:
            state.append(bit)
    inputs = []
    for t, line in enumerate(lines[3:-1]):
        # unconstrained inputs may be given as x
        inputs.append(tuple(max(bit, 0) for bit in _parse_bits(line, aig.num_inputs, f"input line {t}")))
    if not inputs:
        raise WitnessError("witness has no input lines")
    states = [tuple(state)]
    for vector in inputs[:-1]:
        successor, _ = simulate_step(aig, states[-1], vector)
        states.append(successor)
    return Trace(states=states, inputs=inputs)


def check_witness(aig: Aig, text: str) -> bool:
    """Replays the witness; bad must hold at its last step and at no step before."""
    try:
        trace = parse_witness(aig, text)
    except WitnessError as e:
        logger.warning(f"Malformed witness: {e}")
        return False
    last = len(trace) - 1
    for t, (state, inputs) in enumerate(zip(trace.states, trace.inputs)):
        _, bad = simulate_step(aig, state, inputs)
        if bad and t < last:
            logger.warning(f"Witness replay reaches bad at step {t}, before its last step {last}")
            return False
        if not bad and t == last:
            logger.warning(f"Witness replay does not reach bad after {len(trace)} steps")
            return False
    return True


def _clause_line(key, clause: Sequence[str]) -> str:
    return " ".join([str(key)] + list(clause))


def emit_certificate(result: Union[Certificate, Verdict]) -> str:
    """Versioned clause-list text, one ``<frame> <literals>`` line per clause and ``inf <literals>`` for F∞."""
    if isinstance(result, Verdict):
        if result.kind != VerdictEnum.safe or result.certificate is None:
            raise CertificateError(f"a {result.kind.value} verdict has no certificate")
        result = result.certificate
    lines = [
        f"{CERTIFICATE_MAGIC} {CERTIFICATE_VERSION}",
        f"direction {result.direction.value}",
        f"latches {result.num_latches}",
        f"inputs {result.num_inputs}",
        f"index {result.index}",
        f"frames {len(result.frames)}",
    ]
    for k, frame in enumerate(result.frames):
        lines += [_clause_line(k, clause) for clause in frame]
    lines += [_clause_line("inf", clause) for clause in result.f_inf]
    lines.append("end")
    return "\n".join(lines) + "\n"


def _header(lines: List[str], position: int, key: str) -> str:
    try:
        name, value = lines[position].split()
    except (IndexError, ValueError):
        raise CertificateError(f"expected '{key} <value>' on line {position + 1}")
    if name != key:
        raise CertificateError(f"expected '{key}' on line {position + 1}, got {name!r}")
    return value


def parse_certificate(text: str) -> Certificate:
    lines = [line.strip() for line in text.strip().splitlines() if line.strip()]
    if not lines or lines[0] != f"{CERTIFICATE_MAGIC} {CERTIFICATE_VERSION}":
        raise CertificateError(f"missing '{CERTIFICATE_MAGIC} {CERTIFICATE_VERSION}' header")
    if lines[-1] != "end":
        raise CertificateError("certificate is not terminated by 'end'")
    try:
        direction = DirectionEnum(_header(lines, 1, "direction"))
        num_latches = int(_header(lines, 2, "latches"))
        num_inputs = int(_header(lines, 3, "inputs"))
        index = int(_header(lines, 4, "index"))
        count = int(_header(lines, 5, "frames"))
    except ValueError as e:
        raise CertificateError(str(e))
    frames: List[List[Tuple[str, ...]]] = [[] for _ in range(count)]
    f_inf: List[Tuple[str, ...]] = []
    for number, line in enumerate(lines[6:-1], start=7):
        # a bare frame number is the empty clause
        key, *lits = line.split()
        if key == "inf":
            f_inf.append(tuple(lits))
            continue
        try:
            frames[int(key)].append(tuple(lits))
        except (ValueError, IndexError):
            raise CertificateError(f"line {number}: unknown frame {key!r}")
    return Certificate(
        direction=direction,
        index=index,
        num_latches=num_latches,
        num_inputs=num_inputs,
        frames=frames,
        f_inf=f_inf,
    )


class CheckReport(NamedTuple):
    ok: bool
    failed: Optional[str] = None
    message: str = ""

    def __bool__(self):
        return self.ok


def _fail(check: str, message: str) -> CheckReport:
    logger.warning(f"Certificate check {check} failed: {message}")
    return CheckReport(False, check, message)


def _system_for(ts: TransitionSystem, cert: Certificate) -> TransitionSystem:
    if cert.direction == ts.direction:
        return ts
    if cert.direction == DirectionEnum.backward and ts.direction == DirectionEnum.forward:
        return reverse(ts)
    raise CertificateError(f"cannot check a {cert.direction.value} certificate against a {ts.direction.value} system")


def check_certificate(ts: TransitionSystem, cert: Certificate, backend: SolverEnum = SolverEnum.minisat22) -> CheckReport:
    """Re-checks with fresh solvers that the union S of F_0..F_{j-1} contains the initial region,
    is closed under the relation and excludes the bad region."""
    if not cert.frames or cert.index < 1 or cert.index >= len(cert.frames):
        return _fail("malformed", f"index {cert.index} with {len(cert.frames)} frames")
    try:
        ts = _system_for(ts, cert)
        if (cert.num_latches, cert.num_inputs) != (ts.num_latches, ts.num_inputs):
            raise CertificateError("certificate and circuit disagree on latches or inputs")

        def resolve(clause: Sequence[str]) -> Clause:
            return tuple(-ts.var_of(name[1:]) if name.startswith("-") else ts.var_of(name) for name in clause)

        union = [
            [resolve(clause) for clause in cert.frames[m]] + ([resolve(clause) for clause in cert.f_inf] if m >= 1 else [])
            for m in range(cert.index)
        ]
    except (CertificateError, EncodingError) as e:
        return _fail("malformed", str(e))

    def solver_with(defs) -> SatSolver:
        solver = SatSolver(backend=backend)
        solver.reserve(ts.num_vars)
        solver.load(defs)
        return solver

    def assert_union(solver: SatSolver, frames: List[List[Clause]]):
        selectors = []
        for clauses in frames:
            selector = solver.new_var()
            solver.load((-selector,) + clause for clause in clauses)
            selectors.append(selector)
        solver.add_clause(selectors)

    def assert_outside(solver: SatSolver, frames: List[List[Clause]]):
        for clauses in frames:
            selectors = []
            for clause in clauses:
                selector = solver.new_var()
                solver.load((-selector, -lit) for lit in clause)
                selectors.append(selector)
            solver.add_clause(selectors)

    with solver_with(ts.state_defs()) as solver:
        solver.load((lit,) for lit in ts.init)
        assert_outside(solver, union)
        if solver.solve().sat:
            return _fail("initiation", "an initial state lies outside S")
    with solver_with(ts.trans + ts.bad_defs) as solver:
        assert_union(solver, union)
        assert_outside(solver, [[tuple(ts.prime(lit) for lit in clause) for clause in clauses] for clauses in union])
        if solver.solve().sat:
            return _fail("consecution", "S has a successor outside S")
    with solver_with(ts.state_defs()) as solver:
        assert_union(solver, union)
        if solver.solve(list(ts.bad)).sat:
            return _fail("safety", "S contains a bad state")
    return CheckReport(True)
