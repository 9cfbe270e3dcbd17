from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union
from pydantic import BaseModel
import logging


logger = logging.getLogger(__name__)


State = Tuple[int, ...]

# ternary value for "unknown"
X = 2


class AigerError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, offset: Optional[int] = None):
        self.line = line
        self.offset = offset
        if line is not None:
            message = f"line {line}: {message}"
        elif offset is not None:
            message = f"byte {offset}: {message}"
        super().__init__(message)


class AigerUnsupportedError(AigerError):
    pass


class Aig(BaseModel):
    """And-inverter graph restricted to the safety fragment.

    ``latches`` holds ``(literal, next literal, reset)`` with reset already resolved to 0 or 1,
    the positions whose reset was ``x`` are listed in ``undefined_resets``. AND gates are stored
    with ``rhs0 >= rhs1``.
    """

    max_var: int
    inputs: Tuple[int, ...]
    latches: Tuple[Tuple[int, int, int], ...]
    ands: Tuple[Tuple[int, int, int], ...]
    bad: int
    undefined_resets: Tuple[int, ...] = ()

    class Config:
        allow_mutation = False

    @property
    def num_inputs(self) -> int:
        return len(self.inputs)

    @property
    def num_latches(self) -> int:
        return len(self.latches)

    def initial_state(self) -> State:
        return tuple(reset for _, _, reset in self.latches)

    def is_canonical(self) -> bool:
        """Variables numbered inputs first, then latches, then gates, as the binary format requires."""
        num_inputs, num_latches = self.num_inputs, self.num_latches
        if self.max_var != num_inputs + num_latches + len(self.ands):
            return False
        if any(lit != 2 * (k + 1) for k, lit in enumerate(self.inputs)):
            return False
        if any(lit != 2 * (num_inputs + k + 1) for k, (lit, _, _) in enumerate(self.latches)):
            return False
        return all(lhs == 2 * (num_inputs + num_latches + k + 1) for k, (lhs, _, _) in enumerate(self.ands))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.line = 0

    def read_line(self, what: str) -> bytes:
        if self.pos >= len(self.data):
            raise AigerError(f"unexpected end of file while reading {what}", line=self.line + 1)
        end = self.data.find(b"\n", self.pos)
        if end < 0:
            end = len(self.data)
        text = self.data[self.pos : end].rstrip(b"\r")
        self.pos = end + 1
        self.line += 1
        return text

    def read_numbers(self, what: str, low: int, high: int) -> List[int]:
        text = self.read_line(what)
        tokens = text.split()
        if not low <= len(tokens) <= high:
            raise AigerError(f"malformed {what}: {text.decode(errors='replace')!r}", line=self.line)
        try:
            return [int(token) for token in tokens]
        except ValueError:
            raise AigerError(f"malformed {what}: {text.decode(errors='replace')!r}", line=self.line)


def _parse_header(reader: _Reader) -> Tuple[str, List[int]]:
    text = reader.read_line("header")
    tokens = text.split()
    if len(tokens) < 6 or len(tokens) > 10 or tokens[0] not in (b"aag", b"aig"):
        raise AigerError(f"malformed header {text.decode(errors='replace')!r}", line=reader.line)
    try:
        numbers = [int(token) for token in tokens[1:]]
    except ValueError:
        raise AigerError(f"malformed header {text.decode(errors='replace')!r}", line=reader.line)
    if any(n < 0 for n in numbers):
        raise AigerError("negative count in header", line=reader.line)
    numbers += [0] * (9 - len(numbers))
    return tokens[0].decode(), numbers


class _Builder:
    """Collects definitions while parsing and checks them against the header."""

    def __init__(self, max_var: int):
        self.max_var = max_var
        self.defined: Dict[int, str] = {}
        self.inputs: List[int] = []
        self.latches: List[Tuple[int, int, int]] = []
        self.ands: List[Tuple[int, int, int]] = []
        self.undefined_resets: List[int] = []
        self.uses: List[Tuple[int, int]] = []

    def literal(self, lit: int, line: Optional[int] = None, offset: Optional[int] = None) -> int:
        if lit < 0 or lit > 2 * self.max_var + 1:
            raise AigerError(f"literal {lit} out of range", line=line, offset=offset)
        return lit

    def define(self, lit: int, kind: str, line: Optional[int] = None, offset: Optional[int] = None):
        self.literal(lit, line, offset)
        if lit & 1 or lit < 2:
            raise AigerError(f"{kind} literal {lit} must be even and non-constant", line=line, offset=offset)
        if lit >> 1 in self.defined:
            raise AigerError(f"variable {lit >> 1} defined twice", line=line, offset=offset)
        self.defined[lit >> 1] = kind

    def add_input(self, lit: int, line: Optional[int] = None):
        self.define(lit, "input", line)
        self.inputs.append(lit)

    def add_latch(self, lit: int, next_lit: int, reset: Optional[int], line: Optional[int] = None):
        self.define(lit, "latch", line)
        self.literal(next_lit, line)
        self.uses.append((next_lit, line))
        if reset is None or reset == 0:
            value = 0
        elif reset == 1:
            value = 1
        elif reset == lit:
            value = 0
            self.undefined_resets.append(len(self.latches))
        else:
            raise AigerUnsupportedError(f"latch reset {reset} is unsupported", line=line)
        self.latches.append((lit, next_lit, value))

    def add_and(self, lhs: int, rhs0: int, rhs1: int, line: Optional[int] = None, offset: Optional[int] = None):
        self.define(lhs, "and", line, offset)
        self.literal(rhs0, line, offset)
        self.literal(rhs1, line, offset)
        for rhs in (rhs0, rhs1):
            if rhs >> 1 >= lhs >> 1 or (rhs > 1 and rhs >> 1 not in self.defined):
                raise AigerError(f"non-monotone AND ordering at gate {lhs}", line=line, offset=offset)
        self.ands.append((lhs, max(rhs0, rhs1), min(rhs0, rhs1)))

    def build(self, bad: int, bad_line: Optional[int]) -> Aig:
        for lit, line in self.uses + [(bad, bad_line)]:
            if lit > 1 and lit >> 1 not in self.defined:
                raise AigerError(f"literal {lit} is undefined", line=line)
        if self.undefined_resets:
            logger.warning(f"Resolved {len(self.undefined_resets)} undefined latch reset value(s) to 0")
        return Aig(
            max_var=self.max_var,
            inputs=tuple(self.inputs),
            latches=tuple(self.latches),
            ands=tuple(self.ands),
            bad=bad,
            undefined_resets=tuple(self.undefined_resets),
        )


def _check_sections(numbers: List[int], line: int):
    _, _, _, outputs, _, bads, constraints, justice, fairness = numbers
    if constraints or justice or fairness:
        raise AigerUnsupportedError(
            "constraint, justice and fairness sections are unsupported (safety fragment only)", line=line
        )
    if bads > 1 or (bads == 0 and outputs > 1):
        raise AigerError("multiple properties are not supported, expected exactly one", line=line)
    if bads == 0 and outputs == 0:
        raise AigerError("zero properties: expected one output or bad literal", line=line)


def _read_properties(reader: _Reader, builder: _Builder, outputs: int, bads: int) -> Tuple[int, int]:
    # a B section takes precedence over outputs
    candidates = []
    for _ in range(outputs):
        (lit,) = reader.read_numbers("output", 1, 1)
        candidates.append((lit, reader.line))
    if bads:
        candidates = []
    for _ in range(bads):
        (lit,) = reader.read_numbers("bad property", 1, 1)
        candidates.append((lit, reader.line))
    for lit, line in candidates:
        builder.literal(lit, line)
    return candidates[0]


def _parse_ascii(reader: _Reader, numbers: List[int]) -> Aig:
    max_var, num_inputs, num_latches, outputs, num_ands, bads = numbers[:6]
    if max_var < num_inputs + num_latches + num_ands:
        raise AigerError("header: M is smaller than I + L + A", line=1)
    builder = _Builder(max_var)
    for _ in range(num_inputs):
        (lit,) = reader.read_numbers("input", 1, 1)
        builder.add_input(lit, reader.line)
    for _ in range(num_latches):
        values = reader.read_numbers("latch", 2, 3)
        builder.add_latch(values[0], values[1], values[2] if len(values) == 3 else None, reader.line)
    bad, bad_line = _read_properties(reader, builder, outputs, bads)
    for _ in range(num_ands):
        lhs, rhs0, rhs1 = reader.read_numbers("and gate", 3, 3)
        builder.add_and(lhs, rhs0, rhs1, reader.line)
    return builder.build(bad, bad_line)


def _decode_delta(data: bytes, pos: int) -> Tuple[int, int]:
    value, shift = 0, 0
    while True:
        if pos >= len(data):
            raise AigerError("unexpected end of binary and section", offset=pos)
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        shift += 7
        if not byte & 0x80:
            return value, pos


def _parse_binary(reader: _Reader, numbers: List[int]) -> Aig:
    max_var, num_inputs, num_latches, outputs, num_ands, bads = numbers[:6]
    if max_var != num_inputs + num_latches + num_ands:
        raise AigerError("header: binary format requires M = I + L + A", line=1)
    builder = _Builder(max_var)
    for k in range(num_inputs):
        builder.add_input(2 * (k + 1))
    for k in range(num_latches):
        values = reader.read_numbers("latch", 1, 2)
        builder.add_latch(2 * (num_inputs + k + 1), values[0], values[1] if len(values) == 2 else None, reader.line)
    bad, bad_line = _read_properties(reader, builder, outputs, bads)
    pos = reader.pos
    for k in range(num_ands):
        offset = pos
        lhs = 2 * (num_inputs + num_latches + k + 1)
        delta0, pos = _decode_delta(reader.data, pos)
        delta1, pos = _decode_delta(reader.data, pos)
        if delta0 == 0 or delta0 > lhs or delta1 > lhs - delta0:
            raise AigerError(f"non-monotone AND ordering at gate {lhs}", offset=offset)
        rhs0 = lhs - delta0
        builder.add_and(lhs, rhs0, rhs0 - delta1, offset=offset)
    return builder.build(bad, bad_line)


def parse(data: Union[bytes, str], fmt: str = "auto") -> Aig:
    if isinstance(data, str):
        data = data.encode()
    reader = _Reader(data)
    kind, numbers = _parse_header(reader)
    if fmt == "auto":
        fmt = "ascii" if kind == "aag" else "binary"
    if (fmt == "ascii") != (kind == "aag"):
        raise AigerError(f"expected {fmt} AIGER but header says {kind!r}", line=1)
    _check_sections(numbers, line=1)
    if fmt == "ascii":
        return _parse_ascii(reader, numbers)
    return _parse_binary(reader, numbers)


def parse_file(file_path) -> Aig:
    with open(file_path, "rb") as f:
        data = f.read()
    try:
        return parse(data)
    except AigerError as e:
        logger.error(f"Could not parse {file_path}: {e}")
        raise e


def _latch_line(lit: int, next_lit: int, reset: int, undefined: bool) -> str:
    if undefined:
        return f"{lit} {next_lit} {lit}"
    if reset:
        return f"{lit} {next_lit} 1"
    return f"{lit} {next_lit}"


def to_ascii(aig: Aig) -> str:
    undefined = set(aig.undefined_resets)
    lines = [f"aag {aig.max_var} {aig.num_inputs} {aig.num_latches} 1 {len(aig.ands)}"]
    lines += [str(lit) for lit in aig.inputs]
    lines += [_latch_line(lit, nxt, reset, k in undefined) for k, (lit, nxt, reset) in enumerate(aig.latches)]
    lines.append(str(aig.bad))
    lines += [f"{lhs} {rhs0} {rhs1}" for lhs, rhs0, rhs1 in aig.ands]
    return "\n".join(lines) + "\n"


def _encode_delta(value: int) -> bytes:
    out = bytearray()
    while value & ~0x7F:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    out.append(value)
    return bytes(out)


def to_binary(aig: Aig) -> bytes:
    if not aig.is_canonical():
        raise ValueError("binary AIGER needs inputs, latches and gates numbered in canonical order")
    undefined = set(aig.undefined_resets)
    lines = [f"aig {aig.max_var} {aig.num_inputs} {aig.num_latches} 1 {len(aig.ands)}"]
    for k, (lit, nxt, reset) in enumerate(aig.latches):
        lines.append(_latch_line(lit, nxt, reset, k in undefined).split(" ", 1)[1])
    lines.append(str(aig.bad))
    body = bytearray(("\n".join(lines) + "\n").encode())
    for lhs, rhs0, rhs1 in aig.ands:
        body += _encode_delta(lhs - rhs0)
        body += _encode_delta(rhs0 - rhs1)
    return bytes(body)


def lit_value(values: Sequence[int], lit: int) -> int:
    value = values[lit >> 1]
    if value == X:
        return X
    return value ^ (lit & 1)


def evaluate(aig: Aig, state: Sequence[int], inputs: Sequence[int]) -> List[int]:
    values = [0] * (aig.max_var + 1)
    for lit, bit in zip(aig.inputs, inputs):
        values[lit >> 1] = bit
    for (lit, _, _), bit in zip(aig.latches, state):
        values[lit >> 1] = bit
    for lhs, rhs0, rhs1 in aig.ands:
        values[lhs >> 1] = (values[rhs0 >> 1] ^ (rhs0 & 1)) & (values[rhs1 >> 1] ^ (rhs1 & 1))
    return values


def simulate_step(aig: Aig, state: Sequence[int], inputs: Sequence[int]) -> Tuple[State, int]:
    if len(inputs) != aig.num_inputs:
        raise ValueError(f"expected {aig.num_inputs} input bits, got {len(inputs)}")
    if len(state) != aig.num_latches:
        raise ValueError(f"expected {aig.num_latches} latch bits, got {len(state)}")
    values = evaluate(aig, state, inputs)
    next_state = tuple(values[nxt >> 1] ^ (nxt & 1) for _, nxt, _ in aig.latches)
    return next_state, values[aig.bad >> 1] ^ (aig.bad & 1)


def bad_value(aig: Aig, state: Sequence[int], inputs: Sequence[int]) -> int:
    values = evaluate(aig, state, inputs)
    return values[aig.bad >> 1] ^ (aig.bad & 1)


def ternary_eval(aig: Aig, known: Dict[int, int], gates: Optional[Iterable[Tuple[int, int, int]]] = None) -> List[int]:
    """Evaluates gates over 0/1/X with every variable missing from ``known`` set to X."""
    values = [X] * (aig.max_var + 1)
    values[0] = 0
    for var, value in known.items():
        values[var] = value
    for lhs, rhs0, rhs1 in aig.ands if gates is None else gates:
        a = lit_value(values, rhs0)
        b = lit_value(values, rhs1)
        if a == 0 or b == 0:
            values[lhs >> 1] = 0
        elif a == 1 and b == 1:
            values[lhs >> 1] = 1
        else:
            values[lhs >> 1] = X
    return values


def fanin_cone(aig: Aig, lits: Iterable[int]) -> Tuple[List[Tuple[int, int, int]], Set[int]]:
    """Returns the AND gates in the combinational fan-in of ``lits`` (topological order) and the
    input and latch variables feeding them."""
    gate_of = {lhs >> 1: (lhs, rhs0, rhs1) for lhs, rhs0, rhs1 in aig.ands}
    seen: Set[int] = set()
    support: Set[int] = set()
    stack = [lit >> 1 for lit in lits if lit > 1]
    while stack:
        var = stack.pop()
        if var in seen:
            continue
        seen.add(var)
        gate = gate_of.get(var)
        if gate is None:
            support.add(var)
            continue
        stack.extend(rhs >> 1 for rhs in gate[1:] if rhs > 1)
    cone = [gate for gate in aig.ands if gate[0] >> 1 in seen]
    return cone, support
