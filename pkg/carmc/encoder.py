from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union
from pydantic import BaseModel
import logging

from carmc.aiger import Aig, fanin_cone, bad_value
from carmc.config import DirectionEnum


logger = logging.getLogger(__name__)


Lit = int
Cube = Tuple[int, ...]
Clause = Tuple[int, ...]


class EncodingError(ValueError):
    pass


def canonical(lits: Iterable[int]) -> Tuple[int, ...]:
    """Sorted by variable, duplicate free. Complementary pairs are rejected."""
    seen: Dict[int, int] = {}
    for lit in lits:
        if lit == 0:
            raise EncodingError("literal 0 is not a variable")
        other = seen.get(abs(lit))
        if other is not None and other != lit:
            raise EncodingError(f"complementary literals {lit} and {other}")
        seen[abs(lit)] = lit
    return tuple(seen[var] for var in sorted(seen))


def negate(lits: Sequence[int]) -> Tuple[int, ...]:
    return canonical(-lit for lit in lits)


def _clause(*lits: Union[int, bool]) -> Optional[Clause]:
    # constants are folded: a true literal satisfies the clause, a false one disappears
    if any(lit is True for lit in lits):
        return None
    rest = [lit for lit in lits if lit is not False]
    if any(-lit in rest for lit in rest):
        return None
    return canonical(rest)


class SubFormula(NamedTuple):
    clauses: Tuple[Clause, ...]
    support: FrozenSet[int]


class TransitionSystem(BaseModel):
    """CNF view of a circuit.

    Variables are laid out in the transition's own terms: latches ``1..L``, inputs ``L+1..L+I``
    and the bad alias after them form the pre-state block, the post-state block is the same
    layout shifted by ``block``, auxiliary gate variables follow both blocks. The direction only
    decides which block is the "current" space of the engine, ``prime`` maps it onto the other.
    """

    aig: Aig
    direction: DirectionEnum = DirectionEnum.forward
    num_latches: int
    num_inputs: int
    has_alias: bool
    block: int
    num_vars: int
    init: Cube
    bad: Cube
    trans: Tuple[Clause, ...]
    trans_origin: Tuple[int, ...]
    bad_defs: Tuple[Clause, ...]
    gate_vars: Dict[int, int]

    class Config:
        allow_mutation = False

    @property
    def vars(self) -> int:
        return self.block

    @property
    def _offset(self) -> int:
        return 0 if self.direction == DirectionEnum.forward else self.block

    @property
    def latch_vars(self) -> Tuple[int, ...]:
        return tuple(self._offset + k + 1 for k in range(self.num_latches))

    @property
    def input_vars(self) -> Tuple[int, ...]:
        return tuple(self._offset + self.num_latches + k + 1 for k in range(self.num_inputs))

    @property
    def alias_var(self) -> Optional[int]:
        if not self.has_alias:
            return None
        return self._offset + self.block

    @property
    def state_vars(self) -> Tuple[int, ...]:
        return tuple(self._offset + v for v in range(1, self.block + 1))

    @property
    def prime_map(self) -> Dict[int, int]:
        return {v: self.prime(v) for v in self.state_vars}

    def is_current(self, lit: int) -> bool:
        return self._offset < abs(lit) <= self._offset + self.block

    def is_primed(self, lit: int) -> bool:
        var = abs(lit)
        return var <= 2 * self.block and not self.is_current(var)

    def prime(self, lit: int) -> int:
        if not self.is_current(lit):
            raise EncodingError(f"literal {lit} is not a current-state literal")
        shift = self.block if self.direction == DirectionEnum.forward else -self.block
        return lit + shift if lit > 0 else lit - shift

    def unprime(self, lit: int) -> int:
        if not self.is_primed(lit):
            raise EncodingError(f"literal {lit} is not a primed literal")
        shift = -self.block if self.direction == DirectionEnum.forward else self.block
        return lit + shift if lit > 0 else lit - shift

    def prime_cube(self, cube: Sequence[int]) -> Cube:
        return canonical(self.prime(lit) for lit in cube)

    def unprime_cube(self, cube: Sequence[int]) -> Cube:
        return canonical(self.unprime(lit) for lit in cube)

    @property
    def prop(self) -> Clause:
        return negate(self.bad)

    def state_defs(self) -> Tuple[Clause, ...]:
        """Clauses defining every current-space variable without restricting the state space."""
        if self.direction == DirectionEnum.forward:
            return self.trans + self.bad_defs
        return self.bad_defs

    def name_of(self, var: int) -> str:
        local = abs(var) - self._offset
        if not 1 <= local <= self.block:
            raise EncodingError(f"variable {var} is not a current-state variable")
        if local <= self.num_latches:
            return f"l{local - 1}"
        if local <= self.num_latches + self.num_inputs:
            return f"i{local - self.num_latches - 1}"
        return "b"

    def var_of(self, name: str) -> int:
        try:
            if name == "b" and self.has_alias:
                return self.alias_var
            index = int(name[1:])
        except ValueError:
            raise EncodingError(f"unknown variable name {name!r}")
        if name[0] == "l" and 0 <= index < self.num_latches:
            return self.latch_vars[index]
        if name[0] == "i" and 0 <= index < self.num_inputs:
            return self.input_vars[index]
        raise EncodingError(f"unknown variable name {name!r}")

    def current_values(self, latches: Sequence[int], inputs: Sequence[int]) -> Dict[int, int]:
        """Truth values of the current-space variables for one concrete state and input vector."""
        values = dict(zip(self.latch_vars, latches))
        values.update(zip(self.input_vars, inputs))
        if self.has_alias:
            values[self.alias_var] = bad_value(self.aig, latches, inputs)
        return values


def _space(num_latches: int, num_inputs: int, block: int, aig: Aig, post: bool) -> Dict[int, int]:
    offset = block if post else 0
    mapping = {lit >> 1: offset + k + 1 for k, (lit, _, _) in enumerate(aig.latches)}
    mapping.update({lit >> 1: offset + num_latches + k + 1 for k, lit in enumerate(aig.inputs)})
    return mapping


def _sat_lit(lit: int, mapping: Dict[int, int]) -> Union[int, bool]:
    if lit < 2:
        return bool(lit)
    var = mapping[lit >> 1]
    return -var if lit & 1 else var


def _gate_clauses(lhs: int, rhs0: Union[int, bool], rhs1: Union[int, bool]) -> List[Clause]:
    neg = lambda lit: (not lit) if isinstance(lit, bool) else -lit
    candidates = [_clause(-lhs, rhs0), _clause(-lhs, rhs1), _clause(lhs, neg(rhs0), neg(rhs1))]
    return [c for c in candidates if c is not None]


def _equivalence(var: int, lit: Union[int, bool]) -> List[Clause]:
    neg = (not lit) if isinstance(lit, bool) else -lit
    candidates = [_clause(-var, lit), _clause(var, neg)]
    return [c for c in candidates if c is not None]


def encode(aig: Aig) -> TransitionSystem:
    num_latches, num_inputs = aig.num_latches, aig.num_inputs
    gate_of = {lhs >> 1 for lhs, _, _ in aig.ands}
    has_alias = aig.bad < 2 or aig.bad >> 1 in gate_of
    block = num_latches + num_inputs + int(has_alias)

    cur = _space(num_latches, num_inputs, block, aig, post=False)
    nxt = _space(num_latches, num_inputs, block, aig, post=True)
    next_free = 2 * block + 1
    gate_vars = {}
    for lhs, _, _ in aig.ands:
        gate_vars[lhs >> 1] = next_free
        next_free += 1
    cur.update(gate_vars)

    trans: List[Clause] = []
    origin: List[int] = []
    for lhs, rhs0, rhs1 in aig.ands:
        clauses = _gate_clauses(cur[lhs >> 1], _sat_lit(rhs0, cur), _sat_lit(rhs1, cur))
        trans += clauses
        origin += [lhs >> 1] * len(clauses)
    for k, (_, nxt_lit, _) in enumerate(aig.latches):
        clauses = _equivalence(block + k + 1, _sat_lit(nxt_lit, cur))
        trans += clauses
        origin += [-(k + 1)] * len(clauses)

    bad_defs: List[Clause] = []
    if has_alias:
        alias = block
        bad_defs += _equivalence(alias, _sat_lit(aig.bad, cur))
        # the bad cone again, over the post-state block
        cone, _ = fanin_cone(aig, [aig.bad])
        for lhs, rhs0, rhs1 in cone:
            nxt[lhs >> 1] = next_free
            next_free += 1
            bad_defs += _gate_clauses(nxt[lhs >> 1], _sat_lit(rhs0, nxt), _sat_lit(rhs1, nxt))
        bad_defs += _equivalence(2 * block, _sat_lit(aig.bad, nxt))
        bad = (alias,)
    else:
        bad = (_sat_lit(aig.bad, cur),)

    init = canonical((k + 1) if reset else -(k + 1) for k, (_, _, reset) in enumerate(aig.latches))
    ts = TransitionSystem(
        aig=aig,
        num_latches=num_latches,
        num_inputs=num_inputs,
        has_alias=has_alias,
        block=block,
        num_vars=next_free - 1,
        init=init,
        bad=bad,
        trans=tuple(trans),
        trans_origin=tuple(origin),
        bad_defs=tuple(bad_defs),
        gate_vars=gate_vars,
    )
    logger.debug(
        f"Encoded {num_latches} latches, {num_inputs} inputs, {len(aig.ands)} gates into "
        f"{len(trans)} transition clauses over {ts.num_vars} variables"
    )
    return ts


def reverse(ts: TransitionSystem) -> TransitionSystem:
    if ts.direction != DirectionEnum.forward:
        raise EncodingError("only a forward system can be reversed")
    # the reversed property is the clause ¬I, so its bad region is the cube I
    return ts.copy(
        update={
            "direction": DirectionEnum.backward,
            "init": ts.prime_cube(ts.bad),
            "bad": ts.prime_cube(ts.init),
        }
    )


def cofactor_trans(ts: TransitionSystem, target: Sequence[int]) -> SubFormula:
    """Clauses in the cone of influence of a primed target cube, plus the current-space
    variables that cone reads."""
    if not target:
        return SubFormula((), frozenset())
    if ts.direction != DirectionEnum.forward:
        return SubFormula(ts.trans + ts.bad_defs, frozenset(ts.state_vars))
    aig = ts.aig
    lits = []
    latches = set()
    with_bad = False
    for lit in target:
        local = ts.unprime(abs(lit))
        if local <= ts.num_latches:
            latches.add(local)
            lits.append(aig.latches[local - 1][1])
        elif local == ts.alias_var:
            with_bad = True
    if with_bad:
        # b' reads post-state latches, whose next-state cones belong to the cofactor too
        position = {lit >> 1: k + 1 for k, (lit, _, _) in enumerate(aig.latches)}
        _, bad_support = fanin_cone(aig, [aig.bad])
        for var in bad_support:
            if var in position and position[var] not in latches:
                latches.add(position[var])
                lits.append(aig.latches[position[var] - 1][1])
    cone, support = fanin_cone(aig, lits)
    cone_vars = {lhs >> 1 for lhs, _, _ in cone}
    clauses = [
        clause
        for clause, origin in zip(ts.trans, ts.trans_origin)
        if origin in cone_vars or -origin in latches
    ]
    mapping = _space(ts.num_latches, ts.num_inputs, ts.block, aig, post=False)
    support_vars = {mapping[var] for var in support}
    if with_bad:
        # b' is defined over the post-state block only
        clauses += [clause for clause in ts.bad_defs if all(abs(lit) > ts.block for lit in clause)]
    return SubFormula(tuple(clauses), frozenset(support_vars))
