from pathlib import Path
from typing import Dict, List
import itertools
import numpy as np
import logging

from carmc.aiger import Aig, evaluate, parse, simulate_step, to_ascii
from carmc.constants import CORPUS_MAX_ANDS, CORPUS_MAX_INPUTS, CORPUS_MAX_LATCHES


logger = logging.getLogger(__name__)


# one latch flipping every step, bad once it is set
TOGGLE = "aag 1 0 1 1 0\n2 3\n2\n"
# one latch stuck at 0
CONST0 = "aag 1 0 1 1 0\n2 0\n2\n"
# two bit counter, latch 0 is the high bit; bad at 11
COUNTER2 = "aag 6 0 2 1 4\n2 11\n4 5\n12\n6 5 2\n8 4 3\n10 9 7\n12 4 2\n"
# a stays 1, c follows not a; the only bad predecessor has a = 0, which has no predecessor
DEADBIT = "aag 2 0 2 1 0\n2 1 1\n4 3\n4\n"
# the property is the constant true
TRIVIAL = "aag 0 0 0 1 0\n0\n"


def hand_models() -> Dict[str, str]:
    return {
        "toggle": TOGGLE,
        "const0": CONST0,
        "counter2": COUNTER2,
        "deadbit": DEADBIT,
        "trivial": TRIVIAL,
    }


def random_aig(
    seed: int,
    max_latches: int = CORPUS_MAX_LATCHES,
    max_inputs: int = CORPUS_MAX_INPUTS,
    max_ands: int = CORPUS_MAX_ANDS,
) -> Aig:
    """Random circuit in canonical variable order: inputs, latches, then gates over earlier variables.

    Most circuits get a property over a cone without inputs that is false in the initial state
    and in all of its successors, so the search has to go past the first two steps.
    """
    rng = np.random.default_rng(seed)
    num_latches = int(rng.integers(1, max_latches + 1))
    num_inputs = int(rng.integers(0, max_inputs + 1))
    num_ands = int(rng.integers(0, max_ands + 1))
    first_gate = num_inputs + num_latches + 1
    max_var = num_inputs + num_latches + num_ands

    def literal(below: int) -> int:
        # any non-constant literal over variables 1..below-1
        return int(rng.integers(2, 2 * below))

    def literal_over(variables: List[int]) -> int:
        return 2 * variables[int(rng.integers(len(variables)))] + int(rng.integers(0, 2))

    # variables whose cone reads no input
    state_only = [num_inputs + k + 1 for k in range(num_latches)]
    ands = []
    for k in range(num_ands):
        var = first_gate + k
        if rng.random() < 0.5:
            a, b = literal_over(state_only), literal_over(state_only)
            state_only.append(var)
        else:
            a, b = literal(var), literal(var)
        ands.append((2 * var, max(a, b), min(a, b)))
    latches = []
    for k in range(num_latches):
        next_lit = int(rng.integers(0, 2 * max_var + 2))
        latches.append((2 * (num_inputs + k + 1), next_lit, int(rng.integers(0, 2))))
    draft = Aig(
        max_var=max_var,
        inputs=tuple(2 * (k + 1) for k in range(num_inputs)),
        latches=tuple(latches),
        ands=tuple(ands),
        bad=0,
    )
    quiet = _quiet_literals(draft, state_only)
    if quiet and rng.random() < 0.75:
        bad = quiet[int(rng.integers(len(quiet)))]
    elif num_ands and rng.random() < 0.8:
        # the deepest gates see most of the circuit
        bad = 2 * (max_var - int(rng.integers(0, min(num_ands, 3)))) + int(rng.integers(0, 2))
    else:
        bad = literal(max_var + 1)
    return draft.copy(update={"bad": bad})


def _quiet_literals(aig: Aig, state_only: List[int]) -> List[int]:
    """Literals over input-free variables that are false in the initial state and in every successor."""
    reset = aig.initial_state()
    no_inputs = (0,) * aig.num_inputs
    snapshots = [evaluate(aig, reset, no_inputs)]
    for vector in itertools.product((0, 1), repeat=aig.num_inputs):
        successor, _ = simulate_step(aig, reset, vector)
        snapshots.append(evaluate(aig, successor, no_inputs))
    return [
        2 * var + sign
        for var in state_only
        for sign in (0, 1)
        if all(values[var] ^ sign == 0 for values in snapshots)
    ]


def corpus(count: int, seed: int = 0, **limits) -> Dict[str, Aig]:
    models = {name: parse(text) for name, text in hand_models().items()}
    for k in range(count):
        models[f"random_{seed}_{k:04d}"] = random_aig(seed * 100_003 + k, **limits)
    return models


def write_corpus(directory, count: int, seed: int = 0) -> List[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, aig in corpus(count, seed).items():
        path = directory / f"{name}.aag"
        path.write_text(to_ascii(aig))
        paths.append(path)
    logger.info(f"Wrote {len(paths)} models to {directory}")
    return paths
