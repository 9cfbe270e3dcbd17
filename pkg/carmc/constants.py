from typing import Final


EXIT_UNSAFE: Final = 10
EXIT_SAFE: Final = 20
EXIT_UNKNOWN: Final = 0
EXIT_USAGE: Final = 2

# verdict line printed on stdout
VERDICT_LINES: Final = {"unsafe": "1", "safe": "0", "unknown": "2"}

WITNESS_SAT: Final = "1"
WITNESS_PROPERTY: Final = "b0"
WITNESS_END: Final = "."

CERTIFICATE_MAGIC: Final = "carmc-certificate"
CERTIFICATE_VERSION: Final = 1

DEFAULT_SEED: Final = 0
DEFAULT_TIMEOUT: Final = 3600.0
DEFAULT_MAX_FRAMES: Final = 10_000
DEFAULT_MAX_DEPTH: Final = 100_000
ORACLE_STATE_BUDGET: Final = 1 << 16

# pysat solvers refuse variable ids beyond a signed 32 bit int
MAX_VARIABLE_ID: Final = (1 << 31) - 1

# debug mode re-checks one in this many cores
CORE_CHECK_RATE: Final = 16

# corpus limits used by bench and the acceptance corpus
CORPUS_MAX_LATCHES: Final = 8
CORPUS_MAX_INPUTS: Final = 6
CORPUS_MAX_ANDS: Final = 40

STATS_COLUMNS: Final = [
    "direction",
    "iteration",
    "frames",
    "clauses_per_frame",
    "f_inf",
    "cubes_per_layer",
    "sat_calls",
    "muc_calls",
    "pa_calls",
    "dead_cubes",
]

BENCH_COLUMNS: Final = [
    "instance",
    "verdict",
    "wall_time",
    "frames",
    "clauses",
    "sat_calls",
    "muc_calls",
    "winner",
    "consistent",
    "error",
]


class EnvNames:
    """Environment variables read by carmc"""

    SEED = "CARMC_SEED"
    CONFIG = "CARMC_CONFIG"
