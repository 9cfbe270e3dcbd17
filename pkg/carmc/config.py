from pathlib import Path
import os
import yaml
from typing import Optional
from pydantic import BaseModel
from pydantic.types import confloat, conint
from pydantic import validator, root_validator
from aenum import MultiValueEnum
from dotenv import load_dotenv, find_dotenv
import logging

from carmc.constants import (
    DEFAULT_SEED,
    DEFAULT_TIMEOUT,
    DEFAULT_MAX_FRAMES,
    DEFAULT_MAX_DEPTH,
    ORACLE_STATE_BUDGET,
    EnvNames,
)


logger = logging.getLogger(__name__)


# Convention for multi value enums:
#   - value: used in config and code
#   - values[1]: beautiful name for printing
#   - values[2:]: alternative names (might be used by user in config and on the command line)
class DirectionEnum(str, MultiValueEnum):
    forward = "forward", "Forward", "fwd", "f"
    backward = "backward", "Backward", "bwd", "b"
    both = "both", "Portfolio", "portfolio", "combined"


class SolverEnum(str, MultiValueEnum):
    minisat22 = "minisat22", "MiniSat 2.2", "m22", "minisat"
    glucose4 = "glucose4", "Glucose 4", "g4", "glucose"
    cadical153 = "cadical153", "CaDiCaL 1.5.3", "cd15", "cadical"
    dpll = "dpll", "DPLL", "fallback"


class PartialAssignmentEnum(str, MultiValueEnum):
    ternary = "ternary", "Ternary simulation", "sim"
    sat = "sat", "Literal dropping", "dropping"


class VerdictEnum(str, MultiValueEnum):
    safe = "safe", "Safe"
    unsafe = "unsafe", "Unsafe"
    unknown = "unknown", "Unknown"


class UnknownReasonEnum(str, MultiValueEnum):
    timeout = "timeout", "Timeout"
    memout = "memout", "Memory out", "memory"
    step_limit = "step-limit", "Step limit", "step_limit"
    cancelled = "cancelled", "Cancelled"


class BaseConfig(BaseModel):
    class Config:
        json_encoders = {
            MultiValueEnum: lambda v: v.value,
        }
        validate_assignment = True

    def print_yaml(self):
        config_dict = self.dict()
        for key, value in config_dict.items():
            if isinstance(value, MultiValueEnum):
                config_dict[key] = value.value
            elif isinstance(value, dict):
                config_dict[key] = {
                    k: v.value if isinstance(v, MultiValueEnum) else v for k, v in value.items()
                }
            elif isinstance(value, Path):
                config_dict[key] = str(value)
        return yaml.dump(config_dict, sort_keys=False)


def load_yaml(file_path) -> dict:
    file = Path(file_path)
    with open(file) as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            logger.error("Error while parsing config file:")
            logger.error(exc)
            raise exc
    return data or {}


def _selected(dictionary: dict, key: str, default):
    entry = dictionary.get(key, default)
    if isinstance(entry, dict):
        return entry.get("selected", default)
    return entry


class EngineConfig(BaseConfig):
    solver: SolverEnum = SolverEnum.minisat22
    partial_assignment: PartialAssignmentEnum = PartialAssignmentEnum.ternary
    dead_states: bool = True
    max_frames: conint(gt=0) = DEFAULT_MAX_FRAMES
    max_depth: conint(gt=0) = DEFAULT_MAX_DEPTH
    conflict_budget: Optional[conint(gt=0)] = None
    debug_level: conint(ge=0, le=2) = 0
    seed: conint(ge=0) = DEFAULT_SEED
    dimacs_dir: Optional[Path] = None

    @classmethod
    def from_config_yaml(cls, file_path):
        data = load_yaml(file_path)
        return cls.from_dict(data.get("engine", {}))

    @classmethod
    def from_dict(cls, dictionary):
        self = cls(
            solver=_selected(dictionary, "solver", SolverEnum.minisat22),
            partial_assignment=_selected(dictionary, "partial_assignment", PartialAssignmentEnum.ternary),
            dead_states=dictionary.get("dead_states", True),
            max_frames=dictionary.get("max_frames", DEFAULT_MAX_FRAMES),
            max_depth=dictionary.get("max_depth", DEFAULT_MAX_DEPTH),
            conflict_budget=dictionary.get("conflict_budget", None),
            debug_level=dictionary.get("debug_level", 0),
            seed=dictionary.get("seed", DEFAULT_SEED),
            dimacs_dir=dictionary.get("dimacs_dir", None),
        )
        return self


class RunConfig(BaseConfig):
    input_path: Optional[Path] = None
    direction: DirectionEnum = DirectionEnum.both
    timeout: confloat(gt=0) = DEFAULT_TIMEOUT
    memory_mb: Optional[conint(gt=0)] = None
    seed: conint(ge=0) = DEFAULT_SEED
    debug_level: conint(ge=0, le=2) = 0
    oracle_check: bool = False
    oracle_budget: conint(gt=0) = ORACLE_STATE_BUDGET
    witness_path: Optional[Path] = None
    certificate_path: Optional[Path] = None
    stats_path: Optional[Path] = None
    engine: EngineConfig = EngineConfig()

    @validator("timeout")
    def check_timeout_finite(cls, v):
        if v != v or v == float("inf"):
            raise ValueError("timeout must be a finite number of seconds")
        return v

    @root_validator(skip_on_failure=True)
    def sync_engine(cls, values):
        engine = values.get("engine")
        if engine is None:
            return values
        # the run level seed and debug level are authoritative
        values["engine"] = engine.copy(update={"seed": values["seed"], "debug_level": values["debug_level"]})
        return values

    @classmethod
    def from_config_yaml(cls, file_path):
        data = load_yaml(file_path)
        self = cls.from_dict(data)
        return self

    @classmethod
    def from_dict(cls, dictionary):
        run = dictionary.get("run", {})
        self = cls(
            direction=_selected(run, "direction", DirectionEnum.both),
            timeout=run.get("timeout", DEFAULT_TIMEOUT),
            memory_mb=run.get("memory_mb", None),
            seed=run.get("seed", DEFAULT_SEED),
            debug_level=run.get("debug_level", 0),
            oracle_check=run.get("oracle_check", False),
            oracle_budget=run.get("oracle_budget", ORACLE_STATE_BUDGET),
            engine=EngineConfig.from_dict(dictionary.get("engine", {})),
        )
        return self


def resolve_seed(cli_seed: Optional[int]) -> int:
    if cli_seed is not None:
        return cli_seed
    load_dotenv(find_dotenv(usecwd=True))
    env_seed = os.environ.get(EnvNames.SEED)
    if env_seed is None:
        return DEFAULT_SEED
    try:
        seed = int(env_seed)
    except ValueError as e:
        logger.error(f"{EnvNames.SEED}={env_seed!r} is not an integer")
        raise e
    if seed < 0:
        raise ValueError(f"{EnvNames.SEED} must not be negative")
    return seed
