from pathlib import Path
from typing import List, Optional
import argparse
import os
import resource
import sys
import pandas as pd
from pydantic import ValidationError
import logging

from carmc.aiger import AigerError, parse_file
from carmc.artifacts import check_certificate, check_witness, emit_certificate, emit_witness
from carmc.bench import bench, cactus_figure
from carmc.config import DirectionEnum, RunConfig, VerdictEnum, resolve_seed
from carmc.constants import (
    EXIT_SAFE,
    EXIT_UNKNOWN,
    EXIT_UNSAFE,
    EXIT_USAGE,
    STATS_COLUMNS,
    VERDICT_LINES,
    EnvNames,
)
from carmc.encoder import encode
from carmc.portfolio import run_portfolio
from carmc.reasoners import EngineInvariantError


logger = logging.getLogger(__name__)


EXIT_CODES = {
    VerdictEnum.unsafe: EXIT_UNSAFE,
    VerdictEnum.safe: EXIT_SAFE,
    VerdictEnum.unknown: EXIT_UNKNOWN,
}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _engine_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, help="YAML file with run and engine sections")
    direction = parser.add_mutually_exclusive_group()
    direction.add_argument("--forward", dest="direction", action="store_const", const=DirectionEnum.forward.value)
    direction.add_argument("--backward", dest="direction", action="store_const", const=DirectionEnum.backward.value)
    direction.add_argument("--both", dest="direction", action="store_const", const=DirectionEnum.both.value)
    parser.add_argument("--timeout", type=float, help="seconds per instance")
    parser.add_argument("--seed", type=int, help=f"falls back to ${EnvNames.SEED}")
    parser.add_argument("--solver", help="minisat22, glucose4, cadical153 or dpll")
    parser.add_argument("--pa", dest="partial_assignment", help="ternary or sat")
    parser.add_argument("--no-dead-states", dest="dead_states", action="store_false", default=None)
    parser.add_argument("--max-frames", type=int)
    parser.add_argument("--memory", type=int, dest="memory_mb", help="address space cap in MiB")
    parser.add_argument("--oracle-check", action="store_true", default=None)
    parser.add_argument("--debug-asserts", type=int, dest="debug_level", choices=(0, 1, 2))
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="carmc", description="Safety model checking of AIGER circuits")
    commands = parser.add_subparsers(dest="command")
    check = commands.add_parser("check", help="check one circuit")
    check.add_argument("input", type=Path)
    check.add_argument("--witness", type=Path, dest="witness_path")
    check.add_argument("--certificate", type=Path, dest="certificate_path")
    check.add_argument("--stats", type=Path, dest="stats_path")
    _engine_flags(check)
    runner = commands.add_parser("bench", help="check every circuit of a directory")
    runner.add_argument("directory", type=Path)
    runner.add_argument("--output", type=Path, help="CSV report, stdout if omitted")
    runner.add_argument("--no-timing", action="store_true")
    runner.add_argument("--plot", type=Path, help="HTML cactus chart")
    runner.add_argument("--cross-check", action="store_true")
    _engine_flags(runner)
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    config_file = args.config or os.environ.get(EnvNames.CONFIG)
    config = RunConfig.from_config_yaml(config_file) if config_file else RunConfig()
    run = {}
    for key in ("direction", "timeout", "memory_mb", "debug_level", "oracle_check"):
        value = getattr(args, key, None)
        if value is not None:
            run[key] = value
    for key in ("witness_path", "certificate_path", "stats_path", "input"):
        value = getattr(args, key, None)
        if value is not None:
            run["input_path" if key == "input" else key] = value
    engine = {}
    for key in ("solver", "partial_assignment", "dead_states", "max_frames"):
        value = getattr(args, key, None)
        if value is not None:
            engine[key] = value
    if args.seed is None and config_file:
        seed = config.seed
    else:
        seed = resolve_seed(args.seed)
    data = config.dict()
    data.update(run, seed=seed)
    data["engine"] = {**data["engine"], **engine}
    return RunConfig(**data)


def _limit_memory(memory_mb: Optional[int]):
    if memory_mb is None:
        return
    limit = memory_mb * 1024 * 1024
    resource.setrlimit(resource.RLIMIT_AS, (limit, limit))


def _check(config: RunConfig) -> int:
    aig = parse_file(config.input_path)
    logger.info(f"Checking {config.input_path} ({aig.num_latches} latches, {aig.num_inputs} inputs, {len(aig.ands)} gates)")
    logger.debug("Configuration:\n" + config.print_yaml())
    result = run_portfolio(aig, config)
    verdict = result.verdict
    self_check = config.oracle_check or config.debug_level >= 1
    print(VERDICT_LINES[verdict.kind.value])
    if verdict.kind == VerdictEnum.unsafe:
        witness = emit_witness(verdict)
        if self_check and not check_witness(aig, witness):
            raise EngineInvariantError("emitted witness does not replay")
        if config.witness_path is not None:
            config.witness_path.write_text(witness + "\n")
        else:
            print(witness[len(VERDICT_LINES["unsafe"]) + 1 :])
    elif verdict.kind == VerdictEnum.safe and verdict.certificate is not None:
        if self_check:
            report = check_certificate(encode(aig), verdict.certificate)
            if not report:
                raise EngineInvariantError(f"emitted certificate fails the {report.failed} check")
        if config.certificate_path is not None:
            config.certificate_path.write_text(emit_certificate(verdict))
    if config.stats_path is not None:
        pd.DataFrame(result.stats, columns=STATS_COLUMNS).to_csv(config.stats_path, index=False)
    return EXIT_CODES[verdict.kind]


def _bench(config: RunConfig, args: argparse.Namespace) -> int:
    report = bench(args.directory, config, cross_check=args.cross_check, timing=not args.no_timing)
    if args.output is not None:
        report.to_csv(args.output, index=False)
    else:
        report.to_csv(sys.stdout, index=False)
    if args.plot is not None:
        if args.no_timing:
            logger.warning("Cactus chart needs timing, skipping --plot")
        else:
            cactus_figure({config.direction.value: report}).write_html(str(args.plot))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] not in ("check", "bench", "-h", "--help"):
        argv.insert(0, "check")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("expected a circuit file or a subcommand")
        if args.verbose:
            logging.getLogger().setLevel(logging.DEBUG)
        config = run_config(args)
        _limit_memory(config.memory_mb)
        if args.command == "bench":
            return _bench(config, args)
        return _check(config)
    except (UsageError, ValidationError, AigerError, OSError, ValueError) as e:
        message = str(e).replace("\n", " ")
        logger.error(f"carmc: {message}")
        return EXIT_USAGE
