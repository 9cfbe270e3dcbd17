from pathlib import Path
from typing import Dict, List, Optional
import time
import numpy as np
import pandas as pd
import plotly.express as px
import logging

from carmc.aiger import AigerError, parse_file
from carmc.config import DirectionEnum, RunConfig, VerdictEnum
from carmc.constants import BENCH_COLUMNS
from carmc.oracle import OracleBudgetExceeded, bfs_reach
from carmc.portfolio import run_portfolio


logger = logging.getLogger(__name__)


AIGER_SUFFIXES = (".aag", ".aig")


def instances(directory) -> List[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(f"{directory} is not a directory")
    return sorted(path for path in directory.iterdir() if path.suffix in AIGER_SUFFIXES)


def _consistent(aig, config: RunConfig, verdict: VerdictEnum) -> Optional[bool]:
    kinds = {verdict} if verdict != VerdictEnum.unknown else set()
    for direction in (DirectionEnum.forward, DirectionEnum.backward):
        single = run_portfolio(aig, config.copy(update={"direction": direction})).verdict
        if single.conclusive:
            kinds.add(single.kind)
    try:
        kinds.add(bfs_reach(aig, config.oracle_budget).kind)
    except OracleBudgetExceeded:
        pass
    return len(kinds) <= 1


def bench(directory, config: RunConfig, cross_check: bool = False, timing: bool = True) -> pd.DataFrame:
    """One row per AIGER file of ``directory``; failing instances are recorded and skipped."""
    rows: List[Dict] = []
    for path in instances(directory):
        row = dict.fromkeys(BENCH_COLUMNS)
        row["instance"] = path.name
        start = time.perf_counter()
        try:
            aig = parse_file(path)
            result = run_portfolio(aig, config)
            verdict = result.verdict
            row.update(
                verdict=verdict.kind.value,
                frames=verdict.stats.get("frames"),
                clauses=verdict.stats.get("clauses"),
                sat_calls=verdict.stats.get("sat_calls"),
                muc_calls=verdict.stats.get("muc_calls"),
                winner=verdict.direction.value if verdict.conclusive else None,
            )
            if cross_check:
                row["consistent"] = _consistent(aig, config, verdict.kind)
        except (AigerError, AssertionError, RuntimeError, OSError) as e:
            logger.error(f"{path.name}: {e}")
            row.update(verdict=VerdictEnum.unknown.value, error=f"{type(e).__name__}: {e}")
        row["wall_time"] = time.perf_counter() - start
        logger.info(f"{path.name}: {row['verdict']} in {row['wall_time']:.2f}s")
        rows.append(row)
    report = pd.DataFrame(rows, columns=BENCH_COLUMNS)
    if not timing:
        report = report.drop(columns=["wall_time"])
    if len(report):
        wins = report["winner"].value_counts().to_dict()
        logger.info(f"Solved {report['winner'].notna().sum()} of {len(report)}, wins per direction: {wins}")
    return report


def cactus_figure(reports: Dict[str, pd.DataFrame]):
    """Solved instances against time, one line per configuration."""
    frames = []
    for name, report in reports.items():
        solved = report[report["verdict"] != VerdictEnum.unknown.value]
        times = np.sort(solved["wall_time"].to_numpy())
        frames.append(pd.DataFrame({"configuration": name, "solved": np.arange(1, len(times) + 1), "time": times}))
    data = pd.concat(frames) if frames else pd.DataFrame(columns=["configuration", "solved", "time"])
    fig = px.line(data, x="solved", y="time", color="configuration", markers=True)
    fig.update_layout(
        xaxis_title="Solved instances",
        yaxis_title="Time (s)",
        title={"xanchor": "center", "x": 0.5},
        margin=dict(l=20, r=20, t=20, b=20),
    )
    return fig
