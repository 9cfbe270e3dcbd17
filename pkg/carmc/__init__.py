from carmc.aiger import Aig, parse, parse_file
from carmc.config import DirectionEnum, EngineConfig, RunConfig
from carmc.encoder import TransitionSystem, encode, reverse
from carmc.engine import CarEngine, car_check
from carmc.portfolio import run_portfolio
from carmc.verdict import Certificate, Trace, Verdict
