from pathlib import Path
import os
import hypothesis
import numpy as np
import pytest

from carmc.aiger import parse
from carmc.config import EngineConfig
from carmc.corpus import hand_models
from carmc.encoder import encode

np.seterr(all="raise")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))

MODELS_DIR = Path(__file__).parent.parent / "models"


@pytest.fixture
def models():
    return {name: parse(text) for name, text in hand_models().items()}


@pytest.fixture(params=sorted(hand_models()))
def hand_model(request):
    return request.param, parse(hand_models()[request.param])


@pytest.fixture
def debug_config():
    return EngineConfig(debug_level=2)


@pytest.fixture
def toggle_ts():
    return encode(parse(hand_models()["toggle"]))
