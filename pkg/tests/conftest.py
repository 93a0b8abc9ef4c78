import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from siloplant.config import default_config
from siloplant.system import build_system


@pytest.fixture
def config():
    return default_config()


@pytest.fixture
def system(config):
    return build_system(config)


def start_scenario(recipe, cycle=0, **overrides):
    payload = {"recipe": recipe}
    if overrides:
        payload["config"] = overrides
    return {"cycle": cycle, "kind": "START_PROCESS", "payload": payload}
