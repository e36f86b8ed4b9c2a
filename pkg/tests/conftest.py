import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sailkit.scenario import data_path, load_scenario, load_script  # noqa: E402


@pytest.fixture(scope="session")
def scenarios_dir() -> Path:
    return data_path("scenarios")


@pytest.fixture(scope="session")
def scripts_dir() -> Path:
    return data_path("scripts")


@pytest.fixture
def calm_scenario(scenarios_dir):
    return load_scenario(scenarios_dir / "calm.scenario.json")


@pytest.fixture
def hostile_scenario(scenarios_dir):
    return load_scenario(scenarios_dir / "hostile.scenario.json")


@pytest.fixture
def violation_scenario(scenarios_dir):
    return load_scenario(scenarios_dir / "violation.scenario.json")


@pytest.fixture
def nofly_scenario(scenarios_dir):
    return load_scenario(scenarios_dir / "nofly.scenario.json")


@pytest.fixture
def softdirectives_scenario(scenarios_dir):
    return load_scenario(scenarios_dir / "softdirectives.scenario.json")


@pytest.fixture
def softdirectives_script(scripts_dir):
    return load_script(scripts_dir / "softdirectives.ops.jsonl")
