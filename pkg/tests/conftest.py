import json
from pathlib import Path

import pytest

from storeplan.config import load_config
from storeplan.simulate import SimulationContext

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"


@pytest.fixture(scope="session")
def case_config():
    return load_config(CONFIGS / "case_study.json")


@pytest.fixture(scope="session")
def case_context(case_config):
    return SimulationContext(case_config)


@pytest.fixture(scope="session")
def smoke_config():
    return load_config(CONFIGS / "smoke.json")


@pytest.fixture()
def tiny_config_doc():
    """A minimal valid config document for mutation tests; two units, two classes."""
    return json.loads((CONFIGS / "smoke.json").read_text())
