from __future__ import annotations

import pytest

from mistyagents.backends import ScriptedBackend, ScriptedTools
from mistyagents.registry import load_bundled_registry
from mistyagents.sim import LocalRobotClient, RobotSim


@pytest.fixture(scope="session")
def registry():
    return load_bundled_registry()


@pytest.fixture
def sim(registry):
    return RobotSim(registry)


@pytest.fixture
def robot(sim):
    return LocalRobotClient(sim)


@pytest.fixture
def tools():
    return ScriptedTools(ScriptedBackend(default_response="ok"))
