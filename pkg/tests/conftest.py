"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from paamp.scenario import (
    AgentSpec,
    PlanningParams,
    Scenario,
    builtin_crossing_scenario,
)
from paamp.geometry import box


@pytest.fixture(scope="session")
def crossing():
    return builtin_crossing_scenario()


@pytest.fixture(scope="session")
def corridor():
    """Two agents swapping ends of a low corridor; separation is impossible.

    The corridor is one unit tall, so with d_sep = 2 the agents would need
    about 1.8 units of horizontal clearance while swapping sides, which a
    unit step bound cannot jump over. Interval reasoning cannot see this
    (each agent's reachable box is wide), so the conflict only surfaces in
    the MILP.
    """
    workspace = box(0.0, 10.0, 0.0, 1.0, name="workspace")
    regions = (
        box(0.0, 4.5, 0.0, 1.0, name="left"),
        box(3.5, 6.5, 0.0, 1.0, name="mid"),
        box(5.5, 10.0, 0.0, 1.0, name="right"),
    )
    agents = (
        AgentSpec("a", [1.0, 0.5], [9.0, 0.5]),
        AgentSpec("b", [9.0, 0.5], [1.0, 0.5]),
    )
    params = PlanningParams(t_steps=10, d_min=2.0, d_sep=2.0, gap=5.0,
                            k_max=4, k_candidates=3, timeout=60.0)
    return Scenario(workspace, regions, (), agents, params)


@pytest.fixture(scope="session")
def single_agent():
    """One agent, two regions, no obstacles: every solve is easy and exact."""
    workspace = box(0.0, 6.0, 0.0, 2.0, name="workspace")
    regions = (
        box(0.0, 3.5, 0.0, 2.0, name="west"),
        box(2.5, 6.0, 0.0, 2.0, name="east"),
    )
    agents = (AgentSpec("solo", [0.5, 1.0], [5.5, 1.0]),)
    params = PlanningParams(t_steps=6, gap=0.0, timeout=60.0)
    return Scenario(workspace, regions, (), agents, params)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
