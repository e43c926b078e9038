"""Shared flow fixtures.

The expensive runs are session-scoped: one unit sphere at the acceptance
resolution, one production circle, a medium sphere for post-processing
tests, a short sphere for rescaling thresholds, and a small fleet of
unit-time-rescaled trajectories for the local sup-bound checks.
"""

import time

import numpy as np
import pytest

from mcflow.flow import FlowConfig, RemeshPolicy, run
from mcflow.rescale import rescale_trajectory, unit_time_factor
from mcflow.shapes import bumpy_sphere, ellipsoid, icosphere, regular_polygon


@pytest.fixture(scope="session")
def sphere_l4():
    """Unit icosphere, subdivision 4, semi-implicit defaults, run to the
    curvature stop. Wall time is attached for the runtime budget check."""
    start = time.perf_counter()
    trajectory = run(icosphere(4), FlowConfig())
    trajectory.provenance["wall_seconds"] = time.perf_counter() - start
    return trajectory


@pytest.fixture(scope="session")
def circle_2000():
    """Unit circle with 2000 vertices, run to the curvature stop."""
    return run(regular_polygon(2000), FlowConfig())


@pytest.fixture(scope="session")
def sphere_l3():
    """Unit icosphere, subdivision 3, run to the curvature stop."""
    return run(icosphere(3), FlowConfig())


@pytest.fixture(scope="session")
def sphere_l3_short():
    """Subdivision-3 sphere stopped at t = 0.2, well before T = 1/4."""
    return run(icosphere(3), FlowConfig(t_end=0.2))


@pytest.fixture(scope="session")
def unit_time_fleet():
    """Three distinct small runs rescaled to unit duration.

    Remeshing is off: at this resolution a single surgery next to the
    curvature peaks moves the stiff |A|-moments by more than the
    maintenance contract tolerates, and the local sup-bound batteries
    these runs feed do not need surgery.
    """
    fleet = []
    for surface in (icosphere(2),
                    ellipsoid(2, (1.1, 1.0, 0.9)),
                    bumpy_sphere(2, amplitude=0.1, seed=0)):
        trajectory = run(surface, FlowConfig(
            dt_max=5e-4, remesh=RemeshPolicy(enabled=False)))
        fleet.append(rescale_trajectory(
            trajectory, unit_time_factor(trajectory)))
    return fleet


@pytest.fixture
def rng():
    return np.random.default_rng(0)
