"""Shared fixtures: one coarse benchmark discretization reused suite-wide."""

from dataclasses import replace

import pytest

from q3dtherm import q3d, runner
from q3dtherm.config import BenchmarkConfig


@pytest.fixture(scope="session")
def coarse_config():
    # refinement level 0 keeps every solve in the unit suite at desk scale
    return replace(BenchmarkConfig(), refinement_level=0)


@pytest.fixture(scope="session")
def coarse_mesh(coarse_config):
    return runner.transversal_mesh(coarse_config)


@pytest.fixture(scope="session")
def coarse_system(coarse_config, coarse_mesh):
    return runner.assemble_q3d_system(coarse_config, mesh=coarse_mesh)


@pytest.fixture(scope="session")
def coarse_steady(coarse_system):
    return q3d.solve_steady(coarse_system)


@pytest.fixture(scope="session")
def hot_cable_center(coarse_config):
    section = runner.cross_section(coarse_config)
    return section.cable_center(coarse_config.quenched_cable)
