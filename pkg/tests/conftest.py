"""Shared fixtures: meshes and reference problems reused across modules."""

import numpy as np
import pytest

from kerrhelm import analytic, assembly, geometry, pml


@pytest.fixture(scope="session")
def coarse_mesh():
    return geometry.build_disk_mesh((0.5, 1.0, 2.0), 0.2)


@pytest.fixture(scope="session")
def level2_mesh(coarse_mesh):
    return geometry.refine(geometry.refine(geometry.build_disk_mesh((0.5, 1.0, 2.0), 0.4)))


def reference_problem(mesh, k=10.0, method="fem", epsilon=None):
    """The radial manufactured-solution setup on the unit disk with layer."""
    return assembly.NlhProblem(
        mesh=mesh,
        pml=pml.PmlProfile(4.0, 1.0, 2.0),
        wavenumber=assembly.Wavenumber(k),
        kerr_epsilon=k ** -2 if epsilon is None else epsilon,
        incident=analytic.IncidentWave.bessel(k),
        load=assembly.Load("manufactured"),
        penalty=assembly.penalty_gamma if method == "cip" else None,
    )


@pytest.fixture(scope="session")
def ref_problem(coarse_mesh):
    return reference_problem(coarse_mesh)


@pytest.fixture(scope="session")
def ref_problem_level2(level2_mesh):
    return reference_problem(level2_mesh)


def sweep_problem(mesh, amplitude=1.0, method="cip"):
    """The piecewise-wave-number transmission setup of the amplitude sweep."""
    k0 = 5.4
    return assembly.NlhProblem(
        mesh=mesh,
        pml=pml.PmlProfile(10.0, 1.0, 1.25),
        wavenumber=assembly.Wavenumber(k0, 3.5 * k0),
        kerr_epsilon=1e-12,
        incident=analytic.IncidentWave.plane(amplitude, k0),
        load=assembly.Load("transmission"),
        penalty=assembly.penalty_gamma if method == "cip" else None,
    )


@pytest.fixture(scope="session")
def small_sweep_mesh():
    return geometry.build_disk_mesh((0.5, 1.0, 1.25), 0.05)
