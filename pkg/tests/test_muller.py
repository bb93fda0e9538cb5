import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgf3d.excitation import Dipole, ExcitationConfigurationError, PlaneWave, SurfaceDensity
from wgf3d.geometry import build_sphere
from wgf3d.kernels import Material
from wgf3d.muller import MullerOperator, SolveError, SolverConfig, rhs_type1, solve
from wgf3d.operators import MaterialPair, MullerTables


@pytest.fixture(scope="module")
def setup(glass):
    mesh = build_sphere(0.5, 1, 8)
    return mesh, MullerTables(mesh, glass)


@pytest.fixture(scope="module")
def matched():
    mesh = build_sphere(0.5, 1, 8)
    mp = MaterialPair(Material(1.7, 1.0), Material(1.7, 1.0))
    return mesh, MullerTables(mesh, mp)


def _rand(n, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=n) + 1j * rng.normal(size=n)


@given(st.integers(0, 1000), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
@settings(max_examples=10, deadline=None)
def test_operator_is_linear(setup, seed, c):
    mesh, tables = setup
    op = MullerOperator(tables)
    x, y = _rand(op.size, seed), _rand(op.size, seed + 1)
    lhs = op.matvec(x + c * y)
    rhs = op.matvec(x) + c * op.matvec(y)
    assert np.abs(lhs - rhs).max() <= 1e-13 * max(1.0, np.abs(lhs).max())


def test_zero_contrast_is_identity(matched):
    mesh, tables = matched
    op = MullerOperator(tables)
    x = _rand(op.size, 5)
    assert np.abs(op.matvec(x) - x).max() / np.abs(x).max() < 1e-12


def test_zero_contrast_solution_is_minus_trace(matched):
    """With no contrast, the solved densities equal the exterior-side incident traces (no scattering)."""
    mesh, tables = matched
    exc = PlaneWave()
    b = rhs_type1(exc, mesh, tables.materials)
    sol, rep = solve(MullerOperator(tables), b)
    assert rep.converged and rep.iterations <= 2
    assert np.abs(sol.m - b.m).max() < 1e-12


def test_type1_solution_tangential(setup):
    mesh, tables = setup
    sol, rep = solve(MullerOperator(tables), rhs_type1(PlaneWave(), mesh, tables.materials))
    assert rep.converged and rep.residual <= 1e-8 * 10
    assert max(sol.normal_parts(mesh)) < 1e-12
    assert np.all(np.isfinite(sol.m)) and np.all(np.isfinite(sol.j))
    d = rep.as_dict()
    assert set(d) == {"converged", "iterations", "residual", "unknowns", "wall_time"}
    assert d["unknowns"] == 4 * mesh.size


def test_solver_failure_raises(setup):
    mesh, tables = setup
    b = rhs_type1(PlaneWave(), mesh, tables.materials)
    with pytest.raises(SolveError) as info:
        solve(MullerOperator(tables), b, SolverConfig(tol=1e-14, max_iter=2, restart=2))
    assert not info.value.report.converged
    sol, rep = solve(MullerOperator(tables), b, SolverConfig(tol=1e-14, max_iter=2, restart=2),
                     raise_on_failure=False)
    assert not rep.converged


def test_zero_rhs(setup):
    mesh, tables = setup
    sol, rep = solve(MullerOperator(tables), SurfaceDensity.zeros(mesh.size))
    assert rep.converged and rep.iterations == 0 and np.all(sol.m == 0)


def test_rhs_type1_rejects_interior_sources(setup):
    mesh, tables = setup
    with pytest.raises(ExcitationConfigurationError):
        rhs_type1(Dipole((0, 0, 0), (1, 0, 0), side="i"), mesh, tables.materials)
