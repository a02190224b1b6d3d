import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smallball import (
    DataError,
    Grid,
    bridge,
    gauss_legendre_grid,
    kernel_eval,
    kernel_matrix,
    ornstein_uhlenbeck,
    sampled,
    wiener,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_catalog_values():
    assert kernel_eval(bridge(), 0.5, 0.5) == pytest.approx(0.25, abs=1e-15)
    assert kernel_eval(wiener(), 0.3, 0.7) == pytest.approx(0.3, abs=1e-15)
    assert kernel_eval(ornstein_uhlenbeck(1.0), 0.0, 1.0) == pytest.approx(
        math.exp(-1.0), abs=1e-12
    )


def test_green_order_metadata():
    assert wiener().green_order == 1
    assert bridge().green_order == 1
    assert ornstein_uhlenbeck(2.0).green_order is None


@given(unit, unit)
def test_symmetry(x, y):
    for spec in (wiener(), bridge(), ornstein_uhlenbeck(0.7)):
        assert kernel_eval(spec, x, y) == kernel_eval(spec, y, x)


def test_two_node_bridge_matrix():
    grid = Grid(nodes=np.array([1.0 / 3.0, 2.0 / 3.0]), weights=np.array([0.5, 0.5]))
    m = kernel_matrix(bridge(), grid)
    np.testing.assert_allclose(m, [[2.0 / 9.0, 1.0 / 9.0], [1.0 / 9.0, 2.0 / 9.0]], atol=1e-15)


def test_empty_grid():
    grid = Grid(nodes=np.array([]), weights=np.array([]))
    assert kernel_matrix(wiener(), grid).shape == (0, 0)


def test_wiener_weighted_trace():
    # quadrature oracle: int_0^1 t dt = 1/2, exact for Gauss of any order
    grid = gauss_legendre_grid(200)
    m = kernel_matrix(wiener(), grid)
    assert abs(float(grid.integrate(np.diag(m))) - 0.5) < 1e-8


@pytest.mark.parametrize(
    "spec,trace",
    [(bridge(), 1.0 / 6.0), (wiener(), 0.5), (ornstein_uhlenbeck(1.3), 1.0)],
)
def test_trace_convergence(spec, trace):
    grid = gauss_legendre_grid(500)
    val = float(grid.integrate(np.diag(kernel_matrix(spec, grid))))
    assert abs(val - trace) / trace < 1e-6


@pytest.mark.parametrize("spec", [bridge(), wiener(), ornstein_uhlenbeck(2.0)])
def test_matrix_symmetric_psd(spec):
    grid = gauss_legendre_grid(200)
    m = kernel_matrix(spec, grid)
    assert np.array_equal(m, m.T)
    eig = np.linalg.eigvalsh(m)
    assert eig[0] >= -1e-10 * eig[-1]


def test_sampled_kernel_roundtrip():
    grid = gauss_legendre_grid(50)
    m = kernel_matrix(bridge(), grid)
    spec = sampled(grid, m)
    x = float(grid.nodes[7])
    assert kernel_eval(spec, x, x) == m[7, 7]
    np.testing.assert_array_equal(kernel_matrix(spec, grid), m)


def test_sampled_off_grid_query():
    grid = gauss_legendre_grid(50)
    spec = sampled(grid, kernel_matrix(bridge(), grid))
    with pytest.raises(ValueError):
        kernel_eval(spec, 0.123456, 0.5)


def test_sampled_validation():
    grid = gauss_legendre_grid(4)
    bad = np.arange(16.0).reshape(4, 4)
    with pytest.raises(DataError):
        sampled(grid, bad)
    with pytest.raises(ValueError):
        sampled(grid, np.eye(3))


def test_out_of_domain_rejected():
    with pytest.raises(ValueError):
        kernel_eval(bridge(), -0.1, 0.5)
    with pytest.raises(ValueError):
        ornstein_uhlenbeck(-1.0)
