"""Covariance kernels on the unit interval.

A :class:`KernelSpec` is either a catalog kernel (Wiener ``min(s,t)``,
Brownian bridge ``min(s,t) - st``, Ornstein-Uhlenbeck ``exp(-alpha|s-t|)``)
or a symmetric matrix sampled on a quadrature grid.

Catalog kernels are smooth off the diagonal but their normal derivative
jumps across it.  That jump value (1 for Wiener and bridge, 2*alpha for OU)
drives the diagonal quadrature correction used by the spectral solver, so
the spec object carries it alongside the evaluator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .grids import Grid

__all__ = [
    "KernelSpec",
    "wiener",
    "bridge",
    "ornstein_uhlenbeck",
    "sampled",
    "kernel_eval",
    "kernel_matrix",
    "diagonal_jump",
]

PSD_TOL = 1e-10

_CATALOG = ("wiener", "bridge", "ornstein_uhlenbeck", "sampled")


@dataclass(frozen=True)
class KernelSpec:
    """Descriptor of a covariance kernel G0(x, y) on [0, 1].

    ``green_order`` is user-declared metadata: the half-order l of the
    differential operator whose Green function the kernel is, when known.
    It is never derived from the kernel itself.
    """

    variant: str
    alpha: float | None = None
    green_order: int | None = None
    grid: Grid | None = None
    matrix: np.ndarray | None = None
    diag_jump: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.variant not in _CATALOG:
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if self.variant == "ornstein_uhlenbeck":
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("ornstein_uhlenbeck needs rate alpha > 0")
        if self.green_order is not None and self.green_order < 1:
            raise ValueError("green_order must be a positive integer")
        if self.variant == "sampled":
            if self.grid is None or self.matrix is None:
                raise ValueError("sampled kernel needs a grid and a matrix")
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("sampled kernel matrix must be square")
            if m.shape[0] != self.grid.size:
                raise ValueError("sampled kernel matrix does not match its grid")
            if not np.allclose(m, m.T, rtol=0, atol=1e-10 * max(1.0, np.abs(m).max())):
                raise DataError("sampled kernel matrix is not symmetric")
            object.__setattr__(self, "matrix", 0.5 * (m + m.T))
            if self.diag_jump is not None:
                j = np.asarray(self.diag_jump, dtype=float)
                if j.shape != (self.grid.size,):
                    raise ValueError("diag_jump must have one value per grid node")
                object.__setattr__(self, "diag_jump", j)


def wiener() -> KernelSpec:
    """Standard Wiener process covariance min(s, t)."""
    return KernelSpec(variant="wiener", green_order=1)


def bridge() -> KernelSpec:
    """Brownian bridge covariance min(s, t) - st."""
    return KernelSpec(variant="bridge", green_order=1)


def ornstein_uhlenbeck(alpha: float) -> KernelSpec:
    """Stationary OU covariance exp(-alpha |s - t|), unit variance."""
    return KernelSpec(variant="ornstein_uhlenbeck", alpha=float(alpha))


def sampled(
    grid: Grid,
    matrix: np.ndarray,
    diag_jump: np.ndarray | None = None,
    green_order: int | None = None,
) -> KernelSpec:
    """Kernel given by its values on a grid.

    ``diag_jump`` optionally supplies the diagonal derivative jump at each
    node so the spectral solver can apply its kink correction; leave it None
    for kernels smooth across the diagonal.
    """
    return KernelSpec(
        variant="sampled",
        grid=grid,
        matrix=np.asarray(matrix, dtype=float),
        diag_jump=diag_jump,
        green_order=green_order,
    )


def _eval_grid(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if spec.variant == "wiener":
        return np.minimum(x, y)
    if spec.variant == "bridge":
        return np.minimum(x, y) - x * y
    if spec.variant == "ornstein_uhlenbeck":
        return np.exp(-spec.alpha * np.abs(x - y))
    raise AssertionError(spec.variant)


def _sampled_index(spec: KernelSpec, value: float) -> int:
    idx = int(np.argmin(np.abs(spec.grid.nodes - value)))
    if abs(spec.grid.nodes[idx] - value) > 1e-12:
        raise ValueError(f"point {value} is not a node of the sampled kernel grid")
    return idx


def kernel_eval(spec: KernelSpec, x: float, y: float) -> float:
    """Evaluate G0(x, y) for x, y in [0, 1].

    Sampled kernels can only be queried at their own grid nodes.
    """
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"coordinates must lie in [0, 1], got ({x}, {y})")
    if spec.variant == "sampled":
        return float(spec.matrix[_sampled_index(spec, x), _sampled_index(spec, y)])
    return float(_eval_grid(spec, np.float64(x), np.float64(y)))


def kernel_matrix(spec: KernelSpec, grid: Grid) -> np.ndarray:
    """Kernel values on the tensor grid, symmetrized after evaluation."""
    if grid.size == 0:
        return np.zeros((0, 0))
    if np.any(grid.nodes < 0.0) or np.any(grid.nodes > 1.0):
        raise ValueError("grid nodes must lie inside [0, 1]")
    if spec.variant == "sampled":
        if not spec.grid.same_nodes(grid, tol=1e-12):
            raise ValueError("sampled kernel can only be evaluated on its own grid")
        m = spec.matrix
    else:
        m = _eval_grid(spec, grid.nodes[:, None], grid.nodes[None, :])
    return 0.5 * (m + m.T)


def diagonal_jump(spec: KernelSpec, nodes: np.ndarray) -> np.ndarray | None:
    """Jump of d/dy G0(x, y) across y = x, evaluated at the given nodes.

    Returns None when the jump is unknown (sampled kernels without declared
    jump data), in which case no quadrature correction is applied.
    """
    if spec.variant in ("wiener", "bridge"):
        return np.ones_like(np.asarray(nodes, dtype=float))
    if spec.variant == "ornstein_uhlenbeck":
        return np.full_like(np.asarray(nodes, dtype=float), 2.0 * spec.alpha)
    return spec.diag_jump
