"""Durbin limiting processes for goodness-of-fit with estimated parameters.

When the first m parameters of F(x, theta) are estimated by maximum
likelihood, the empirical process of the transformed sample converges to a
Gaussian process with covariance

    G(s, t) = G_B(s, t) - psi(s)^T S^{-1} psi(t),

where G_B is the Brownian bridge covariance, psi_j(t) = dF/dtheta_j at
t = F(x, theta0), and S is the Fisher information matrix, equal to
int_0^1 psi' psi'^T dt in the time-transformed coordinates.

For the bridge the perturbing functions are phi_j = -psi_j'', the Gram
matrix Q reproduces S, and A = S^{-1} = Q^{-1}: every catalog family is a
critical perturbation.  ``durbin_model`` verifies both facts numerically at
construction.

Catalog families (closed-form psi, psi', psi'' and MLE):

* normal_location        N(mu, 1), mu estimated by the sample mean
* normal_location_scale  N(mu, sigma^2), (mu, sigma) by mean and MLE sd
* exponential_rate       Exp(lam), lam by 1/mean
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from . import kernels
from .errors import ConsistencyError
from .grids import Grid, graded_endpoint_grid
from .perturbation import CRITICAL, Classification, classify, gram_q

__all__ = [
    "FamilySpec",
    "DurbinModel",
    "normal_location",
    "normal_location_scale",
    "exponential_rate",
    "durbin_psi",
    "durbin_psi_prime",
    "durbin_phi",
    "fisher_matrix",
    "durbin_model",
    "durbin_kernel_matrix",
    "simulate_omega2",
]

_FAMILIES = {"normal_location": 1, "normal_location_scale": 2, "exponential_rate": 1}

Q_VS_S_TOL = 1e-6


@dataclass(frozen=True)
class FamilySpec:
    """A parametric family with the set of estimated parameters fixed by
    the catalog tag.  theta0 is the true parameter vector used both for the
    closed forms (scale/rate enter them) and as the sampling distribution of
    the simulator."""

    family: str
    theta0: tuple[float, ...]

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unsupported family {self.family!r}")
        object.__setattr__(self, "theta0", tuple(float(v) for v in self.theta0))
        if self.family == "normal_location" and len(self.theta0) != 1:
            raise ValueError("normal_location takes theta0 = (mu,)")
        if self.family == "normal_location_scale":
            if len(self.theta0) != 2:
                raise ValueError("normal_location_scale takes theta0 = (mu, sigma)")
            if self.theta0[1] <= 0:
                raise ValueError("sigma must be positive")
        if self.family == "exponential_rate":
            if len(self.theta0) != 1:
                raise ValueError("exponential_rate takes theta0 = (lam,)")
            if self.theta0[0] <= 0:
                raise ValueError("rate must be positive")

    @property
    def m(self) -> int:
        return _FAMILIES[self.family]


def normal_location(mu: float = 0.0) -> FamilySpec:
    return FamilySpec("normal_location", (mu,))


def normal_location_scale(mu: float = 0.0, sigma: float = 1.0) -> FamilySpec:
    return FamilySpec("normal_location_scale", (mu, sigma))


def exponential_rate(lam: float = 1.0) -> FamilySpec:
    return FamilySpec("exponential_rate", (lam,))


def _norm_pdf(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def durbin_psi(fam: FamilySpec, grid: Grid) -> np.ndarray:
    """psi_j(t) = dF/dtheta_j at t = F(x, theta0), one column per estimated
    parameter.  All catalog psi vanish at both endpoints."""
    t = grid.nodes
    if fam.family == "normal_location":
        z = ndtri(t)
        return (-_norm_pdf(z))[:, None]
    if fam.family == "normal_location_scale":
        sigma = fam.theta0[1]
        z = ndtri(t)
        p = _norm_pdf(z)
        return np.column_stack([-p / sigma, -z * p / sigma])
    lam = fam.theta0[0]
    return (-(1.0 - t) * np.log1p(-t) / lam)[:, None]


def durbin_psi_prime(fam: FamilySpec, grid: Grid) -> np.ndarray:
    """Analytic d psi / dt (the score in transformed time)."""
    t = grid.nodes
    if fam.family == "normal_location":
        return ndtri(t)[:, None]
    if fam.family == "normal_location_scale":
        sigma = fam.theta0[1]
        z = ndtri(t)
        return np.column_stack([z / sigma, (z * z - 1.0) / sigma])
    lam = fam.theta0[0]
    return ((np.log1p(-t) + 1.0) / lam)[:, None]


def durbin_phi(fam: FamilySpec, grid: Grid) -> np.ndarray:
    """phi_j = -psi_j'', analytic per family.

    The second derivatives involve 1/pdf factors that explode toward the
    endpoints, which is why these are closed forms and not difference
    quotients.
    """
    t = grid.nodes
    if fam.family == "normal_location":
        z = ndtri(t)
        return (-1.0 / _norm_pdf(z))[:, None]
    if fam.family == "normal_location_scale":
        sigma = fam.theta0[1]
        z = ndtri(t)
        p = _norm_pdf(z)
        return np.column_stack([-1.0 / (sigma * p), -2.0 * z / (sigma * p)])
    lam = fam.theta0[0]
    return (1.0 / (lam * (1.0 - t)))[:, None]


def fisher_matrix(fam: FamilySpec, grid: Grid) -> np.ndarray:
    """S = int_0^1 psi' psi'^T dt on the given grid.

    The integrands have logarithmic endpoint singularities, so pass a
    graded grid (the durbin_model default) rather than a plain Gauss rule
    when 1e-6 accuracy matters.
    """
    dp = durbin_psi_prime(fam, grid)
    s = (dp * grid.weights[:, None]).T @ dp
    return 0.5 * (s + s.T)


@dataclass(frozen=True)
class DurbinModel:
    """Validated Durbin perturbation data for one family."""

    fam: FamilySpec
    grid: Grid
    psi: np.ndarray
    phi: np.ndarray
    fisher: np.ndarray
    q_matrix: np.ndarray
    a_matrix: np.ndarray
    classification: Classification

    @property
    def trace(self) -> float:
        """int G(t, t) dt of the limiting covariance, which is also the mean
        of the limiting statistic."""
        bridge_trace = float(np.sum(self.grid.weights * self.grid.nodes * (1.0 - self.grid.nodes)))
        s_inv = np.linalg.inv(self.fisher)
        red = float(np.einsum("ij,ni,nj,n->", s_inv, self.psi, self.psi, self.grid.weights))
        return bridge_trace - red


def durbin_model(fam: FamilySpec, grid: Grid | None = None) -> DurbinModel:
    """Build and validate the Durbin perturbation of the Brownian bridge.

    Validation recomputes Q = int psi_i phi_j through the bridge pairing and
    requires max|Q - S| < 1e-6, then classifies (A = S^{-1}, Q), which must
    come out critical.
    """
    if grid is None:
        grid = graded_endpoint_grid(500)
    psi = durbin_psi(fam, grid)
    phi = durbin_phi(fam, grid)
    s = fisher_matrix(fam, grid)
    q = gram_q(phi, psi, grid)
    gap = float(np.abs(q - s).max())
    if gap > Q_VS_S_TOL:
        raise ConsistencyError(
            f"Gram matrix disagrees with Fisher information: max|Q - S| = {gap:.3e}"
        )
    a = np.linalg.inv(s)
    cls = classify(a, q)
    if cls.label != CRITICAL:
        raise ConsistencyError(f"Durbin perturbation classified {cls.label}, expected critical")
    return DurbinModel(
        fam=fam,
        grid=grid,
        psi=psi,
        phi=phi,
        fisher=s,
        q_matrix=q,
        a_matrix=a,
        classification=cls,
    )


def durbin_kernel_matrix(fam: FamilySpec, grid: Grid) -> np.ndarray:
    """The limiting covariance G_B - psi^T S^{-1} psi on a grid.

    S comes from a graded reference grid so that coarse evaluation grids do
    not distort the subtracted term.
    """
    s = fisher_matrix(fam, graded_endpoint_grid(500))
    psi = durbin_psi(fam, grid)
    g_b = kernels.kernel_matrix(kernels.bridge(), grid)
    out = g_b - psi @ np.linalg.solve(s, psi.T)
    return 0.5 * (out + out.T)


def durbin_kernel_spec(fam: FamilySpec, grid: Grid) -> kernels.KernelSpec:
    """Sampled kernel spec of the limiting covariance, carrying the bridge
    diagonal jump so the spectral solver keeps its accuracy."""
    mat = durbin_kernel_matrix(fam, grid)
    return kernels.sampled(grid, mat, diag_jump=np.ones(grid.size), green_order=1)


def _mle_transform(fam: FamilySpec, x: np.ndarray) -> np.ndarray:
    """Estimate the family parameters row-wise and push each sample through
    its fitted distribution function."""
    if fam.family == "normal_location":
        mu_hat = x.mean(axis=1, keepdims=True)
        return ndtr(x - mu_hat)
    if fam.family == "normal_location_scale":
        mu_hat = x.mean(axis=1, keepdims=True)
        sd_hat = np.sqrt(np.mean((x - mu_hat) ** 2, axis=1, keepdims=True))
        return ndtr((x - mu_hat) / sd_hat)
    lam_hat = 1.0 / x.mean(axis=1, keepdims=True)
    return -np.expm1(-lam_hat * x)


def _draw(fam: FamilySpec, rng: np.random.Generator, shape) -> np.ndarray:
    """Inverse-CDF sampling from F(., theta0)."""
    u = rng.random(shape)
    if fam.family == "normal_location":
        return fam.theta0[0] + ndtri(u)
    if fam.family == "normal_location_scale":
        return fam.theta0[0] + fam.theta0[1] * ndtri(u)
    return -np.log1p(-u) / fam.theta0[0]


def simulate_omega2(
    fam: FamilySpec,
    n: int,
    reps: int,
    seed: int,
    block: int = 8192,
) -> np.ndarray:
    """Replications of the omega^2 statistic n * int (F_hat_n(t) - t)^2 dt
    with parameters re-estimated on every replication.

    Each replication draws n samples from F(., theta0), fits the closed-form
    MLE, transforms the data through the fitted distribution function and
    evaluates the order-statistic form

        sum_i (t_(i) - (2i-1)/(2n))^2 + 1/(12 n).

    Replication j falls in shard j // block; shard b uses the generator
    PCG64(SeedSequence(entropy=seed, spawn_key=(b,))), so output is
    reproducible for fixed (seed, block) and independent of threading.
    """
    if n < 2:
        raise ValueError("sample size n must be >= 2")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    centers = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    out = np.empty(reps)
    pos = 0
    shard = 0
    while pos < reps:
        b = min(block, reps - pos)
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(shard,)))
        )
        x = _draw(fam, rng, (b, n))
        t = _mle_transform(fam, x)
        t.sort(axis=1)
        out[pos : pos + b] = ((t - centers) ** 2).sum(axis=1) + 1.0 / (12.0 * n)
        pos += b
        shard += 1
    return out
