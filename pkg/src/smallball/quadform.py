"""Distribution of weighted chi-square forms sum_k mu_k xi_k^2.

Three evaluators with complementary ranges:

* ``cdf_gil_pelaez`` inverts the characteristic function; accurate for
  central probabilities (P >~ 1e-6) where it reaches ~1e-8 absolute.
* ``cdf_saddlepoint`` is a Lugannani-Rice left-tail approximation on the
  exact cumulant generating function; returns log-probabilities reliably
  down to e^-10000 where inversion cancels catastrophically.
* ``cdf_monte_carlo`` is the brute-force check, deterministic for a fixed
  (seed, shard layout).

A weight sequence is a finite head plus a bound on the discarded tail sum.
The tail concentrates tightly around its mean (its variance is of higher
order), so the evaluators treat it as the deterministic shift
r -> r - tail_sum_bound and report the shift sensitivity
cdf(r) - cdf(r - tail_sum_bound) inside the error bound.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ndtri
from scipy.stats import norm

from .errors import NumericError

__all__ = [
    "WeightSeq",
    "ProbabilityEstimate",
    "cdf_gil_pelaez",
    "cdf_saddlepoint",
    "cdf_monte_carlo",
    "distortion_constant",
    "read_weights",
    "write_weights",
]

MC_SHARDS = 16


@dataclass(frozen=True)
class WeightSeq:
    """Positive non-increasing weights mu_1..mu_N plus a tail descriptor.

    ``tail_sum_bound`` bounds sum_{k>N} mu_k for the discarded tail of an
    infinite sequence; zero means the sequence is exactly finite.
    """

    head: np.ndarray
    tail_sum_bound: float = 0.0
    label: str = ""

    def __post_init__(self):
        head = np.asarray(self.head, dtype=float).ravel()
        object.__setattr__(self, "head", head)
        if head.size == 0:
            raise ValueError("weight sequence must be non-empty")
        if not np.all(head > 0):
            raise ValueError("weights must be strictly positive")
        if np.any(np.diff(head) > 1e-12 * head[0]):
            raise ValueError("weights must be non-increasing")
        if self.tail_sum_bound < 0:
            raise ValueError("tail_sum_bound must be >= 0")

    @property
    def total(self) -> float:
        return float(self.head.sum())


@dataclass(frozen=True)
class ProbabilityEstimate:
    """Probability with a log-scale companion and an error estimate.

    ``log_value`` stays meaningful when ``value`` underflows to zero.
    """

    value: float
    log_value: float
    error_bound: float
    method: str


# ---------------------------------------------------------------------------
# Gil-Pelaez / Imhof inversion
# ---------------------------------------------------------------------------


def _imhof_parts(mu: np.ndarray, t: float) -> tuple[float, float]:
    """Phase theta0(t) and amplitude log rho(t) of the characteristic
    function prod (1 - 2 i mu_k t)^(-1/2)."""
    theta = 0.5 * float(np.sum(np.arctan(2.0 * mu * t)))
    log_rho = 0.25 * float(np.sum(np.log1p(4.0 * mu * mu * t * t)))
    return theta, log_rho


def cdf_gil_pelaez(w: WeightSeq, r: float, tol: float = 1e-9) -> ProbabilityEstimate:
    """P{sum mu_k xi_k^2 < r} by numerical inversion of the characteristic
    function:

        F(r) = 1/2 - (1/pi) int_0^inf sin(theta0(t) - t r) / (t rho(t)) dt.

    The integral is cut where an integration-by-parts estimate of the
    remainder drops below tolerance, and that first by-parts term is added
    back.  Intended for central probabilities; the deep left tail belongs to
    ``cdf_saddlepoint``.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    mu = w.head
    shift = w.tail_sum_bound
    r_eff = r - shift
    if r_eff <= 0:
        # the whole ball sits below the deterministic tail shift
        return ProbabilityEstimate(0.0, -np.inf, _shift_sensitivity(w, r, _gp_value), "gil_pelaez")
    value, quad_err = _gp_value(mu, r_eff, tol)
    err = quad_err + (_shift_sensitivity(w, r, _gp_value) if shift > 0 else 0.0)
    value_c = min(max(value, 0.0), 1.0)
    log_value = math.log(value_c) if value_c > 0 else -np.inf
    return ProbabilityEstimate(value_c, log_value, err, "gil_pelaez")


def _gp_value(mu: np.ndarray, r: float, tol: float = 1e-9) -> tuple[float, float]:
    n = mu.size
    # P{Q < r} <= prod_j P{mu_j xi_j^2 < r} <= prod_j sqrt(2r/(pi mu_j));
    # when that bound is already negligible, skip the oscillatory integral
    log_bound = 0.5 * np.cumsum(np.log(2.0 * r / (np.pi * mu)))
    if float(log_bound.min()) < math.log(1e-14):
        return 0.0, math.exp(float(log_bound.min()))

    def integrand(t):
        theta, log_rho = _imhof_parts(mu, t)
        return math.sin(theta - t * r) * math.exp(-log_rho) / t

    def g(t):
        _, log_rho = _imhof_parts(mu, t)
        return math.exp(-log_rho) / t

    def theta_slope(t):
        return float(np.sum(mu / (1.0 + 4.0 * mu * mu * t * t)))

    # truncation point: after one integration by parts the remainder is
    # O((|g'| + g * theta0') / r^2); expand T until that is small
    T = 10.0 / mu[0]
    while T < 1e15:
        resid = ((1.0 + 0.5 * n) * g(T) / T + g(T) * theta_slope(T)) / (r * r)
        if resid <= 0.5 * tol:
            break
        T *= 1.6
    else:
        raise NumericError("gil_pelaez: could not find a truncation point")
    theta_T, _ = _imhof_parts(mu, T)
    n_osc = (theta_T + T * r) / (2.0 * math.pi)
    if n_osc > 50000:
        raise NumericError(
            f"gil_pelaez: integrand oscillates {n_osc:.0f} times before decay; "
            "this regime belongs to cdf_saddlepoint"
        )
    n_panels = int(max(1.5 * n_osc, 20.0))
    edges = np.linspace(0.0, T, n_panels + 1)
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for a, b in zip(edges[:-1], edges[1:]):
            v, e = quad(integrand, a, b, limit=60)
            total += v
            err += e
    # leading by-parts term of the cut tail
    slope_T = r - theta_slope(T)
    total += g(T) * math.cos(theta_T - T * r) / slope_T
    tail_resid = ((1.0 + 0.5 * n) * g(T) / T + g(T) * theta_slope(T)) / (slope_T * slope_T)
    err += abs(tail_resid)
    if err > max(100.0 * tol, 1e-6):
        raise NumericError(f"gil_pelaez inversion did not converge (err={err:.2e})")
    return 0.5 - total / math.pi, err


def _shift_sensitivity(w: WeightSeq, r: float, value_fn) -> float:
    """cdf(r) - cdf(r - tail_sum_bound), the error of treating the tail as a
    deterministic shift; evaluated with the cheap inversion backend."""
    if w.tail_sum_bound <= 0:
        return 0.0
    mu = w.head
    hi, _ = value_fn(mu, r, 1e-7)
    lo = 0.0
    if r - w.tail_sum_bound > 0:
        lo, _ = value_fn(mu, r - w.tail_sum_bound, 1e-7)
    return max(hi - lo, 0.0)


# ---------------------------------------------------------------------------
# Saddlepoint (Lugannani-Rice) left tail
# ---------------------------------------------------------------------------


def _cgf(s: float, mu: np.ndarray) -> float:
    return -0.5 * float(np.sum(np.log1p(-2.0 * s * mu)))


def _cgf1(s: float, mu: np.ndarray) -> float:
    return float(np.sum(mu / (1.0 - 2.0 * s * mu)))


def _cgf2(s: float, mu: np.ndarray) -> float:
    return float(np.sum(2.0 * mu**2 / (1.0 - 2.0 * s * mu) ** 2))


def _cgf3(s: float, mu: np.ndarray) -> float:
    return float(np.sum(8.0 * mu**3 / (1.0 - 2.0 * s * mu) ** 3))


def cdf_saddlepoint(w: WeightSeq, r: float) -> ProbabilityEstimate:
    """Lugannani-Rice approximation of P{sum mu_k xi_k^2 < r} in the left
    tail r < sum mu_k.

    The saddle s(r) < 0 solves K'(s) = r for the exact cumulant generating
    function K(s) = -1/2 sum log(1 - 2 s mu_k); the tilt exists for every
    0 < r < sum mu_k.  Near the mean the 1/w - 1/u cancellation is replaced
    by its limit K'''/(6 K''^{3/2}).
    """
    if r <= 0:
        raise ValueError("r must be positive")
    mu = w.head
    r_eff = r - w.tail_sum_bound
    if r_eff <= 0:
        return ProbabilityEstimate(0.0, -np.inf, 0.0, "saddlepoint")
    log_value = _lr_logcdf(mu, r_eff)
    # relative accuracy of LR is O(1/w^2); quote it through the saddle scale
    s = _solve_saddle(mu, r_eff)
    w_hat = -math.sqrt(max(2.0 * (s * r_eff - _cgf(s, mu)), 0.0))
    rel = 1.0 / max(w_hat * w_hat, 1.0)
    value = math.exp(log_value) if log_value > -700 else 0.0
    err = value * rel
    if w.tail_sum_bound > 0:
        # local log-slope of the CDF is the tilt |s|, so the shift moves the
        # value by at most a factor 1 - exp(-|s| tail)
        err += value * min(1.0, -math.expm1(-abs(s) * w.tail_sum_bound))
    return ProbabilityEstimate(value, log_value, err, "saddlepoint")


def _solve_saddle(mu: np.ndarray, r: float) -> float:
    """Root of K'(s) = r on the CGF domain (-inf, 1/(2 mu_1)); K' is
    increasing from 0 to +inf there, so every r > 0 has a unique tilt."""
    f = lambda s: _cgf1(s, mu) - r  # noqa: E731
    at_zero = f(0.0)
    if at_zero == 0.0:
        return 0.0
    if at_zero > 0.0:
        lo = -1.0 / (2.0 * mu[0])
        while f(lo) > 0:
            lo *= 8.0
            if lo < -1e300:
                raise NumericError("saddle equation bracket expansion failed")
        hi = 0.0
    else:
        s_max = 1.0 / (2.0 * mu[0])
        lo = 0.0
        gap = 0.5
        hi = s_max * (1.0 - gap)
        while f(hi) < 0:
            gap *= 0.25
            hi = s_max * (1.0 - gap)
            if gap < 1e-300:
                raise NumericError("saddle equation bracket expansion failed")
    return brentq(f, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200)


def _lr_logcdf(mu: np.ndarray, r: float) -> float:
    s = _solve_saddle(mu, r)
    k0 = _cgf(s, mu)
    k2 = _cgf2(s, mu)
    arg = 2.0 * (s * r - k0)
    w_hat = math.copysign(math.sqrt(max(arg, 0.0)), s)
    if abs(w_hat) < 1e-5:
        # limiting form at the mean
        corr = _cgf3(s, mu) / (6.0 * k2**1.5)
        p = norm.cdf(w_hat) + norm.pdf(w_hat) * corr
        return math.log(p)
    u_hat = s * math.sqrt(k2)
    term = 1.0 / w_hat - 1.0 / u_hat
    log_phi_part = norm.logcdf(w_hat)
    if term == 0.0:
        return log_phi_part
    log_term = norm.logpdf(w_hat) + math.log(abs(term))
    if term > 0:
        return float(np.logaddexp(log_phi_part, log_term))
    if log_term >= log_phi_part:
        raise NumericError("Lugannani-Rice correction exceeded the leading term")
    return log_phi_part + math.log1p(-math.exp(log_term - log_phi_part))


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def _shard_sizes(n_samples: int, shards: int) -> list[int]:
    base, rem = divmod(n_samples, shards)
    return [base + (1 if j < rem else 0) for j in range(shards)]


def _shard_count(mu: np.ndarray, threshold: float, n: int, seed: int, shard: int) -> int:
    """Samples below threshold in one shard.

    Shard j uses the generator PCG64(SeedSequence(entropy=seed,
    spawn_key=(j,))); normals come from inverse-CDF of its uniform stream,
    so the count depends only on (seed, j, n, len(mu)).
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(shard,))))
    dim = mu.size
    block = max(1, min(n, (1 << 22) // max(dim, 1)))
    count = 0
    done = 0
    while done < n:
        b = min(block, n - done)
        xi = ndtri(rng.random((b, dim)))
        q = (xi * xi) @ mu
        count += int(np.count_nonzero(q < threshold))
        done += b
    return count


def cdf_monte_carlo(
    w: WeightSeq,
    r: float,
    n_samples: int,
    seed: int,
    shards: int = MC_SHARDS,
) -> ProbabilityEstimate:
    """Empirical P{sum mu_k xi_k^2 < r} over ``n_samples`` draws.

    The error bound is three binomial standard errors.  Results are
    bitwise reproducible for a fixed (seed, shards): the sample budget is
    split as evenly as possible across shards (earlier shards take the
    remainder), and each shard draws from its own spawned generator.
    Shards may run in parallel threads (SMALLBALL_THREADS caps the pool)
    without affecting the result, since shard counts are integers.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if r <= 0:
        raise ValueError("r must be positive")
    if shards < 1:
        raise ValueError("shards must be >= 1")
    threshold = r - w.tail_sum_bound
    if threshold <= 0:
        return ProbabilityEstimate(0.0, -np.inf, 3.0 / n_samples, "monte_carlo")
    sizes = _shard_sizes(n_samples, shards)
    workers = int(os.environ.get("SMALLBALL_THREADS", "1") or "1")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(
                pool.map(
                    lambda j: _shard_count(w.head, threshold, sizes[j], seed, j),
                    range(shards),
                )
            )
    else:
        counts = [_shard_count(w.head, threshold, sizes[j], seed, j) for j in range(shards)]
    count = sum(counts)
    value = count / n_samples
    se = math.sqrt(max(value * (1.0 - value), 1.0 / n_samples) / n_samples)
    log_value = math.log(value) if value > 0 else -np.inf
    return ProbabilityEstimate(value, log_value, 3.0 * se, "monte_carlo")


# ---------------------------------------------------------------------------
# Li comparison constant
# ---------------------------------------------------------------------------


def distortion_constant(
    w_num: WeightSeq,
    w_den: WeightSeq,
    max_log_drift: float = 0.05,
) -> float:
    """The comparison constant (prod_k num_k / den_k)^(1/2).

    Sequences are paired index by index over the shorter head.  Convergence
    is judged by the drift |log-product(N) - log-product(N/2)|; a drift above
    ``max_log_drift`` signals a divergent product (the excluded case of the
    comparison principle, e.g. num = c * den with c != 1) and raises.
    """
    n = min(w_num.head.size, w_den.head.size)
    if n < 2:
        raise ValueError("need at least two paired weights")
    log_ratio = np.log(w_num.head[:n]) - np.log(w_den.head[:n])
    full = float(log_ratio.sum())
    half = float(log_ratio[: n // 2].sum())
    drift = abs(full - half)
    if drift > max_log_drift:
        raise NumericError(
            f"distortion product has not converged (drift {drift:.3e} over "
            f"N={n} vs N//2); the infinite product likely diverges"
        )
    return math.exp(0.5 * full)


# ---------------------------------------------------------------------------
# CSV weight files
# ---------------------------------------------------------------------------


def read_weights(path) -> WeightSeq:
    """Weight file: one mu per line; optional '# tail_sum_bound=...' header
    comment; other '#' lines ignored."""
    tail = 0.0
    label = ""
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("tail_sum_bound="):
                    tail = float(body.split("=", 1)[1])
                elif body.startswith("label="):
                    label = body.split("=", 1)[1]
                continue
            values.append(float(line))
    return WeightSeq(head=np.array(values), tail_sum_bound=tail, label=label)


def write_weights(path, w: WeightSeq) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if w.label:
            fh.write(f"# label={w.label}\n")
        if w.tail_sum_bound:
            fh.write(f"# tail_sum_bound={float(w.tail_sum_bound)!r}\n")
        for mu in w.head:
            fh.write(f"{float(mu)!r}\n")
