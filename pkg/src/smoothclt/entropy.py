"""Entropy-type functionals on grid densities, in nats."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy import special

from .model import LatticeLaw, ModelError, Scenario, lattice_law
from .reports import BoundReport, digest
from .spectral import GridDensity, build_grid_density

__all__ = [
    "QuadratureError",
    "differential_entropy",
    "discrete_entropy",
    "MomentSummary",
    "moments_of",
    "scenario_moments",
    "kl_to_std_normal",
    "kl_direct",
    "KLDecomposition",
    "kl_decomposition",
    "psi",
    "psi_lower_bound_check",
    "StaircaseDensity",
    "staircase",
    "w2_to_std_normal",
    "w2_quantile",
    "MCEstimate",
    "mc_entropy_oracle",
    "philox_rng",
]

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


class QuadratureError(ArithmeticError):
    """A quadrature result contradicts an exact identity beyond tolerance."""


def differential_entropy(p: GridDensity) -> float:
    """-int p log p by composite Simpson (0 log 0 = 0)."""
    return -p.integral_of(lambda x, v: special.xlogy(v, v))


def _pmf_probs(pmf) -> np.ndarray:
    if isinstance(pmf, LatticeLaw):
        return np.asarray(pmf.probs, dtype=float)
    if isinstance(pmf, Mapping):
        return np.asarray(list(pmf.values()), dtype=float)
    return np.asarray(pmf, dtype=float)


def discrete_entropy(pmf) -> float:
    """Shannon entropy -sum p log p of a pmf (LatticeLaw, mapping or array)."""
    p = _pmf_probs(pmf)
    if np.any(p < 0) or abs(math.fsum(p) - 1.0) > 1e-12:
        raise ModelError("probabilities must be nonnegative and sum to 1")
    return -math.fsum(special.xlogy(p, p))


@dataclass(frozen=True)
class MomentSummary:
    """Mean vector, covariance eigenvalues and E|X|^2 of a law in dimension 1 or 2."""

    mean: tuple[float, ...]
    second_moment: float
    variances: tuple[float, ...]

    def __post_init__(self):
        mean = tuple(float(m) for m in np.atleast_1d(self.mean))
        var = tuple(float(v) for v in np.atleast_1d(self.variances))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variances", var)
        object.__setattr__(self, "second_moment", float(self.second_moment))
        if len(mean) != len(var) or len(mean) not in (1, 2):
            raise ModelError("mean and variances must both have length d in {1, 2}")

    @classmethod
    def from_mean_var(cls, mean, variances) -> "MomentSummary":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        var = np.atleast_1d(np.asarray(variances, dtype=float))
        return cls(tuple(mean), float(mean @ mean + var.sum()), tuple(var))

    @property
    def dimension(self) -> int:
        return len(self.mean)

    @property
    def mean_sq(self) -> float:
        return math.fsum(m * m for m in self.mean)

    def consistent(self, tol: float = 1e-9) -> bool:
        return abs(self.second_moment - self.mean_sq - math.fsum(self.variances)) <= tol


def moments_of(p: GridDensity) -> MomentSummary:
    m = p.mean
    return MomentSummary((m,), p.second_moment, (p.variance,))


def scenario_moments(scenario: Scenario, n: int) -> MomentSummary:
    """Exact moments of Z_n from the noise and step laws."""
    means = tuple(c.sum_mean(n) for c in scenario.factors)
    var = tuple(c.sum_variance(n) for c in scenario.factors)
    return MomentSummary.from_mean_var(means, var)


def kl_to_std_normal(
    p: GridDensity, moments: MomentSummary | None = None, entropy: float | None = None
) -> float:
    """D(p || N(0,1)) = -h(p) + (1/2) log(2 pi) + (1/2) E X^2.

    When ``moments`` is given its second moment is used, after checking it
    against the grid value (relative tolerance 1e-3).
    """
    grid_m2 = p.second_moment
    if moments is None:
        m2 = grid_m2
    else:
        if moments.dimension != 1:
            raise ModelError("grid densities are one-dimensional")
        m2 = moments.second_moment
        if abs(m2 - grid_m2) > 1e-3 * max(abs(m2), 1e-12):
            raise QuadratureError(
                f"supplied second moment {m2!r} disagrees with grid value {grid_m2!r}"
            )
    h = differential_entropy(p) if entropy is None else entropy
    return -h + HALF_LOG_2PI + 0.5 * m2


def kl_direct(p: GridDensity) -> float:
    """Direct quadrature of p log(p / phi) with log phi in closed form."""
    return p.integral_of(
        lambda x, v: special.xlogy(v, v) + v * (HALF_LOG_2PI + 0.5 * x * x)
    )


@dataclass(frozen=True)
class KLDecomposition:
    D_shape: float
    mean_term: float
    shape_terms: float


def psi(t) -> float | np.ndarray:
    """psi(t) = log(1/t) + t - 1 for t > 0."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("psi is defined for t > 0 only")
    out = -np.log(arr) + arr - 1.0
    return float(out) if out.ndim == 0 else out


def psi_lower_bound_check(t: float) -> BoundReport:
    lhs = 0.125 * min(abs(t - 1.0), (t - 1.0) ** 2)
    return BoundReport("psi-lower", lhs, psi(t), digest("psi", t))


def kl_decomposition(D_total: float, moments: MomentSummary) -> KLDecomposition:
    """Split D into the shape residual, (1/2)|a|^2 and (1/2) sum psi(sigma_i^2)."""
    if any(v <= 0 for v in moments.variances):
        raise ModelError("variances must be positive")
    mean_term = 0.5 * moments.mean_sq
    shape = 0.5 * math.fsum(psi(v) for v in moments.variances)
    rest = D_total - mean_term - shape
    if rest < -1e-6:
        raise QuadratureError(f"negative shape residual {rest!r}: quadrature failure")
    return KLDecomposition(rest, mean_term, shape)


# ---------------------------------------------------------------- staircase


@dataclass(frozen=True, eq=False)
class StaircaseDensity:
    """Piecewise-constant density q = p_k on (k - 1/2, k + 1/2)."""

    pmf: LatticeLaw
    grid: GridDensity

    @property
    def entropy(self) -> float:
        # unit-width bins: -sum p_k log p_k exactly
        return discrete_entropy(self.pmf)

    @property
    def mean(self) -> float:
        return self.pmf.mean

    @property
    def variance(self) -> float:
        return self.pmf.variance + 1.0 / 12.0


def staircase(pmf, nodes_per_bin: int = 8, pad: int = 1) -> StaircaseDensity:
    """Staircase density of an integer pmf; bin edges sit on even grid nodes."""
    law = pmf if isinstance(pmf, LatticeLaw) else lattice_law(pmf)
    if nodes_per_bin < 2 or nodes_per_bin % 2:
        raise ValueError("nodes_per_bin must be even and >= 2")
    lo, hi = law.support[0] - pad, law.support[-1] + pad
    h = 1.0 / nodes_per_bin
    x0 = lo - 0.5
    count = (hi - lo + 1) * nodes_per_bin + 1
    x = x0 + h * np.arange(count)
    table = dict(zip(law.support, law.probs))
    bins_right = np.floor(x + 0.5).astype(int)
    bins_left = np.ceil(x - 0.5).astype(int)
    right = np.array([table.get(int(k), 0.0) for k in bins_right])
    left = np.array([table.get(int(k), 0.0) for k in bins_left])
    grid = build_grid_density(x0, h, right, left, {"route": "staircase"})
    return StaircaseDensity(law, grid)


# ---------------------------------------------------------------- transport


def _two_sided_cdf(p: GridDensity):
    F = p.cumulative(p.values, p.left)
    total = F[-1]
    rl = p.values[::-1]
    rr = p.lefts[::-1]
    S = p.cumulative(rr, rl)[::-1]
    return F / total, S / total


def w2_to_std_normal(p: GridDensity) -> float:
    """W2(p, N(0,1)) in d = 1 for the monotone (quantile) coupling.

    With z = Phi^-1(u) and an integration by parts,
    int_0^1 F^-1(u) Phi^-1(u) du = int phi(Phi^-1(F(x))) dx, so
    W2^2 = E X^2 + 1 - 2 int phi(Phi^-1(F(x))) dx. The integrand is bounded
    and continuous, unlike the quantile form near the ends of the support.
    """
    F, S = _two_sided_cdf(p)
    u = np.clip(np.minimum(F, S), 0.0, 0.5)
    with np.errstate(divide="ignore"):
        z = special.ndtri(u)
    dens = np.where(u > 0, np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi), 0.0)
    cross = p.integrate(dens)
    return math.sqrt(max(0.0, p.second_moment + 1.0 - 2.0 * cross))


def w2_quantile(p: GridDensity, nodes: int = 2**12) -> float:
    """W2 by midpoint quadrature over 2^12 quantile levels.

    F^-1 is the left-continuous generalized inverse of the running integral,
    linear between grid nodes; flat stretches (zero density) are skipped.
    """
    F, _ = _two_sided_cdf(p)
    u = (np.arange(nodes) + 0.5) / nodes
    F = np.maximum.accumulate(F)
    idx = np.searchsorted(F, u, side="left")
    idx = np.clip(idx, 1, F.size - 1)
    f0, f1 = F[idx - 1], F[idx]
    frac = np.where(f1 > f0, (u - f0) / np.where(f1 > f0, f1 - f0, 1.0), 1.0)
    x = p.x
    inv = x[idx - 1] + frac * p.h
    return math.sqrt(float(np.mean((inv - special.ndtri(u)) ** 2)))


# ---------------------------------------------------------------- Monte Carlo


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    std_error: float
    N: int
    m: int


def philox_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream)."""
    key = np.array([seed % 2**64, stream % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _spacing_entropy(xs: np.ndarray, m: int) -> float:
    """m-spacing estimate from a sorted sample.

    Each point uses the spacing X_(i+m) - X_(i-m), indices clamped at the
    ends. For k order-statistic steps of a uniform sample
    E log(U_(j+k) - U_(j)) = digamma(k) - digamma(N+1), so subtracting
    digamma(k) removes the spacing bias (and the boundary bias) exactly in
    the uniform case.
    """
    n = xs.size
    i = np.arange(n)
    hi_i = np.minimum(i + m, n - 1)
    lo_i = np.maximum(i - m, 0)
    gap = np.maximum(xs[hi_i] - xs[lo_i], np.finfo(float).tiny)
    k = hi_i - lo_i
    return float(np.mean(np.log(gap) - special.digamma(k))) + float(special.digamma(n + 1))


def _window_extrapolated(xs: np.ndarray, m: int, q: int) -> float:
    # the residual bias is linear in the window (jumps, tails): Richardson in m
    return (q * _spacing_entropy(xs, max(1, m // q)) - _spacing_entropy(xs, m)) / (q - 1)


def mc_entropy_oracle(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    N: int = 100_000,
    seed: int = 0,
    stream: int = 0,
    groups: int = 20,
    extrapolate: int | None = 4,
) -> MCEstimate:
    """Sample-based differential entropy with a grouped jackknife standard error.

    The window is m = floor(sqrt N). Spacings that straddle a jump of the
    density, or reach into a tail, bias the raw estimate by an amount
    proportional to m / N; with ``extrapolate = q`` the estimate combines
    windows m and m // q so that this term cancels. ``None`` returns the
    raw m-spacing value.
    """
    if N < 1000:
        raise ValueError("mc_entropy_oracle needs N >= 1000")
    if extrapolate is not None and extrapolate < 2:
        raise ValueError("extrapolate must be >= 2")
    rng = philox_rng(seed, stream)
    sample = np.asarray(sampler(rng, N), dtype=float)
    if sample.shape != (N,):
        raise ValueError("sampler must return a flat array of N draws")

    def estimate(xs):
        m = math.isqrt(xs.size)
        return _spacing_entropy(xs, m) if extrapolate is None else _window_extrapolated(xs, m, extrapolate)

    full = estimate(np.sort(sample))
    labels = np.arange(N) % groups
    loo = np.array([estimate(np.sort(sample[labels != g])) for g in range(groups)])
    se = math.sqrt((groups - 1) / groups * float(np.sum((loo - loo.mean()) ** 2)))
    return MCEstimate(full, se, N, math.isqrt(N))
