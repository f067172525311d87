"""Probability-law vocabulary: continuous noises, integer step laws, scenarios.

A scenario describes the smoothed normalized sum

    Z_n = (X + X_1 + ... + X_n) / sqrt(n)

where X is a continuous noise (``NoiseModel``) and the X_i are i.i.d. copies
of an integer-valued step law (``LatticeLaw``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import special

__all__ = [
    "ModelError",
    "NoiseModel",
    "LatticeLaw",
    "Scenario",
    "make_noise",
    "lattice_law",
    "bernoulli",
    "beta3_of",
    "noise_entropy",
    "NOISE_FAMILIES",
]

NOISE_FAMILIES = ("gaussian", "uniform_width", "triangular_cf", "spline_cf", "custom")

# below this |u|, sin(u)/u and its derivative come from their Taylor series
_SINC_SERIES_CUTOFF = 1e-4
_CUSTOM_DIFF_STEP = 1e-4


class ModelError(ValueError):
    """Invalid law parameters or construction request."""


def sinc(u):
    """sin(u)/u with the removable singularity at 0 handled by its series."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < _SINC_SERIES_CUTOFF
    us = u[small]
    out[small] = 1.0 - us * us / 6.0 + us**4 / 120.0
    ul = u[~small]
    out[~small] = np.sin(ul) / ul
    return out


def dsinc(u):
    """Derivative of sin(u)/u."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < _SINC_SERIES_CUTOFF
    us = u[small]
    out[small] = -us / 3.0 + us**3 / 30.0
    ul = u[~small]
    out[~small] = (ul * np.cos(ul) - np.sin(ul)) / (ul * ul)
    return out


@dataclass(frozen=True)
class NoiseModel:
    """A continuous noise law X given by closed-form density and CF.

    ``pdf`` may be ``None`` for the custom (tabulated CF) family.
    ``breakpoints`` lists the jump locations of the density; ``tail(r)``
    returns an upper bound for P(|X| > r).
    """

    family: str
    params: tuple[tuple[str, float], ...]
    pdf: Callable | None = field(repr=False, compare=False)
    cf: Callable = field(repr=False, compare=False)
    dcf: Callable = field(repr=False, compare=False)
    second_moment: float
    beta3: float | None
    cf_support_radius: float | None
    mean: float = 0.0
    entropy: float | None = None
    breakpoints: tuple[float, ...] = ()
    support: tuple[float, float] = (-math.inf, math.inf)
    tail: Callable[[float], float] | None = field(default=None, repr=False, compare=False)
    sampler: Callable | None = field(default=None, repr=False, compare=False)
    symmetric: bool = True
    cf_integrable: bool = True

    @property
    def label(self) -> str:
        args = ",".join(f"{k}={v:g}" for k, v in self.params if isinstance(v, (int, float)))
        return f"{self.family}({args})"

    def param(self, name: str) -> float:
        return dict(self.params)[name]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.sampler is None:
            raise ModelError(f"{self.family} noise has no sampler")
        return self.sampler(rng, size)


def _positive(name: str, value) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ModelError(f"{name} must be positive, got {value}")
    return value


def _gaussian(sigma: float = 1.0) -> NoiseModel:
    s = _positive("sigma", sigma)
    norm = 1.0 / (s * math.sqrt(2 * math.pi))

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return norm * np.exp(-0.5 * (x / s) ** 2)

    def cf(t):
        t = np.asarray(t, dtype=float)
        return np.exp(-0.5 * (s * t) ** 2)

    def dcf(t):
        t = np.asarray(t, dtype=float)
        return -s * s * t * np.exp(-0.5 * (s * t) ** 2)

    return NoiseModel(
        family="gaussian",
        params=(("sigma", s),),
        pdf=pdf,
        cf=cf,
        dcf=dcf,
        second_moment=s * s,
        beta3=2.0 * math.sqrt(2.0 / math.pi) * s**3,
        cf_support_radius=None,
        entropy=0.5 * math.log(2 * math.pi * math.e * s * s),
        tail=lambda r: float(special.erfc(r / (s * math.sqrt(2)))),
        sampler=lambda rng, size: rng.normal(0.0, s, size),
    )


def _uniform_width(w: float = 1.0) -> NoiseModel:
    w = _positive("w", w)
    half = w / 2

    def pdf(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        return np.where(ax < half, 1.0 / w, np.where(ax == half, 0.5 / w, 0.0))

    def cf(t):
        return sinc(half * np.asarray(t, dtype=float))

    def dcf(t):
        return half * dsinc(half * np.asarray(t, dtype=float))

    return NoiseModel(
        family="uniform_width",
        params=(("w", w),),
        pdf=pdf,
        cf=cf,
        dcf=dcf,
        second_moment=w * w / 12.0,
        beta3=w**3 / 32.0,
        cf_support_radius=None,
        entropy=math.log(w),
        breakpoints=(-half, half),
        support=(-half, half),
        tail=lambda r: max(0.0, 1.0 - 2.0 * r / w) if r >= 0 else 1.0,
        sampler=lambda rng, size: rng.uniform(-half, half, size),
        cf_integrable=False,
    )


def _cauchy_rejection(target, scale: float, bound: float):
    """Rejection sampler against a Cauchy envelope with p <= bound * cauchy."""

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty(0)
        while out.size < size:
            k = int(1.2 * bound * (size - out.size)) + 16
            y = scale * rng.standard_cauchy(k)
            envelope = bound / (math.pi * scale * (1.0 + (y / scale) ** 2))
            keep = rng.uniform(0.0, 1.0, k) * envelope <= target(y)
            out = np.concatenate([out, y[keep]])
        return out[:size]

    return sample


def _triangular_cf(T: float = 1.0) -> NoiseModel:
    # Fejér law: f(t) = (1 - |t|/T)_+, density (T/2pi) sinc^2(Tx/2)
    T = _positive("T", T)

    def pdf(x):
        u = 0.5 * T * np.asarray(x, dtype=float)
        return T / (2 * math.pi) * sinc(u) ** 2

    def cf(t):
        return np.maximum(0.0, 1.0 - np.abs(np.asarray(t, dtype=float)) / T)

    def dcf(t):
        t = np.asarray(t, dtype=float)
        return np.where(np.abs(t) < T, -np.sign(t) / T, 0.0)

    return NoiseModel(
        family="triangular_cf",
        params=(("T", T),),
        pdf=pdf,
        cf=cf,
        dcf=dcf,
        # density ~ 1/x^2 at infinity: no finite second or third moment
        second_moment=math.inf,
        beta3=None,
        cf_support_radius=T,
        tail=lambda r: min(1.0, 4.0 / (math.pi * T * r)) if r > 0 else 1.0,
        sampler=_cauchy_rejection(pdf, 2.0 / T, 2.0),
    )


_M6_AT_3 = 0.55  # centered value of the order-6 cardinal B-spline


def _bspline6(u, deriv: int = 0):
    """Order-6 cardinal B-spline on [0, 6] (or its first derivative) by truncated powers."""
    u = np.asarray(u, dtype=float)
    sign = 1.0
    if deriv:
        sign = np.where(u > 3.0, -1.0, 1.0)
    v = np.where(u > 3.0, 6.0 - u, u)  # symmetry keeps the sum free of cancellation
    out = np.zeros_like(v)
    power, scale = (5, 1.0 / 120.0) if deriv == 0 else (4, 1.0 / 24.0)
    for j in range(4):
        out += (-1) ** j * math.comb(6, j) * np.maximum(v - j, 0.0) ** power
    return sign * scale * np.where((v > 0) & (v <= 3.0), out, 0.0)


def _spline_cf(T: float = 1.0) -> NoiseModel:
    # CF = quintic B-spline supported on [-T, T]; density (10T/33pi) sinc^6(Tx/6)
    T = _positive("T", T)
    c = 10.0 * T / (33.0 * math.pi)

    def pdf(x):
        return c * sinc(T * np.asarray(x, dtype=float) / 6.0) ** 6

    def cf(t):
        t = np.asarray(t, dtype=float)
        return _bspline6(3.0 + 3.0 * np.abs(t) / T) / _M6_AT_3

    def dcf(t):
        t = np.asarray(t, dtype=float)
        return np.sign(t) * (3.0 / T) * _bspline6(3.0 + 3.0 * np.abs(t) / T, 1) / _M6_AT_3

    tail_c = 186624.0 / (33.0 * math.pi * T**5)
    return NoiseModel(
        family="spline_cf",
        params=(("T", T),),
        pdf=pdf,
        cf=cf,
        dcf=dcf,
        # -f''(0) = (3/T)^2 * 1 / M6(3)
        second_moment=9.0 / (T * T * _M6_AT_3),
        beta3=None,
        cf_support_radius=T,
        tail=lambda r: min(1.0, tail_c / r**5) if r > 0 else 1.0,
        sampler=_cauchy_rejection(pdf, 6.0 / T, 4.0),
    )


def _custom(t, values, second_moment=None) -> NoiseModel:
    """Tabulated CF on t >= 0 (starting at 0); f(-t) = conj f(t)."""
    t = np.asarray(t, dtype=float)
    vals = np.asarray(values, dtype=complex)
    if t.ndim != 1 or t.size < 3 or t.shape != vals.shape:
        raise ModelError("custom noise needs matching 1-D arrays t and values")
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ModelError("custom CF table must start at t=0 and increase")
    if abs(vals[0] - 1.0) > 1e-12:
        raise ModelError("custom CF must equal 1 at t=0")
    if np.any(np.abs(vals) > 1.0 + 1e-12):
        raise ModelError("custom CF exceeds 1 in modulus")
    radius = float(t[-1])

    def cf(s):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        re = np.interp(a, t, vals.real, right=0.0)
        im = np.interp(a, t, vals.imag, right=0.0) * np.sign(s)
        return re + 1j * im if np.any(vals.imag) else re

    def dcf(s):
        s = np.asarray(s, dtype=float)
        return (cf(s + _CUSTOM_DIFF_STEP) - cf(s - _CUSTOM_DIFF_STEP)) / (2 * _CUSTOM_DIFF_STEP)

    if second_moment is None:
        d = _CUSTOM_DIFF_STEP
        second_moment = float(-(np.real(cf(d)) + np.real(cf(-d)) - 2.0) / (d * d))
    compact = abs(vals[-1]) <= 1e-12
    return NoiseModel(
        family="custom",
        params=(("t_max", radius),),
        pdf=None,
        cf=cf,
        dcf=dcf,
        second_moment=float(second_moment),
        beta3=None,
        cf_support_radius=radius if compact else None,
        symmetric=not np.any(vals.imag),
    )


_BUILDERS = {
    "gaussian": _gaussian,
    "uniform_width": _uniform_width,
    "triangular_cf": _triangular_cf,
    "spline_cf": _spline_cf,
    "custom": _custom,
}


def make_noise(family: str, params: Mapping | None = None, **kwargs) -> NoiseModel:
    """Build a noise law; parameters may come as a mapping or as keywords.

    >>> make_noise("uniform_width", w=2).second_moment
    0.3333333333333333
    """
    if family not in _BUILDERS:
        raise ModelError(f"unknown noise family {family!r}; expected one of {NOISE_FAMILIES}")
    merged = dict(params or {})
    merged.update(kwargs)
    try:
        return _BUILDERS[family](**merged)
    except TypeError as exc:
        raise ModelError(f"bad parameters for {family}: {exc}") from None


def _sinc_power_log_integral(k: int, periods: int = 4000) -> float:
    """Integral over R of s log s with s = sinc(u)^k (k even)."""
    nodes, weights = np.polynomial.legendre.leggauss(48)
    a = np.arange(periods)[:, None] * math.pi
    u = a + (nodes[None, :] + 1.0) * (math.pi / 2)
    s = sinc(u) ** k
    vals = special.xlogy(s, s)
    total = 2.0 * (math.pi / 2) * float(np.sum(vals @ weights))
    big_a = periods * math.pi
    if k == 2:
        # tail: mean of sin^2 log sin^2 over a period is 1/2 - log 2
        c1 = 0.5 - math.log(2.0)
        total += 2.0 * (c1 / big_a - (math.log(big_a) + 1.0) / big_a)
    return total


def noise_entropy(noise: NoiseModel) -> float:
    """Differential entropy h(X) in nats (closed form or 1-D quadrature)."""
    if noise.entropy is not None:
        return noise.entropy
    if noise.family == "triangular_cf":
        T = noise.param("T")
        return math.log(2 * math.pi / T) - _sinc_power_log_integral(2, periods=20000) / math.pi
    if noise.family == "spline_cf":
        T = noise.param("T")
        c = 10.0 * T / (33.0 * math.pi)
        return -math.log(c) - 20.0 / (11.0 * math.pi) * _sinc_power_log_integral(6, 400)
    raise ModelError(f"no entropy available for {noise.family} noise")


@dataclass(frozen=True)
class LatticeLaw:
    """Finite-support integer-valued law given by its pmf."""

    support: tuple[int, ...]
    probs: tuple[float, ...]

    @cached_property
    def _arrays(self):
        return np.asarray(self.support, dtype=float), np.asarray(self.probs, dtype=float)

    @property
    def pmf(self) -> dict[int, float]:
        return dict(zip(self.support, self.probs))

    @property
    def mean(self) -> float:
        k, p = self._arrays
        return float(np.dot(k, p))

    @property
    def variance(self) -> float:
        k, p = self._arrays
        return float(np.dot((k - self.mean) ** 2, p))

    @property
    def second_moment(self) -> float:
        k, p = self._arrays
        return float(np.dot(k * k, p))

    @property
    def beta3(self) -> float:
        return beta3_of(self)

    @property
    def label(self) -> str:
        if self.support == (-1, 1) and self.probs == (0.5, 0.5):
            return "bernoulli"
        return "pmf{" + ",".join(f"{k}:{p:.6g}" for k, p in zip(self.support, self.probs)) + "}"


def lattice_law(pmf: Mapping[int, float]) -> LatticeLaw:
    items = []
    for k, p in pmf.items():
        if float(k) != int(float(k)):
            raise ModelError(f"support point {k!r} is not an integer")
        p = float(p)
        if p < 0 or not math.isfinite(p):
            raise ModelError(f"invalid probability {p} at {k}")
        if p > 0:
            items.append((int(float(k)), p))
    if not items:
        raise ModelError("empty pmf")
    items.sort()
    total = math.fsum(p for _, p in items)
    if abs(total - 1.0) > 1e-12:
        raise ModelError(f"pmf sums to {total!r}, not 1")
    return LatticeLaw(tuple(k for k, _ in items), tuple(p for _, p in items))


def bernoulli() -> LatticeLaw:
    """The symmetric +-1 step (mean 0, variance 1, beta3 = 1)."""
    return LatticeLaw((-1, 1), (0.5, 0.5))


def beta3_of(step: LatticeLaw) -> float:
    """Third absolute moment sum_k |k|^3 p(k)."""
    return math.fsum(abs(k) ** 3 * p for k, p in zip(step.support, step.probs))


@dataclass(frozen=True)
class Scenario:
    """Noise + step law + the list of n at which Z_n is studied.

    Dimension-2 scenarios are independent products of two dimension-1
    scenarios held in ``components``; ``noise`` and ``step`` then mirror the
    first component.
    """

    noise: NoiseModel
    step: LatticeLaw
    n_values: tuple[int, ...]
    dimension: int = 1
    components: tuple["Scenario", ...] = ()

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_values)
        object.__setattr__(self, "n_values", ns)
        if not ns or any(n < 1 for n in ns):
            raise ModelError("n_values must be positive integers")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ModelError("n_values must be strictly increasing")
        if self.dimension == 1:
            if self.components:
                raise ModelError("dimension-1 scenario cannot carry components")
        elif self.dimension == 2:
            if len(self.components) != 2 or any(c.dimension != 1 for c in self.components):
                raise ModelError("dimension-2 scenario needs two dimension-1 components")
        else:
            raise ModelError("only dimensions 1 and 2 are supported")

    @classmethod
    def product(cls, first: "Scenario", second: "Scenario", n_values: Sequence[int] | None = None):
        ns = tuple(n_values) if n_values is not None else first.n_values
        comps = (
            cls(first.noise, first.step, ns),
            cls(second.noise, second.step, ns),
        )
        return cls(first.noise, first.step, ns, dimension=2, components=comps)

    @property
    def factors(self) -> tuple["Scenario", ...]:
        return (self,) if self.dimension == 1 else self.components

    @property
    def label(self) -> str:
        if self.dimension == 1:
            return f"{self.noise.label}+{self.step.label}"
        return " x ".join(c.label for c in self.components)

    def sum_mean(self, n: int) -> float:
        """E Z_n (dimension 1)."""
        return (self.noise.mean + n * self.step.mean) / math.sqrt(n)

    def sum_second_moment(self, n: int) -> float:
        """E|Z_n|^2, summed over coordinates for products."""
        if self.dimension == 2:
            return sum(c.sum_second_moment(n) for c in self.components)
        nz, st = self.noise, self.step
        num = nz.second_moment + 2 * nz.mean * n * st.mean + n * st.variance + (n * st.mean) ** 2
        return num / n

    def sum_variance(self, n: int) -> float:
        nz = self.noise
        return (nz.second_moment - nz.mean**2 + n * self.step.variance) / n
