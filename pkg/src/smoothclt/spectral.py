"""Characteristic functions of smoothed sums and the densities they define.

Two independent routes produce the density p_n of Z_n on a uniform grid:

* ``invert_to_density``: Fourier inversion of f_n(t) = f(t/sqrt n) v(t/sqrt n)^n
  by composite Simpson quadrature in t;
* ``exact_mixture_density``: the lattice mixture
  p_n(x) = sqrt(n) sum_k P{S_n = k} p_X(sqrt(n) x - k).

Densities with jumps (uniform noise) are handled by snapping the grid so
every jump sits on an even node and by storing left limits there; composite
Simpson is then exact on each smooth piece.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import special

from .model import LatticeLaw, ModelError, NoiseModel, Scenario

__all__ = [
    "GridError",
    "MassDriftError",
    "GridSpec",
    "GridDensity",
    "build_grid_density",
    "CharFnCurve",
    "gaussian_cf",
    "smoothed_sum_cf",
    "sum_pmf",
    "invert_to_density",
    "inversion_values",
    "exact_mixture_density",
    "gaussian_on",
    "std_normal_on",
    "gaussian_density",
    "l2_distance",
    "l2_distance_plancherel",
    "ZeroCondition",
    "zero_condition",
    "IntegralVerdict",
    "integral_conditions",
    "simpson_weights",
    "density_to_text",
    "density_from_text",
]

NEG_TOL = 1e-12
MASS_TOL = 1e-6
DRIFT_TOL = 1e-4
CF_FLOOR = 1e-17


class GridError(ValueError):
    """Grid misconfiguration, mismatch or an invalid density sample."""


class MassDriftError(GridError):
    """Mass on the grid is too far from 1 to be fixed by renormalization."""


def simpson_weights(count: int, step: float) -> np.ndarray:
    if count < 3 or count % 2 == 0:
        raise GridError(f"composite Simpson needs an odd node count >= 3, got {count}")
    w = np.full(count, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (step / 3.0)


@dataclass(frozen=True)
class GridSpec:
    """Requested grid: half-width of the window and node count.

    ``tail_mass`` bounds the probability left outside an automatically
    widened window; ``node_budget`` caps lattice-support x grid work.
    """

    window: float = 12.0
    nodes: int = 2**14 + 1
    tail_mass: float = 1e-9
    max_nodes: int = 2**21
    node_budget: int = 2**28

    def __post_init__(self):
        if self.window < 8.0:
            raise GridError("grid window must cover at least [-8, 8]")
        if self.nodes < 3 or self.nodes % 2 == 0:
            raise GridError("grid node count must be odd and >= 3")

    @property
    def h(self) -> float:
        return 2.0 * self.window / (self.nodes - 1)


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Density samples on x0 + i*h, i = 0..count-1.

    ``values`` are right limits; ``left`` (optional) holds left limits and
    differs from ``values`` only at jump nodes.
    """

    x0: float
    h: float
    values: np.ndarray
    left: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 3 or vals.size % 2 == 0:
            raise GridError("GridDensity needs an odd number (>= 3) of samples")
        if not self.h > 0:
            raise GridError("grid step must be positive")
        vals = _clamp(vals)
        left = None
        if self.left is not None:
            left = _clamp(np.array(self.left, dtype=float))
            if left.shape != vals.shape:
                raise GridError("left limits do not match the grid")
            if np.array_equal(left, vals):
                left = None
        vals.setflags(write=False)
        if left is not None:
            left.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "left", left)
        mass = self.integrate(vals, left)
        object.__setattr__(self, "total_mass", mass)
        if abs(mass - 1.0) > MASS_TOL:
            raise MassDriftError(f"grid mass {mass!r} differs from 1 by more than {MASS_TOL}")

    @property
    def count(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.count)

    @property
    def x_end(self) -> float:
        return self.x0 + self.h * (self.count - 1)

    @property
    def lefts(self) -> np.ndarray:
        return self.values if self.left is None else self.left

    def integrate(self, right: np.ndarray, left: np.ndarray | None = None) -> float:
        """Composite Simpson; panel right endpoints use left limits."""
        right = np.asarray(right, dtype=float)
        left = right if left is None else np.asarray(left, dtype=float)
        h = self.h
        return float(
            h / 3.0 * (np.sum(right[0:-1:2]) + 4.0 * np.sum(right[1::2]) + np.sum(left[2::2]))
        )

    def integral_of(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
        """Integral of fn(x, p(x)) over the grid."""
        x = self.x
        right = fn(x, self.values)
        left = None if self.left is None else fn(x, self.left)
        return self.integrate(right, left)

    def cumulative(self, right: np.ndarray, left: np.ndarray | None = None) -> np.ndarray:
        """Running integral at every node, consistent with ``integrate``."""
        right = np.asarray(right, dtype=float)
        left = right if left is None else np.asarray(left, dtype=float)
        h = self.h
        r0, mid, l2 = right[0:-1:2], right[1::2], left[2::2]
        first = h * (5.0 * r0 + 8.0 * mid - l2) / 12.0
        whole = h * (r0 + 4.0 * mid + l2) / 3.0
        out = np.zeros(self.count)
        base = np.concatenate([[0.0], np.cumsum(whole)])
        out[0::2] = base
        out[1::2] = base[:-1] + first
        return out

    def integral_between(self, fn, a: float, b: float) -> float:
        """Integral of fn(x, p) over [a, b].

        Running integral up to the last node before each end, plus a
        trapezoid over the partial cell.
        """
        x = self.x
        right = fn(x, self.values)
        left = right if self.left is None else fn(x, self.left)
        cum = self.cumulative(right, left)
        a = min(max(a, self.x0), self.x_end)
        b = min(max(b, self.x0), self.x_end)
        if b <= a:
            return 0.0

        def upto(c):
            i = min(int((c - self.x0) // self.h), self.count - 2)
            s = (c - x[i]) / self.h
            g0, g1 = right[i], left[i + 1]
            return cum[i] + s * self.h * (g0 + 0.5 * s * (g1 - g0))

        return float(upto(b) - upto(a))

    def outside(self, fn, radius: float) -> float:
        """Integral of fn(x, p) over |x| >= radius."""
        return self.integral_of(fn) - self.integral_between(fn, -radius, radius)

    def moment(self, k: int) -> float:
        return self.integral_of(lambda x, p: x**k * p)

    @property
    def mean(self) -> float:
        return self.moment(1)

    @property
    def second_moment(self) -> float:
        return self.moment(2)

    @property
    def variance(self) -> float:
        m = self.mean
        return self.integral_of(lambda x, p: (x - m) ** 2 * p)

    @property
    def sup(self) -> float:
        return float(max(self.values.max(), self.lefts.max()))

    def scaled(self, b: float) -> "GridDensity":
        """Density of b*X for b > 0."""
        if not b > 0:
            raise GridError("scale factor must be positive")
        left = None if self.left is None else self.left / b
        return GridDensity(self.x0 * b, self.h * b, self.values / b, left, dict(self.diagnostics))

    def padded(self, half_width: float) -> "GridDensity":
        """Same samples, extended by zeros so the grid covers [-half_width, half_width]."""
        lo = max(0, math.ceil((self.x0 + half_width) / (2 * self.h)))
        hi = max(0, math.ceil((half_width - self.x_end) / (2 * self.h)))
        if lo == 0 and hi == 0:
            return self
        pad = (2 * lo, 2 * hi)
        left = None if self.left is None else np.pad(self.left, pad)
        return GridDensity(
            self.x0 - 2 * lo * self.h, self.h, np.pad(self.values, pad), left, dict(self.diagnostics)
        )

    def same_grid(self, other: "GridDensity") -> bool:
        return (
            self.count == other.count
            and math.isclose(self.x0, other.x0, rel_tol=1e-12, abs_tol=1e-12)
            and math.isclose(self.h, other.h, rel_tol=1e-12)
        )

    def evaluate(self, x) -> np.ndarray:
        """Piecewise-linear interpolation of the right-limit samples."""
        return np.interp(np.asarray(x, dtype=float), self.x, self.values, left=0.0, right=0.0)


def _clamp(vals: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(vals)):
        raise GridError("density samples must be finite")
    low = vals.min()
    if low < -NEG_TOL:
        raise GridError(f"density sample {low!r} is negative beyond {NEG_TOL}")
    if low < 0:
        vals = np.maximum(vals, 0.0)
    return vals


def build_grid_density(x0, h, values, left=None, diagnostics=None) -> GridDensity:
    """Renormalize (drift <= 1e-4 only) and wrap samples as a GridDensity."""
    values = np.asarray(values, dtype=float)
    probe = GridDensity.__new__(GridDensity)
    object.__setattr__(probe, "h", h)
    left_arr = None if left is None else np.asarray(left, dtype=float)
    mass = GridDensity.integrate(probe, values, left_arr)
    if not abs(mass - 1.0) <= DRIFT_TOL:
        raise MassDriftError(
            f"mass on grid is {mass!r}; drift above {DRIFT_TOL} signals a window/grid misconfiguration"
        )
    diag = dict(diagnostics or {})
    diag["renormalized_by"] = mass
    return GridDensity(
        x0, h, values / mass, None if left_arr is None else left_arr / mass, diag
    )


# ---------------------------------------------------------------- CF curves


@dataclass(frozen=True)
class CharFnCurve:
    """A characteristic function with its declared decay window.

    ``compact``: f vanishes for |t| > t_max. ``integrable``: |f| is
    negligible (< 1e-17) beyond t_max. Otherwise the curve only decays
    slowly (oscillatory, e.g. sinc) and t_max is a truncation radius.
    """

    fn: Callable = field(repr=False)
    t_max: float
    integrable: bool
    compact: bool = False
    symmetric: bool = True
    kinks: tuple[float, ...] = ()
    label: str = ""

    def __post_init__(self):
        f0 = complex(np.asarray(self.fn(np.array([0.0])))[0])
        if abs(f0 - 1.0) > 1e-12:
            raise GridError(f"characteristic function must equal 1 at 0, got {f0}")

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))


def gaussian_cf(mean: float = 0.0, var: float = 1.0) -> CharFnCurve:
    s = math.sqrt(var)
    radius = math.sqrt(2 * 39.0) / s

    def fn(t):
        env = np.exp(-0.5 * var * t * t)
        return env if mean == 0 else env * np.exp(1j * mean * t)

    return CharFnCurve(fn, radius, True, symmetric=(mean == 0), label=f"N({mean:g},{var:g})")


def _step_cf(step: LatticeLaw):
    k = np.asarray(step.support, dtype=float)
    p = np.asarray(step.probs, dtype=float)
    symmetric = step.pmf == {-kk: pp for kk, pp in step.pmf.items()}
    if step.support == (-1, 1) and symmetric:
        return np.cos, True

    def v(t):
        phase = np.multiply.outer(t, k)
        if symmetric:
            return np.cos(phase) @ p
        return np.exp(1j * phase) @ p

    return v, symmetric


def _noise_decay_radius(noise: NoiseModel) -> float | None:
    if noise.cf_support_radius is not None:
        return noise.cf_support_radius
    if noise.family == "gaussian":
        return math.sqrt(2 * 39.0) / noise.param("sigma")
    return None


def smoothed_sum_cf(scenario: Scenario, n: int, t_max: float | None = None) -> CharFnCurve:
    """CF of Z_n: t -> f(t/sqrt n) v(t/sqrt n)^n."""
    if n < 1:
        raise ModelError("n must be >= 1")
    if scenario.dimension != 1:
        raise ModelError("smoothed_sum_cf works per coordinate; use scenario.factors")
    noise, step = scenario.noise, scenario.step
    v, step_sym = _step_cf(step)
    rn = math.sqrt(n)

    def fn(t):
        u = np.asarray(t, dtype=float) / rn
        out = noise.cf(u) * np.power(v(u), n)
        return out

    radius = _noise_decay_radius(noise)
    compact = noise.cf_support_radius is not None
    integrable = radius is not None
    if t_max is None:
        t_max = radius * rn if integrable else 4e3 * rn
    kinks = (0.0, noise.cf_support_radius * rn) if compact else ()
    return CharFnCurve(
        fn,
        float(t_max),
        integrable,
        compact=compact,
        symmetric=noise.symmetric and step_sym,
        kinks=kinks,
        label=f"f_{n}[{scenario.label}]",
    )


# ---------------------------------------------------------------- inversion


def _t_nodes(lo: float, hi: float, dt: float):
    m = max(2, int(math.ceil((hi - lo) / dt)))
    m += m % 2
    t = np.linspace(lo, hi, m + 1)
    return t, simpson_weights(m + 1, (hi - lo) / m)


def _segments(t_max: float, kinks, symmetric: bool):
    cuts = {0.0, t_max}
    if not symmetric:
        cuts.add(-t_max)
    for k in kinks:
        for s in (k, -k):
            if (0.0 if symmetric else -t_max) < s < t_max:
                cuts.add(float(s))
    cuts = sorted(cuts)
    return list(zip(cuts[:-1], cuts[1:]))


def inversion_values(cf: CharFnCurve, x: np.ndarray, t_max: float | None = None, dt: float | None = None):
    """Raw real part of (2pi)^-1 int e^{-itx} f(t) dt at the points x.

    Returns (values, max |imaginary part|). No mass or sign checks.
    """
    x = np.asarray(x, dtype=float)
    t_max = cf.t_max if t_max is None else float(t_max)
    if dt is None:
        dt = math.pi / (8.0 * max(8.0, float(np.max(np.abs(x)))))
    re = np.zeros(x.size)
    im = np.zeros(x.size)
    slow = not (cf.integrable or cf.compact)
    for lo, hi in _segments(t_max, cf.kinks, cf.symmetric):
        t, w = _t_nodes(lo, hi, dt)
        f = np.asarray(cf(t))
        if slow:
            # Lanczos sigma factors damp the Gibbs ripple of the truncation
            f = f * np.sinc(t / t_max)
        fr = w * np.real(f)
        fi = w * np.imag(f) if np.iscomplexobj(f) else None
        for start in range(0, x.size, 256):
            sl = slice(start, start + 256)
            phase = np.multiply.outer(x[sl], t)
            c = np.cos(phase)
            if cf.symmetric:
                re[sl] += c @ fr
                continue
            s = np.sin(phase)
            re[sl] += c @ fr
            im[sl] -= s @ fr
            if fi is not None:
                re[sl] += s @ fi
                im[sl] += c @ fi
    scale = 1.0 / math.pi if cf.symmetric else 1.0 / (2.0 * math.pi)
    return re * scale, float(np.max(np.abs(im))) * scale


def invert_to_density(
    cf: CharFnCurve,
    spec: GridSpec | None = None,
    t_max: float | None = None,
    oscillatory_tail: float = 1e-3,
) -> GridDensity:
    """Fourier inversion p(x) = (2pi)^-1 int e^{-itx} f(t) dt on the grid of ``spec``.

    Slowly decaying (non-integrable) curves are accepted only when |f| has
    fallen below ``oscillatory_tail`` over the last tenth of the window. They
    are tapered by Lanczos sigma factors; the residual ripple below 0 is
    clipped and reported in diagnostics.
    """
    spec = spec or GridSpec()
    t_max = cf.t_max if t_max is None else float(t_max)
    if not (cf.integrable or cf.compact):
        probe = np.linspace(0.9 * t_max, t_max, 4001)
        tail = float(np.max(np.abs(cf(probe))))
        if tail > oscillatory_tail:
            raise GridError(
                f"CF {cf.label} is not integrable: |f| reaches {tail:.3g} near t_max={t_max:g}"
            )
    m = (spec.nodes - 1) // 2
    x = spec.h * np.arange(-m, m + 1)
    re, imag = inversion_values(cf, x, t_max, dt=math.pi / (8.0 * spec.window))
    diag = {"route": "inversion", "t_max": t_max, "imag_residue": imag}
    low = float(re.min())
    if low < 0 and (not (cf.integrable or cf.compact) or low > -1e-9):
        # Gibbs ripple of a truncated slow CF, or round-off in the far tails
        diag["clipped_negative"] = low
        re = np.maximum(re, 0.0)
    return build_grid_density(x[0], spec.h, re, diagnostics=diag)


# ---------------------------------------------------------------- mixture


def sum_pmf(step: LatticeLaw, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of S_n = X_1 + ... + X_n."""
    if n < 1:
        raise ModelError("n must be >= 1")
    if len(step.support) == 1:
        return np.array([n * step.support[0]]), np.array([1.0])
    if len(step.support) == 2:
        a, b = step.support
        pa, pb = step.probs
        j = np.arange(n + 1)
        logw = (
            special.gammaln(n + 1)
            - special.gammaln(j + 1)
            - special.gammaln(n - j + 1)
            + j * math.log(pb)
            + (n - j) * math.log(pa)
        )
        return n * a + j * (b - a), np.exp(logw)
    lo = step.support[0]
    base = np.zeros(step.support[-1] - lo + 1)
    for k, p in zip(step.support, step.probs):
        base[k - lo] = p
    result, offset = np.array([1.0]), 0
    power, power_off, e = base, lo, n
    while e:
        if e & 1:
            result = np.convolve(result, power)
            offset += power_off
        e >>= 1
        if e:
            power = np.convolve(power, power)
            power_off *= 2
    keep = result > 0
    support = offset + np.arange(result.size)
    return support[keep], result[keep]


def _mass_outside(noise: NoiseModel, support, weights, n, half_width) -> float:
    r = math.sqrt(n) * half_width
    total = 0.0
    for k, w in zip(support, weights):
        d = r - abs(k)
        total += w * (1.0 if d <= 0 else noise.tail(d))
    return total


def _required_window(noise, support, weights, n, spec: GridSpec) -> float:
    if noise.tail is None:
        return spec.window
    half = spec.window
    # keep only the heavy part of the lattice law for the search
    heavy = weights > 1e-18
    sup, w = support[heavy], weights[heavy]
    while _mass_outside(noise, sup, w, n, half) > spec.tail_mass:
        half *= 1.25
        if half * 2 / spec.h > spec.max_nodes:
            raise GridError(
                f"{noise.label}: window for n={n} exceeds the node cap ({spec.max_nodes})"
            )
    return half


def _snap(noise: NoiseModel, support, n: int, spec: GridSpec, half: float):
    """Grid (x0, h, count) with every density jump on an even node, or None."""
    bps = noise.breakpoints
    rn = math.sqrt(n)
    q = 1
    for b in bps[1:]:
        frac = Fraction(b - bps[0]).limit_denominator(64)
        if abs(float(frac) - (b - bps[0])) > 1e-12:
            return None
        q = q * frac.denominator // math.gcd(q, frac.denominator)
    lam = 1.0 / (q * rn)
    mult = max(1, round(lam / (2 * spec.h)))
    h = lam / (2 * mult)
    anchor = (int(support[0]) + bps[0]) / rn
    j = math.ceil((anchor + half) / (2 * h))
    x0 = anchor - 2 * h * j
    count = 2 * math.ceil((half - x0) / (2 * h)) + 1
    return x0, h, count


def exact_mixture_density(
    scenario: Scenario, n: int, spec: GridSpec | None = None
) -> GridDensity:
    """p_n(x) = sqrt(n) sum_k P{S_n=k} p_X(sqrt(n) x - k) sampled on a grid."""
    spec = spec or GridSpec()
    if scenario.dimension != 1:
        raise ModelError("exact_mixture_density is per coordinate; use scenario.factors")
    noise = scenario.noise
    if noise.pdf is None:
        raise ModelError(f"{noise.family} noise has no closed-form density")
    support, weights = sum_pmf(scenario.step, n)
    half = _required_window(noise, support, weights, n, spec)
    snapped = _snap(noise, support, n, spec, half) if noise.breakpoints else None
    if snapped is None:
        h = spec.h
        m = math.ceil(half / h)
        x0, count = -m * h, 2 * m + 1
    else:
        x0, h, count = snapped
    if count > spec.max_nodes:
        raise GridError(f"grid for n={n} needs {count} nodes (cap {spec.max_nodes})")
    if count * support.size > spec.node_budget:
        raise GridError(
            f"lattice support {support.size} x {count} nodes overflows the node budget"
        )
    rn = math.sqrt(n)
    x = x0 + h * np.arange(count)
    right = np.zeros(count)
    left = np.zeros(count) if noise.breakpoints else None
    lo, hi = noise.support
    delta = 1e-9
    for start in range(0, support.size, 64):
        ks = support[start : start + 64].astype(float)
        ws = weights[start : start + 64]
        if math.isfinite(lo):
            # compact noise: only nodes whose argument can hit the support
            i0 = max(0, int(math.floor(((ks.min() + lo) / rn - x0) / h)) - 1)
            i1 = min(count, int(math.ceil(((ks.max() + hi) / rn - x0) / h)) + 2)
        else:
            i0, i1 = 0, count
        if i1 <= i0:
            continue
        u = rn * x[None, i0:i1] - ks[:, None]
        if left is None:
            right[i0:i1] += ws @ noise.pdf(u)
        else:
            right[i0:i1] += ws @ noise.pdf(u + delta)
            left[i0:i1] += ws @ noise.pdf(u - delta)
    right *= rn
    if left is not None:
        left *= rn
    diag = {"route": "mixture", "window": half, "snapped": snapped is not None, "n": n}
    return build_grid_density(x0, h, right, left, diag)


# ---------------------------------------------------------------- references


def gaussian_on(grid: GridDensity, mean: float = 0.0, var: float = 1.0) -> GridDensity:
    """N(mean, var) sampled on the same nodes as ``grid``."""
    x = grid.x
    vals = np.exp(-0.5 * (x - mean) ** 2 / var) / math.sqrt(2 * math.pi * var)
    return build_grid_density(grid.x0, grid.h, vals, diagnostics={"route": "closed-form"})


def std_normal_on(grid: GridDensity) -> GridDensity:
    return gaussian_on(grid, 0.0, 1.0)


def gaussian_density(mean: float = 0.0, var: float = 1.0, spec: GridSpec | None = None) -> GridDensity:
    """N(mean, var) on a symmetric grid widened to cover mean +- 12 sd."""
    spec = spec or GridSpec()
    half = max(spec.window, abs(mean) + 12.0 * math.sqrt(var))
    m = math.ceil(half / spec.h)
    x = spec.h * np.arange(-m, m + 1)
    vals = np.exp(-0.5 * (x - mean) ** 2 / var) / math.sqrt(2 * math.pi * var)
    return build_grid_density(x[0], spec.h, vals, diagnostics={"route": "closed-form"})


# ---------------------------------------------------------------- L2 distance


def l2_distance(p: GridDensity, q: GridDensity) -> float:
    """||p - q||_2 by composite Simpson on a common grid."""
    if not p.same_grid(q):
        raise GridError("l2_distance needs both densities on the same grid")
    right = (p.values - q.values) ** 2
    left = None
    if p.left is not None or q.left is not None:
        left = (p.lefts - q.lefts) ** 2
    return math.sqrt(max(0.0, p.integrate(right, left)))


def l2_distance_plancherel(
    f1: CharFnCurve, f2: CharFnCurve, t_max: float | None = None, dt: float = 0.01
) -> float:
    """(2pi)^-1/2 ||f1 - f2||_2 over the union of the declared windows.

    Beyond a compact curve's support only the other curve contributes; for
    two Gaussians-like tails that part is negligible by construction. A slowly
    decaying curve gets a 1/t^2 tail correction fitted on [t_max/2, t_max].
    """
    windows = [f1.t_max, f2.t_max]
    radius = max(windows) if t_max is None else float(t_max)
    symmetric = f1.symmetric and f2.symmetric
    kinks = tuple(f1.kinks) + tuple(f2.kinks)
    total = 0.0
    for lo, hi in _segments(radius, kinks, symmetric):
        t, w = _t_nodes(lo, hi, dt)
        diff = np.asarray(f1(t)) - np.asarray(f2(t))
        total += float(w @ (np.abs(diff) ** 2))
    if symmetric:
        total *= 2.0
    slow = [f for f in (f1, f2) if not (f.integrable or f.compact)]
    if slow:
        t = np.linspace(radius / 2, radius, 200001)
        diff = np.abs(np.asarray(f1(t)) - np.asarray(f2(t))) ** 2
        c = float(np.mean(diff * t * t))
        total += 2.0 * c / radius
    return math.sqrt(total / (2.0 * math.pi))


# ---------------------------------------------------------------- conditions


@dataclass(frozen=True)
class ZeroCondition:
    values: tuple[tuple[int, complex | float], ...]
    verdict: str
    offender: int
    max_abs: float
    tol: float = 1e-10

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


def zero_condition(noise: NoiseModel, K: int = 16, tol: float = 1e-10) -> ZeroCondition:
    """Check f(pi k) = 0 for 1 <= |k| <= K."""
    if K < 1:
        raise ValueError("K must be >= 1")
    ks = [k for j in range(1, K + 1) for k in (j, -j)]
    raw = np.asarray(noise.cf(math.pi * np.asarray(ks, dtype=float)))
    vals = []
    for k, v in zip(ks, raw):
        v = complex(v)
        vals.append((k, v.real if v.imag == 0 else v))
    mags = np.abs(raw)
    i = int(np.argmax(mags))
    max_abs = float(mags[i])
    verdict = "PASS" if max_abs <= tol else "FAIL"
    return ZeroCondition(tuple(vals), verdict, ks[i], max_abs, tol)


@dataclass(frozen=True)
class IntegralVerdict:
    status: str  # CONVERGENT | DIVERGENT | UNDECIDED
    radii: tuple[float, ...]
    partial: tuple[float, ...]
    ratios: tuple[float, ...]


def _classify(increments: list[float], partial: list[float], radii) -> IntegralVerdict:
    inc = increments[-4:]
    scale = max(1.0, abs(partial[-1]))
    ratios = []
    for a, b in zip(inc, inc[1:]):
        ratios.append(0.0 if b <= 1e-15 * scale else (math.inf if a <= 0 else b / a))
    if all(v <= 1e-15 * scale for v in inc[1:]) or all(r <= 0.75 for r in ratios):
        status = "CONVERGENT"
    elif all(r >= 0.95 for r in ratios):
        status = "DIVERGENT"
    else:
        status = "UNDECIDED"
    return IntegralVerdict(status, tuple(radii), tuple(partial), tuple(ratios))


def integral_conditions(
    noise: NoiseModel, r0: float = math.pi, doublings: int = 14, dt: float = 0.02
) -> dict[str, IntegralVerdict]:
    """Classify the d=1 improper integrals of |f||f'|, |f| and |f'| by radius doubling."""
    integrands = {
        "c44": lambda t: np.abs(noise.cf(t)) * np.abs(noise.dcf(t)),
        "c45a": lambda t: np.abs(noise.cf(t)),
        "c45b": lambda t: np.abs(noise.dcf(t)),
    }
    radii = [r0 * 2**j for j in range(doublings + 1)]
    out = {}
    for name, g in integrands.items():
        t, w = _t_nodes(0.0, r0, dt)
        core = float(w @ g(t)) + float(w @ g(-t))
        partial, increments = [core], []
        for a, b in zip(radii, radii[1:]):
            t, w = _t_nodes(a, b, dt)
            inc = float(w @ g(t)) + float(w @ g(-t))
            increments.append(inc)
            partial.append(partial[-1] + inc)
        out[name] = _classify(increments, partial, radii)
    return out


# ---------------------------------------------------------------- text I/O


def density_to_text(p: GridDensity) -> str:
    lines = [f"# x0={float(p.x0)!r} h={float(p.h)!r} count={p.count}"]
    for xi, vi in zip(p.x, p.values):
        lines.append(f"{float(xi)!r} {float(vi)!r}")
    return "\n".join(lines) + "\n"


def density_from_text(text: str) -> GridDensity:
    head, *rows = text.strip().splitlines()
    fields = dict(item.split("=", 1) for item in head.lstrip("# ").split())
    vals = np.array([float(r.split()[1]) for r in rows])
    if vals.size != int(fields["count"]):
        raise GridError("row count does not match header")
    return GridDensity(float(fields["x0"]), float(fields["h"]), vals)
