"""Explicit inequalities of the smoothed-CLT theory as executable checks.

Every checker returns BoundReport objects (lhs <= rhs with 1e-9 slack).
Hypothesis failures raise PreconditionError instead of being evaluated.
``run_corpus`` draws randomized inputs and collects reports per checker.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import special

from .entropy import (
    MomentSummary,
    differential_entropy,
    discrete_entropy,
    kl_decomposition,
    kl_to_std_normal,
    moments_of,
    philox_rng,
    w2_to_std_normal,
)
from .model import LatticeLaw, Scenario, bernoulli, lattice_law, make_noise, noise_entropy
from .reports import BoundReport, digest
from .spectral import (
    GridDensity,
    GridSpec,
    exact_mixture_density,
    gaussian_density,
    l2_distance,
    std_normal_on,
)

__all__ = [
    "PreconditionError",
    "DensityCase",
    "gaussian_tail_bounds",
    "weighted_tail_bound",
    "kl_truncation_bound",
    "kl_simplified_bound",
    "prescribed_T",
    "combined_upper_rhs",
    "prop21_explicit_upper",
    "prop21_lower",
    "lemma32_bounds",
    "lemma51_check",
    "lemma52_check",
    "talagrand_check",
    "thm53_trajectory_check",
    "kl_simplified_T_profile",
    "CHECKERS",
    "CorpusResult",
    "run_corpus",
]

LOG_2PI = math.log(2 * math.pi)
MOMENT_TOL = 1e-3


class PreconditionError(ValueError):
    """A hypothesis of the inequality does not hold for the given input."""


def _phi_tail(T: float) -> float:
    return 0.5 * special.erfc(T / math.sqrt(2))


def _require_T(T: float):
    if not T >= 1:
        raise PreconditionError(f"T = {T!r} violates the hypothesis T >= 1")


def _require_dim(d: int):
    if d not in (1, 2):
        raise PreconditionError("only d = 1 and d = 2 are supported")


class DensityCase:
    """A d = 1 grid density with its derived quantities, computed once."""

    def __init__(self, p: GridDensity, label: str = ""):
        self.p = p
        self.label = label or p.diagnostics.get("route", "density")

    @cached_property
    def phi(self) -> GridDensity:
        return std_normal_on(self.p)

    @cached_property
    def delta(self) -> float:
        return l2_distance(self.p, self.phi)

    @cached_property
    def entropy(self) -> float:
        return differential_entropy(self.p)

    @cached_property
    def moments(self) -> MomentSummary:
        return moments_of(self.p)

    @cached_property
    def D(self) -> float:
        return kl_to_std_normal(self.p, entropy=self.entropy)

    @cached_property
    def key(self) -> str:
        p = self.p
        return digest(self.label, p.x0, p.h, p.count, float(p.values.sum()))

    def isotropic(self) -> "DensityCase":
        """Rescaled copy with E X^2 = 1."""
        b = 1.0 / math.sqrt(self.p.second_moment)
        return DensityCase(self.p.scaled(b).padded(12.0), self.label + "|iso")


def _case(p) -> DensityCase:
    return p if isinstance(p, DensityCase) else DensityCase(p)


def _require_second_moment(c: DensityCase, d: int = 1):
    m2 = c.p.second_moment
    if abs(m2 - d) > MOMENT_TOL:
        raise PreconditionError(f"second moment {m2!r} is not {d} within {MOMENT_TOL}")


# ---------------------------------------------------------------- tails


def gaussian_tail_bounds(T: float, d: int = 1) -> tuple[BoundReport, BoundReport]:
    """Gaussian tail mass and tail second moment outside |x| >= T."""
    _require_T(T)
    _require_dim(d)
    e = math.exp(-T * T / 2)
    if d == 1:
        lhs_a = 2 * _phi_tail(T)
        lhs_b = 2 * T * math.exp(-T * T / 2) / math.sqrt(2 * math.pi) + lhs_a
    else:
        # |Z|^2 is chi-square with 2 degrees of freedom
        lhs_a = e
        lhs_b = (T * T + 2) * e
    ctx = digest("gaussian-tail", T, d)
    return (
        BoundReport("gaussian-tail-mass", lhs_a, 2 * d * T ** (d - 2) * e, ctx),
        BoundReport("gaussian-tail-second-moment", lhs_b, 2 * d * T**d * e, ctx),
    )


def _tail_m2(c: DensityCase, T: float) -> float:
    return c.p.outside(lambda x, v: x * x * v, T)


def weighted_tail_bound(p, T: float) -> BoundReport:
    """int_{|x|>=T} x^2 p <= 2 T^{(d+4)/2} Delta + 2 d T^d e^{-T^2/2}, d = 1."""
    _require_T(T)
    c = _case(p)
    _require_second_moment(c)
    lhs = _tail_m2(c, T)
    rhs = 2 * T**2.5 * c.delta + 2 * T * math.exp(-T * T / 2)
    return BoundReport("weighted-tail", lhs, rhs, digest(c.key, T), extras={"delta": c.delta})


def kl_truncation_bound(p, T: float) -> BoundReport:
    """The four-term truncation bound for D, every term by quadrature (d = 1)."""
    _require_T(T)
    c = _case(p)
    q, phi = c.p, c.phi
    diff2 = (q.values - phi.values) ** 2
    diff2_left = None if q.left is None else (q.left - phi.values) ** 2
    x = q.x
    near = np.abs(x) <= T + 3 * q.h
    weight = np.where(near, np.exp(0.5 * np.where(near, x, 0.0) ** 2), 0.0)
    cum = q.cumulative(diff2 * weight, None if diff2_left is None else diff2_left * weight)
    inner = float(np.interp(T, x, cum) - np.interp(-T, x, cum))
    terms = {
        "gauss": 2 * T**-1 * math.exp(-T * T / 2),
        "inner": math.sqrt(2 * math.pi) * inner,
        "tail_m2": 0.5 * _tail_m2(c, T),
        "tail_plogp": q.outside(lambda x, v: special.xlogy(v, v), T),
    }
    rhs = math.fsum(terms.values())
    return BoundReport("kl-truncation", c.D, rhs, digest(c.key, T), extras=terms)


def kl_simplified_bound(p, T: float) -> BoundReport:
    """D <= (2d+1) T^{d-1} e^{-T^2/2} + ((2pi)^{d/2}+1) e^{T^2/2} Delta^2 + d int_{|x|>=T} x^2 p."""
    _require_T(T)
    c = _case(p)
    rhs = (
        3 * math.exp(-T * T / 2)
        + (math.sqrt(2 * math.pi) + 1) * math.exp(T * T / 2) * c.delta**2
        + _tail_m2(c, T)
    )
    return BoundReport("kl-simplified", c.D, rhs, digest(c.key, T))


def kl_simplified_T_profile(p, Ts: Sequence[float] | None = None) -> dict:
    """Right side of the simplified bound over a T grid (diagnostic only)."""
    c = _case(p)
    Ts = np.linspace(1.0, 8.0, 141) if Ts is None else np.asarray(Ts, dtype=float)
    vals = np.array([kl_simplified_bound(c, float(T)).rhs for T in Ts])
    i = int(np.argmin(vals))
    return {
        "T": Ts.tolist(),
        "rhs": vals.tolist(),
        "argmin_T": float(Ts[i]),
        "min_rhs": float(vals[i]),
        "interior": 0 < i < len(Ts) - 1,
    }


# ---------------------------------------------------------------- L2 <-> KL


def prescribed_T(delta: float, d: int = 1) -> float:
    L = math.log(1.0 / delta)
    return math.sqrt(2 * L + 0.5 * d * math.log(L))


def combined_upper_rhs(delta: float, T: float, d: int = 1) -> float:
    return (
        (2 * d * d + 2 * d + 1) * T**d * math.exp(-T * T / 2)
        + ((2 * math.pi) ** (d / 2) + 1) * math.exp(T * T / 2) * delta**2
        + 2 * d * T ** ((d + 4) / 2) * delta
    )


def prop21_explicit_upper(p, d: int = 1) -> BoundReport:
    """Combined explicit upper bound at the prescribed T; needs E X^2 = d and Delta <= 1/e."""
    c = _case(p)
    _require_second_moment(c, d)
    delta = c.delta
    if delta > 1 / math.e:
        raise PreconditionError(f"Delta = {delta!r} exceeds 1/e")
    ctx = digest(c.key, "combined")
    if delta == 0:
        return BoundReport(
            "combined-upper", c.D, 0.0, ctx, note="vacuous: Delta = 0, limit case"
        )
    T = prescribed_T(delta, d)
    rhs = combined_upper_rhs(delta, T, d)
    ratio = c.D / (delta * math.log(1 / delta) ** ((d + 4) / 4))
    return BoundReport(
        "combined-upper", c.D, rhs, ctx, extras={"T": T, "delta": delta, "ratio": ratio}
    )


def prop21_lower(p, M: float | None = None, d: int = 1) -> BoundReport:
    """D >= Delta^2 / (2M) for M >= max(sup p, (2pi)^{-d/2}); needs E X^2 = d."""
    c = _case(p)
    _require_second_moment(c, d)
    floor = (2 * math.pi) ** (-d / 2)
    sup = c.p.sup
    if M is None:
        M = max(sup, floor)
    if M < sup - 1e-12 or M < floor:
        raise PreconditionError(f"M = {M!r} is below max(sup p, (2pi)^(-d/2))")
    return BoundReport("l2-lower", c.delta**2 / (2 * M), c.D, digest(c.key, M))


# ---------------------------------------------------------------- moments


def lemma32_bounds(D: float, moments: MomentSummary) -> list[BoundReport]:
    """Master moment inequality and its consequences (a), (b), (c)."""
    if D < -1e-9:
        raise PreconditionError(f"D = {D!r} is negative")
    D = max(D, 0.0)
    d = moments.dimension
    parts = kl_decomposition(D, moments)
    pen = math.fsum(min(abs(v - 1), (v - 1) ** 2) for v in moments.variances) / 16
    ctx = digest("moments", D, moments.mean, moments.second_moment, moments.variances)
    root = math.sqrt(D)
    worst_var = max(abs(v - 1) for v in moments.variances)
    return [
        BoundReport("moment-master", parts.D_shape + parts.mean_term + pen, D, ctx),
        BoundReport("mean-bound", moments.mean_sq, 2 * D, ctx),
        BoundReport("variance-bound", worst_var, 4 * root + 16 * D, ctx),
        BoundReport(
            "second-moment-bound", abs(moments.second_moment - d), 4 * d * root + 16 * d * D, ctx
        ),
    ]


# ---------------------------------------------------------------- entropy of sums


def lemma51_check(hX: float, HY: float, hSum: float, context: str = "") -> BoundReport:
    """h(X + Y) <= h(X) + H(Y) for independent continuous X and discrete Y."""
    return BoundReport("entropy-of-sum", hSum, hX + HY, context or digest(hX, HY, hSum))


def lemma52_check(pmf) -> BoundReport:
    """H(Y) <= (1/2) log(2 pi e (Var Y + 1/12)) for an integer pmf."""
    law = pmf if isinstance(pmf, LatticeLaw) else lattice_law(pmf)
    H = discrete_entropy(law)
    rhs = 0.5 * math.log(2 * math.pi * math.e * (law.variance + 1 / 12))
    return BoundReport("discrete-entropy-max", H, rhs, digest(law.support, law.probs))


def talagrand_check(p) -> BoundReport:
    """W2^2 <= 2 D in d = 1."""
    c = _case(p)
    w2 = w2_to_std_normal(c.p)
    return BoundReport("talagrand", w2 * w2, 2 * c.D, digest(c.key, "w2"))


def thm53_trajectory_check(
    entropies: Mapping[int, float],
    hX: float,
    d: int = 1,
    n_values: Iterable[int] | None = None,
    step: LatticeLaw | None = None,
    trend_tol: float = 1e-3,
) -> list[BoundReport]:
    """Finite-n entropy bound row by row, plus the terminal-trend report.

    h(Z_n) <= h(X) + (d/2) log(2 pi e (1 + 1/(12 n))) for unit-variance,
    uncorrelated integer steps; the trend report asserts that the excess
    over h(X) + h(Z) on the top quartile of n is at most ``trend_tol``.
    """
    _require_dim(d)
    if step is not None and abs(step.variance - 1.0) > 1e-12:
        raise PreconditionError(f"step variance {step.variance!r} is not 1")
    ns = sorted(entropies) if n_values is None else list(n_values)
    missing = [n for n in ns if n not in entropies]
    if missing or not ns:
        raise PreconditionError(f"sweep is missing n = {missing}")
    hZ = 0.5 * d * math.log(2 * math.pi * math.e)
    out = []
    for n in ns:
        rhs = hX + 0.5 * d * math.log(2 * math.pi * math.e * (1 + 1 / (12 * n)))
        out.append(
            BoundReport("entropy-limsup-finite", entropies[n], rhs, digest(n, hX, d), extras={"n": n})
        )
    top = ns[len(ns) - max(1, math.ceil(len(ns) / 4)) :]
    excess = max(entropies[n] - (hX + hZ) for n in top)
    out.append(
        BoundReport("entropy-limsup-trend", excess, trend_tol, digest(tuple(top), hX, d), extras={"top_n": top})
    )
    return out


# ---------------------------------------------------------------- corpus


@dataclass(frozen=True)
class Checker:
    """A corpus checker: ``kind`` selects the input generator; ``run(arg, rng)``."""

    kind: str  # density | iso-density | gaussian-T | pmf | sum
    run: Callable


def _rand_T(rng) -> float:
    return float(rng.uniform(1.0, 5.0))


CHECKERS: dict[str, Checker] = {
    "gaussian-tail": Checker("gaussian-T", lambda td, rng: list(gaussian_tail_bounds(*td))),
    "weighted-tail": Checker("iso-density", lambda c, rng: [weighted_tail_bound(c, _rand_T(rng))]),
    "kl-truncation": Checker("density", lambda c, rng: [kl_truncation_bound(c, _rand_T(rng))]),
    "kl-simplified": Checker("density", lambda c, rng: [kl_simplified_bound(c, _rand_T(rng))]),
    "moments": Checker("density", lambda c, rng: lemma32_bounds(c.D, c.moments)),
    "entropy-of-sum": Checker("sum", lambda args, rng: [lemma51_check(*args)]),
    "discrete-entropy-max": Checker("pmf", lambda law, rng: [lemma52_check(law)]),
    "combined-upper": Checker("iso-density", lambda c, rng: [prop21_explicit_upper(c)]),
    "l2-lower": Checker("iso-density", lambda c, rng: [prop21_lower(c)]),
    "talagrand": Checker("density", lambda c, rng: [talagrand_check(c)]),
}


@dataclass
class CorpusResult:
    reports: list[tuple[str, BoundReport]] = field(default_factory=list)
    valid: dict[str, int] = field(default_factory=dict)
    skipped: dict[str, int] = field(default_factory=dict)

    @property
    def violations(self) -> list[tuple[str, BoundReport]]:
        return [(name, r) for name, r in self.reports if not r.satisfied]

    @property
    def passed(self) -> bool:
        return not self.violations

    def jsonl(self) -> str:
        lines = []
        for name, r in self.reports:
            rec = {"checker": name}
            rec.update(r.record())
            lines.append(json.dumps(rec, sort_keys=True, default=float))
        return "\n".join(lines) + ("\n" if lines else "")


def random_pmf(rng, atoms: int = 5, span: int = 3) -> LatticeLaw:
    support = np.sort(rng.choice(np.arange(-span, span + 1), size=atoms, replace=False))
    w = rng.dirichlet(np.ones(atoms))
    w = np.maximum(w, 1e-3)
    w = w / w.sum()
    pmf = {int(k): float(p) for k, p in zip(support, w)}
    # absorb rounding so the pmf sums to 1 to machine precision
    last = int(support[-1])
    pmf[last] = 1.0 - math.fsum(p for k, p in pmf.items() if k != last)
    return lattice_law(pmf)


def _random_noise(rng):
    kind = rng.integers(3)
    if kind == 0:
        return make_noise("gaussian", sigma=float(rng.uniform(0.3, 2.0)))
    if kind == 1:
        return make_noise("uniform_width", w=int(rng.integers(4, 25)) / 8)
    return make_noise("spline_cf", T=float(rng.uniform(1.5, 3.0)))


def _density_case(rng, index: int, spec: GridSpec) -> DensityCase:
    """Alternate Gaussians and smoothed-sum scenario densities."""
    if index % 3 == 0:
        a = float(rng.uniform(-1, 1))
        v = float(rng.uniform(0.25, 4))
        return DensityCase(gaussian_density(a, v, spec), f"N({a:.6g},{v:.6g})")
    noise = _random_noise(rng)
    step = bernoulli() if rng.random() < 0.5 else random_pmf(rng)
    n = int(rng.choice([1, 2, 4, 8, 16, 64]))
    if noise.family == "spline_cf":
        n = max(n, 4)
    sc = Scenario(noise, step, (n,))
    return DensityCase(exact_mixture_density(sc, n, spec), f"{sc.label}|n={n}")


def run_corpus(
    seed: int = 0,
    per_checker: int = 100,
    checkers: Mapping[str, Checker] | None = None,
    spec: GridSpec | None = None,
    max_draws: int = 2000,
) -> CorpusResult:
    """Deterministic randomized corpus; stops once every checker has enough valid cases."""
    checkers = dict(CHECKERS if checkers is None else checkers)
    spec = spec or GridSpec()
    names = sorted(checkers)
    res = CorpusResult(valid={k: 0 for k in names}, skipped={k: 0 for k in names})
    rngs = {name: philox_rng(seed, i + 1) for i, name in enumerate(names)}
    density_rng = philox_rng(seed, 0)

    def apply(name, arg):
        try:
            reps = checkers[name].run(arg, rngs[name])
        except PreconditionError:
            res.skipped[name] += 1
            return
        res.valid[name] += 1
        res.reports.extend((name, r) for r in reps)

    def need(kinds):
        return [k for k in names if checkers[k].kind in kinds and res.valid[k] < per_checker]

    draws = 0
    while need(("density", "iso-density")) and draws < max_draws:
        case = _density_case(density_rng, draws, spec)
        iso = case.isotropic()
        for name in need(("density", "iso-density")):
            apply(name, iso if checkers[name].kind == "iso-density" else case)
        draws += 1
    while need(("gaussian-T",)) and draws < max_draws:
        for name in need(("gaussian-T",)):
            r = rngs[name]
            apply(name, (float(r.uniform(1.0, 8.0)), int(r.integers(1, 3))))
        draws += 1
    while need(("pmf",)) and draws < max_draws:
        for name in need(("pmf",)):
            r = rngs[name]
            apply(name, random_pmf(r, atoms=int(r.integers(1, 6))))
        draws += 1
    while need(("sum",)) and draws < max_draws:
        for name in need(("sum",)):
            r = rngs[name]
            noise = _random_noise(r)
            if noise.family == "spline_cf":
                noise = make_noise("gaussian", sigma=float(r.uniform(0.3, 2.0)))
            law = bernoulli() if r.random() < 0.3 else random_pmf(r)
            sc = Scenario(noise, law, (1,))
            p = exact_mixture_density(sc, 1, spec)
            args = (noise_entropy(noise), discrete_entropy(law), differential_entropy(p), digest(sc.label))
            apply(name, args)
        draws += 1
    # custom kinds (e.g. injected fixtures) receive the draw index
    for name in names:
        if checkers[name].kind not in ("density", "iso-density", "gaussian-T", "pmf", "sum"):
            for i in range(per_checker):
                apply(name, i)
    return res
