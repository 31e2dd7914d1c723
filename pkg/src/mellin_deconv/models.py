"""Analytic target and error densities with exact transforms and samplers.

Targets are positive-support densities with a closed-form Mellin transform
on the line Re = 1; error laws additionally carry the polynomial decay
index gamma of their transform, which governs the hardness of the inverse
problem and the penalty exponent in model selection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import gammaln, loggamma

from .mellin import FrequencyGrid, Sample

__all__ = [
    "TargetDensity",
    "ErrorDensity",
    "AssumptionViolation",
    "make_target",
    "make_error",
    "noise_functional",
    "cg_estimate",
    "sample_target",
    "sample_error",
    "sample_noisy",
    "random_histogram_density",
    "default_chi",
    "TARGET_NAMES",
]

TARGET_NAMES = ("gamma5", "gamma_mixture", "scaled_beta", "weibull2", "exponential")

#: floor on |M[g](1+it)|; values below violate the invertibility assumption
G0_FLOOR = 1e-300


class AssumptionViolation(RuntimeError):
    """The error-density transform is (numerically) zero on the grid."""


@dataclass(frozen=True)
class TargetDensity:
    name: str
    pdf: Callable[[np.ndarray], np.ndarray]
    mellin: Callable[[np.ndarray], np.ndarray]  # t -> M[f](1+it)
    sampler: Callable[[np.random.Generator, int], Sample]
    s_ref: Union[float, str]  # smoothness index or "super-smooth"
    support_upper: float = np.inf


@dataclass(frozen=True)
class ErrorDensity:
    name: str
    mellin: Callable[[np.ndarray], np.ndarray]  # t -> M[g](1+it)
    sampler: Callable[[np.random.Generator, int], Sample]
    gamma: int
    tau1: float = 1.0
    support_upper: float = np.inf
    _pdf: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def pdf(self, x):
        if self._pdf is None:
            raise ValueError(f"error density '{self.name}' has no pdf")
        return self._pdf(x)

    @property
    def has_pdf(self) -> bool:
        return self._pdf is not None


def _gamma_ratio(a, t):
    """Gamma(a + it) / Gamma(a) for real a > 0, vectorized in t."""
    t = np.asarray(t, dtype=float)
    return np.exp(loggamma(a + 1j * t) - gammaln(a))


def _gamma_component_mellin(shape, rate):
    def mellin(t):
        t = np.asarray(t, dtype=float)
        return _gamma_ratio(shape, t) * np.exp(-1j * t * np.log(rate))
    return mellin


def make_target(name: str) -> TargetDensity:
    """Build one of the reference targets by name.

    gamma5         Gamma(5, 1):          f(x) = x^4 e^-x / 24
    gamma_mixture  0.4 Gamma(2, rate 3.2) + 0.6 Gamma(16, rate 6.8)
    scaled_beta    140 (x/2)^3 (1-x/2)^4 on [0, 2]  (2 * Beta(4, 5))
    weibull2       2 x e^(-x^2)
    exponential    e^-x
    """
    if name == "gamma5":
        return TargetDensity(
            name=name,
            pdf=lambda x: np.where(x > 0, x ** 4 * np.exp(-x) / 24.0, 0.0),
            mellin=_gamma_component_mellin(5.0, 1.0),
            sampler=lambda rng, n: Sample(rng.gamma(5.0, size=n)),
            s_ref="super-smooth",
        )
    if name == "gamma_mixture":
        m1 = _gamma_component_mellin(2.0, 3.2)
        m2 = _gamma_component_mellin(16.0, 6.8)

        def pdf(x):
            x = np.asarray(x, dtype=float)
            p1 = 3.2 ** 2 * x * np.exp(-3.2 * x)
            p2 = np.exp(16.0 * np.log(6.8) + 15.0 * np.log(np.maximum(x, 1e-300))
                        - 6.8 * x - gammaln(16.0))
            return np.where(x > 0, 0.4 * p1 + 0.6 * p2, 0.0)

        def sampler(rng, n):
            comp = rng.random(n) < 0.4
            shape = np.where(comp, 2.0, 16.0)
            rate = np.where(comp, 3.2, 6.8)
            return Sample(rng.gamma(shape) / rate)

        return TargetDensity(
            name=name,
            pdf=pdf,
            mellin=lambda t: 0.4 * m1(t) + 0.6 * m2(t),
            sampler=sampler,
            s_ref="super-smooth",
        )
    if name == "scaled_beta":
        # 2 * Beta(4, 5); the normalizing constant is 140 = 1 / (4 B(4,5))
        lnB45 = gammaln(4.0) + gammaln(5.0) - gammaln(9.0)

        def mellin(t):
            t = np.asarray(t, dtype=float)
            lnB = loggamma(4.0 + 1j * t) + gammaln(5.0) - loggamma(9.0 + 1j * t)
            return np.exp(1j * t * np.log(2.0) + lnB - lnB45)

        def pdf(x):
            x = np.asarray(x, dtype=float)
            u = x / 2.0
            inside = (x > 0) & (x < 2)
            return np.where(inside, 140.0 * u ** 3 * (1.0 - np.where(inside, u, 0.0)) ** 4, 0.0)

        return TargetDensity(
            name=name,
            pdf=pdf,
            mellin=mellin,
            sampler=lambda rng, n: Sample(2.0 * rng.beta(4.0, 5.0, size=n)),
            s_ref=4.0,
            support_upper=2.0,
        )
    if name == "weibull2":
        return TargetDensity(
            name=name,
            pdf=lambda x: np.where(x > 0, 2.0 * x * np.exp(-np.square(x)), 0.0),
            mellin=lambda t: np.exp(loggamma(1.0 + 0.5j * np.asarray(t, dtype=float))),
            sampler=lambda rng, n: Sample(np.sqrt(-np.log1p(-rng.random(n)))),
            s_ref="super-smooth",
        )
    if name == "exponential":
        return TargetDensity(
            name=name,
            pdf=lambda x: np.where(x > 0, np.exp(-x), 0.0),
            mellin=lambda t: np.exp(loggamma(1.0 + 1j * np.asarray(t, dtype=float))),
            sampler=lambda rng, n: Sample(rng.exponential(size=n)),
            s_ref="super-smooth",
        )
    raise ValueError(f"unknown target density '{name}'")


def _beta_1_k_mellin(k: int):
    def mellin(t):
        t = np.asarray(t, dtype=float)
        out = np.ones(t.shape, dtype=complex)
        for j in range(1, k + 1):
            out *= j / (j + 1j * t)
        return out
    return mellin


def make_error(name: str, k: int = None) -> ErrorDensity:
    """Build an error law by name.

    dirac                  no noise; transform identically 1 (direct case)
    uniform01              U[0, 1], gamma = 1
    uniform_half_threehalf U[0.5, 1.5], gamma = 1
    beta_1_k               k (1-x)^(k-1) on (0, 1), gamma = k (pass k >= 1)
    """
    if name == "dirac":
        if k is not None:
            raise ValueError("dirac takes no parameter")
        return ErrorDensity(
            name=name,
            mellin=lambda t: np.ones(np.shape(np.asarray(t)), dtype=complex),
            sampler=lambda rng, n: Sample(np.ones(n)),
            gamma=0,
            support_upper=1.0,
        )
    if name == "uniform01":
        return make_error("beta_1_k", 1)
    if name == "uniform_half_threehalf":
        if k is not None:
            raise ValueError("uniform_half_threehalf takes no parameter")

        def mellin(t):
            t = np.asarray(t, dtype=float)
            c = 1.0 + 1j * t
            return (np.exp(c * np.log(1.5)) - np.exp(c * np.log(0.5))) / c

        return ErrorDensity(
            name=name,
            mellin=mellin,
            sampler=lambda rng, n: Sample(0.5 + rng.random(n)),
            gamma=1,
            support_upper=1.5,
            _pdf=lambda x: np.where((x >= 0.5) & (x <= 1.5), 1.0, 0.0),
        )
    if name == "beta_1_k":
        if k is None or int(k) != k or k < 1:
            raise ValueError("beta_1_k requires an integer k >= 1")
        k = int(k)
        return ErrorDensity(
            name=f"beta_1_{k}" if k > 1 else "uniform01",
            mellin=_beta_1_k_mellin(k),
            # inverse cdf: x = 1 - (1-u)^(1/k)
            sampler=lambda rng, n: Sample(-np.expm1(np.log1p(-rng.random(n)) / k)),
            gamma=k,
            support_upper=1.0,
            _pdf=lambda x: np.where((x > 0) & (x < 1),
                                    k * np.where((x > 0) & (x < 1), 1.0 - x, 1.0) ** (k - 1),
                                    0.0),
        )
    raise ValueError(f"unknown error density '{name}'")


def noise_functional(g: ErrorDensity, k: float, grid: FrequencyGrid) -> float:
    """Delta_g(k) = int_{-k}^{k} |M[g](1+it)|^{-2} dt (trapezoid on the grid)."""
    m = grid.index_of(k)
    if m < 1:
        raise ValueError("k must be at least one grid step")
    t_half = grid.nodes[grid.half_count:][:m + 1]
    mod = np.abs(g.mellin(t_half))
    if np.any(mod < G0_FLOOR):
        raise AssumptionViolation(
            f"|M[g]| underflows on the grid for error '{g.name}'")
    a = mod ** -2.0
    # symmetric integrand: f(0) + 2*interior + f(k), times step
    return float(grid.step * (a[0] + 2.0 * a[1:m].sum() + a[m]))


def cg_estimate(g: ErrorDensity, k_lo: int = 1, k_hi: int = 50,
                grid: FrequencyGrid = None) -> float:
    """Numeric surrogate for the constant C_g: max_k Delta_g(k) / k^(2 gamma + 1)."""
    if k_hi < k_lo or k_lo < 1:
        raise ValueError("need 1 <= k_lo <= k_hi")
    if grid is None:
        grid = FrequencyGrid(k_max=float(k_hi), step=0.01)
    best = 0.0
    for k in range(k_lo, k_hi + 1):
        best = max(best, noise_functional(g, float(k), grid) / k ** (2 * g.gamma + 1))
    return best


def sample_target(target: TargetDensity, n: int, rng: np.random.Generator) -> Sample:
    if n < 1:
        raise ValueError("n must be >= 1")
    return target.sampler(rng, n)


def sample_error(g: ErrorDensity, n: int, rng: np.random.Generator) -> Sample:
    if n < 1:
        raise ValueError("n must be >= 1")
    return g.sampler(rng, n)


def sample_noisy(target: TargetDensity, g: ErrorDensity, n: int,
                 rng: np.random.Generator) -> Sample:
    """Draw Y_j = X_j * U_j; the dirac error returns the X draws unchanged."""
    x = sample_target(target, n, rng)
    if g.name == "dirac":
        return x
    u = sample_error(g, n, rng)
    return Sample(x.points * u.points)


def random_histogram_density(rng: np.random.Generator, span: float = 5.0,
                             min_bins: int = 3, max_bins: int = 10) -> TargetDensity:
    """Histogram density with random partition and Dirichlet(1) weights.

    Used as a rough, low-regularity target family for penalty calibration.
    """
    n_bins = int(rng.integers(min_bins, max_bins + 1))
    edges = np.sort(rng.uniform(0.0, span, size=n_bins + 1))
    # guard against degenerate bins
    while np.min(np.diff(edges)) < 1e-3 * span:
        edges = np.sort(rng.uniform(0.0, span, size=n_bins + 1))
    weights = rng.dirichlet(np.ones(n_bins))
    widths = np.diff(edges)
    heights = weights / widths

    def pdf(x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(edges, x, side="right") - 1
        inside = (idx >= 0) & (idx < n_bins) & (x < edges[-1])
        return np.where(inside, heights[np.clip(idx, 0, n_bins - 1)], 0.0)

    def mellin(t):
        t = np.asarray(t, dtype=float)
        c = 1.0 + 1j * t
        out = np.zeros(t.shape, dtype=complex)
        for h, a, b in zip(heights, edges[:-1], edges[1:]):
            hi = np.exp(c * np.log(b))
            lo = np.exp(c * np.log(a)) if a > 0 else 0.0
            out += h * (hi - lo) / c
        return out

    def sampler(rng_, n):
        b = rng_.choice(n_bins, size=n, p=weights)
        return Sample(edges[b] + widths[b] * rng_.random(n))

    return TargetDensity(
        name=f"histogram{n_bins}",
        pdf=pdf,
        mellin=mellin,
        sampler=sampler,
        s_ref=0.0,
        support_upper=float(edges[-1]),
    )


def resolve_error(name: str) -> ErrorDensity:
    """Map a stable string identifier (as used by the CLI) to an error law.

    Accepts the fixed names plus 'beta_1_<k>' for any integer k >= 1.
    """
    if name in ("dirac", "uniform01", "uniform_half_threehalf"):
        return make_error(name)
    if name.startswith("beta_1_"):
        suffix = name[len("beta_1_"):]
        if suffix.isdigit() and int(suffix) >= 1:
            return make_error("beta_1_k", int(suffix))
    raise ValueError(f"unknown error density '{name}'")


def default_chi(gamma: int) -> float:
    """Calibrated penalty constants per decay index."""
    table = {0: 1.2, 1: 0.8, 2: 0.01}
    if gamma not in table:
        raise ValueError(f"no default penalty constant for gamma={gamma}; "
                         "run calibration")
    return table[gamma]
