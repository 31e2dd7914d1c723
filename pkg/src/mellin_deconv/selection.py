"""Data-driven cut-off selection by penalized contrast.

The selected cut-off minimizes -||f_hat_k||^2_omega + chi k^(2 gamma + 1) / n
over integer k up to K_n = n^(1/(2 gamma + 1)); the penalty constant chi is
either the calibrated per-gamma default or obtained by minimizing the risk
over a family of random histogram densities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .mellin import FrequencyGrid, MellinValue, Sample, empirical_mellin
from .models import (G0_FLOOR, AssumptionViolation, ErrorDensity, cg_estimate,
                     random_histogram_density, sample_noisy)
from .estimator import (CutoffEstimate, EstimatorConfig, cutoff_curves_upto,
                        cutoff_norms_upto)

__all__ = [
    "PenaltyConfig",
    "SelectionResult",
    "CalibrationConfig",
    "select_k",
    "adaptive_estimate",
    "calibrate_chi",
]


def k_n_bound(n: int, gamma: int) -> int:
    """floor(n^(1/(2 gamma + 1))) with a guard against 1000^(1/3) = 9.99..."""
    return max(1, int(np.floor(n ** (1.0 / (2 * gamma + 1)) + 1e-9)))


@dataclass(frozen=True)
class PenaltyConfig:
    chi: float
    gamma: int
    k_cap: int = 200

    def __post_init__(self):
        if self.chi <= 0:
            raise ValueError("chi must be positive")
        if self.gamma < 0 or self.k_cap < 1:
            raise ValueError("invalid penalty configuration")

    def k_n(self, n: int) -> int:
        """Search bound K_n = n^(1/(2 gamma + 1)), floored and capped."""
        return min(k_n_bound(n, self.gamma), self.k_cap)

    def pen_at(self, k, n: int):
        return self.chi * np.asarray(k, dtype=float) ** (2 * self.gamma + 1) / n


@dataclass(frozen=True)
class SelectionResult:
    """Per-cut-off contrast table and the selected cut-off."""

    k_hat: int
    ks: np.ndarray
    omega_norm_sq: np.ndarray
    pen: np.ndarray
    contrast: np.ndarray
    k_n: int
    chi_threshold: Optional[float] = None

    def __post_init__(self):
        if np.any(np.diff(self.omega_norm_sq) < -1e-12):
            raise ValueError("omega norms must be nondecreasing in k")

    def table_rows(self):
        """(k, omega_norm_sq, pen, contrast) rows, e.g. for serialization."""
        return list(zip(self.ks.tolist(), self.omega_norm_sq.tolist(),
                        self.pen.tolist(), self.contrast.tolist()))


def _noise_corrected_half(sample: Sample, g: ErrorDensity, k_max: float,
                          step: float) -> np.ndarray:
    """Empirical transform of the sample divided by M[g], on t = 0..k_max."""
    work = FrequencyGrid(k_max=k_max, step=step)
    mv = empirical_mellin(sample, 1.0, work)
    t_half = work.nodes[work.half_count:]
    gm = g.mellin(t_half)
    if np.any(np.abs(gm) < G0_FLOOR):
        raise AssumptionViolation(
            f"|M[g]| underflows on the grid for error '{g.name}'")
    return mv.half / gm


def select_k(sample: Sample, g: ErrorDensity, pc: PenaltyConfig,
             cfg: EstimatorConfig) -> SelectionResult:
    """Minimize the penalized contrast over k in {1, ..., K_n}.

    Ties are broken toward the smallest k.
    """
    if cfg.alpha != 1.0:
        raise ValueError("selection requires alpha = 1")
    k_n = min(pc.k_n(sample.n), int(np.floor(cfg.grid.k_max)))
    ks = np.arange(1, k_n + 1)
    ratio_half = _noise_corrected_half(sample, g, float(k_n), cfg.grid.step)
    norms = cutoff_norms_upto(ratio_half, cfg.grid.step, ks)
    pen = pc.pen_at(ks, sample.n)
    contrast = -norms + pen
    k_hat = int(ks[np.argmin(contrast)])  # argmin returns the first minimum
    return SelectionResult(k_hat=k_hat, ks=ks, omega_norm_sq=norms, pen=pen,
                           contrast=contrast, k_n=k_n)


def adaptive_estimate(sample: Sample, g: ErrorDensity, pc: PenaltyConfig,
                      cfg: EstimatorConfig, with_threshold: bool = False):
    """Select the cut-off from the data, then estimate at the selected value.

    With `with_threshold` the result also reports the theoretical penalty
    threshold 12 C_g / pi for diagnostics (extra quadrature; off by default).
    """
    from .estimator import estimate_noisy
    sel = select_k(sample, g, pc, cfg)
    est = estimate_noisy(sample, g, float(sel.k_hat), cfg)
    if with_threshold:
        threshold = 12.0 * cg_estimate(g, 1, max(sel.k_n, 1)) / np.pi
        sel = SelectionResult(k_hat=sel.k_hat, ks=sel.ks,
                              omega_norm_sq=sel.omega_norm_sq, pen=sel.pen,
                              contrast=sel.contrast, k_n=sel.k_n,
                              chi_threshold=threshold)
    return est, sel


@dataclass(frozen=True)
class CalibrationConfig:
    """Protocol for picking chi over random histogram targets."""

    n_histograms: int = 50
    reps: int = 20
    n: int = 1000
    seed: int = 0
    span: float = 5.0
    min_bins: int = 3
    max_bins: int = 10
    k_cap: int = 30
    #: relative band within which mean risks count as tied (Monte Carlo noise)
    tie_tol: float = 0.001
    cfg: EstimatorConfig = field(default_factory=lambda: EstimatorConfig(
        grid=FrequencyGrid(k_max=30.0)))


def calibrate_chi(g: ErrorDensity, chi_grid: Sequence[float],
                  cal: CalibrationConfig = CalibrationConfig()) -> float:
    """Pick the chi from `chi_grid` minimizing mean weighted ISE.

    For each random histogram target and each replication the per-cut-off
    norm and risk tables are computed once; every candidate chi then only
    re-reads its own argmin.  The risk profile over chi is typically very
    flat, so candidates within `tie_tol` (relative) of the minimum count as
    tied and the tie goes to the largest such chi (smoother estimates).
    """
    chis = np.asarray(sorted(chi_grid), dtype=float)
    if chis.size == 0:
        raise ValueError("chi_grid must be nonempty")
    if chis.size == 1:
        return float(chis[0])
    rng = np.random.default_rng(np.random.SeedSequence(cal.seed))
    step = cal.cfg.grid.step
    x_grid = cal.cfg.x_grid
    xw = x_grid  # weight omega(x) = x at alpha = 1
    total = np.zeros(chis.size)
    gamma = g.gamma
    k_n = min(k_n_bound(cal.n, gamma), cal.k_cap,
              int(np.floor(cal.cfg.grid.k_max)))
    ks = np.arange(1, k_n + 1)
    pen_unit = ks.astype(float) ** (2 * gamma + 1) / cal.n
    for _ in range(cal.n_histograms):
        target = random_histogram_density(rng, cal.span, cal.min_bins, cal.max_bins)
        truth = target.pdf(x_grid)
        for _ in range(cal.reps):
            sample = sample_noisy(target, g, cal.n, rng)
            ratio_half = _noise_corrected_half(sample, g, float(k_n), step)
            norms = cutoff_norms_upto(ratio_half, step, ks)
            curves = cutoff_curves_upto(ratio_half, step, ks, x_grid)
            ises = np.trapezoid((truth[None, :] - curves) ** 2 * xw[None, :],
                                x_grid, axis=1)
            for i, chi in enumerate(chis):
                k_idx = int(np.argmin(-norms + chi * pen_unit))
                total[i] += ises[k_idx]
    # largest chi whose mean risk ties the minimum within tie_tol
    tied = total <= (1.0 + cal.tie_tol) * total.min()
    return float(chis[np.nonzero(tied)[0][-1]])
