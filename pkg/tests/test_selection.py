import numpy as np
import pytest

from mellin_deconv import EstimatorConfig, FrequencyGrid, Sample, analytic_mellin
from mellin_deconv.mellin import bias_tail
from mellin_deconv.models import (ErrorDensity, default_chi, make_error,
                                  make_target, sample_noisy)
from mellin_deconv.estimator import cutoff_curves_upto, cutoff_norms_upto
from mellin_deconv.selection import (CalibrationConfig, PenaltyConfig,
                                     SelectionResult, _noise_corrected_half,
                                     adaptive_estimate, calibrate_chi, k_n_bound,
                                     select_k)

CFG = EstimatorConfig(grid=FrequencyGrid(k_max=20.0, step=0.01))


class TestKnBound:
    def test_examples(self):
        assert k_n_bound(2000, 1) == 12
        assert k_n_bound(1000, 0) == 1000
        # 1000^(1/3) evaluates below 10 in floating point; guard must fix it
        assert k_n_bound(1000, 1) == 10

    def test_cap(self):
        assert PenaltyConfig(chi=1.0, gamma=0, k_cap=50).k_n(100000) == 50


class TestPenaltyConfig:
    def test_pen_plug_in(self):
        pc = PenaltyConfig(chi=0.8, gamma=1)
        assert pc.pen_at(10, 2000) == pytest.approx(0.4, rel=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            PenaltyConfig(chi=0.0, gamma=1)
        with pytest.raises(ValueError):
            PenaltyConfig(chi=1.0, gamma=-1)


class TestSelectK:
    def test_contrast_decomposition_and_argmin(self):
        tgt, g = make_target("gamma5"), make_error("uniform01")
        s = sample_noisy(tgt, g, 2000, np.random.default_rng(0))
        sel = select_k(s, g, PenaltyConfig(chi=0.8, gamma=1), CFG)
        assert np.array_equal(sel.contrast, -sel.omega_norm_sq + sel.pen)
        assert sel.k_n == 12
        i = int(np.argmin(sel.contrast))
        assert sel.k_hat == sel.ks[i]
        assert np.all(sel.contrast >= sel.contrast[i])

    def test_all_ones_sample_dirac_selects_k_n(self):
        # constant transform: contrast -k/pi + 1.2 k/1000 is decreasing
        s = Sample(np.ones(1000))
        sel = select_k(s, make_error("dirac"), PenaltyConfig(chi=1.2, gamma=0), CFG)
        assert sel.k_hat == sel.k_n
        assert np.allclose(sel.omega_norm_sq, sel.ks / np.pi, rtol=1e-12)

    def test_penalty_scale_monotonicity(self):
        tgt, g = make_target("gamma5"), make_error("uniform01")
        for r in range(10):
            s = sample_noisy(tgt, g, 2000, np.random.default_rng(100 + r))
            khats = [select_k(s, g, PenaltyConfig(chi=chi, gamma=1), CFG).k_hat
                     for chi in (0.2, 0.8, 3.0)]
            assert khats[0] >= khats[1] >= khats[2]

    def test_sample_scale_covariance(self):
        tgt, g = make_target("gamma5"), make_error("uniform01")
        pc = PenaltyConfig(chi=0.8, gamma=1)
        for c in (3.0, 0.2):
            s = sample_noisy(tgt, g, 1000, np.random.default_rng(7))
            a = select_k(s, g, pc, CFG)
            b = select_k(Sample(c * s.points), g, pc, CFG)
            assert a.k_hat == b.k_hat
            assert np.allclose(a.omega_norm_sq, b.omega_norm_sq, rtol=1e-12)
            assert np.array_equal(a.pen, b.pen)

    def test_dirac_equals_explicit_unit_transform(self):
        unit = ErrorDensity(
            name="unit", mellin=lambda t: np.ones(np.shape(t), dtype=complex),
            sampler=lambda rng, n: Sample(np.ones(n)), gamma=0)
        s = Sample(np.random.default_rng(8).gamma(5.0, size=800))
        pc = PenaltyConfig(chi=1.2, gamma=0)
        a = select_k(s, make_error("dirac"), pc, CFG)
        b = select_k(s, unit, pc, CFG)
        assert a.k_hat == b.k_hat
        assert np.array_equal(a.omega_norm_sq, b.omega_norm_sq)
        assert np.array_equal(a.contrast, b.contrast)

    def test_rejects_alpha_not_one(self):
        cfg = EstimatorConfig(alpha=2.0, grid=FrequencyGrid(k_max=20.0, step=0.01))
        with pytest.raises(ValueError):
            select_k(Sample(np.ones(10)), make_error("dirac"),
                     PenaltyConfig(chi=1.0, gamma=0), cfg)

    def test_median_ise_within_3x_oracle(self):
        # gamma5 x uniform01, n=2000, chi=0.8, 50 seeded replications
        tgt, g = make_target("gamma5"), make_error("uniform01")
        pc = PenaltyConfig(chi=0.8, gamma=1)
        xg = CFG.x_grid
        truth = tgt.pdf(xg)
        k_n = pc.k_n(2000)
        ks = np.arange(1, k_n + 1)
        adaptive, oracle = [], []
        for r in range(50):
            s = sample_noisy(tgt, g, 2000, np.random.default_rng(200 + r))
            rh = _noise_corrected_half(s, g, float(k_n), 0.01)
            curves = cutoff_curves_upto(rh, 0.01, ks, xg)
            ises = np.trapezoid((truth[None] - curves) ** 2 * xg[None], xg, axis=1)
            norms = cutoff_norms_upto(rh, 0.01, ks)
            adaptive.append(ises[int(np.argmin(-norms + pc.pen_at(ks, 2000)))])
            oracle.append(ises.min())
        assert np.median(adaptive) <= 3.0 * np.median(oracle)

    def test_gamma2_penalty_concentrates_on_small_k(self):
        # scaled_beta x Beta(1,2), chi=0.01: penalty k^5/n dominates quickly
        tgt, g = make_target("scaled_beta"), make_error("beta_1_k", 2)
        pc = PenaltyConfig(chi=0.01, gamma=2)
        khats = [select_k(sample_noisy(tgt, g, 2000, np.random.default_rng(300 + r)),
                          g, pc, CFG).k_hat for r in range(50)]
        assert np.mean(np.asarray(khats) <= 5) >= 0.9


class TestSelectionResult:
    def test_rejects_decreasing_norms(self):
        ks = np.arange(1, 4)
        with pytest.raises(ValueError):
            SelectionResult(k_hat=1, ks=ks,
                            omega_norm_sq=np.array([1.0, 0.5, 2.0]),
                            pen=np.zeros(3), contrast=np.zeros(3), k_n=3)

    def test_table_rows(self):
        sel = SelectionResult(k_hat=1, ks=np.array([1, 2]),
                              omega_norm_sq=np.array([0.1, 0.2]),
                              pen=np.array([0.01, 0.02]),
                              contrast=np.array([-0.09, -0.18]), k_n=2)
        rows = sel.table_rows()
        assert rows[1] == (2, 0.2, 0.02, -0.18)


class TestAdaptiveEstimate:
    def test_composition_and_threshold(self):
        tgt, g = make_target("gamma5"), make_error("dirac")
        s = tgt.sampler(np.random.default_rng(9), 1000)
        pc = PenaltyConfig(chi=1.2, gamma=0, k_cap=15)
        est, sel = adaptive_estimate(s, g, pc, CFG, with_threshold=True)
        assert est.k == pytest.approx(float(sel.k_hat))
        # dirac: C_g = 2, threshold 24/pi
        assert sel.chi_threshold == pytest.approx(24.0 / np.pi, rel=1e-6)

    def test_oracle_inequality_shape(self):
        # mean ISE <= 4 min_k(bias_tail + pen) + C/n with C <= 100, n=2000,
        # 100 seeded replications per pair
        n, reps = 2000, 100
        xg = CFG.x_grid
        worst_c = 0.0
        for tn in ("gamma5", "weibull2"):
            tgt = make_target(tn)
            truth = tgt.pdf(xg)
            mvf = analytic_mellin(tgt.mellin, FrequencyGrid(k_max=30.0, step=0.01))
            for en, kk in (("dirac", None), ("uniform01", None), ("beta_1_k", 2)):
                g = make_error(en) if kk is None else make_error(en, kk)
                pc = PenaltyConfig(chi=default_chi(g.gamma), gamma=g.gamma, k_cap=30)
                k_n = min(pc.k_n(n), 20)
                ks = np.arange(1, k_n + 1)
                pen = pc.pen_at(ks, n)
                acc = 0.0
                for r in range(reps):
                    s = sample_noisy(tgt, g, n, np.random.default_rng(400 + r))
                    rh = _noise_corrected_half(s, g, float(k_n), 0.01)
                    curves = cutoff_curves_upto(rh, 0.01, ks, xg)
                    ises = np.trapezoid((truth[None] - curves) ** 2 * xg[None],
                                        xg, axis=1)
                    norms = cutoff_norms_upto(rh, 0.01, ks)
                    acc += ises[int(np.argmin(-norms + pen))]
                mean_ise = acc / reps
                bound = 4.0 * min(bias_tail(mvf, float(k)) + pen[i]
                                  for i, k in enumerate(ks))
                c = max(0.0, n * (mean_ise - bound))
                worst_c = max(worst_c, c)
        assert worst_c <= 100.0


class TestCalibrateChi:
    def test_singleton_grid(self):
        assert calibrate_chi(make_error("dirac"), [0.7]) == 0.7

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            calibrate_chi(make_error("dirac"), [])

    def test_dirac_reproduces_grid_level_choice(self):
        cal = CalibrationConfig(n_histograms=30, reps=10, n=1000, seed=0)
        chi = calibrate_chi(make_error("dirac"), [0.3, 1.2, 4.8], cal)
        assert chi == 1.2
