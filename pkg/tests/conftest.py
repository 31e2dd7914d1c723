import numpy as np
import pytest

from mellin_deconv import EstimatorConfig, FrequencyGrid


@pytest.fixture
def small_cfg():
    """Default x-grid with a t-grid bounded at 20 (fast)."""
    return EstimatorConfig(grid=FrequencyGrid(k_max=20.0, step=0.01))


def brute_force_inversion(points: np.ndarray, k: float, x,
                          fine_step: float, g_mellin=None,
                          alpha: float = 1.0):
    """Independent trapezoid sum of the cut-off inversion on a finer t-grid.

    Recomputes the empirical transform from the raw points on the full
    (two-sided) t-grid without exploiting conjugate symmetry; shares no code
    with the production quadrature path.  `x` may be a scalar or an array.
    """
    m = int(round(k / fine_step))
    t = fine_step * np.arange(-m, m + 1)
    lnp = np.log(points)
    w = points ** (alpha - 1.0)
    vals = np.empty(t.size, dtype=complex)
    chunk = 256
    for lo in range(0, t.size, chunk):
        tc = t[lo:lo + chunk]
        vals[lo:lo + tc.size] = (np.exp(1j * tc[:, None] * lnp[None, :]) @ w) / points.size
    if g_mellin is not None:
        vals = vals / g_mellin(t)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    integrand = np.real(x_arr[None, :] ** (-alpha - 1j * t[:, None]) * vals[:, None])
    total = fine_step * (0.5 * integrand[0] + integrand[1:-1].sum(axis=0)
                         + 0.5 * integrand[-1])
    out = total / (2.0 * np.pi)
    return out[0] if np.ndim(x) == 0 else out


def quad_mellin(pdf, t: float, upper: float) -> complex:
    """Numeric quadrature of int x^(it) pdf(x) dx, independent of the library."""
    from scipy.integrate import quad
    re = quad(lambda x: np.cos(t * np.log(x)) * float(pdf(np.array([x]))[0]),
              0.0, upper, limit=400)[0]
    im = quad(lambda x: np.sin(t * np.log(x)) * float(pdf(np.array([x]))[0]),
              0.0, upper, limit=400)[0]
    return re + 1j * im
