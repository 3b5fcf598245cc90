"""Validation of simulated ensembles and calibration from measured series.

Series may be one-dimensional or two-dimensional ``(n_paths, n_samples)``;
in the latter case statistics are pooled across paths, each path being a
separate realization sampled on the same uniform time grid.
"""

from dataclasses import asdict, dataclass, field
import csv
import json
import math
import os

import numpy as np
from scipy import optimize, special

from . import distributions as dists
from .builder import fpe_residual
from .distributions import SpecError, quadrature_moments

__all__ = [
    "AnalysisError",
    "AcfError",
    "FitError",
    "Thresholds",
    "CalibrationResult",
    "ValidationReport",
    "empirical_acf",
    "fit_alpha",
    "ks_distance",
    "fit_distribution",
    "validate_ensemble",
    "write_plot_data",
]


class AnalysisError(ValueError):
    """Input does not satisfy a precondition of the analysis."""


class AcfError(AnalysisError):
    """Degenerate series or a nonpositive autocorrelation in the fit window."""


class FitError(AnalysisError):
    """A moment equation could not be inverted."""


def _as_paths(series):
    x = np.asarray(series, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.size == 0:
        raise AnalysisError("series must be a nonempty 1-D or 2-D array")
    if not np.all(np.isfinite(x)):
        raise AnalysisError("series contains non-finite values")
    return x


def empirical_acf(series, max_lag):
    """Biased autocorrelation estimate at lags ``0..max_lag`` (in samples).

    ``r(k) = sum (x_i - m)(x_{i+k} - m) / sum (x_i - m)**2`` with ``m`` the
    grand mean; sums run over every path. ``r(0)`` is exactly 1.

    Raises
    ------
    AnalysisError
        If the paths are shorter than ``10 * max_lag``.
    AcfError
        If the series has zero variance.
    """
    x = _as_paths(series)
    max_lag = int(max_lag)
    if max_lag < 0:
        raise AnalysisError("max_lag must be >= 0")
    n = x.shape[1]
    if n < 10 * max_lag:
        raise AnalysisError(f"series length {n} is shorter than 10*max_lag = {10 * max_lag}")
    d = x - x.mean()
    c0 = float(np.sum(d * d))
    if not c0 > 0:
        raise AcfError("degenerate series: zero sample variance")
    if max_lag <= 64:
        c = np.array([c0] + [float(np.sum(d[:, :-k] * d[:, k:])) for k in range(1, max_lag + 1)])
    else:
        size = 1 << int(math.ceil(math.log2(2 * n)))
        c = np.zeros(max_lag + 1)
        for start in range(0, d.shape[0], 256):
            f = np.fft.rfft(d[start:start + 256], size, axis=1)
            c += np.fft.irfft(f * f.conj(), size, axis=1)[:, :max_lag + 1].sum(axis=0)
        c[0] = c0
    return c / c0


def fit_alpha(acf, dt=1.0, lag_window=None):
    """Decay rate from a least-squares line through ``-ln r(tau)``.

    Parameters
    ----------
    acf : array_like
        ``r`` at lags ``0, dt, 2 dt, ...``.
    dt : float
        Lag spacing in time units.
    lag_window : (float, float), optional
        Lags used, in time units. Defaults to ``[0, 1/alpha0]`` with
        ``alpha0 = -ln r(dt) / dt`` (at least two lags are always used).

    Returns
    -------
    float
        Fitted slope, the decay rate in 1/time units.
    """
    r = np.asarray(acf, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise AnalysisError("need the ACF at two or more lags")
    tau = np.arange(r.size) * float(dt)
    if lag_window is None:
        if not r[1] > 0:
            raise AcfError("ACF is nonpositive at the first lag")
        alpha0 = -math.log(r[1]) / dt
        hi = 1.0 / alpha0 if alpha0 > 0 else tau[-1]
        lag_window = (0.0, max(hi, tau[1]))
    lo, hi = lag_window
    sel = (tau >= lo - 1e-12 * dt) & (tau <= hi + 1e-12 * dt)
    if sel.sum() < 2:
        raise AnalysisError("fewer than two lags inside the fit window")
    rw = r[sel]
    if np.any(rw <= 0):
        raise AcfError(f"ACF is nonpositive inside the fit window [{lo:g}, {hi:g}]")
    slope, _ = np.polyfit(tau[sel], -np.log(rw), 1)
    if not slope > 0:
        raise AcfError("fitted decay rate is not positive")
    return float(slope)


def ks_distance(series, dist):
    """Kolmogorov-Smirnov statistic ``sup |F_n(x) - F(x)|``."""
    x = np.sort(np.asarray(series, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise AnalysisError("empty series")
    cdf = np.asarray(dist.cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n), 0.0))


# ---------------------------------------------------------------------------
# method-of-moments fits


def _moments(x):
    m = float(np.mean(x))
    v = float(np.var(x))
    if not v > 0:
        raise FitError("zero sample variance")
    skew = float(np.mean((x - m) ** 3) / v**1.5)
    return m, v, skew


def _positive_mean(m, family):
    if not m > 0:
        raise FitError(f"{family} needs a positive sample mean, got {m:g}")


def _root(f, lo, hi, what):
    try:
        flo, fhi = f(lo), f(hi)
    except (ValueError, FloatingPointError) as exc:
        raise FitError(f"{what}: {exc}") from None
    if not np.sign(flo) * np.sign(fhi) < 0:
        raise FitError(f"{what}: no sign change on bracket [{lo:g}, {hi:g}] (f = {flo:.3g}, {fhi:.3g})")
    return optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=500)


def _fit_normal(x):
    return dists.Normal(mu=float(np.mean(x)), sigma=float(np.std(x)))


def _fit_gram_charlier(x):
    _, _, skew = _moments(x)
    # project onto the admissible range; near the limit sampling noise alone can cross it
    limit = dists.GramCharlier3.max_skew()
    return dists.GramCharlier3(skew=min(max(skew, -limit), limit))


def _fit_beta(x):
    m, v, skew = _moments(x)
    _positive_mean(m, "beta3")

    def beta_skew(c):
        mc, vc = m / c, v / (c * c)
        common = mc * (1.0 - mc) / vc - 1.0
        a, b = mc * common, (1.0 - mc) * common
        return 2.0 * (b - a) * math.sqrt(a + b + 1.0) / ((a + b + 2.0) * math.sqrt(a * b))

    c_min = (m + v / m) * (1.0 + 1e-9)
    c = _root(lambda c: beta_skew(c) - skew, c_min, 1e6 * (m + math.sqrt(v)), "beta3 upper bound from skewness")
    mc, vc = m / c, v / (c * c)
    common = mc * (1.0 - mc) / vc - 1.0
    return dists.Beta3(shape1=mc * common, shape2=(1.0 - mc) * common, upper=c)


def _fit_gamma(x):
    m, v, _ = _moments(x)
    _positive_mean(m, "gamma2")
    return dists.Gamma2(shape=m * m / v, scale=v / m)


def _fit_gen_gamma(x):
    m, v, skew = _moments(x)
    _positive_mean(m, "gen_gamma3")
    cv = math.sqrt(v) / m

    def shape_moments(la, lp):
        # standardized moments depend on (shape, power) only
        g = [special.gammaln(la + r / lp) - special.gammaln(la) for r in (1, 2, 3)]
        m1, m2, m3 = (np.exp(gi) for gi in g)
        var = m2 - m1 * m1
        if not var > 0:
            return math.nan, math.nan
        return math.sqrt(var) / m1, (m3 - 3 * m1 * var - m1**3) / var**1.5

    def resid(p):
        la, lp = np.exp(p)
        c, s = shape_moments(la, lp)
        if not (math.isfinite(c) and math.isfinite(s)):
            return [1e6, 1e6]
        return [c / cv - 1.0, s - skew]

    start = np.log([1.0 / (cv * cv), 1.0])
    with np.errstate(all="ignore"):
        sol, info, ok, msg = optimize.fsolve(resid, start, full_output=True, xtol=1e-12)
    if ok != 1 or np.max(np.abs(info["fvec"])) > 1e-8:
        raise FitError(f"gen_gamma3 moment equations did not converge from {np.exp(start)}: {msg}")
    la, lp = (float(v) for v in np.exp(sol))
    scale = m * math.exp(special.gammaln(la) - special.gammaln(la + 1.0 / lp))
    return dists.GenGamma3(shape=la, scale=scale, power=lp)


def _fit_inv_gaussian(x):
    m, v, _ = _moments(x)
    _positive_mean(m, "inv_gaussian2")
    return dists.InvGaussian2(mu=m, scale=m**3 / v)


def _fit_lognormal(x):
    m, v, _ = _moments(x)
    _positive_mean(m, "lognormal2")
    s2 = math.log1p(v / (m * m))
    return dists.Lognormal2(log_mean=math.log(m) - 0.5 * s2, log_std=math.sqrt(s2))


def _fit_rayleigh(x):
    m = float(np.mean(x))
    _positive_mean(m, "rayleigh1")
    return dists.Rayleigh1(scale=m / math.sqrt(0.5 * math.pi))


def _fit_trunc_normal(x):
    m, v, _ = _moments(x)
    _positive_mean(m, "trunc_normal2")
    cv = math.sqrt(v) / m

    def hazard(c):
        return math.sqrt(2.0 / math.pi) / special.erfcx(-c / math.sqrt(2.0))

    def tn_cv(c):
        h = hazard(c)
        return math.sqrt(max(1.0 - c * h - h * h, 0.0)) / (c + h)

    c = _root(lambda c: tn_cv(c) - cv, -30.0, 1e4, "trunc_normal2 standardized location from CV")
    scale = float(m / (c + hazard(c)))
    return dists.TruncNormal2(loc=float(c) * scale, scale=scale)


def _fit_weibull(x):
    m, v, _ = _moments(x)
    _positive_mean(m, "weibull2")
    cv = math.sqrt(v) / m

    def wb_cv(k):
        g1 = special.gammaln(1.0 + 1.0 / k)
        return math.sqrt(math.expm1(special.gammaln(1.0 + 2.0 / k) - 2.0 * g1))

    k = _root(lambda k: wb_cv(k) - cv, 0.05, 500.0, "weibull2 shape from CV")
    return dists.Weibull2(shape=k, scale=m / math.exp(special.gammaln(1.0 + 1.0 / k)))


_FITTERS = {
    "normal": _fit_normal,
    "gram_charlier3": _fit_gram_charlier,
    "beta3": _fit_beta,
    "gamma2": _fit_gamma,
    "gen_gamma3": _fit_gen_gamma,
    "inv_gaussian2": _fit_inv_gaussian,
    "lognormal2": _fit_lognormal,
    "rayleigh1": _fit_rayleigh,
    "trunc_normal2": _fit_trunc_normal,
    "weibull2": _fit_weibull,
}


@dataclass
class CalibrationResult:
    """Fitted law, decay rate and per-family goodness of fit (KS distance)."""

    spec: object
    alpha_hat: float | None
    goodness: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "alpha_hat": self.alpha_hat,
            "goodness": self.goodness,
        }


def _alpha_from_paths(paths, dt):
    n = paths.shape[1]
    r1 = empirical_acf(paths, 1)[1]
    if not r1 > 0:
        raise AcfError("ACF is nonpositive at the first lag")
    # enough lags to cover the default window, within the 10x length rule
    want = int(math.ceil(1.0 / (-math.log(r1)))) + 1 if r1 < 1 else n // 10
    max_lag = max(1, min(want, n // 10))
    return fit_alpha(empirical_acf(paths, max_lag), dt)


def fit_distribution(series, family, dt=None):
    """Method-of-moments fit of ``family`` (or ``"auto"``) plus the decay rate.

    Parameters
    ----------
    series : array_like
        One series or ``(n_paths, n_samples)`` realizations; at least 1000
        values in total.
    family : str
        Catalog family name, or ``"auto"`` to fit every family and keep the
        one with the smallest KS distance.
    dt : float, optional
        Sampling interval. ``alpha_hat`` is ``None`` without it.
    """
    paths = _as_paths(series)
    x = paths.ravel()
    if x.size < 1000:
        raise AnalysisError(f"need at least 1000 samples to fit, got {x.size}")
    if family == "auto":
        goodness, fitted = {}, {}
        for name, fitter in _FITTERS.items():
            try:
                fitted[name] = fitter(x)
            except (FitError, SpecError):
                continue
            goodness[name] = ks_distance(x, fitted[name])
        if not goodness:
            raise FitError("no family could be fitted")
        best = min(goodness, key=goodness.get)
        spec = fitted[best]
    else:
        if family not in _FITTERS:
            raise FitError(f"cannot fit family {family!r}; choose from {sorted(_FITTERS)} or 'auto'")
        spec = _FITTERS[family](x)
        goodness = {family: ks_distance(x, spec)}
    alpha_hat = _alpha_from_paths(paths, float(dt)) if dt is not None else None
    return CalibrationResult(spec, alpha_hat, goodness)


# ---------------------------------------------------------------------------
# ensemble validation


@dataclass(frozen=True)
class Thresholds:
    """Pass/fail limits used by :func:`validate_ensemble`."""

    ks: float = 0.01
    mean_rel: float = 0.01
    var_rel: float = 0.03
    acf_gap: float = 0.03
    acf_window: float = 2.0  # in units of 1/alpha


@dataclass
class ValidationReport:
    empirical_mean: float
    empirical_var: float
    target_mean: float
    target_var: float
    ks_distance: float
    acf: list
    acf_gap: float
    fitted_alpha: float | None
    alpha: float
    fpe_residual_summary: dict
    pass_flags: dict

    @property
    def passed(self):
        return all(self.pass_flags.values())

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return out

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def validate_ensemble(values, sample_interval, model, thresholds=Thresholds(), fpe=True):
    """Compare an ensemble with the model's stationary law and ACF.

    The mean passes if within ``mean_rel`` of ``max(|mean|, std)`` (so that
    zero-mean laws get a meaningful tolerance), the variance if within
    ``var_rel`` relative, the ACF if ``sup |r(tau) - exp(-alpha tau)|`` over
    ``tau <= acf_window / alpha`` is at most ``acf_gap``.

    Raises
    ------
    AnalysisError
        If the paths are too short for the ACF window (fewer than ten
        windows per path).
    """
    paths = _as_paths(values)
    dist = model.distribution
    alpha = model.alpha
    max_lag = int(math.ceil(thresholds.acf_window / (alpha * sample_interval) - 1e-9))
    if paths.shape[1] < 10 * max(max_lag, 1):
        raise AnalysisError(
            f"ensemble too short: {paths.shape[1]} samples per path, need {10 * max(max_lag, 1)} "
            f"for an ACF window of {thresholds.acf_window}/alpha"
        )
    x = paths.ravel()
    _, t_mean, t_var = quadrature_moments(dist)
    e_mean, e_var = float(np.mean(x)), float(np.var(x))
    ks = ks_distance(x, dist)
    r = empirical_acf(paths, max_lag)
    tau = np.arange(max_lag + 1) * sample_interval
    gap = float(np.max(np.abs(r - np.exp(-alpha * tau))))
    try:
        fitted = fit_alpha(r, sample_interval)
    except AnalysisError:
        fitted = None
    flags = {
        "ks": ks <= thresholds.ks,
        "mean": abs(e_mean - t_mean) <= thresholds.mean_rel * max(abs(t_mean), math.sqrt(t_var)),
        "variance": abs(e_var - t_var) <= thresholds.var_rel * t_var,
        "acf": gap <= thresholds.acf_gap,
    }
    summary = {}
    if fpe:
        res = fpe_residual(model)
        summary = res.to_dict()
        flags["fpe_residual"] = res.passed
    return ValidationReport(
        empirical_mean=e_mean,
        empirical_var=e_var,
        target_mean=t_mean,
        target_var=t_var,
        ks_distance=ks,
        acf=[[float(t), float(v)] for t, v in zip(tau, r)],
        acf_gap=gap,
        fitted_alpha=fitted,
        alpha=alpha,
        fpe_residual_summary=summary,
        pass_flags=flags,
    )


def write_plot_data(report, values, model, prefix, bins=200):
    """Write ``<prefix>_acf.csv`` and ``<prefix>_density.csv`` for plotting.

    Returns the two paths.
    """
    acf_path, dens_path = f"{prefix}_acf.csv", f"{prefix}_density.csv"
    os.makedirs(os.path.dirname(os.path.abspath(acf_path)), exist_ok=True)
    with open(acf_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "acf", "target"])
        for tau, r in report.acf:
            w.writerow([repr(tau), repr(r), repr(math.exp(-report.alpha * tau))])
    x = np.asarray(values, dtype=float).ravel()
    hist, edges = np.histogram(x, bins=bins, density=True)
    mids = 0.5 * (edges[:-1] + edges[1:])
    pdf = model.distribution.pdf(mids)
    with open(dens_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "empirical_density", "target_pdf"])
        for row in zip(mids, hist, pdf):
            w.writerow([repr(float(v)) for v in row])
    return acf_path, dens_path
