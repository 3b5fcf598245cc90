"""Acceptance suite: eight criteria at their pinned tolerances.

Criteria 3 and 4 share one desk-scale run per family: ``dt = 1e-3/alpha``,
10 000 paths over ``100/alpha`` (so ``n_paths * horizon = 1e6/alpha``), every
100th step recorded. Each family costs about 80 s on one core.

A summary line per criterion is printed at the end of the pytest run.
"""

import math
import time

import numpy as np
import pytest

from windsde import specfun as sf
from windsde.analysis import Thresholds, fit_distribution, ks_distance, validate_ensemble
from windsde.builder import build, build_closed_form, build_quadrature, fpe_residual, interior_grid
from windsde.distributions import Normal, make
from windsde.simulator import SimulationConfig, simulate

from conftest import ALL_CASES, CASE_IDS, CASES, REPRESENTATIVE
import test_specfun

ALPHA = 0.5
DESK = dict(dt=1e-3 / ALPHA, horizon=100.0 / ALPHA, n_paths=10_000, record_every=100)
THRESHOLDS = Thresholds(ks=0.01, mean_rel=0.01, var_rel=0.03, acf_gap=0.03, acf_window=2.0)
FAMILIES = sorted(REPRESENTATIVE)

_reports = {}


def _desk_run(family, seed=2024):
    """Validation report of the desk-scale run for ``family`` (computed once)."""
    if family not in _reports:
        dist = make(family, **REPRESENTATIVE[family])
        model = build(dist, ALPHA)
        start = time.perf_counter()
        ens = simulate(model, SimulationConfig(seed=seed, **DESK))
        report = validate_ensemble(ens.values, ens.sample_interval, model, THRESHOLDS, fpe=False)
        _reports[family] = (report, time.perf_counter() - start)
    return _reports[family]


# -- 1 ------------------------------------------------------------------------


def test_ac1_closed_form_matches_quadrature():
    start = time.perf_counter()
    worst = {}
    for (fam, params), cid in zip(ALL_CASES, CASE_IDS):
        dist = make(fam, **params)
        closed, quad = build_closed_form(dist, ALPHA), build_quadrature(dist, ALPHA)
        x = interior_grid(dist, 200)
        b2 = closed.diffusion_squared(x)
        worst[cid] = float(np.max(np.abs(b2 - quad.diffusion_squared(x)) / (1.0 + b2)))
    elapsed = time.perf_counter() - start
    assert len({cid.rsplit("-", 1)[0] for cid in worst}) == 10
    assert all(len(v) == 3 for v in CASES.values())
    assert max(worst.values()) <= 1e-6, worst
    assert elapsed <= 60.0


# -- 2 ------------------------------------------------------------------------


@pytest.mark.parametrize("fam,params", ALL_CASES, ids=CASE_IDS)
def test_ac2_fpe_residual(fam, params):
    model = build(make(fam, **params), ALPHA)
    res = fpe_residual(model)
    assert res.scaled_max <= 1e-4
    assert res.tails_ok
    bad = fpe_residual(model.with_diffusion_scale(1.1))
    assert bad.scaled_max > 1e-4 and not bad.passed


# -- 3 and 4 ------------------------------------------------------------------


def test_ac3_ks_threshold_calibration():
    """The OU case has exact theory; its KS distance sets the scale of the threshold."""
    report, _ = _desk_run("normal")
    # serial correlation inflates KS over the iid 1.36/sqrt(n); the OU run
    # must leave clear room under the threshold used for every other family
    assert report.ks_distance <= 0.5 * THRESHOLDS.ks


@pytest.mark.parametrize("fam", FAMILIES)
def test_ac3_distribution(fam):
    report, elapsed = _desk_run(fam)
    assert report.ks_distance <= THRESHOLDS.ks
    assert report.pass_flags["mean"], (report.empirical_mean, report.target_mean)
    assert report.pass_flags["variance"], (report.empirical_var, report.target_var)
    assert elapsed <= 300.0


@pytest.mark.parametrize("fam", FAMILIES)
def test_ac4_autocorrelation(fam):
    report, _ = _desk_run(fam)
    tau = np.array([t for t, _ in report.acf])
    assert tau[-1] == pytest.approx(2.0 / ALPHA)
    assert report.acf_gap <= 0.03


# -- 5 ------------------------------------------------------------------------


def test_ac5_mean_relaxation():
    mu, sigma, alpha = 5.0, 2.0, 1.0
    x0 = mu + 3 * sigma
    model = build(Normal(mu, sigma), alpha)
    cfg = SimulationConfig(dt=1e-3, horizon=4.0, n_paths=10_000, seed=5, init_policy="fixed", x0=x0, record_every=50)
    ens = simulate(model, cfg)
    for t in (0.25, 0.5, 1.0, 2.0, 4.0):
        col = ens.values[:, int(round(t / ens.sample_interval))]
        se = col.std(ddof=1) / math.sqrt(col.size)
        assert abs(col.mean() - (mu + (x0 - mu) * math.exp(-alpha * t))) <= 3 * se, t


# -- 6 ------------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(test_specfun.CONTRACT))
def test_ac6_golden_values(name):
    test_specfun.test_golden_values(name)


def test_ac6_scaled_functions_finite_to_700():
    u = np.linspace(0.0, 700.0, 701)
    assert np.all(np.isfinite(sf.erfcx(u)))
    for a in (0.1, 0.5, 1.5, 3.0, 20.0):
        assert np.all(np.isfinite(sf.scaled_upper_gamma(a, u)))


# -- 7 ------------------------------------------------------------------------

ROUND_TRIP = {
    "normal": dict(mu=7.0, sigma=2.0),
    "gamma2": dict(shape=2.0, scale=3.0),
    "weibull2": dict(shape=2.0, scale=8.0),
    "rayleigh1": dict(scale=5.0),
}


@pytest.mark.parametrize("fam", sorted(ROUND_TRIP))
def test_ac7_round_trip(fam):
    truth = make(fam, **ROUND_TRIP[fam])
    model = build(truth, ALPHA)
    cfg = SimulationConfig(dt=1e-3 / ALPHA, horizon=200.0 / ALPHA, n_paths=200, seed=7, record_every=10)
    ens = simulate(model, cfg)
    result = fit_distribution(ens.values, fam, dt=ens.sample_interval)
    for name, value in truth.params.items():
        assert result.spec.params[name] == pytest.approx(value, rel=0.05), name
    assert result.alpha_hat == pytest.approx(ALPHA, rel=0.05)
    rebuilt = build(result.spec, result.alpha_hat)
    assert ks_distance(ens.values, rebuilt.distribution) <= 0.01


# -- 8 ------------------------------------------------------------------------


def test_ac8_determinism(tmp_path):
    model = build(make("weibull2", shape=2, scale=8), ALPHA)
    cfg = SimulationConfig(dt=1e-3 / ALPHA, horizon=5.0 / ALPHA, n_paths=64, seed=123456789, record_every=10)
    blobs = {}
    for threads in (1, 8):
        ens = simulate(model, cfg, threads=threads)
        for fmt in ("csv", "bin"):
            path = tmp_path / f"t{threads}.{fmt}"
            ens.save(path, fmt)
            blobs[threads, fmt] = path.read_bytes()
    assert blobs[1, "csv"] == blobs[8, "csv"]
    assert blobs[1, "bin"] == blobs[8, "bin"]
