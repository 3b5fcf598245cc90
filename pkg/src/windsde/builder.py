"""Construction of stationary SDE models ``dx = a(x) dt + b(x) dW``.

The drift is always the linear mean reversion ``a(x) = -alpha (x - mu)``
with ``mu`` the mean of the target density ``p``. The diffusion follows from
the zero-flux stationary Fokker-Planck balance,

    b(x)**2 = 2 I(x) / p(x),   I(x) = int_{lower}^{x} -alpha (z - mu) p(z) dz,

and is zero wherever ``p`` is. Two routes are provided:

* :func:`build_closed_form` evaluates the analytic ``b`` of each catalog
  family, rewritten so that no intermediate ``exp(.) * erfc(.)`` or
  ``exp(.) * Gamma(., .)`` product overflows.
* :func:`build_quadrature` integrates ``I(x)`` numerically and works for any
  density, including tabulated ones. It doubles as the oracle for the
  closed forms.
"""

from dataclasses import dataclass, field
import hashlib
import json
import math

import numpy as np
from scipy import integrate

from . import specfun
from .distributions import (
    Beta3,
    Distribution,
    Gamma2,
    GenGamma3,
    GramCharlier3,
    InvGaussian2,
    Lognormal2,
    Normal,
    Rayleigh1,
    Tabulated,
    TruncNormal2,
    Weibull2,
)

__all__ = [
    "BuildError",
    "SdeModel",
    "FpeResidual",
    "drift",
    "build_closed_form",
    "build_quadrature",
    "build",
    "fpe_residual",
    "oracle_max_error",
    "interior_grid",
    "model_card",
    "model_from_card",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_SQRTPI = math.sqrt(math.pi)

# 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1] (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1::2] = np.concatenate([_WG[:-1], _WG[::-1]])


class BuildError(ValueError):
    """The requested model cannot be built (bad inputs or negative radicand)."""


@dataclass(frozen=True, eq=False)
class SdeModel:
    """Stationary SDE with linear drift and a density-matched diffusion.

    Attributes
    ----------
    distribution : Distribution
        Target stationary law.
    alpha : float
        Autocorrelation decay rate (1/time).
    mu : float
        Stationary mean, the drift's reversion level.
    source : str
        ``"closed_form"`` or ``"quadrature"``.
    """

    distribution: Distribution
    alpha: float
    mu: float
    source: str
    _b2: object = field(repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def support(self):
        return self.distribution.support

    def drift(self, x):
        return -self.alpha * (np.asarray(x, dtype=float) - self.mu)

    def diffusion_squared(self, x):
        x = np.asarray(x, dtype=float)
        sup = self.distribution.support
        inside = (x > sup.lower) & (x < sup.upper)
        out = np.zeros(x.shape)
        if np.any(inside):
            out[inside] = np.maximum(self._b2(x[inside]), 0.0)
        return out[()] if out.ndim == 0 else out

    def diffusion(self, x):
        return np.sqrt(self.diffusion_squared(x))

    def with_diffusion_scale(self, factor):
        """Copy whose diffusion is multiplied by ``factor`` (for negative controls)."""
        b2 = self._b2
        return SdeModel(self.distribution, self.alpha, self.mu, self.source + f"*{factor:g}", lambda x: factor**2 * b2(x))

    def card(self):
        spec = self.distribution.to_dict()
        sup = self.distribution.support
        return {
            "family": spec["family"],
            "params": spec.get("params", {}),
            **({"grid": spec["grid"]} if "grid" in spec else {}),
            "alpha": self.alpha,
            "mu": self.mu,
            "support": [_json_float(sup.lower), _json_float(sup.upper)],
            "source": self.source,
            "diagnostics": self.diagnostics,
        }

    @property
    def hash(self):
        core = {k: v for k, v in self.card().items() if k != "diagnostics"}
        blob = json.dumps(core, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _json_float(v):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def drift(model, x):
    """Linear drift ``-alpha (x - mu)``."""
    return model.drift(x)


# ---------------------------------------------------------------------------
# closed forms


def _b2_normal(d, alpha):
    value = 2.0 * alpha * d.sigma**2
    return lambda x: np.full(np.shape(x), value)


def _b2_gram_charlier(d, alpha):
    s = d.skew

    def b2(x):
        num = 2.0 * alpha * (s * x**3 + 6.0)
        den = s * x * (x * x - 3.0) + 6.0
        # zero where the density or the flux integral vanishes or turns negative
        ok = (den > 0) & (num > 0)
        return np.where(ok, num / np.where(ok, den, 1.0), 0.0)

    return b2


def _b2_beta(d, alpha):
    c, k = d.upper, 2.0 * alpha / (d.shape1 + d.shape2)
    return lambda x: k * (c - x) * x


def _b2_gamma(d, alpha):
    k = 2.0 * alpha * d.scale
    return lambda x: k * x


def _b2_gen_gamma(d, alpha):
    a, s, p = d.shape, d.scale, d.power
    a2 = a + 1.0 / p
    ga, ga2 = float(specfun.gamma(a)), float(specfun.gamma(a2))
    pref = 2.0 * alpha * s * s / (p * ga)
    switch = a2 + 1.0

    def b2(x):
        u = (x / s) ** p
        out = np.empty_like(u)
        low = u < switch
        if np.any(low):
            ul = u[low]
            # series form: w [G(a2) L(a, u) - G(a) w L(a2, u)] with w = u**(1/p) = x/s
            w = x[low] / s
            out[low] = pref * w * (ga2 * specfun.scaled_lower_gamma(a, ul) - ga * w * specfun.scaled_lower_gamma(a2, ul))
        high = ~low
        if np.any(high):
            uh = u[high]
            bracket = ga * specfun.scaled_upper_gamma(a2, uh) - ga2 * specfun.scaled_upper_gamma(a, uh)
            out[high] = pref * uh ** (1.0 / p - a) * bracket
        return out

    return b2


def _b2_inv_gaussian(d, alpha):
    m, lam = d.mu, d.scale
    k = 2.0 * _SQRT2PI * alpha * m / math.sqrt(lam)

    def b2(x):
        # exp(lam (x+m)^2 / (2 m^2 x)) erfc(w) == erfcx(w)
        w = np.sqrt(lam / x) * (x + m) / (_SQRT2 * m)
        return k * x**1.5 * specfun.erfcx(w)

    return b2


def _b2_lognormal(d, alpha):
    m, s = d.log_mean, d.log_std
    k = _SQRT2PI * alpha * s
    em = math.exp(m + 0.5 * s * s)

    def b2(x):
        lx = np.log(x)
        a = (m + s * s - lx) / (_SQRT2 * s)
        c = (m - lx) / (_SQRT2 * s)
        out = np.empty_like(x)
        lower = c >= 0
        upper = a <= 0
        mid = ~(lower | upper)
        if np.any(lower):
            xl = x[lower]
            out[lower] = k * xl * (em * specfun.erfcx(c[lower]) - xl * specfun.erfcx(a[lower]))
        if np.any(upper):
            xu = x[upper]
            out[upper] = k * xu * (xu * specfun.erfcx(-a[upper]) - em * specfun.erfcx(-c[upper]))
        if np.any(mid):
            xm, cm = x[mid], c[mid]
            out[mid] = k * xm * em * np.exp(cm * cm) * (specfun.erf(a[mid]) - specfun.erf(cm))
        return out

    return b2


def _b2_rayleigh(d, alpha):
    lam = d.scale

    def b2(x):
        t = x / (_SQRT2 * lam)
        small = t <= 0.5
        bracket = np.empty_like(x)
        # 2x - sqrt(2 pi) lam cancels the linear term of erfcx(t) - 1 exactly
        ts = t[small]
        # divided by x already: t**2 / x == t / (sqrt(2) lam)
        bracket[small] = _SQRT2PI * lam * ts / (_SQRT2 * lam) * specfun.erfcx_minus_one_series(ts, over_t2=True)
        xl, tl = x[~small], t[~small]
        bracket[~small] = (2.0 * xl + _SQRT2PI * lam * (specfun.erfcx(tl) - 1.0)) / xl
        return alpha * lam * lam * bracket

    return b2


def _b2_trunc_normal(d, alpha):
    m, s = d.loc, d.scale
    c0 = m / (_SQRT2 * s)
    k = 2.0 * alpha * s * s
    mean = float(d.mean)
    # Taylor coefficients of b^2 at the origin, where 1 - ratio cancels
    slope = 2.0 * alpha * mean
    curv = -alpha * (1.0 + mean * m / (s * s))

    def b2(x):
        return np.where(x < 1e-5 * s, (slope + curv * x) * x, _direct(x))

    def _direct(x):
        z = (x - m) / (_SQRT2 * s)
        if c0 < 0:
            # z > 0 on the whole support; exp(-c0^2)/erfc(-c0) == 1/erfcx(-c0)
            ratio = specfun.erfcx(z) / specfun.erfcx(-c0)
        else:
            # exp(-c0^2) erfcx(z), using erfcx(z) = 2 exp(z^2) - erfcx(-z) for z < 0
            scaled = np.where(
                z >= 0,
                math.exp(-c0 * c0) * specfun.erfcx(np.abs(z)),
                2.0 * np.exp((z - c0) * (z + c0)) - math.exp(-c0 * c0) * specfun.erfcx(np.abs(z)),
            )
            ratio = scaled / specfun.erfc(-c0)
        return k * (1.0 - ratio)

    return b2


def _b2_weibull(d, alpha):
    k, s = d.shape, d.scale
    inv = 1.0 / k
    g_inv = float(specfun.gamma(inv))
    g1 = float(specfun.gamma(1.0 + inv))
    switch = 2.0 + inv

    def b2(x):
        u = (x / s) ** k
        out = np.empty_like(u)
        low = u < switch
        if np.any(low):
            ul, xl = u[low], x[low]
            # k e^u G(1+1/k, u) - G(1/k) == k u [G(1+1/k) expm1(u)/u - (x/s) L(1+1/k, u)]
            growth = np.where(ul > 0, np.expm1(ul) / np.where(ul > 0, ul, 1.0), 1.0)
            out[low] = 2.0 * alpha * s / k * xl * (g1 * growth - xl / s * specfun.scaled_lower_gamma(1.0 + inv, ul))
        high = ~low
        if np.any(high):
            uh, xh = u[high], x[high]
            out[high] = 2.0 * alpha * s / (k * k) * xh / uh * (k * specfun.scaled_upper_gamma(1.0 + inv, uh) - g_inv)
        return out

    return b2


_CLOSED_FORMS = {
    Normal: _b2_normal,
    GramCharlier3: _b2_gram_charlier,
    Beta3: _b2_beta,
    Gamma2: _b2_gamma,
    GenGamma3: _b2_gen_gamma,
    InvGaussian2: _b2_inv_gaussian,
    Lognormal2: _b2_lognormal,
    Rayleigh1: _b2_rayleigh,
    TruncNormal2: _b2_trunc_normal,
    Weibull2: _b2_weibull,
}


def _check_alpha(alpha):
    if not (isinstance(alpha, (int, float, np.floating, np.integer)) and math.isfinite(alpha) and alpha > 0):
        raise BuildError(f"alpha must be a finite number > 0, got {alpha!r}")
    return float(alpha)


def build_closed_form(dist, alpha):
    """Model whose diffusion is the family's analytic expression."""
    alpha = _check_alpha(alpha)
    try:
        factory = _CLOSED_FORMS[type(dist)]
    except KeyError:
        raise BuildError(
            f"no closed-form diffusion for family {dist.family!r}; use build_quadrature"
        ) from None
    return SdeModel(dist, alpha, float(dist.mean), "closed_form", factory(dist, alpha))


# ---------------------------------------------------------------------------
# quadrature route


def _panel(f, a, b):
    """Kronrod and Gauss estimates of ``int_a^b f`` for arrays of panels."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    z = mid[:, None] + half[:, None] * KRONROD_NODES[None, :]
    fz = f(z.ravel()).reshape(z.shape)
    kron = half * (fz @ KRONROD_WEIGHTS)
    gauss = half * (fz @ GAUSS_WEIGHTS)
    return kron, gauss


def _adaptive_panels(f, nodes, atol, rtol, max_depth=40):
    """Bisect panels until the Kronrod-Gauss difference meets the tolerance."""
    a, b = nodes[:-1].astype(float), nodes[1:].astype(float)
    done_a, done_b, done_v = [], [], []
    depth = 0
    while a.size:
        kron, gauss = _panel(f, a, b)
        err = np.abs(kron - gauss)
        ok = (err <= atol) & (err <= rtol * np.abs(kron) + 1e-300)
        if depth >= max_depth:
            ok[:] = True
        done_a.append(a[ok])
        done_b.append(b[ok])
        done_v.append(kron[ok])
        a, b = a[~ok], b[~ok]
        mid = 0.5 * (a + b)
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
        depth += 1
    a = np.concatenate(done_a)
    order = np.argsort(a)
    return a[order], np.concatenate(done_b)[order], np.concatenate(done_v)[order]


def _tail_integral(f, lo, hi):
    if not hi > lo:
        return 0.0
    value, _ = integrate.quad(f, lo, hi, epsabs=1e-300, epsrel=1e-13, limit=500)
    return value


class _FluxIntegral:
    """Evaluates ``I(x)`` anchored at the nearest adaptive node.

    Below the mean, ``I`` is accumulated upward from the lower support
    bound; above it, ``I`` is accumulated downward from the upper bound, so
    neither tail suffers cancellation between positive and negative flux.
    """

    def __init__(self, dist, alpha, grid_size, q_clip=1e-9, atol=1e-9, rtol=1e-10):
        self.dist = dist
        self.alpha = alpha
        self.mu = float(dist.mean)
        density = dist.signed_pdf
        mu = self.mu
        self.flux = lambda z: -alpha * (z - mu) * density(z)
        sup = dist.support
        lo, hi = (float(v) for v in dist.ppf([q_clip, 1.0 - q_clip]))
        base = np.linspace(lo, hi, grid_size)
        if isinstance(dist, Tabulated):
            inner = dist.nodes
            base = np.union1d(base, inner[(inner > lo) & (inner < hi)])
        a, b, vals = _adaptive_panels(self.flux, base, atol, rtol)
        self.nodes = np.concatenate([a, b[-1:]])
        scalar_flux = lambda z: float(self.flux(np.asarray(z)))
        tail_lo = _tail_integral(scalar_flux, sup.lower, lo)
        tail_hi = -_tail_integral(scalar_flux, hi, sup.upper)
        # from_below[k] = int_{lower}^{node_k} flux, from_above[k] = -int_{node_k}^{upper} flux
        self.from_below = tail_lo + np.concatenate([[0.0], np.cumsum(vals)])
        self.from_above = tail_hi - np.concatenate([np.cumsum(vals[::-1])[::-1], [0.0]])
        self.panels = len(vals)

    def node_values(self):
        return np.where(self.nodes <= self.mu, self.from_below, self.from_above)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        nodes = self.nodes
        k = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, len(nodes) - 2)
        below = x <= self.mu
        out = np.empty_like(x)
        if np.any(below):
            xb, kb = x[below], k[below]
            kron, _ = _panel(self.flux, nodes[kb], xb)
            out[below] = self.from_below[kb] + kron
        above = ~below
        if np.any(above):
            xa, ka = x[above], k[above] + 1
            kron, _ = _panel(self.flux, xa, nodes[ka])
            out[above] = self.from_above[ka] - kron
        return out


def build_quadrature(dist, alpha, grid_size=256):
    """Model whose diffusion comes from numerically integrating the flux.

    The node grid spans the central ``1 - 2e-9`` of probability mass and is
    refined adaptively; the two outer tails are added by ``scipy`` adaptive
    quadrature. Between nodes ``I(x)`` is the node value plus a 15-point
    Kronrod integral over the remaining sub-interval.

    Outside the node grid the diffusion is extrapolated: scaled by
    ``sqrt(distance to bound / distance of outermost node)`` toward a finite
    support bound (the vanishing rate of the gamma case), held constant
    toward an infinite one. This is a heuristic that only affects the
    outermost ``1e-9`` of mass.

    Raises
    ------
    BuildError
        If ``I(x)`` is negative beyond round-off anywhere on the grid, which
        signals a density that is negative somewhere.
    """
    alpha = _check_alpha(alpha)
    if int(grid_size) < 64:
        raise BuildError("grid_size must be >= 64")
    flux = _FluxIntegral(dist, alpha, int(grid_size))
    below, above = flux.from_below, flux.from_above
    peak = max(float(np.max(np.abs(below))), float(np.max(np.abs(above))))
    tol = 1e-8 * peak
    worst = min(float(np.min(below)), float(np.min(above)))
    if worst < -tol:
        raise BuildError(
            f"negative radicand: flux integral reaches {worst:.3e} (tolerance {tol:.1e}); "
            "the density is negative somewhere"
        )
    closure = float(np.max(np.abs(below - above))) / peak
    sup = dist.support
    x_lo, x_hi = float(flux.nodes[0]), float(flux.nodes[-1])
    pdf = dist.pdf

    def raw_b2(x):
        p = pdf(x)
        positive = p > 0
        return np.where(positive, 2.0 * np.maximum(flux(x), 0.0) / np.where(positive, p, 1.0), 0.0)

    b2_lo, b2_hi = (float(v) for v in raw_b2(np.array([x_lo, x_hi])))

    def b2(x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        inner = (x >= x_lo) & (x <= x_hi)
        if np.any(inner):
            out[inner] = raw_b2(x[inner])
        left = x < x_lo
        if np.any(left):
            if sup.finite_lower:
                out[left] = b2_lo * (x[left] - sup.lower) / (x_lo - sup.lower)
            else:
                out[left] = b2_lo
        right = x > x_hi
        if np.any(right):
            if sup.finite_upper:
                out[right] = b2_hi * (sup.upper - x[right]) / (sup.upper - x_hi)
            else:
                out[right] = b2_hi
        return out

    diagnostics = {
        "grid_size": int(grid_size),
        "nodes": int(flux.nodes.size),
        "closure_error": closure,
        "node_range": [x_lo, x_hi],
    }
    model = SdeModel(dist, alpha, float(dist.mean), "quadrature", b2, diagnostics)
    object.__setattr__(model, "flux_integral", flux)
    return model


def build(dist, alpha, method="auto", grid_size=256):
    """Closed form for catalog families, quadrature for tabulated densities."""
    if method == "auto":
        method = "quadrature" if isinstance(dist, Tabulated) else "closed_form"
    if method == "closed_form":
        return build_closed_form(dist, alpha)
    if method == "quadrature":
        return build_quadrature(dist, alpha, grid_size)
    raise BuildError(f"unknown build method {method!r}")


# ---------------------------------------------------------------------------
# verification


def interior_grid(dist, n=200, q=1e-6):
    """``n`` equally spaced points between the ``q`` and ``1 - q`` quantiles."""
    lo, hi = (float(v) for v in dist.ppf([q, 1.0 - q]))
    return np.linspace(lo, hi, n)


def oracle_max_error(model, reference=None, n=200):
    """Largest ``|b2 - b2_ref| / (1 + b2)`` over an interior grid.

    ``reference`` defaults to a freshly built quadrature model.
    """
    if reference is None:
        reference = build_quadrature(model.distribution, model.alpha)
    x = interior_grid(model.distribution, n)
    b2 = model.diffusion_squared(x)
    return float(np.max(np.abs(b2 - reference.diffusion_squared(x)) / (1.0 + b2)))


@dataclass
class FpeResidual:
    """Summary of ``R(x) = -a p + 1/2 d/dx (b^2 p)`` on a grid."""

    max_abs: float
    rms: float
    scale: float
    scaled_max: float
    tail_flux: dict
    tolerance: float = 1e-4
    tail_tolerance: float = 1e-8

    @property
    def tails_ok(self):
        return all(v <= self.tail_tolerance for v in self.tail_flux.values())

    @property
    def passed(self):
        return self.scaled_max <= self.tolerance and self.tails_ok

    def to_dict(self):
        return {
            "max_abs": self.max_abs,
            "rms": self.rms,
            "scale": self.scale,
            "scaled_max": self.scaled_max,
            "tail_flux": self.tail_flux,
            "passed": self.passed,
        }


def fpe_residual(model, dist=None, x_grid=None, step=None, tolerance=1e-4):
    """Stationary Fokker-Planck residual of ``model`` against ``dist``.

    The derivative of ``b^2 p`` is a central difference with step ``step``
    (default ``1e-5`` of the grid span, shrunk near finite support bounds),
    independent of the grid spacing. The residual is scaled by
    ``max |a(x) p(x)|`` over the grid.

    Tail checks: ``b^2 p`` (scaled by its grid maximum) at the ``1e-14`` and
    ``1 - 1e-14`` quantiles, and ``|a p|`` likewise at infinite ends, must
    be below ``1e-8``. Toward an infinite end the check point is the farther
    of that quantile and ten standard deviations from the mean.
    """
    dist = model.distribution if dist is None else dist
    if x_grid is None:
        x_grid = interior_grid(dist, 401, q=1e-4)
    x = np.asarray(x_grid, dtype=float)
    sup = dist.support
    if np.any(~((x > sup.lower) & (x < sup.upper))):
        raise ValueError("x_grid must lie strictly inside the support")
    span = float(x.max() - x.min()) or 1.0
    h = np.full(x.shape, 1e-5 * span if step is None else float(step))
    # densities may be singular at a finite bound, so keep the stencil relatively small there
    if sup.finite_lower:
        h = np.minimum(h, 1e-4 * (x - sup.lower))
    if sup.finite_upper:
        h = np.minimum(h, 1e-4 * (sup.upper - x))

    def flux_b2p(z):
        return model.diffusion_squared(z) * dist.pdf(z)

    p = dist.pdf(x)
    ap = model.drift(x) * p
    deriv = (flux_b2p(x + h) - flux_b2p(x - h)) / (2.0 * h)
    resid = -ap + 0.5 * deriv
    scale = float(np.max(np.abs(ap))) or 1.0
    b2p_max = float(np.max(flux_b2p(x))) or 1.0
    q_lo, q_hi = (float(v) for v in dist.ppf([1e-14, 1.0 - 1e-14]))
    if not sup.finite_lower:
        q_lo = min(q_lo, dist.mean - 10.0 * dist.std)
    if not sup.finite_upper:
        q_hi = max(q_hi, dist.mean + 10.0 * dist.std)
    tails = {
        "b2p_lower": float(flux_b2p(np.array([q_lo]))[0]) / b2p_max,
        "b2p_upper": float(flux_b2p(np.array([q_hi]))[0]) / b2p_max,
    }
    if not sup.finite_lower:
        tails["ap_lower"] = abs(float(model.drift(q_lo) * dist.pdf(q_lo))) / scale
    if not sup.finite_upper:
        tails["ap_upper"] = abs(float(model.drift(q_hi) * dist.pdf(q_hi))) / scale
    max_abs = float(np.max(np.abs(resid)))
    return FpeResidual(
        max_abs=max_abs,
        rms=float(np.sqrt(np.mean(resid**2))),
        scale=scale,
        scaled_max=max_abs / scale,
        tail_flux=tails,
        tolerance=tolerance,
    )


def model_card(model, diagnostics=True):
    """JSON-ready description of ``model``; optionally runs the build checks."""
    if diagnostics:
        extra = dict(model.diagnostics)
        if model.source == "closed_form":
            extra["oracle_max_error"] = oracle_max_error(model)
        fpe = fpe_residual(model)
        extra["fpe_residual"] = fpe.to_dict()
        model = SdeModel(model.distribution, model.alpha, model.mu, model.source, model._b2, extra)
    card = model.card()
    card["model_hash"] = model.hash
    return card


def model_from_card(card, grid_size=256):
    """Rebuild the model described by a card produced by :func:`model_card`."""
    from .distributions import from_dict

    spec = {"family": card["family"]}
    if card["family"] == "tabulated":
        spec["grid"] = card["grid"]
    else:
        spec["params"] = card.get("params", {})
    dist = from_dict(spec)
    method = card.get("source", "closed_form")
    if method not in ("closed_form", "quadrature"):
        raise BuildError(f"unknown model source {method!r}")
    return build(dist, card["alpha"], method=method, grid_size=card.get("diagnostics", {}).get("grid_size", grid_size))
