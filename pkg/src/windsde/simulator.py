"""Euler-Maruyama path simulation of an :class:`~windsde.builder.SdeModel`.

Reproducibility
---------------
Every path owns counter-based Philox streams keyed by ``(seed, path, purpose)``,
so a path's noise does not depend on how paths are split across worker
threads. Stationary initial values are drawn once for the whole ensemble,
in path order, before any splitting. Inside the time loop the diffusion is
read from a uniform-grid table of ``b(x)**2`` using only additions and
multiplications, which keeps the arithmetic identical for every chunk
layout; points outside the table fall back to the exact evaluator.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
import hashlib
import io
import json
import math
import struct
import warnings

import numpy as np

__all__ = [
    "SimulationError",
    "SimulationConfig",
    "PathEnsemble",
    "DiffusionTable",
    "simulate",
    "sample_stationary",
    "path_stream",
    "read_ensemble",
]

BINARY_MAGIC = b"WSDE1"
BOUNDARY_POLICIES = ("reflect", "absorb_at_epsilon", "reject_step")
INIT_POLICIES = ("stationary_inverse_cdf", "fixed", "burn_in")
MAX_REJECTIONS = 1_000_000
# per-chunk noise buffer budget, in doubles
_BUFFER_DOUBLES = 1 << 22

# stream purposes; the low two bits of the Philox key
_NOISE, _REJECT = 0, 1
_INIT_KEY = (1 << 64) - 1


class SimulationError(RuntimeError):
    """Raised for invalid configurations or a stuck rejection loop."""


def path_stream(seed, path, purpose=_NOISE):
    """Independent ``numpy`` generator for one path and purpose."""
    key = (int(seed) << 64) | (4 * int(path) + purpose)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SimulationConfig:
    """Time stepping, ensemble size, seed and boundary/initialization policies.

    Parameters
    ----------
    dt, horizon : float
        Step and total simulated time, in the model's time units.
    n_paths : int
    seed : int
        64-bit seed; with the model it fully determines the output.
    boundary_policy : {"reflect", "absorb_at_epsilon", "reject_step"}
    init_policy : {"stationary_inverse_cdf", "fixed", "burn_in"}
        ``fixed`` starts every path at ``x0``; ``burn_in`` starts at the mean
        and discards ``burn_in`` time units first.
    record_every : int
        Keep every ``record_every``-th step (always including ``t = 0``).
    table_size : int
        Nodes in the diffusion lookup table; 0 evaluates ``b`` exactly.
    epsilon : float, optional
        Offset from a finite bound used when clamping; defaults to ``1e-9``
        standard deviations.
    """

    dt: float
    horizon: float
    n_paths: int = 1
    seed: int = 0
    boundary_policy: str = "reflect"
    init_policy: str = "stationary_inverse_cdf"
    x0: float | None = None
    burn_in: float = 0.0
    record_every: int = 1
    table_size: int = 16385
    epsilon: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise SimulationError("dt must be > 0")
        if not (math.isfinite(self.horizon) and self.horizon >= self.dt):
            raise SimulationError("horizon must be >= dt")
        if int(self.n_paths) < 1:
            raise SimulationError("n_paths must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise SimulationError("seed must fit in 64 unsigned bits")
        if self.boundary_policy not in BOUNDARY_POLICIES:
            raise SimulationError(f"boundary_policy must be one of {BOUNDARY_POLICIES}")
        if self.init_policy not in INIT_POLICIES:
            raise SimulationError(f"init_policy must be one of {INIT_POLICIES}")
        if self.init_policy == "fixed" and (self.x0 is None or not math.isfinite(self.x0)):
            raise SimulationError("init_policy 'fixed' needs a finite x0")
        if self.init_policy == "burn_in" and not self.burn_in > 0:
            raise SimulationError("init_policy 'burn_in' needs burn_in > 0")
        if int(self.record_every) < 1:
            raise SimulationError("record_every must be >= 1")
        if self.table_size and int(self.table_size) < 2:
            raise SimulationError("table_size must be 0 or >= 2")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.dt))

    def check_alpha(self, alpha, strict=True):
        """Warn if ``dt * alpha > 0.1``; raise if ``> 0.5`` (unless not strict)."""
        ratio = self.dt * alpha
        if ratio > 0.5 and strict:
            raise SimulationError(f"dt*alpha = {ratio:g} > 0.5: step too coarse for the decay rate")
        if ratio > 0.1:
            warnings.warn(f"dt*alpha = {ratio:g} > 0.1; expect visible discretization bias", RuntimeWarning, stacklevel=3)

    def to_dict(self):
        return asdict(self)

    @property
    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


class DiffusionTable:
    """Piecewise-linear table of ``b(x)**2`` on a uniform grid.

    The grid covers the support between the ``1e-10`` and ``1 - 1e-10``
    quantiles, extended to any finite support bound. Requests outside the
    grid are answered by the model's exact evaluator.
    """

    def __init__(self, model, size=16385, q=1e-10):
        dist = model.distribution
        sup = dist.support
        lo, hi = (float(v) for v in dist.ppf([q, 1.0 - q]))
        if sup.finite_lower:
            lo = sup.lower
        if sup.finite_upper:
            hi = sup.upper
        self.model = model
        self.lo, self.hi = lo, hi
        self.nodes = np.linspace(lo, hi, int(size))
        self.values = model.diffusion_squared(self.nodes)
        self._base = self.values[:-1].copy()
        self._slope = np.diff(self.values)
        self.inv_h = (size - 1) / (hi - lo)
        self.last = int(size) - 2

    def __call__(self, x):
        if x.size and self.lo <= x.min() and x.max() <= self.hi:
            return self._interp(x)
        inside = (x >= self.lo) & (x <= self.hi)
        out = np.empty_like(x)
        out[inside] = self._interp(x[inside])
        out[~inside] = self.model.diffusion_squared(x[~inside])
        return out

    def _interp(self, x):
        t = (x - self.lo) * self.inv_h
        i = t.astype(np.intp)
        np.minimum(i, self.last, out=i)
        t -= i
        t *= self._slope[i]
        t += self._base[i]
        return t


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Recorded paths: ``values[i, k]`` is path ``i`` at ``times[k]``."""

    times: np.ndarray
    values: np.ndarray
    model_hash: str = ""
    config_hash: str = ""

    @property
    def n_paths(self):
        return self.values.shape[0]

    @property
    def sample_interval(self):
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else float("nan")

    def table(self):
        return np.column_stack([self.times, self.values.T])

    def to_csv(self, path):
        header = ",".join(["time"] + [f"path_{i}" for i in range(self.n_paths)])
        with open(path, "w", newline="\n") as fh:
            np.savetxt(fh, self.table(), fmt="%.17g", delimiter=",", header=header, comments="")

    def to_binary(self, path):
        data = self.table()
        with open(path, "wb") as fh:
            fh.write(BINARY_MAGIC)
            fh.write(struct.pack("<QQ", *data.shape))
            fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())

    def save(self, path, fmt="csv"):
        if fmt == "csv":
            self.to_csv(path)
        elif fmt == "bin":
            self.to_binary(path)
        else:
            raise ValueError(f"unknown format {fmt!r}")


def read_ensemble(path):
    """Load an ensemble written by :meth:`PathEnsemble.save` (format sniffed)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw.startswith(BINARY_MAGIC):
        offset = len(BINARY_MAGIC)
        rows, cols = struct.unpack_from("<QQ", raw, offset)
        data = np.frombuffer(raw, dtype="<f8", offset=offset + 16)
        if data.size != rows * cols:
            raise ValueError("truncated binary ensemble")
        data = data.reshape(rows, cols)
    else:
        text = raw.decode()
        header = text.split("\n", 1)[0].strip().split(",")
        if not header or header[0] != "time" or any(h != f"path_{i}" for i, h in enumerate(header[1:])):
            raise ValueError("ensemble CSV must start with 'time,path_0,...'")
        data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != len(header):
            raise ValueError("ensemble CSV rows do not match the header")
    if data.shape[1] < 2:
        raise ValueError("ensemble has no paths")
    return PathEnsemble(np.array(data[:, 0]), np.array(data[:, 1:].T))


def sample_stationary(dist, n, seed=0):
    """``n`` draws from ``dist`` by inverting its CDF at Philox uniforms."""
    rng = np.random.Generator(np.random.Philox(key=(int(seed) << 64) | _INIT_KEY))
    u = rng.random(int(n))
    # keep strictly inside (0, 1) so quantiles stay finite
    u = np.clip(u, 1e-16, 1.0 - 2.0**-53)
    return np.asarray(dist.ppf(u), dtype=float).reshape(int(n))


class _Stepper:
    """Advances a chunk of paths; all state is local to the chunk."""

    def __init__(self, model, config, b2, paths, block=256):
        self.model = model
        self.cfg = config
        self.b2 = b2
        self.paths = paths
        self.block = block
        self.gens = [path_stream(config.seed, p, _NOISE) for p in paths]
        self.reject_gens = {}
        sup = model.distribution.support
        self.lo, self.hi = sup.lower, sup.upper
        eps = config.epsilon
        if eps is None:
            eps = 1e-9 * model.distribution.std
        self.eps = eps
        self.sqdt = math.sqrt(config.dt)
        # buffers are reused: fresh large allocations are dominated by page faults
        self._draws = np.empty((len(paths), block))
        self._noise = np.empty((block, len(paths)))
        self._cursor = block

    def _next_noise(self):
        if self._cursor >= self.block:
            for row, gen in zip(self._draws, self.gens):
                gen.standard_normal(out=row)
            np.copyto(self._noise, self._draws.T)
            self._cursor = 0
        z = self._noise[self._cursor]
        self._cursor += 1
        return z

    def _increment(self, x, z):
        drift = x - self.model.mu
        drift *= -self.model.alpha * self.cfg.dt
        new = np.sqrt(self.b2(x))
        new *= self.sqdt
        new *= z
        new += drift
        new += x
        return new, drift

    def step(self, x):
        z = self._next_noise()
        new, drift = self._increment(x, z)
        lo, hi = self.lo, self.hi
        if lo <= new.min() and new.max() <= hi:
            return new
        bad = (new < lo) | (new > hi)
        policy = self.cfg.boundary_policy
        if policy == "reflect":
            new = np.where(new < lo, 2.0 * lo - new, new)
            new = np.where(new > hi, 2.0 * hi - new, new)
            return np.clip(new, lo, hi)
        if policy == "absorb_at_epsilon":
            new = np.where(new < lo, lo + self.eps, new)
            return np.where(new > hi, hi - self.eps, new)
        for j in np.flatnonzero(bad):
            new[j] = self._resample(j, x[j:j + 1], drift[j])
        return new

    def _resample(self, j, xj, drift):
        gen = self.reject_gens.get(j)
        if gen is None:
            gen = self.reject_gens[j] = path_stream(self.cfg.seed, self.paths[j], _REJECT)
        scale = float(np.sqrt(self.b2(xj))[0]) * self.sqdt
        base = float(xj[0]) + drift
        for _ in range(MAX_REJECTIONS):
            cand = base + scale * gen.standard_normal()
            if self.lo <= cand <= self.hi:
                return cand
        raise SimulationError(
            f"more than {MAX_REJECTIONS} consecutive rejected steps on path {self.paths[j]}; "
            "reduce dt or use another boundary policy"
        )

    def run(self, x, n_steps, record_every, out=None):
        if out is not None:
            out[:, 0] = x
        for k in range(1, n_steps + 1):
            x = self.step(x)
            if out is not None and k % record_every == 0:
                out[:, k // record_every] = x
        return x


def simulate(model, config, threads=1, strict_alpha=True):
    """Simulate ``config.n_paths`` Euler-Maruyama paths of ``model``.

    ``x_{k+1} = x_k + a(x_k) dt + b(x_k) sqrt(dt) Z_k``, followed by the
    boundary policy whenever the step leaves the support. The result is
    bitwise identical for any ``threads``.

    Returns
    -------
    PathEnsemble
        Values at ``t = 0, r dt, 2 r dt, ...`` with ``r = record_every``.
    """
    config.check_alpha(model.alpha, strict=strict_alpha)
    n = int(config.n_paths)
    dist = model.distribution
    if config.init_policy == "stationary_inverse_cdf":
        x0 = sample_stationary(dist, n, config.seed)
    elif config.init_policy == "fixed":
        x0 = np.full(n, float(config.x0))
    else:
        x0 = np.full(n, float(model.mu))
    b2 = DiffusionTable(model, config.table_size) if config.table_size else model.diffusion_squared
    n_steps = config.n_steps
    r = int(config.record_every)
    n_rec = n_steps // r + 1
    values = np.empty((n, n_rec))
    burn = int(round(config.burn_in / config.dt)) if config.init_policy == "burn_in" else 0

    def work(chunk):
        # streams are consumed in order, so the block length never changes the draws
        block = max(1, min(256, burn + n_steps, _BUFFER_DOUBLES // chunk.size))
        stepper = _Stepper(model, config, b2, chunk, block)
        x = x0[chunk[0]:chunk[-1] + 1].copy()
        if burn:
            x = stepper.run(x, burn, 1)
        stepper.run(x, n_steps, r, values[chunk[0]:chunk[-1] + 1])

    chunks = [c for c in np.array_split(np.arange(n), max(1, min(int(threads), n))) if c.size]
    if len(chunks) == 1:
        work(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            list(pool.map(work, chunks))
    times = np.arange(n_rec) * (r * config.dt)
    return PathEnsemble(times, values, model.hash, config.hash)
