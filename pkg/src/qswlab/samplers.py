"""Monte Carlo estimators of Z_n, eta_n and the path law.

Internally states are 0-based indices into S and the cemetery is ``-1``.
Paths handed to user path-functions are 1-based, with the cemetery as 0.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import Measure, Model, kernel_K, soft_decomposition
from .spectral import doob_kernel, eigensystem

CEMETERY = -1
RNG_ALGORITHM = "numpy.PCG64/SeedSequence"
SAMPLERS = ("dp", "is", "soft", "hard")


@dataclass(eq=False)
class RngStream:
    """Replicate-owned generator: PCG64 seeded by SeedSequence(seed, spawn_key=(index,))."""

    seed: int
    index: int
    algorithm: str = RNG_ALGORITHM
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.index),))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def random(self, size):
        return self.generator.random(size)


def make_stream(seed: int, index: int = 0) -> RngStream:
    return RngStream(seed, index)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(int(rng), 0).generator


def _cdf_rows(P) -> np.ndarray:
    c = np.cumsum(np.asarray(P, dtype=float), axis=-1)
    c[..., -1] = 1.0
    return c


def draw_categorical(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws; ``cdf`` is one row or one row per draw."""
    if cdf.ndim == 1:
        return np.searchsorted(cdf, u, side="right")
    return (cdf <= u[:, None]).sum(axis=1)


@dataclass(eq=False)
class PathSample:
    """Weighted ancestral lines; ``paths`` holds 1-based states, 0 for the cemetery."""

    paths: np.ndarray
    weights: np.ndarray

    def integrate(self, fn) -> float:
        if len(self.weights) == 0:
            return float("nan")
        return float(np.asarray(fn(self.paths), dtype=float) @ self.weights)


@dataclass(eq=False)
class EstimatorOutput:
    z_estimate: float
    eta_estimate: Measure | None
    path_estimate: PathSample | None
    meta: dict
    eta_hat_estimate: Measure | None = None
    z_previous: float | None = None
    extinction_step: int | None = None
    ancestry: np.ndarray | None = None


def _empirical(states: np.ndarray, d: int, weights=None) -> Measure:
    w = np.ones(len(states)) if weights is None else np.asarray(weights, dtype=float)
    alive = states >= 0
    counts = np.bincount(states[alive], weights=w[alive], minlength=d)
    dead = float(w[~alive].sum())
    total = counts.sum() + dead
    return Measure(counts / total, dead / total)


def _to_one_based(paths: np.ndarray) -> np.ndarray:
    return np.where(paths >= 0, paths + 1, 0)


def _meta(tag, model, n, N, rng):
    seed = rng.seed if isinstance(rng, RngStream) else None
    index = rng.index if isinstance(rng, RngStream) else None
    return {"sampler": tag, "d": model.d, "theta": model.theta, "n": n, "N": N,
            "seed": seed, "stream": index}


def _run_chains(cdf0, cdf_rows, n, N, gen, keep_paths):
    x = draw_categorical(cdf0, gen.random(N))
    hist = [x] if keep_paths else None
    visits = [x]
    for _ in range(n):
        x = draw_categorical(cdf_rows[x], gen.random(N))
        visits.append(x)
        if keep_paths:
            hist.append(x)
    return x, visits, (np.stack(hist, axis=1) if keep_paths else None)


def sample_doob_is(model: Model, n: int, N: int, rng, keep_paths: bool = False) -> EstimatorOutput:
    """Independent Doob chains started from Psi_phi0(eta0), weighted by 1/phi0."""
    if N < 1:
        raise ValueError("N must be >= 1")
    gen = _as_generator(rng)
    basis = eigensystem(model)
    phi0 = basis.phi0
    init = model.eta0 * phi0
    init = init / init.sum()
    Mphi = doob_kernel(model, basis).entries
    x, _, paths = _run_chains(_cdf_rows(init), _cdf_rows(Mphi), n, N, gen, keep_paths)
    w = 1.0 / phi0[x]
    z = basis.E0 ** n * float(model.eta0 @ phi0) * float(w.mean())
    eta = _empirical(x, model.d, w)
    path_est = PathSample(_to_one_based(paths), w / w.sum()) if keep_paths else None
    return EstimatorOutput(z, eta, path_est, _meta("dp", model, n, N, rng))


def sample_reflected_is(model: Model, n: int, N: int, rng, keep_paths: bool = False) -> EstimatorOutput:
    """Independent reflected chains with weights prod_{p<n} g(Y_p)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    gen = _as_generator(rng)
    sd = soft_decomposition(model)
    x, visits, paths = _run_chains(_cdf_rows(model.eta0), _cdf_rows(sd.M.entries), n, N, gen, keep_paths)
    w = np.ones(N)
    for y in visits[:-1]:
        w = w * sd.g[y]
    z = float(w.mean())
    eta = _empirical(x, model.d, w) if w.sum() > 0 else None
    path_est = None
    if keep_paths and w.sum() > 0:
        path_est = PathSample(_to_one_based(paths), w / w.sum())
    return EstimatorOutput(z, eta, path_est, _meta("is", model, n, N, rng))


def sample_soft_smc(model: Model, n: int, N: int, rng, keep_paths: bool = False) -> EstimatorOutput:
    """Particles killed with probability 1 - g, replaced by g-weighted copies, moved by M."""
    if N < 1:
        raise ValueError("N must be >= 1")
    gen = _as_generator(rng)
    sd = soft_decomposition(model)
    g, Mcdf = sd.g, _cdf_rows(sd.M.entries)
    x = draw_categorical(_cdf_rows(model.eta0), gen.random(N))
    lines = x[:, None] if keep_paths else None
    log_z = 0.0
    for _ in range(n):
        gx = g[x]
        m = float(gx.mean())
        if m <= 0:
            log_z = -np.inf
            break
        log_z += np.log(m)
        killed = np.flatnonzero(gen.random(N) >= gx)
        idx = np.arange(N)
        if len(killed):
            sel = _cdf_rows(gx / gx.sum())
            idx[killed] = draw_categorical(sel, gen.random(len(killed)))
        x = x[idx]
        x = draw_categorical(Mcdf[x], gen.random(N))
        if keep_paths:
            lines = np.column_stack([lines[idx], x])
    z = float(np.exp(log_z))
    eta = _empirical(x, model.d)
    path_est = PathSample(_to_one_based(lines), np.full(N, 1.0 / N)) if keep_paths else None
    return EstimatorOutput(z, eta, path_est, _meta("soft", model, n, N, rng), ancestry=lines)


def sample_hard_smc(model: Model, n: int, N: int, rng, keep_paths: bool = False) -> EstimatorOutput:
    """Particles move by K (exit to the cemetery); each dead one copies a uniform survivor.

    ``z_previous`` is Z_{n-1}, so that z_previous * eta_hat(f) estimates the
    pre-killing unnormalized measure at time n.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    gen = _as_generator(rng)
    d = model.d
    K = kernel_K(model)
    # columns: cemetery, then states 1..d
    ext = np.column_stack([K.exit, K.entries])
    Kcdf = _cdf_rows(ext)
    x = draw_categorical(_cdf_rows(model.eta0), gen.random(N))
    lines = x[:, None] if keep_paths else None
    z, z_prev = 1.0, 1.0
    extinct = None
    hat = _empirical(x, d)
    for p in range(1, n + 1):
        if extinct is not None:
            break
        x = draw_categorical(Kcdf[x], gen.random(N)) - 1
        hat = _empirical(x, d)
        alive = np.flatnonzero(x >= 0)
        z_prev = z
        z = z * len(alive) / N
        if len(alive) == 0:
            extinct = p
            break
        if keep_paths:
            lines = np.column_stack([lines, x])
        dead = np.flatnonzero(x < 0)
        if len(dead) and p < n:
            pick = alive[np.minimum((gen.random(len(dead)) * len(alive)).astype(int), len(alive) - 1)]
            x = x.copy()
            x[dead] = x[pick]
            if keep_paths:
                lines[dead] = lines[pick]
    meta = _meta("hard", model, n, N, rng)
    if extinct is not None:
        delta_c = Measure(np.zeros(d), 1.0)
        if extinct < n:
            hat = delta_c
            z_prev = 0.0
        return EstimatorOutput(0.0, delta_c, None, meta, eta_hat_estimate=hat,
                               z_previous=z_prev, extinction_step=extinct)
    alive = x >= 0
    eta = _empirical(x[alive], d)
    path_est = None
    if keep_paths:
        path_est = PathSample(_to_one_based(lines[alive]), np.full(int(alive.sum()), 1.0 / alive.sum()))
    return EstimatorOutput(z, eta, path_est, meta, eta_hat_estimate=hat, z_previous=z_prev,
                           ancestry=lines)


_DISPATCH = {
    "dp": sample_doob_is,
    "is": sample_reflected_is,
    "soft": sample_soft_smc,
    "hard": sample_hard_smc,
}


def sample(tag: str, model: Model, n: int, N: int, rng, keep_paths: bool = False) -> EstimatorOutput:
    try:
        fn = _DISPATCH[tag]
    except KeyError:
        raise ValueError(f"unknown sampler {tag!r}; choose from {SAMPLERS}") from None
    return fn(model, n, N, rng, keep_paths=keep_paths)


@dataclass(eq=False)
class ReplicateTable:
    """One row per replicate, ordered by replicate index."""

    sampler: str
    n: int
    N: int
    seed: int
    replicate: np.ndarray
    z: np.ndarray
    eta_f: np.ndarray
    path_f: np.ndarray | None = None
    z_previous: np.ndarray | None = None
    eta_hat_f: np.ndarray | None = None
    wall_time: np.ndarray | None = None

    def __len__(self):
        return len(self.replicate)


def run_replicates(model: Model, sampler: str, n: int, N: int, R: int, seed: int, f,
                   f_path=None, jobs: int = 1, timing: bool = False) -> ReplicateTable:
    """Replicate r draws from stream (seed, r); rows are reduced by index.

    With ``timing=True`` the per-replicate wall time in seconds is recorded.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    f = np.asarray(f, dtype=float)
    keep = f_path is not None

    def one(r):
        t0 = time.perf_counter()
        out = sample(sampler, model, n, N, RngStream(seed, r), keep_paths=keep)
        ef = out.eta_estimate.integrate(f) if out.eta_estimate is not None else np.nan
        pf = out.path_estimate.integrate(f_path) if (keep and out.path_estimate is not None) else np.nan
        zp = out.z_previous if out.z_previous is not None else np.nan
        hf = out.eta_hat_estimate.integrate(f) if out.eta_hat_estimate is not None else np.nan
        return out.z_estimate, ef, pf, zp, hf, time.perf_counter() - t0

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(one, range(R)))
    else:
        rows = [one(r) for r in range(R)]
    arr = np.array(rows, dtype=float).reshape(R, 6)
    hard = sampler == "hard"
    return ReplicateTable(
        sampler, n, N, int(seed), np.arange(R), arr[:, 0], arr[:, 1],
        arr[:, 2] if keep else None,
        arr[:, 3] if hard else None,
        arr[:, 4] if hard else None,
        arr[:, 5] if timing else None,
    )
