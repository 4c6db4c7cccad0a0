"""Absorbing random walk on S = {1, ..., d}: model, measures, kernels.

State ``x`` of S is stored at array index ``x - 1``.  Functions on S are
length-``d`` arrays; functions on the augmented space S u {c} are
length-``d + 1`` arrays whose last entry is the value at the cemetery ``c``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

ATOL = 1e-12


class QswlabError(Exception):
    """Base class for library errors."""


class ZeroMassError(QswlabError, ValueError):
    """A Boltzmann-Gibbs normalization hit zero mass (total absorption)."""


class TotalAbsorptionError(ZeroMassError):
    pass


class EnumerationTooLarge(QswlabError, ValueError):
    pass


class ConvergenceError(QswlabError, RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Measure:
    """Nonnegative weights on S plus an optional mass on the cemetery."""

    weights: np.ndarray
    cemetery: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be one-dimensional")
        if np.any(w < 0) or self.cemetery < 0:
            raise ValueError("measure weights must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "cemetery", float(self.cemetery))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)

    def __len__(self):
        return len(self.weights)

    @property
    def mass(self) -> float:
        return float(self.weights.sum() + self.cemetery)

    def is_probability(self, tol: float = ATOL) -> bool:
        return abs(self.mass - 1.0) <= tol

    def integrate(self, f, f_cemetery: float = 0.0) -> float:
        """mu(f); functions vanish on the cemetery unless told otherwise."""
        return float(self.weights @ np.asarray(f, dtype=float) + self.cemetery * f_cemetery)

    def extended(self) -> np.ndarray:
        """Weights on S u {c} as a length d+1 vector."""
        return np.append(self.weights, self.cemetery)

    def normalized(self) -> "Measure":
        m = self.mass
        if m <= 0:
            raise ZeroMassError("cannot normalize a zero measure")
        return Measure(self.weights / m, self.cemetery / m)

    @classmethod
    def from_extended(cls, v) -> "Measure":
        v = np.asarray(v, dtype=float)
        return cls(v[:-1], float(v[-1]))


@dataclass(frozen=True, eq=False)
class Kernel:
    """A d x d matrix indexed by (source, target) states of S.

    ``exit`` holds, per row, the mass sent outside S (to the barriers or the
    cemetery) when the kernel is the restriction of a bigger one.
    """

    entries: np.ndarray
    kind: str = "generic"
    exit: np.ndarray | None = None

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("kernel entries must be a square matrix")
        if self.kind not in ("stochastic", "substochastic", "generic"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        rows = a.sum(axis=1)
        if self.kind != "generic" and np.any(a < -ATOL):
            raise ValueError("negative entry in a (sub)stochastic kernel")
        if self.kind == "stochastic" and np.max(np.abs(rows - 1.0), initial=0.0) > ATOL:
            raise ValueError("stochastic kernel rows must sum to 1")
        if self.kind == "substochastic" and np.any(rows > 1.0 + ATOL):
            raise ValueError("substochastic kernel rows must sum to at most 1")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if self.exit is not None:
            e = np.array(self.exit, dtype=float)
            e.setflags(write=False)
            object.__setattr__(self, "exit", e)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]


MeasureLike = Union[Measure, np.ndarray, list, tuple]


def _closed_form_pi(d: int) -> np.ndarray:
    a = np.pi / (d + 1)
    x = np.arange(1, d + 1)
    p = np.tan(a / 2) * np.sin(x * a)
    return p / p.sum()


def parse_eta0(spec, d: int) -> np.ndarray:
    """Initial law from ``'uniform'``, ``'pi'``, ``'delta:x'`` or an array."""
    if isinstance(spec, Measure):
        if spec.cemetery != 0.0:
            raise ValueError("eta0 must carry no cemetery mass")
        return np.array(spec.weights)
    if isinstance(spec, str):
        if spec == "uniform":
            return np.full(d, 1.0 / d)
        if spec == "pi":
            return _closed_form_pi(d)
        if spec.startswith("delta:"):
            x = int(spec.split(":", 1)[1])
            if not 1 <= x <= d:
                raise ValueError(f"delta state {x} outside S = 1..{d}")
            e = np.zeros(d)
            e[x - 1] = 1.0
            return e
        raise ValueError(f"unknown eta0 spec {spec!r}")
    return np.asarray(spec, dtype=float)


@dataclass(frozen=True, eq=False)
class Model:
    """Walk on {1..d} with laziness ``theta`` started from ``eta0``."""

    d: int
    theta: float
    eta0: np.ndarray = field(default=None)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be an integer >= 1")
        if not np.isfinite(self.theta) or self.theta < 0:
            raise ValueError("theta must be >= 0")
        eta0 = parse_eta0("uniform" if self.eta0 is None else self.eta0, int(self.d))
        if eta0.shape != (self.d,):
            raise ValueError(f"eta0 must have length d = {self.d}")
        if np.any(eta0 < 0) or abs(eta0.sum() - 1.0) > ATOL:
            raise ValueError("eta0 must be a probability vector on S")
        eta0 = eta0.copy()
        eta0.setflags(write=False)
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "eta0", eta0)

    def with_eta0(self, spec) -> "Model":
        return Model(self.d, self.theta, parse_eta0(spec, self.d))

    @property
    def degenerate(self) -> bool:
        return self.d == 1

    def __repr__(self):
        return f"Model(d={self.d}, theta={self.theta:g})"


_FIXTURES = {
    "A": (2, 0.0, "uniform"),
    "B": (3, 0.0, "pi"),
    "C": (3, 1.0, "pi"),
    "D": (4, 0.0, "uniform"),
}


def fixture(name: str) -> Model:
    """Reference models A-D used throughout the tests and demos."""
    d, theta, eta0 = _FIXTURES[name.upper()]
    return Model(d, theta, eta0)


# --- kernels -----------------------------------------------------------------

def _walk_matrix(d: int, theta: float) -> np.ndarray:
    step = 1.0 / (2.0 + theta)
    Q = np.diag(np.full(d, theta * step))
    if d > 1:
        Q += np.diag(np.full(d - 1, step), 1) + np.diag(np.full(d - 1, step), -1)
    return Q


def kernel_K(model: Model) -> Kernel:
    """Lattice walk restricted to rows in S; mass leaving S goes to ``exit``."""
    Q = _walk_matrix(model.d, model.theta)
    return Kernel(Q, "substochastic", exit=1.0 - Q.sum(axis=1))


def matrix_Q(model: Model) -> Kernel:
    return Kernel(_walk_matrix(model.d, model.theta), "substochastic")


def matrix_Qhat(model: Model) -> Kernel:
    """Q-hat(x, .) = K(x, .) for x in S, with the exit mass as the cemetery column."""
    return kernel_K(model)


def extended_Qhat(model: Model) -> np.ndarray:
    """Q-hat as a (d+1) x (d+1) matrix on S u {c}; the cemetery row is null."""
    K = kernel_K(model)
    d = model.d
    out = np.zeros((d + 1, d + 1))
    out[:d, :d] = K.entries
    out[:d, d] = K.exit
    return out


def extended_K(model: Model) -> np.ndarray:
    """K on S u {c} with the cemetery absorbing (a stochastic matrix)."""
    out = extended_Qhat(model)
    out[model.d, model.d] = 1.0
    return out


@dataclass(frozen=True, eq=False)
class SoftDecomposition:
    g: np.ndarray
    M: Kernel
    degenerate: bool = False


def soft_decomposition(model: Model) -> SoftDecomposition:
    """Split Q = diag(g) M with g the one-step survival probability.

    For d = 1 the split g = theta / (2 + theta), M = [1] is forced and is
    returned with ``degenerate=True``.
    """
    d, theta = model.d, model.theta
    if d == 1:
        return SoftDecomposition(np.array([theta / (2.0 + theta)]), Kernel([[1.0]], "stochastic"), True)
    g = np.ones(d)
    g[0] = g[-1] = (1.0 + theta) / (2.0 + theta)
    M = np.zeros((d, d))
    for x in range(d):
        M[x, x] = theta / (2.0 + theta)
        if x > 0:
            M[x, x - 1] = 1.0 / (2.0 + theta)
        if x < d - 1:
            M[x, x + 1] = 1.0 / (2.0 + theta)
    # reflection at the two boundary states
    M[0] = 0.0
    M[0, 0], M[0, 1] = theta / (1.0 + theta), 1.0 / (1.0 + theta)
    M[-1] = 0.0
    M[-1, -1], M[-1, -2] = theta / (1.0 + theta), 1.0 / (1.0 + theta)
    return SoftDecomposition(g, Kernel(M, "stochastic"))


def matrix_Qtilde(model: Model) -> Kernel:
    """Second-moment matrix diag(g^2) M of the reflected-walk weights."""
    sd = soft_decomposition(model)
    return Kernel((sd.g ** 2)[:, None] * sd.M.entries, "generic")


# --- measure utilities -------------------------------------------------------

def boltzmann_gibbs(g, mu: MeasureLike):
    """Reweight ``mu`` by ``g`` and normalize.

    Accepts a plain vector or a :class:`Measure`; a Measure's cemetery is
    weighted by ``g[d]`` when ``g`` has length d+1 and by 0 otherwise.
    """
    g = np.asarray(g, dtype=float)
    if isinstance(mu, Measure):
        d = len(mu.weights)
        gc = g[d] if len(g) == d + 1 else 0.0
        w = g[:d] * mu.weights
        c = gc * mu.cemetery
        z = w.sum() + c
        if z <= 0:
            raise ZeroMassError("mu(g) = 0")
        return Measure(w / z, c / z)
    mu = np.asarray(mu, dtype=float)
    w = g * mu
    z = w.sum()
    if z <= 0:
        raise ZeroMassError("mu(g) = 0")
    return w / z


def _as_point_vector(mu) -> np.ndarray:
    if isinstance(mu, Measure):
        return mu.extended()
    return np.asarray(mu, dtype=float)


def tv_distance(mu1: MeasureLike, mu2: MeasureLike) -> float:
    """Half the L1 distance; a Measure's cemetery counts as an extra point."""
    a, b = _as_point_vector(mu1), _as_point_vector(mu2)
    if len(a) != len(b):
        # a plain vector on S against a Measure on S u {c}
        n = max(len(a), len(b))
        a, b = np.pad(a, (0, n - len(a))), np.pad(b, (0, n - len(b)))
    return 0.5 * float(np.abs(a - b).sum())


def dobrushin_beta(M) -> float:
    """max over state pairs of the total variation between rows of M."""
    M = np.asarray(M, dtype=float)
    diff = np.abs(M[:, None, :] - M[None, :, :]).sum(axis=2)
    return 0.5 * float(diff.max())


def rho_ratio(f) -> float:
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("rho is defined for strictly positive functions")
    return float(f.max() / f.min())


def oscillation(f) -> float:
    f = np.asarray(f, dtype=float)
    return float(f.max() - f.min())
