"""Exact Feynman-Kac flows, normalized semigroups and absorption laws."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    EnumerationTooLarge,
    Kernel,
    Measure,
    Model,
    TotalAbsorptionError,
    dobrushin_beta,
    extended_K,
    extended_Qhat,
    kernel_K,
    matrix_Q,
    rho_ratio,
    soft_decomposition,
    tv_distance,
)

ENUMERATION_LIMIT = 10 ** 7


# --- generic flow for a pair (G, M) ------------------------------------------

@dataclass(frozen=True, eq=False)
class FKFlow:
    """eta_{p+1} = Psi_G(eta_p) M, with eta_p(G) stored per step."""

    G: np.ndarray
    M: np.ndarray
    etas: np.ndarray
    masses: np.ndarray

    @property
    def n(self) -> int:
        return len(self.etas) - 1

    @property
    def Q(self) -> np.ndarray:
        return self.G[:, None] * self.M

    def Qpn(self, f, p: int) -> np.ndarray:
        """Q_{p,n}(f) = Q^{n-p} f / eta_p Q^{n-p}(1)."""
        return self.all_Qpn(f)[p]

    def all_Qpn(self, f) -> list:
        """[Q_{p,n}(f) for p = 0..n] by the recursion Q_{p,n} f = Q(Q_{p+1,n} f) / eta_p(G)."""
        h = np.asarray(f, dtype=float)
        Q = self.Q
        out = [h]
        for p in range(self.n - 1, -1, -1):
            h = Q @ h / self.masses[p]
            out.append(h)
        return out[::-1]


def fk_flow(G, M, eta0, n: int) -> FKFlow:
    G = np.asarray(G, dtype=float)
    M = np.asarray(M, dtype=float)
    eta = np.asarray(eta0, dtype=float)
    etas = [eta]
    masses = []
    for p in range(n):
        m = float(eta @ G)
        if m <= 0:
            raise TotalAbsorptionError(f"eta_{p}(G) = 0: total absorption at step {p}")
        eta = (eta * G / m) @ M
        masses.append(m)
        etas.append(eta)
    return FKFlow(G, M, np.array(etas), np.array(masses))


def hard_pair(model: Model) -> tuple[np.ndarray, np.ndarray]:
    """(1_S, K) on S u {c}: the potential and kernel of the hard sampler."""
    G = np.ones(model.d + 1)
    G[-1] = 0.0
    return G, extended_K(model)


# --- traces -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FlowTrace:
    """Both flows up to horizon n; ``log_z[p] = log Z_p``."""

    model: Model
    etas: np.ndarray
    eta_hats: np.ndarray
    log_z: np.ndarray
    g_masses: np.ndarray

    @property
    def n(self) -> int:
        return len(self.etas) - 1

    @property
    def z(self) -> np.ndarray:
        return np.exp(self.log_z)

    @property
    def gammas(self) -> np.ndarray:
        return self.z[:, None] * self.etas

    def eta(self, p: int) -> Measure:
        return Measure(self.etas[p])

    def eta_hat(self, p: int) -> Measure:
        return Measure.from_extended(self.eta_hats[p])


def evolve(model: Model, n: int, eta0=None) -> FlowTrace:
    """eta_n, eta-hat_n and Z_n up to horizon n."""
    if n < 0:
        raise ValueError("n must be >= 0")
    eta0 = model.eta0 if eta0 is None else np.asarray(eta0, dtype=float)
    sd = soft_decomposition(model)
    flow = fk_flow(sd.g, sd.M.entries, eta0, n)
    d = model.d
    K = kernel_K(model)
    hats = np.zeros((n + 1, d + 1))
    hats[0, :d] = eta0
    for p in range(n):
        hats[p + 1, :d] = flow.etas[p] @ K.entries
        hats[p + 1, d] = flow.etas[p] @ K.exit
    log_z = np.concatenate([[0.0], np.cumsum(np.log(flow.masses))])
    return FlowTrace(model, flow.etas, hats, log_z, flow.masses)


def soft_flow(model: Model, n: int, eta0=None) -> FKFlow:
    sd = soft_decomposition(model)
    eta0 = model.eta0 if eta0 is None else eta0
    return fk_flow(sd.g, sd.M.entries, eta0, n)


def hard_flow(model: Model, n: int, eta0=None) -> FKFlow:
    G, M = hard_pair(model)
    eta0 = model.eta0 if eta0 is None else np.asarray(eta0, dtype=float)
    return fk_flow(G, M, np.append(eta0, 0.0), n)


# --- semigroups -----------------------------------------------------------------

def normalized_semigroup(model: Model, p: int, n: int, eta_p, hat: bool = False) -> Kernel:
    """Q^{n-p} / eta_p Q^{n-p}(1); with ``hat=True`` the same on S u {c} with Q-hat.

    For ``hat=True`` the result is (d+1) x (d+1) and ``eta_p`` may be a
    Measure with cemetery mass or a length d+1 vector.
    """
    if p > n:
        raise ValueError("need p <= n")
    if hat:
        A = extended_Qhat(model)
        mu = eta_p.extended() if isinstance(eta_p, Measure) else np.asarray(eta_p, dtype=float)
        if len(mu) == model.d:
            mu = np.append(mu, 0.0)
    else:
        A = matrix_Q(model).entries
        mu = np.asarray(eta_p, dtype=float)
    P = np.linalg.matrix_power(A, n - p)
    mass = float(mu @ P.sum(axis=1))
    if mass <= 0:
        raise TotalAbsorptionError("eta_p Q^{n-p}(1) = 0")
    return Kernel(P / mass, "generic")


def conditioned_operator_Pn(model: Model, n: int) -> Kernel:
    """Rows delta_x Q^n / Q^n(1)(x), normalized at every step.

    When a row loses all its mass (only for d = 1, theta = 0) the identity
    row is kept, which is the only law on a single state.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    d = model.d
    Q = matrix_Q(model).entries
    P = np.eye(d)
    for _ in range(n):
        P = P @ Q
        s = P.sum(axis=1)
        dead = s <= 0
        s[dead] = 1.0
        P = P / s[:, None]
        P[dead] = np.eye(d)[dead]
    return Kernel(P, "stochastic")


def Qn_one(model: Model, n: int) -> np.ndarray:
    """Q^n(1) by iterated multiplication."""
    Q = matrix_Q(model).entries
    h = np.ones(model.d)
    for _ in range(n):
        h = Q @ h
    return h


@dataclass(frozen=True)
class AbsorptionLaw:
    """P(T_X = k) for k = 0..nmax and P(T_Y = k) for k = 0..nmax, plus survivals."""

    hard: np.ndarray
    hard_survival: float
    soft: np.ndarray
    soft_survival: float


def absorption_law(model: Model, nmax: int, eta0=None) -> AbsorptionLaw:
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    eta0 = model.eta0 if eta0 is None else np.asarray(eta0, dtype=float)
    Q = matrix_Q(model).entries
    g = Q.sum(axis=1)
    gamma = np.array(eta0, dtype=float)
    # leak[p] = gamma_p(1 - g), mass[p] = gamma_p(1)
    leak, mass = [], []
    for _ in range(nmax + 1):
        mass.append(gamma.sum())
        leak.append(gamma @ (1.0 - g))
        gamma = gamma @ Q
    mass.append(gamma.sum())
    leak = np.array(leak)
    hard = np.concatenate([[0.0], leak[:nmax]])
    return AbsorptionLaw(hard, float(mass[nmax]), leak, float(mass[nmax + 1]))


# --- path measures ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PathMeasure:
    """Atoms are 1-based state tuples of length n+1 with positive weight."""

    n: int
    atoms: dict
    normalization: float

    def normalized(self) -> dict:
        return {k: v / self.normalization for k, v in self.atoms.items()}

    def integrate(self, fn, normalized: bool = True) -> float:
        s = sum(w * fn(path) for path, w in self.atoms.items())
        return s / self.normalization if normalized else s


def exact_path_measure(model: Model, n: int, eta0=None, limit: int = ENUMERATION_LIMIT) -> PathMeasure:
    """Enumerate the reflected chain's paths weighted by prod_{p<n} g(y_p)."""
    d = model.d
    if d ** (n + 1) > limit:
        raise EnumerationTooLarge(f"d^(n+1) = {d}^{n + 1} exceeds {limit}")
    eta0 = model.eta0 if eta0 is None else np.asarray(eta0, dtype=float)
    sd = soft_decomposition(model)
    g, M = sd.g, sd.M.entries
    paths = {(x + 1,): float(eta0[x]) for x in range(d) if eta0[x] > 0}
    for _ in range(n):
        nxt = {}
        for path, w in paths.items():
            x = path[-1] - 1
            for y in np.flatnonzero(M[x] > 0):
                wy = w * g[x] * M[x, y]
                if wy > 0:
                    nxt[path + (int(y) + 1,)] = wy
        paths = nxt
    return PathMeasure(n, paths, float(sum(paths.values())))


def phi_n(model: Model, n: int, mu) -> np.ndarray:
    """Phi^n(mu) = mu Q^n / mu Q^n(1)."""
    Q = matrix_Q(model).entries
    eta = np.asarray(mu, dtype=float)
    for _ in range(n):
        eta = eta @ Q
        s = eta.sum()
        if s <= 0:
            raise TotalAbsorptionError("mu Q^n(1) = 0")
        eta = eta / s
    return eta


def lipschitz_bound(model: Model, n: int, mu1, mu2) -> tuple[float, float]:
    """(TV(Phi^n mu1, Phi^n mu2), rho(Q^n 1) beta(P_n) TV(mu1, mu2))."""
    lhs = tv_distance(phi_n(model, n, mu1), phi_n(model, n, mu2))
    rhs = rho_ratio(Qn_one(model, n)) * dobrushin_beta(conditioned_operator_Pn(model, n)) * tv_distance(mu1, mu2)
    if lhs > rhs + 1e-12:
        raise AssertionError(f"contraction violated: {lhs} > {rhs}")
    return lhs, rhs
