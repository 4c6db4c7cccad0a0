"""Asymptotic variances of the four estimators, in closed form and empirically.

Every evaluator accepts an optional ``eta0`` so that arbitrary initial laws
are supported; by default the model's own initial law is used.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import Model, kernel_K, matrix_Q, soft_decomposition
from .semigroup import FKFlow, evolve, fk_flow, hard_flow, soft_flow
from .spectral import eigensystem

CLAMP_TOL = 1e-10


@dataclass(frozen=True)
class VarianceReport:
    sampler: str
    quantity: str
    f: str
    value: float
    method: str
    n: int
    d: int
    theta: float
    se: float | None = None
    clamped: bool = False


def report(model: Model, sampler: str, quantity: str, f_desc: str, value: float, method: str,
           n: int, se: float | None = None) -> VarianceReport:
    """Wrap a value; round-off negatives above -1e-10 are clamped to 0 with a warning."""
    clamped = False
    if value < 0:
        if value >= -CLAMP_TOL:
            warnings.warn(f"clamped round-off negative variance {value:.3g}", RuntimeWarning)
            value, clamped = 0.0, True
        else:
            warnings.warn(f"negative asymptotic variance {value:.6g}", RuntimeWarning)
    return VarianceReport(sampler, quantity, f_desc, float(value), method, n, model.d,
                          model.theta, se, clamped)


def _f(f) -> np.ndarray:
    return np.asarray(f, dtype=float)


# --- generic Feynman-Kac variance -------------------------------------------------

def fk_variance(flow: FKFlow, f) -> float:
    """sum_p eta_p([Q_{p,n} f - eta_n f]^2) - sum_{p<n} eta_p(G)^2 eta_p([Q_{p,n} f - G eta_n f / eta_p(G)]^2)."""
    f = _f(f)
    n = flow.n
    hs = flow.all_Qpn(f)
    mean = float(flow.etas[n] @ f)
    total = 0.0
    for p in range(n + 1):
        total += float(flow.etas[p] @ (hs[p] - mean) ** 2)
    for p in range(n):
        m = flow.masses[p]
        total -= m ** 2 * float(flow.etas[p] @ (hs[p] - flow.G * mean / m) ** 2)
    return total


def fk_variance_centered(flow: FKFlow, f) -> float:
    """w-type variance: eta_n([f - eta_n f]^2) + sum_{p<n} (1 - eta_p(G)^2) eta_p([Q_{p,n}(f - eta_n f)]^2)."""
    f = _f(f)
    n = flow.n
    fc = f - float(flow.etas[n] @ f)
    hs = flow.all_Qpn(fc)
    total = float(flow.etas[n] @ fc ** 2)
    for p in range(n):
        total += (1.0 - flow.masses[p] ** 2) * float(flow.etas[p] @ hs[p] ** 2)
    return total


# --- Doob importance sampler ----------------------------------------------------------

def _dp_constant(model: Model, n: int, eta0) -> tuple[float, np.ndarray, np.ndarray]:
    basis = eigensystem(model)
    tr = evolve(model, n, eta0)
    phi0 = basis.phi0
    e0 = np.asarray(tr.etas[0])
    c = float(np.exp(n * np.log(basis.E0) - tr.log_z[n]) * (e0 @ phi0))
    return c, tr.etas[n], phi0


def v_dp(model: Model, n: int, f, eta0=None) -> float:
    """[E0^n eta0(phi0) / Z_n] eta_n(f^2 / phi0) - eta_n(f)^2."""
    f = _f(f)
    c, eta, phi0 = _dp_constant(model, n, eta0)
    return c * float(eta @ (f ** 2 / phi0)) - float(eta @ f) ** 2


def w_dp(model: Model, n: int, f, eta0=None) -> float:
    f = _f(f)
    c, eta, phi0 = _dp_constant(model, n, eta0)
    fc = f - float(eta @ f)
    return c * float(eta @ (fc ** 2 / phi0))


def v_dp_printed(model: Model, n: int, f, eta0=None) -> float:
    """The first-power variant [E0^n eta0(phi0) / Z_n] eta_n(f / phi0) - eta_n(f)^2 (not a variance)."""
    f = _f(f)
    c, eta, phi0 = _dp_constant(model, n, eta0)
    return c * float(eta @ (f / phi0)) - float(eta @ f) ** 2


# --- reflected importance sampler ------------------------------------------------------

def _is_parts(model: Model, n: int, eta0):
    eta0 = model.eta0 if eta0 is None else np.asarray(eta0, dtype=float)
    sd = soft_decomposition(model)
    tilde = fk_flow(sd.g ** 2, sd.M.entries, eta0, n)
    tr = evolve(model, n, eta0)
    log_ratio = float(np.sum(np.log(tilde.masses))) - 2.0 * tr.log_z[n]
    return np.exp(log_ratio), tilde.etas[n], tr.etas[n]


def second_moment_ratio(model: Model, n: int, eta0=None) -> float:
    """eta0 Qtilde^n(1) / [eta0 Q^n(1)]^2."""
    return float(_is_parts(model, n, eta0)[0])


def v_is(model: Model, n: int, f, eta0=None) -> float:
    f = _f(f)
    ratio, eta_t, eta = _is_parts(model, n, eta0)
    return ratio * float(eta_t @ f ** 2) - float(eta @ f) ** 2


def w_is(model: Model, n: int, f, eta0=None, form: str = "centered") -> float:
    """``form='centered'`` is v_is(f - eta_n f); ``form='split'`` the tilde-mean decomposition."""
    f = _f(f)
    ratio, eta_t, eta = _is_parts(model, n, eta0)
    if form == "centered":
        fc = f - float(eta @ f)
        return ratio * float(eta_t @ fc ** 2)
    if form == "split":
        mt = float(eta_t @ f)
        return ratio * (float(eta_t @ (f - mt) ** 2) + (mt - float(eta @ f)) ** 2)
    raise ValueError(f"unknown form {form!r}")


# --- soft particle sampler ----------------------------------------------------------------

def v_soft(model: Model, n: int, f, eta0=None) -> float:
    return fk_variance(soft_flow(model, n, eta0), f)


def w_soft(model: Model, n: int, f, eta0=None, form: str = "centered") -> float:
    """``form='centered'`` is v_soft(f - eta_n f); ``form='sum'`` the (1 - eta_p(g)^2) expansion."""
    flow = soft_flow(model, n, eta0)
    if form == "centered":
        f = _f(f)
        return fk_variance(flow, f - float(flow.etas[n] @ f))
    if form == "sum":
        return fk_variance_centered(flow, f)
    raise ValueError(f"unknown form {form!r}")


def local_fluctuation(model: Model, eta_n, f, form: str = "full") -> float:
    """Variance of one selection-mutation step started from ``eta_n``.

    ``form='kernel'``: half the pairwise squared differences under the
    one-step mean-field kernel.  ``form='full'``: the expanded expression in
    eta_{n+1}, Q and 1 - g.  ``form='centered'``: eta_{n+1}(f^2) - eta_n(Q(f)^2),
    valid once f is eta_{n+1}-centered (the function is centered first).
    """
    f = _f(f)
    eta = np.asarray(eta_n, dtype=float)
    sd = soft_decomposition(model)
    g, M = sd.g, sd.M.entries
    Q = g[:, None] * M
    nxt = eta @ Q / float(eta @ g)
    if form == "kernel":
        Kmf = Q + (1.0 - g)[:, None] * nxt[None, :]
        diff = (f[:, None] - f[None, :]) ** 2
        return 0.5 * float(np.einsum("x,xy,xz,yz->", eta, Kmf, Kmf, diff))
    if form == "full":
        Qf = Q @ f
        m1 = float(nxt @ f)
        return (float(nxt @ f ** 2) - float(eta @ Qf ** 2)
                - m1 * (float(eta @ (1.0 - g) ** 2) * m1 + 2.0 * float(eta @ ((1.0 - g) * Qf))))
    if form == "centered":
        fc = f - float(nxt @ f)
        return float(nxt @ fc ** 2) - float(eta @ (Q @ fc) ** 2)
    raise ValueError(f"unknown form {form!r}")


def v_soft_telescoping(model: Model, n: int, f, eta0=None) -> float:
    """eta_0([Q_{0,n} f - eta_n f]^2) + sum_{p=1..n} local_fluctuation(eta_{p-1}, Q_{p,n} f - eta_n f)."""
    f = _f(f)
    flow = soft_flow(model, n, eta0)
    hs = flow.all_Qpn(f)
    mean = float(flow.etas[n] @ f)
    total = float(flow.etas[0] @ (hs[0] - mean) ** 2)
    for p in range(1, n + 1):
        total += local_fluctuation(model, flow.etas[p - 1], hs[p] - mean, form="full")
    return total


def v_soft_equilibrium_phi0(model: Model, n: int) -> float:
    """(n+1) V - n pi([Q(phi0 - pi(phi0))]^2) with V = Var_pi(phi0); valid for eta0 = pi."""
    from .spectral import quasi_stationary

    basis = eigensystem(model)
    pi = quasi_stationary(model)[0].weights
    phi0 = basis.phi0
    c = phi0 - float(pi @ phi0)
    V = float(pi @ c ** 2)
    Q = matrix_Q(model).entries
    return (n + 1) * V - n * float(pi @ (Q @ c) ** 2)


def w_soft_path_bound(model: Model, n: int) -> float:
    if n < 0:
        raise ValueError("n must be >= 0")
    return 1.0 + (2.0 * n / (1.0 + model.theta)) / (1.0 - np.exp(-1.0)) / np.sin(np.pi / (model.d + 1))


# --- hard particle sampler --------------------------------------------------------------------

def _extend(model: Model, f) -> np.ndarray:
    f = _f(f)
    if len(f) == model.d:
        return np.append(f, 0.0)
    if len(f) == model.d + 1:
        return f
    raise ValueError("f must have length d or d+1")


def v_hard_prekill(model: Model, n: int, f, eta0=None) -> float:
    """Variance of the pre-killing unnormalized estimate; ``f`` may carry a cemetery value."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return fk_variance(hard_flow(model, n, eta0), _extend(model, f))


def w_hard_prekill(model: Model, n: int, f, eta0=None, form: str = "centered") -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    flow = hard_flow(model, n, eta0)
    f = _extend(model, f)
    if form == "centered":
        return fk_variance(flow, f - float(flow.etas[n] @ f))
    if form == "sum":
        return fk_variance_centered(flow, f)
    raise ValueError(f"unknown form {form!r}")


def v_hard(model: Model, n: int, f, eta0=None) -> float:
    """Post-killing variance v-hat_n(f 1_S).

    Scaled by Z_{n-1}: it is the limit of N E[(Z_n^hard eta_n^hard(f) / Z_{n-1}
    - eta_{n-1}(g) eta_n(f))^2].
    """
    f = _f(f)[: model.d]
    return v_hard_prekill(model, n, np.append(f, 0.0), eta0)


def w_hard(model: Model, n: int, f, eta0=None, form: str = "reduction") -> float:
    """Post-killing w-variance.

    ``form='reduction'``: v_hard((f - eta_n f) / eta_{n-1}(g)).
    ``form='display'``: the p-sum over the pre-killing laws eta-hat_p with
    Q^{n-p} normalized by eta_{p-1} Q^{n-p}(1).
    ``form='printed'``: the same sum rewritten with the weight
    eta_{p-1}(g) / eta_{n-1}(g); this inverts the correct ratio and only
    agrees with the other forms when eta_p(g) is constant in p.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    f = _f(f)[: model.d]
    flow = soft_flow(model, n, eta0)
    mean = float(flow.etas[n] @ f)
    gm = flow.masses
    fc = f - mean
    if form == "reduction":
        return v_hard(model, n, fc / gm[n - 1], eta0)
    if form == "display":
        hats = hard_flow(model, n, eta0).etas
        Q = matrix_Q(model).entries
        total = float(flow.etas[n] @ fc ** 2)
        for p in range(1, n):
            Qm = np.linalg.matrix_power(Q, n - p)
            h = Qm @ fc / float(flow.etas[p - 1] @ Qm.sum(axis=1))
            total += (1.0 - gm[p - 1] ** 2) * float(hats[p][:-1] @ h ** 2) / gm[n - 1]
        return total / gm[n - 1]
    if form == "printed":
        hs = flow.all_Qpn(fc)
        total = float(flow.etas[n] @ fc ** 2)
        for p in range(1, n):
            total += (1.0 - gm[p - 1] ** 2) * gm[p - 1] / gm[n - 1] * float(flow.etas[p] @ hs[p] ** 2)
        return total / gm[n - 1]
    raise ValueError(f"unknown form {form!r}")


def v_hard_equilibrium_phi0(model: Model, n: int) -> float:
    """E0 ([1 + (n-1)(1 - E0^2)] V + n (1 - E0) pi(phi0)^2); valid for eta0 = pi."""
    from .spectral import quasi_stationary

    basis = eigensystem(model)
    pi = quasi_stationary(model)[0].weights
    E0 = basis.E0
    m = float(pi @ basis.phi0)
    V = float(pi @ (basis.phi0 - m) ** 2)
    return E0 * ((1.0 + (n - 1) * (1.0 - E0 ** 2)) * V + n * (1.0 - E0) * m ** 2)


def K_apply(model: Model, f) -> np.ndarray:
    """K(f) on S for f on S u {c}."""
    f = _extend(model, f)
    K = kernel_K(model)
    return K.entries @ f[:-1] + K.exit * f[-1]


@dataclass(frozen=True)
class Comparison:
    name: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


def hard_soft_comparisons(model: Model, n: int, f, eta0=None) -> list[Comparison]:
    """Each entry should satisfy lhs >= rhs; equalities carry both sides too."""
    f = _f(f)[: model.d]
    Q = matrix_Q(model).entries
    out = []
    out.append(Comparison("v_hard>=v_soft(Qf)", v_hard(model, n, f, eta0), v_soft(model, n - 1, Q @ f, eta0)))
    flow = soft_flow(model, n, eta0)
    mean = float(flow.etas[n] @ f)
    h = Q @ (f - mean) / float(flow.etas[n - 1] @ Q.sum(axis=1))
    out.append(Comparison("w_hard>=w_soft(Q(f-eta f)/eta Q1)", w_hard(model, n, f, eta0), w_soft(model, n - 1, h, eta0)))
    fe = np.append(f, 0.0)
    out.append(Comparison("vhat>=v_soft(Kf)", v_hard_prekill(model, n, fe, eta0), v_soft(model, n - 1, K_apply(model, fe), eta0)))
    out.append(Comparison("what>=w_soft(Kf)", w_hard_prekill(model, n, fe, eta0), w_soft(model, n - 1, K_apply(model, fe), eta0)))
    return out


# --- empirical estimates -----------------------------------------------------------------------

def jackknife_se(values) -> float:
    """Jackknife standard error of the mean of ``values``."""
    x = np.asarray(values, dtype=float)
    R = len(x)
    loo = (x.sum() - x) / (R - 1)
    return float(np.sqrt((R - 1) / R * np.sum((loo - loo.mean()) ** 2)))


@dataclass(frozen=True)
class EmpiricalVariance:
    v: float
    v_se: float
    w: float
    w_se: float
    R: int


def empirical_variance(table, z_true: float, eta_f_true: float, N: int | None = None,
                       z_scale: float | None = None, eta_scale: float = 1.0) -> EmpiricalVariance:
    """N times the mean squared deviation of the replicate estimates from the exact values.

    v uses (z / z_scale) eta_f against eta_scale * eta_f_true, where z_scale
    defaults to z_true; w uses eta_f against eta_f_true.
    """
    z = np.asarray(table.z, dtype=float)
    ef = np.asarray(table.eta_f, dtype=float)
    R = len(z)
    if R < 2:
        raise ValueError("need at least two replicates")
    N = table.N if N is None else N
    zs = z_true if z_scale is None else z_scale
    dv = N * ((z / zs) * np.nan_to_num(ef) - eta_scale * eta_f_true) ** 2
    dw = N * (ef - eta_f_true) ** 2
    return EmpiricalVariance(float(dv.mean()), jackknife_se(dv), float(np.nanmean(dw)),
                             jackknife_se(dw[~np.isnan(dw)]), R)
