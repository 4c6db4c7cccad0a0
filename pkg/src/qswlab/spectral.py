"""Closed-form eigensystem of Q, the Doob transform and the spectrum of R."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .model import ConvergenceError, Kernel, Measure, Model, matrix_Q, soft_decomposition


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenvalues ``E[i]`` (decreasing) and L2(u)-normalized eigenvectors ``phi[i]``."""

    d: int
    theta: float
    E: np.ndarray
    phi: np.ndarray
    E1bar: float
    E1bar_closed: float
    Estar: float
    s: dict

    @property
    def E0(self) -> float:
        return float(self.E[0])

    @property
    def phi0(self) -> np.ndarray:
        return self.phi[0]

    def phibar(self, i: int) -> np.ndarray:
        """Eigenvectors of the Doob kernel: phi_i / phi_0."""
        return self.phi[i] / self.phi[0]


def s_k(d: int, k: int) -> float:
    return float(np.sqrt((d + 1) / 2.0) * np.sin(np.pi / (d + 1)) ** (-k))


def e1bar_closed_form(d: int, theta: float) -> float:
    a = np.pi / (d + 1)
    return float(1.0 - 4.0 * np.sin(1.5 * a) * np.sin(0.5 * a) / (theta + 2.0 * np.cos(a)))


@lru_cache(maxsize=256)
def cos_table(d: int) -> np.ndarray:
    """cos(i pi / (d+1)) for i = 1..d, correctly rounded.

    Float pi makes np.cos(pi/3) = 0.5000000000000001 and np.cos(pi/2) = 6e-17;
    exact zeros matter (d = 1, theta = 0 has E0 = 0).
    """
    with mpmath.workdps(40):
        c = np.array([float(mpmath.cospi(mpmath.mpf(i) / (d + 1))) for i in range(1, d + 1)])
    c.setflags(write=False)
    return c


def eigensystem(model: Model) -> SpectralBasis:
    d, theta = model.d, model.theta
    i = np.arange(1, d + 1)
    x = np.arange(1, d + 1)
    a = np.pi / (d + 1)
    c = cos_table(d)
    E = (theta + 2.0 * c) / (theta + 2.0)
    phi = np.sqrt(2.0 * d / (d + 1)) * np.sin(np.outer(i, x) * a)
    E0 = E[0]
    if d == 1:
        # a single state: no second eigenvalue, the contraction is immediate
        e1bar, e1c, estar = 0.0, 0.0, 0.0
    elif E0 == 0.0:
        e1bar, e1c, estar = np.nan, np.nan, np.nan
    else:
        e1bar = float(E[1] / E0)
        e1c = e1bar_closed_form(d, theta)
        estar = float(np.max(np.abs(E[1:])) / E0)
    s = {k: s_k(d, k) for k in (1, 2, 3)}
    E.setflags(write=False)
    phi.setflags(write=False)
    return SpectralBasis(d, theta, E, phi, e1bar, e1c, estar, s)


def quasi_stationary(model: Model) -> tuple[Measure, Measure]:
    """Yaglom limit pi and the invariant law pi_phi of the Doob chain."""
    d = model.d
    a = np.pi / (d + 1)
    x = np.arange(1, d + 1)
    pi = np.tan(a / 2) * np.sin(x * a)
    pi_phi = (2.0 / (d + 1)) * np.sin(x * a) ** 2
    return Measure(pi / pi.sum()), Measure(pi_phi / pi_phi.sum())


def doob_kernel(model: Model, basis: SpectralBasis | None = None, form: str = "ratio") -> Kernel:
    """M_phi(x, y) = Q(x, y) phi0(y) / Q(phi0)(x).

    ``form="eigen"`` uses E0 phi0(x) in the denominator instead of Q(phi0)(x).
    """
    basis = basis or eigensystem(model)
    Q = matrix_Q(model).entries
    phi0 = basis.phi0
    if model.d == 1:
        return Kernel([[1.0]], "stochastic")
    num = Q * phi0[None, :]
    if form == "ratio":
        den = Q @ phi0
    elif form == "eigen":
        den = basis.E0 * phi0
    else:
        raise ValueError(f"unknown form {form!r}")
    M = num / den[:, None]
    if form == "ratio":
        return Kernel(M, "stochastic")
    return Kernel(M, "generic")


def reconstruct_Qn(model: Model, n: int, basis: SpectralBasis | None = None) -> Kernel:
    """Q^n from sum_i E_i^n phi_i(x) phi_i(y) u(y)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    basis = basis or eigensystem(model)
    d = model.d
    if n == 0:
        return Kernel(np.eye(d), "generic")
    w = basis.E ** n
    Qn = (basis.phi.T * w) @ basis.phi / d
    return Kernel(Qn, "generic")


def matrix_power(A, n: int) -> np.ndarray:
    """A^n by repeated multiplication."""
    A = np.asarray(A, dtype=float)
    out = np.eye(A.shape[0])
    for _ in range(n):
        out = out @ A
    return out


def matrix_R(model: Model) -> np.ndarray:
    """Symmetric form sqrt(g) Q sqrt(g), similar to diag(g^2) M."""
    g = soft_decomposition(model).g
    r = np.sqrt(g)
    return r[:, None] * matrix_Q(model).entries * r[None, :]


@dataclass(frozen=True, eq=False)
class TildeSpectrum:
    E0tilde: float
    psi0: np.ndarray
    psi0tilde: np.ndarray
    rho_psi0: float
    rho_psi0tilde: float
    eigenvalues: np.ndarray


def tilde_spectrum(model: Model) -> TildeSpectrum:
    """Top eigenpair of R via LAPACK bisection plus inverse iteration.

    ``psi0tilde = sqrt(g) psi0`` is the matching right eigenvector of
    diag(g^2) M.
    """
    R = matrix_R(model)
    diag = np.diag(R).copy()
    off = np.diag(R, 1).copy()
    d = model.d
    try:
        if d == 1:
            vals, vecs = diag.copy(), np.ones((1, 1))
        else:
            vals, vecs = eigh_tridiagonal(diag, off, lapack_driver="stebz")
    except LinAlgError as exc:
        raise ConvergenceError(f"tridiagonal eigensolve failed: {exc}") from exc
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    psi = vecs[:, 0]
    psi = psi * np.sign(psi.sum())
    lam = float(vals[0])
    resid = np.max(np.abs(R @ psi - lam * psi))
    if resid > 1e-10 or np.any(psi <= 0):
        raise ConvergenceError(f"top eigenpair of R not resolved (residual {resid:.3g})")
    psit = np.sqrt(soft_decomposition(model).g) * psi
    return TildeSpectrum(
        lam, psi, psit, float(psi.max() / psi.min()), float(psit.max() / psit.min()), vals
    )
