"""Numerical audits of the stability, spectral and variance inequalities.

Each audit returns :class:`CheckReport` values with ``margin = rhs - lhs``.
A report ``holds`` when the margin is at least -1e-10.  Checks whose
printed constant is known to be wrong carry a ``known erratum`` note when
they fail.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .model import Model, TotalAbsorptionError, dobrushin_beta, matrix_Q, rho_ratio, soft_decomposition
from .semigroup import evolve
from .spectral import doob_kernel, eigensystem, quasi_stationary, s_k, tilde_spectrum
from . import variance as var

TOL = 1e-10
HOLDS, FAILS, NA = "holds", "fails", "not-applicable"


@dataclass(frozen=True)
class CheckReport:
    check_id: str
    params: dict
    lhs: float
    rhs: float
    margin: float
    verdict: str
    note: str = ""

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, (float, np.floating)):
                return float(v) if math.isfinite(v) else None
            if isinstance(v, (np.integer,)):
                return int(v)
            return v

        return {
            "check_id": self.check_id,
            "params": {k: clean(v) for k, v in self.params.items()},
            "lhs": clean(self.lhs),
            "rhs": clean(self.rhs),
            "margin": clean(self.margin),
            "verdict": self.verdict,
            "note": self.note,
        }


def make_report(check_id: str, params: dict, lhs: float, rhs: float, erratum: str | None = None,
                note: str = "") -> CheckReport:
    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs
    if math.isnan(margin):
        verdict = FAILS
    else:
        verdict = HOLDS if margin >= -TOL else FAILS
    if verdict == FAILS and erratum:
        note = f"known erratum: {erratum}"
    return CheckReport(check_id, dict(params), lhs, rhs, margin, verdict, note)


def not_applicable(check_id: str, params: dict, reason: str) -> CheckReport:
    return CheckReport(check_id, dict(params), float("nan"), float("nan"), float("nan"), NA, reason)


def _params(model: Model, **extra) -> dict:
    p = {"d": model.d, "theta": model.theta}
    p.update(extra)
    return p


def _sin_a(d: int) -> float:
    return math.sin(math.pi / (d + 1))


def _rho_g(theta: float) -> float:
    return (2.0 + theta) / (1.0 + theta)


def _pow(r: float, n: int) -> float:
    return 1.0 if n == 0 else r ** n


# --- survival ratios --------------------------------------------------------------------------

def normalized_survival(model: Model, n: int) -> np.ndarray:
    """E0^{-n} Q^n(1), iterated as (Q / E0)^n 1.

    When E0 = 0 (one state, no laziness) the ratio is taken as 1, its value
    for every theta > 0.
    """
    basis = eigensystem(model)
    if basis.E0 == 0.0:
        return np.ones(model.d)
    A = matrix_Q(model).entries / basis.E0
    h = np.ones(model.d)
    for _ in range(n):
        h = A @ h
    return h


def check_theorem1(model: Model, n: int) -> list[CheckReport]:
    d, theta = model.d, model.theta
    s = _sin_a(d)
    r = normalized_survival(model, n)
    p = _params(model, n=n)
    return [
        make_report("thm1.survival-ratio", p, r.max() / r.min(), _rho_g(theta) / s),
        make_report("thm1.lower", p, s, r.min()),
        make_report("thm1.upper", p, r.max(), 1.0 / s),
    ]


# --- stability of the Doob chain and the conditioned flow --------------------------------------

def _rates(model: Model) -> dict:
    b = eigensystem(model)
    return {"stated": b.E1bar, "assertive": b.Estar}


def _random_laws(d: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    laws = rng.dirichlet(np.ones(d), size=trials)
    deltas = np.eye(d)
    return np.vstack([deltas, laws])


def check_theorem2(model: Model, n: int, trials: int = 256, seed: int = 0) -> list[CheckReport]:
    return theorem2_sweep(model, n, trials, seed)[n]


def theorem2_sweep(model: Model, nmax: int, trials: int = 256, seed: int = 0) -> list[list[CheckReport]]:
    """Stability reports for every n = 0..nmax, sharing one pass of powers.

    The random test functions, initial laws and law pairs are drawn once and
    reused for every n, so entry n equals ``check_theorem2(model, n)``.
    """
    d, theta = model.d, model.theta
    basis = eigensystem(model)
    pi, pi_phi = (m.weights for m in quasi_stationary(model))
    Mphi = doob_kernel(model, basis).entries
    Q = matrix_Q(model).entries
    rng = np.random.default_rng(seed)
    # Rademacher combinations of the centered Doob eigenvectors
    if d > 1:
        phibar = np.array([basis.phibar(i) for i in range(1, d)])
        coeffs = rng.choice([-1.0, 1.0], size=(trials, d - 1))
        fs = coeffs @ phibar
        den = np.sqrt((fs ** 2) @ pi_phi)
    laws = _random_laws(d, trials, rng)
    k = len(laws)
    i, j = rng.integers(0, k, size=(2, trials))
    keep = i != j
    i, j = i[keep], j[keep]
    tv_0 = 0.5 * np.abs(laws[i] - laws[j]).sum(axis=1)
    rates = _rates(model)
    erratum = {"stated": "printed rate E1bar is not a contraction rate for periodic or near-periodic chains"}
    Mn = np.eye(d)
    hs = fs.copy() if d > 1 else None
    imgs = laws.copy()
    sweep = []
    for n in range(nmax + 1):
        if n:
            Mn = Mn @ Mphi
            if d > 1:
                hs = hs @ Mphi.T
            imgs = imgs @ Q
            s = imgs.sum(axis=1)
            if np.any(s <= 0):
                raise TotalAbsorptionError("mu Q^n(1) = 0")
            imgs = imgs / s[:, None]
        l2 = float(np.max(np.sqrt((hs ** 2) @ pi_phi) / den)) if d > 1 else 0.0
        beta_M = dobrushin_beta(Mn)
        tv_pi = float(np.max(np.abs(imgs - pi[None, :]).sum(axis=1) * 0.5))
        tv_n = 0.5 * np.abs(imgs[i] - imgs[j]).sum(axis=1)
        out = []
        for mode, rate in rates.items():
            p = _params(model, n=n, mode=mode, rate=rate)
            rn = _pow(rate, n)
            err = erratum.get(mode)
            out.append(make_report("thm2.l2", p, l2, rn, err))
            out.append(make_report("thm2.beta-doob", p, beta_M, basis.s[1] * rn, err))
            out.append(make_report("thm2.tv-to-pi", p, tv_pi, basis.s[2] * rn, err))
            c = basis.s[3] * _rho_g(theta) * rn
            if len(tv_n):
                worst = int(np.argmax(tv_n - c * tv_0))
                out.append(make_report("thm2.tv-contraction", p, tv_n[worst], c * tv_0[worst], err))
        sweep.append(out)
    return sweep


# --- contraction of the conditioned semigroup -----------------------------------------------

def relaxation_time(model: Model, rate: float | None = None) -> float:
    """[1 + log(rho(g) s_3(d))] / log(1 / rate), with the printed rate by default."""
    basis = eigensystem(model)
    rate = basis.E1bar if rate is None else rate
    top = 1.0 + math.log(_rho_g(model.theta) * basis.s[3])
    if rate < 0.0:
        return math.nan
    if rate == 0.0:
        return 0.0
    if rate >= 1.0 - 1e-12:
        return math.inf
    return top / math.log(1.0 / rate)


def relaxation_time_simplified_bound(model: Model) -> float:
    d, theta = model.d, model.theta
    top = 1.0 + math.log(_rho_g(theta) * s_k(d, 3))
    return (1.0 + theta / 2.0) / math.sin(math.pi / (2 * (d + 1))) ** 2 * top


def beta_Pn_sequence(model: Model, nmax: int) -> np.ndarray:
    """beta(P_n) for n = 0..nmax; sequences are cached per (d, theta) and extended on demand."""
    key = (model.d, model.theta)
    with _BETA_LOCK:
        seq, P = _BETA_CACHE.get(key, ([], None))
        if len(seq) <= nmax:
            seq = list(seq)
            Q = matrix_Q(model).entries
            if P is None:
                P = np.eye(model.d)
                seq.append(dobrushin_beta(P))
            while len(seq) <= nmax:
                P = P @ Q
                s = P.sum(axis=1)
                P = np.eye(model.d) if np.any(s <= 0) else P / s[:, None]
                seq.append(dobrushin_beta(P))
            _BETA_CACHE[key] = (seq, P)
        return np.array(seq[: nmax + 1])


_BETA_CACHE: dict = {}
_BETA_LOCK = threading.Lock()


def check_theorem3(model: Model, n: int, tail: int = 5000) -> list[CheckReport]:
    d, theta = model.d, model.theta
    basis = eigensystem(model)
    out = []
    erratum = {"stated": "printed rate E1bar is not a contraction rate for periodic or near-periodic chains"}
    for mode, rate in _rates(model).items():
        p = _params(model, n=n, mode=mode, rate=rate)
        err = erratum.get(mode)
        varsigma = relaxation_time(model, rate)
        bn = beta_Pn_sequence(model, n)
        out.append(make_report("thm3.beta-Pn", p, bn[n], basis.s[2] * _pow(rate, n), err))
        if not math.isfinite(varsigma):
            why = "relaxation time undefined for a negative rate" if math.isnan(varsigma) \
                else "infinite relaxation time (rate >= 1)"
            out.append(not_applicable("thm3.contraction", p, why))
            out.append(not_applicable("thm3.sum-beta2", p, why))
            continue
        k = max(1, math.ceil(varsigma))
        pk = dict(p, varsigma=varsigma, varsigma_int=k)
        horizon = min(tail, max(200, 50 * k))
        seq = beta_Pn_sequence(model, max(n + k, horizon))
        out.append(make_report("thm3.contraction", pk, seq[n + k], math.exp(-1.0) * seq[n], err))
        out.append(make_report("thm3.sum-beta2", pk, float(np.sum(seq[: horizon + 1] ** 2)),
                               k / (1.0 - math.exp(-2.0)), err))
    pp = _params(model, n=n)
    if d > 5:
        out.append(make_report("thm3.varsigma-simplified", pp, relaxation_time(model),
                               relaxation_time_simplified_bound(model)))
    else:
        out.append(not_applicable("thm3.varsigma-simplified", pp, "simplified bound stated for d > 5"))
    return out


# --- second-moment spectral gap and the importance-sampling growth --------------------------------

def sigma_theta(theta: float) -> float:
    a, b = math.sqrt(1.0 + theta), math.sqrt(2.0 + theta)
    return a / (a + b)


def gap_upper(d: int, theta: float) -> float:
    a = math.pi / (d + 1)
    return (math.sin(a / 2) ** 2 * (theta + 2 * math.cos(a)) + 0.5 * sigma_theta(theta)) / (1 + theta / 2) ** 2


def gap_lower_printed(d: int, theta: float) -> float:
    a = math.pi / (d + 1)
    inner = (d - 1) / (d + 1) * theta + 2 * math.cos(a) * (1 + 2 / (d + 1) * sigma_theta(theta))
    return math.sin(a / 2) ** 2 * inner / (1 + theta / 2) ** 2


def printed_growth_rate(d: int, theta: float) -> float:
    return 1.0 + (4.0 / 3.0) * math.sin(math.pi / (2 * (d + 1))) ** 2 / (2.0 + theta)


def log_ratio_sequence(model: Model, nmax: int, eta0=None) -> np.ndarray:
    """log of eta0 Qtilde^n(1) / [eta0 Q^n(1)]^2 for n = 0..nmax."""
    from .semigroup import fk_flow

    eta0 = model.eta0 if eta0 is None else eta0
    sd = soft_decomposition(model)
    tilde = fk_flow(sd.g ** 2, sd.M.entries, eta0, nmax)
    tr = evolve(model, nmax, eta0)
    lt = np.concatenate([[0.0], np.cumsum(np.log(tilde.masses))])
    return lt - 2.0 * tr.log_z


def sandwich_constant(model: Model) -> float:
    return tilde_spectrum(model).rho_psi0tilde * rho_ratio(eigensystem(model).phi0) ** 2


def check_theorem4(model: Model, nmax: int = 50) -> list[CheckReport]:
    d, theta = model.d, model.theta
    p = _params(model)
    ids = ("thm4.gap-upper", "thm4.gap-lower-printed", "thm4.gap-positive", "thm4.sandwich-upper",
           "thm4.sandwich-lower")
    if d < 2:
        return [not_applicable(i, p, "requires d >= 2") for i in ids]
    ts = tilde_spectrum(model)
    E0 = eigensystem(model).E0
    gap = ts.E0tilde - E0 ** 2
    out = [
        make_report("thm4.gap-upper", p, gap, gap_upper(d, theta)),
        make_report("thm4.gap-lower-printed", p, gap_lower_printed(d, theta), gap,
                    "printed lower bound exceeds the exact gap"),
        make_report("thm4.gap-positive", p, 2 * TOL, gap, "gap vanishes for this model"),
    ]
    logs = log_ratio_sequence(model, nmax)
    c = sandwich_constant(model)
    rate = math.log(ts.E0tilde) - 2 * math.log(E0)
    ns = np.arange(nmax + 1)
    upper = np.log(c) + ns * rate
    lower = -np.log(c) + ns * rate
    pn = dict(p, nmax=nmax, c=c)
    i = int(np.argmax(logs - upper))
    out.append(make_report("thm4.sandwich-upper", dict(pn, n=i), math.exp(logs[i]), math.exp(upper[i])))
    i = int(np.argmax(lower - logs))
    out.append(make_report("thm4.sandwich-lower", dict(pn, n=i), math.exp(lower[i]), math.exp(logs[i])))
    return out


def two_step_log_slope(logs: np.ndarray, n: int) -> float:
    """(log r_n - log r_{n-2}) / 2, insensitive to period-2 oscillation."""
    return float((logs[n] - logs[n - 2]) / 2.0)


def check_is_degeneracy(model: Model, nmax: int = 200) -> list[CheckReport]:
    d, theta = model.d, model.theta
    p = _params(model, nmax=nmax)
    ids = ("isdeg.log-slope", "isdeg.sandwich-upper", "isdeg.printed-lower-rate")
    if d < 2:
        return [not_applicable(i, p, "requires d >= 2") for i in ids]
    ts = tilde_spectrum(model)
    E0 = eigensystem(model).E0
    target = math.log(ts.E0tilde / E0 ** 2)
    logs = log_ratio_sequence(model, nmax)
    slope = two_step_log_slope(logs, nmax)
    c = sandwich_constant(model)
    ns = np.arange(nmax + 1)
    upper = math.log(c) + ns * target
    i = int(np.argmax(logs - upper))
    return [
        make_report("isdeg.log-slope", dict(p, slope=slope, target=target), abs(slope - target), 1e-6),
        make_report("isdeg.sandwich-upper", dict(p, n=i, c=c), math.exp(logs[i]), math.exp(upper[i])),
        make_report("isdeg.printed-lower-rate", p, printed_growth_rate(d, theta), ts.E0tilde / E0 ** 2,
                    "printed lower growth rate exceeds the exact rate"),
    ]


# --- ratio estimates ------------------------------------------------------------------------------

def rho_phi0_printed(d: int) -> float:
    a = math.pi / (d + 1)
    return 1.0 / math.sin(a) if d % 2 == 1 else 1.0 / math.tan(a)


def rho_phi0_corrected(d: int) -> float:
    a = math.pi / (d + 1)
    return 1.0 / math.sin(a) if d % 2 == 1 else 1.0 / (2.0 * math.sin(a / 2))


def check_prop_ratio(model: Model, nmax: int = 100) -> list[CheckReport]:
    d, theta = model.d, model.theta
    basis = eigensystem(model)
    p = _params(model, nmax=nmax)
    r = normalized_survival(model, 0)
    sup = 1.0
    lo_margin, hi_margin = math.inf, math.inf
    rho_phi = rho_ratio(basis.phi0)
    worst_lo = worst_hi = (0, 1.0, 1.0)
    for n in range(nmax + 1):
        if n:
            r = normalized_survival(model, n)
        sup = max(sup, float(r.max() / r.min()))
        # E0^{-n} Q^n(1) against rho(phi0)^{+-1}
        m_lo = float(r.min()) - 1.0 / rho_phi
        m_hi = rho_phi - float(r.max())
        if m_lo < lo_margin:
            lo_margin, worst_lo = m_lo, (n, 1.0 / rho_phi, float(r.min()))
        if m_hi < hi_margin:
            hi_margin, worst_hi = m_hi, (n, float(r.max()), rho_phi)
    out = [
        make_report("ratio.sup-rho-Qn1", p, sup, _rho_g(theta) / _sin_a(d)),
        make_report("ratio.rho-phi0-printed", dict(p, parity="odd" if d % 2 else "even"), rho_phi,
                    rho_phi0_printed(d), "even-d value is 1/(2 sin(pi/(2(d+1)))), not cot(pi/(d+1))"),
        make_report("ratio.rho-phi0-corrected", p, rho_phi, rho_phi0_corrected(d)),
        make_report("ref-E0Qn1.lower", dict(p, n=worst_lo[0]), worst_lo[1], worst_lo[2]),
        make_report("ref-E0Qn1.upper", dict(p, n=worst_hi[0]), worst_hi[1], worst_hi[2]),
    ]
    if d >= 2:
        ts = tilde_spectrum(model)
        sd = soft_decomposition(model)
        Qt = (sd.g ** 2)[:, None] * sd.M.entries / ts.E0tilde
        h = np.ones(d)
        lo, hi = (0, 1.0, 1.0), (0, 1.0, 1.0)
        lm, hm = math.inf, math.inf
        for n in range(nmax + 1):
            if n:
                h = Qt @ h
            a = float(h.min()) - 1.0 / ts.rho_psi0tilde
            b = ts.rho_psi0tilde - float(h.max())
            if a < lm:
                lm, lo = a, (n, 1.0 / ts.rho_psi0tilde, float(h.min()))
            if b < hm:
                hm, hi = b, (n, float(h.max()), ts.rho_psi0tilde)
        out.append(make_report("tilde-E-Q1.lower", dict(p, n=lo[0]), lo[1], lo[2]))
        out.append(make_report("tilde-E-Q1.upper", dict(p, n=hi[0]), hi[1], hi[2]))
    return out


# --- Taylor inequalities --------------------------------------------------------------------------

def taylor_grid(points: int = 10_000) -> np.ndarray:
    h = (math.pi / 2) / points
    return (np.arange(points) + 0.5) * h


def _chain_report(check_id: str, xs: np.ndarray, links: list, equal: tuple = ()) -> CheckReport:
    """``links`` are arrays in claimed nondecreasing order; indices in ``equal`` mark '=' links."""
    worst = math.inf
    where = (0, 0.0, 0.0, 0.0)
    for k in range(len(links) - 1):
        a, b = links[k], links[k + 1]
        m = -np.abs(b - a) if k in equal else b - a
        i = int(np.argmin(m))
        if m[i] < worst:
            worst = float(m[i])
            where = (k, float(xs[i]), float(a[i]), float(b[i]))
    k, x, a, b = where
    if k in equal:
        return make_report(check_id, {"x": x, "link": k, "kind": "equality"}, abs(b - a), 0.0)
    return make_report(check_id, {"x": x, "link": k}, a, b)


def check_taylor(xs=None) -> list[CheckReport]:
    xs = taylor_grid() if xs is None else np.asarray(xs, dtype=float)
    if np.any(xs <= 0) or np.any(xs >= math.pi / 2):
        raise ValueError("grid must lie in (0, pi/2)")
    s, c, t = np.sin(xs), np.cos(xs), np.tan(xs)
    big = 1 + t ** 2 * (4 + 3 * t ** 2)
    u = xs ** 2 / 6
    v = xs ** 2 / 3
    return [
        _chain_report("taylor.sin", xs, [xs - xs ** 3 / 6, s, xs - xs ** 3 / 6 * c]),
        _chain_report("taylor.tan", xs, [xs + xs ** 3 / 3, t, xs + xs ** 3 / 3 * big]),
        _chain_report("taylor.inverse-1-u", xs, [1 + u, 1 / (1 - u), 1 + u * (1 + u / (1 - u))], equal=(1,)),
        _chain_report("taylor.inverse-1+v", xs, [1 - v, 1 / (1 + v), 1 - v * (1 - v / (1 + v))], equal=(1,)),
        # the 1/x chains are multiplied by x > 0: same order, no 1/x blow-up near 0
        _chain_report("taylor.inverse-sin", xs, [np.ones_like(xs), 1 + xs ** 2 / 6 * c, xs / s,
                                                 1 + xs ** 2 / (6 - xs ** 2), 1 + xs ** 2 / 2,
                                                 np.full_like(xs, 3.0)]),
        _chain_report("taylor.cot", xs, [1 - xs ** 2 / 3 * big, xs / t, 1 - xs ** 2 / (3 + xs ** 2),
                                         np.ones_like(xs)]),
    ]


# --- variance statements ------------------------------------------------------------------------

def check_variance(model: Model, n: int, f=None) -> list[CheckReport]:
    """Sandwich, uniform bounds, hard/soft comparisons and the equilibrium identities."""
    d, theta = model.d, model.theta
    p = _params(model, n=n)
    if d < 2:
        return [not_applicable("variance", p, "requires d >= 2")]
    basis = eigensystem(model)
    eq = model.with_eta0("pi")
    pi = quasi_stationary(model)[0].weights
    phi0 = basis.phi0
    E0 = basis.E0
    V = float(pi @ (phi0 - pi @ phi0) ** 2)
    out = []
    if n >= 1:
        vs = var.v_soft(eq, n, phi0) / n
        out.append(make_report("v-soft-sandwich.lower", p, ((1 - E0) + 1 / n) * V, vs))
        out.append(make_report("v-soft-sandwich.upper", p, vs, (1 + 1 / n) * V))
    f = np.eye(d)[0] if f is None else np.asarray(f, dtype=float)
    osc = float(f.max() - f.min())
    tr = evolve(model, n)
    eta_n = tr.etas[n]
    vsig = relaxation_time(model)
    w = var.w_soft(model, n, f)
    rhs_w = float(eta_n @ (f - eta_n @ f) ** 2) + 2 / (1 + theta) / (1 - math.exp(-1)) / _sin_a(d) * (vsig - 1) * osc
    if math.isfinite(vsig):
        out.append(make_report("prop-var-soft.w", dict(p, mode="report"), w, rhs_w,
                               "bound uses the printed relaxation time"))
    else:
        out.append(not_applicable("prop-var-soft.w", dict(p, mode="report"), "relaxation time undefined"))
    vbound = (n + 1) * _rho_g(theta) / _sin_a(d) * float(np.max(np.abs(f)))
    out.append(make_report("prop-var-soft.v", dict(p, mode="report"), var.v_soft(model, n, f), vbound))
    sup_w = max(var.w_soft(eq, k, f) for k in range(n + 1))
    fc = f - float(pi @ f)
    if 1 + basis.E1bar > 0:
        unif = float(pi @ fc ** 2) + 2 * E0 * (1 + E0) / (1 + basis.E1bar) * float(np.mean(fc ** 2))
        out.append(make_report("prop-var-soft.equilibrium", dict(p, mode="report"), sup_w, unif))
    else:
        out.append(not_applicable("prop-var-soft.equilibrium", dict(p, mode="report"),
                                  "constant (1 + E0)/(1 + E1bar) is infinite for a periodic chain"))
    if n >= 1:
        for cmp in var.hard_soft_comparisons(model, n, f):
            out.append(make_report(f"comparison.{cmp.name}", p, cmp.rhs, cmp.lhs))
        wh = E0 * var.w_hard(eq, n, f)
        ws = var.w_soft(eq, n - 1, f)
        vh = var.v_hard(eq, n, f - pi @ f) / E0
        out.append(make_report("equilibrium-hard-1.w", dict(p, kind="equality"), abs(wh - ws), 0.0))
        out.append(make_report("equilibrium-hard-1.v", dict(p, kind="equality"), abs(vh - ws), 0.0))
        closed = var.v_hard_equilibrium_phi0(model, n)
        generic = var.v_hard(eq, n, phi0)
        out.append(make_report("equilibrium-hard-2", dict(p, kind="equality", value=generic),
                               abs(closed - generic), 0.0))
    return out


def check_dp_equilibrium(model: Model) -> list[CheckReport]:
    """The corrected Doob variance of phi0 vanishes at equilibrium; the first-power form does not."""
    p = _params(model)
    pi = quasi_stationary(model)[0].weights
    phi0 = eigensystem(model).phi0
    m = float(pi @ phi0)
    printed = m * (1 - m)
    eq = model.with_eta0("pi")
    corrected = var.v_dp(eq, 0, phi0)
    return [
        make_report("dp-equilibrium.corrected-zero", dict(p, kind="equality"), abs(corrected), 0.0),
        make_report("dp-equilibrium.printed-nonnegative", dict(p, value=printed), 0.0, printed,
                    "first-power second moment gives a negative variance"),
    ]


CHECKS = ("thm1", "thm2", "thm3", "thm4", "ratio", "taylor", "isdeg", "variance", "dp")


def run_checks(model: Model, which: str = "all", n: int = 10) -> list[CheckReport]:
    names = CHECKS if which == "all" else (which,)
    out = []
    for name in names:
        if name == "thm1":
            out += check_theorem1(model, n)
        elif name == "thm2":
            out += check_theorem2(model, n)
        elif name == "thm3":
            out += check_theorem3(model, n)
        elif name == "thm4":
            out += check_theorem4(model)
        elif name == "ratio":
            out += check_prop_ratio(model, max(n, 100))
        elif name == "taylor":
            out += check_taylor()
        elif name == "isdeg":
            out += check_is_degeneracy(model)
        elif name == "variance":
            out += check_variance(model, n)
        elif name == "dp":
            out += check_dp_equilibrium(model)
        else:
            raise ValueError(f"unknown check {name!r}; choose from {CHECKS} or 'all'")
    return out
