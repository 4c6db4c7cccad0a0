"""Exact path counts of the non-lazy walk confined to {1..d}."""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .model import Kernel, Model


@dataclass(frozen=True, eq=False)
class PathCountTable:
    """``counts[n][x-1][y-1]`` is the number of n-step paths x -> y that stay in S."""

    d: int
    nmax: int
    counts: tuple

    def C(self, n: int, x: int, y: int | None = None) -> int:
        row = self.counts[n][x - 1]
        return sum(row) if y is None else row[y - 1]

    def row_sums(self, n: int) -> list:
        return [sum(r) for r in self.counts[n]]


def count_paths(d: int, nmax: int) -> PathCountTable:
    if d < 1 or nmax < 0:
        raise ValueError("need d >= 1 and nmax >= 0")
    cur = [[int(x == y) for y in range(d)] for x in range(d)]
    table = [tuple(tuple(r) for r in cur)]
    for _ in range(nmax):
        nxt = []
        for x in range(d):
            r = cur[x]
            nxt.append([(r[y - 1] if y > 0 else 0) + (r[y + 1] if y < d - 1 else 0) for y in range(d)])
        cur = nxt
        table.append(tuple(tuple(r) for r in cur))
    return PathCountTable(d, nmax, tuple(table))


def spectral_count(d: int, n: int, x: int, y: int) -> float:
    """Q_0^n(x, y) from the sine expansion."""
    a = math.pi / (d + 1)
    i = np.arange(1, d + 1)
    return float(2.0 / (d + 1) * np.sum(np.cos(i * a) ** n * np.sin(i * x * a) * np.sin(i * y * a)))


def spectral_count_rounded(d: int, n: int, x: int, y: int | None = None) -> int:
    """2^n times the sine expansion, summed in extended precision and rounded.

    Counts reach 2^n, so float64 cannot round them exactly past n of about 50;
    the working precision grows with n.  With ``y=None`` the corrected
    cotangent row sum is used.
    """
    with mpmath.workdps(30 + int(0.31 * n)):
        a = mpmath.pi / (d + 1)
        total = mpmath.mpf(0)
        for i in range(1, d + 1):
            if y is None:
                if i % 2 == 0:
                    continue
                tail = mpmath.cot(i * a / 2)
            else:
                tail = mpmath.sin(i * y * a)
            total += mpmath.cos(i * a) ** n * mpmath.sin(i * x * a) * tail
        return int(mpmath.nint(total * 2 ** n * 2 / (d + 1)))


def spectral_row_count(d: int, n: int, x: int, form: str = "corrected") -> float:
    """Q_0^n(1)(x) from the odd-index cotangent sum.

    The sum over y of sin(i y pi/(d+1)) equals cot(i pi/(2(d+1))) for odd i,
    which is the ``corrected`` form; ``printed`` uses cot(i pi/(d+1)).
    """
    a = math.pi / (d + 1)
    i = np.arange(1, d + 1, 2)
    if form == "corrected":
        ct = 1.0 / np.tan(i * a / 2)
    elif form == "printed":
        ct = 1.0 / np.tan(i * a)
    else:
        raise ValueError(f"unknown form {form!r}")
    return float(2.0 / (d + 1) * np.sum(np.cos(i * a) ** n * np.sin(i * x * a) * ct))


def multiple_angle_recurrence(d: int, n: int, x: int, table: PathCountTable | None = None) -> int:
    """C_n(x) from the counts C_m(1) started at the boundary state."""
    if not 1 <= x <= d:
        raise ValueError(f"x must lie in 1..{d}")
    need = n + x - 1
    if table is None or table.nmax < need:
        table = count_paths(d, need)
    total = 0
    for l in range((x - 1) // 2 + 1):
        total += (-1) ** l * math.comb(x - 1 - l, l) * table.C(n + x - 1 - 2 * l, 1)
    if total != table.C(n, x):
        raise AssertionError(f"recurrence mismatch at d={d}, n={n}, x={x}")
    return total


def binomial_theta_relation(model: Model, n: int) -> Kernel:
    """Q^n = (1 + theta/2)^{-n} sum_m binom(n, m) (theta/2)^{n-m} Q_0^m."""
    d, h = model.d, model.theta / 2.0
    Q0 = Model(d, 0.0, model.eta0)
    from .model import matrix_Q

    A = matrix_Q(Q0).entries
    P = np.eye(d)
    total = np.zeros((d, d))
    for m in range(n + 1):
        total += math.comb(n, m) * h ** (n - m) * P
        P = P @ A
    return Kernel(total / (1.0 + h) ** n, "generic")
