"""Superlinear recurrences ``W_{k+1} = C^k W_k^beta`` and their convergence threshold.

The extremal sequence is iterated in log space. With
``V_k = C^{k/(beta-1) + 1/(beta-1)^2} W_k`` the recurrence becomes
``V_{k+1} = V_k^beta`` exactly, so the sequence tends to 0 iff some
``V_k < 1`` and diverges iff some ``V_k > 1``. ``V_0 < 1`` is the statement
``W_0 < C^{-1/(beta-1)^2}``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

# relative slack on log V_k attributed to rounding, amplified by beta^k
ROUND_REL = 64 * 2.0 ** -52


@dataclass(frozen=True)
class RecurrenceParams:
    C: float
    beta: float
    W0: float
    k_max: int = 60

    def __post_init__(self):
        if not self.C > 1:
            raise ValueError(f"C must be > 1: {self.C}")
        if not self.beta > 1:
            raise ValueError(f"beta must be > 1: {self.beta}")
        if not self.W0 >= 0:
            raise ValueError(f"W0 must be >= 0: {self.W0}")
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1: {self.k_max}")


@dataclass(frozen=True)
class Trace:
    """Iterates ``W_0..W_K``; ``overflow`` is set when ``W_{K+1}`` would exceed the float range."""

    W: tuple[float, ...]
    overflow: bool
    k_at_underflow: int | None


@dataclass(frozen=True)
class Convergence:
    """``converged`` is True, False, or None (undecided)."""

    converged: bool | None
    k_decided: int | None
    tail_bound: float | None
    reason: str


def threshold(C: float, beta: float) -> float:
    """``C^{-1/(beta-1)^2}``."""
    if not C > 1 or not beta > 1:
        raise ValueError(f"need C > 1 and beta > 1, got C={C}, beta={beta}")
    return C ** (-1.0 / (beta - 1.0) ** 2)


def _log_iterates(p: RecurrenceParams):
    lc = math.log(p.C)
    lw = math.log(p.W0) if p.W0 > 0 else -math.inf
    out = [lw]
    for k in range(p.k_max):
        lw = k * lc + p.beta * lw
        out.append(lw)
    return out


def iterate(p: RecurrenceParams) -> Trace:
    """``W_{k+1} = C^k W_k^beta`` for ``k < k_max``; underflow clamps to 0."""
    W = [float(p.W0)]
    k_under = 0 if p.W0 == 0 else None
    for k in range(p.k_max):
        try:
            nxt = p.C ** k * W[-1] ** p.beta
        except OverflowError:
            return Trace(tuple(W), True, k_under)
        if math.isinf(nxt):
            return Trace(tuple(W), True, k_under)
        if nxt == 0.0 and k_under is None:
            k_under = k + 1
        W.append(nxt)
    return Trace(tuple(W), False, k_under)


def converges(p: RecurrenceParams) -> Convergence:
    """Decide whether the extremal sequence tends to 0.

    True once ``W_K < 1e-30`` with ``V_K < 1`` or once ``log V_k`` is
    negative beyond rounding; False once it is positive beyond rounding;
    None if ``k_max`` iterations do not separate ``V_k`` from 1 (the
    boundary ``W_0 = threshold`` stays undecided).
    The tail bound is ``sup_{j >= k} W_j <= C^{-j/(beta-1) - 1/(beta-1)^2}``
    evaluated at the deciding ``k``.
    """
    if p.W0 == 0:
        return Convergence(True, 0, 0.0, "zero sequence")
    lc = math.log(p.C)
    b1 = p.beta - 1.0
    logs = _log_iterates(p)
    for k, lw in enumerate(logs):
        shift = (k / b1 + 1.0 / b1 ** 2) * lc
        lv = lw + shift
        slack = ROUND_REL * (p.beta ** k) * (abs(math.log(p.W0)) + abs(lc) / b1 ** 2 + 1.0)
        if lv < -slack:
            return Convergence(True, k, math.exp(-shift), "V_k below 1")
        if lv > slack:
            return Convergence(False, k, None, "V_k above 1")
    return Convergence(None, None, None, "undecided within k_max")


def sweep(n_C: int = 20, n_beta: int = 20, n_W0: int = 10, C_max: float = 10.0,
          beta_max: float = 4.0, k_max: int = 60) -> list[RecurrenceParams]:
    """Log-spaced ``(C, beta)`` grid on ``(1, C_max] x (1, beta_max]`` with ``W0`` below threshold.

    ``W0`` runs over ``n_W0`` log-spaced fractions of the threshold in
    ``[1e-6, 0.999]``.
    """
    Cs = [C_max ** ((i + 1) / n_C) for i in range(n_C)]
    betas = [beta_max ** ((j + 1) / n_beta) for j in range(n_beta)]
    lo, hi = math.log(1e-6), math.log(0.999)
    fracs = [math.exp(lo + (hi - lo) * i / max(n_W0 - 1, 1)) for i in range(n_W0)]
    return [RecurrenceParams(C, b, f * threshold(C, b), k_max) for C in Cs for b in betas for f in fracs]


def table_csv(rows) -> str:
    """CSV with header ``C,beta,W0,converged,k_at_underflow``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["C", "beta", "W0", "converged", "k_at_underflow"])
    for p in rows:
        c = converges(p)
        tr = iterate(p)
        label = {True: "true", False: "false", None: "undecided"}[c.converged]
        w.writerow([repr(p.C), repr(p.beta), repr(p.W0), label,
                    "" if tr.k_at_underflow is None else tr.k_at_underflow])
    return buf.getvalue()
