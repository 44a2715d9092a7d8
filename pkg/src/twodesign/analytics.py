"""Closed-form depth formulas and lower bounds.

All logarithms are natural.  The semi-empirical open-boundary brickwork
depth is alpha*(log n - log eps) + beta; the collision-probability variant
differs only in one numerator factor of beta, and the difference of the
two depths is the anticoncentration gap, approaching
64 pi^2 / (9 log(5/4) n^2) for qubits.
"""

from __future__ import annotations

import math


class FormulaDomainError(ValueError):
    pass


def _check(n: int, q: int):
    if n < 3:
        raise FormulaDomainError(f"formulas need n >= 3, got n={n}")
    if q < 2:
        raise FormulaDomainError(f"need q >= 2, got q={q}")


def brickwork_alpha(n: int, q: int) -> float:
    """Layers per e-fold of error: 1 / log((q^2+1) / (2q cos(pi/n)))."""
    _check(n, q)
    return 1.0 / math.log((q * q + 1.0) / (2.0 * q * math.cos(math.pi / n)))


def _beta_numerator_factor(n: int, q: int, variant: str) -> float:
    if variant == "entangled_boundaries":
        return ((q * q + 1.0) ** 2 - 4.0 * q * q * math.cos(2.0 * math.pi / n)) ** 2
    if variant == "collision":
        return (q * q - 1.0) ** 4
    raise FormulaDomainError(f"unknown variant {variant!r}")


def brickwork_beta(n: int, q: int, variant: str = "entangled_boundaries") -> float:
    """Additive depth offset for the open-boundary brickwork.

    beta = 1 + alpha * log[ 4 cot^2(pi/n) * F /
        ( n^2 [q^8 - 2(q^4-1)q^2 cos(2pi/n) - 1]
          + n [4 q^4 cos(4pi/n) - 4 q^4] ) ]
    with F the variant's numerator factor: the squared entangled-boundaries
    overlap term, or (q^2-1)^4 for the collision probability.
    """
    _check(n, q)
    cot2 = 1.0 / math.tan(math.pi / n) ** 2
    num = 4.0 * cot2 * _beta_numerator_factor(n, q, variant)
    q2, q4, q8 = q * q, float(q) ** 4, float(q) ** 8
    den = (n * n * (q8 - 2.0 * (q4 - 1.0) * q2 * math.cos(2.0 * math.pi / n) - 1.0)
           + n * (4.0 * q4 * math.cos(4.0 * math.pi / n) - 4.0 * q4))
    return 1.0 + brickwork_alpha(n, q) * math.log(num / den)


def design_depth_formula(n: int, q: int, epsilon: float,
                         variant: str = "entangled_boundaries") -> float:
    """Semi-empirical brickwork depth: alpha*(log n - log eps) + beta."""
    if not 0.0 < epsilon < 1.0:
        raise FormulaDomainError(f"need 0 < eps < 1, got {epsilon}")
    return (brickwork_alpha(n, q) * (math.log(n) - math.log(epsilon))
            + brickwork_beta(n, q, variant))


def anticoncentration_gap_asymptote(n: int, q: int = 2) -> float:
    """Large-n limit of depth(entangled) - depth(collision) for qubits."""
    if q != 2:
        raise FormulaDomainError("the closed-form gap asymptote is for q = 2")
    return 64.0 * math.pi ** 2 / (9.0 * math.log(5.0 / 4.0) * n * n)


def dalzell_bounds(n: int, q: int, epsilon: float, kind: str) -> float:
    """Anticoncentration-based lower bounds.

    kind="brickwork": lower bound on brickwork depth,
        (log n + log A - log log(2(1+eps))) / log((q^2+1)/(2q)),
        A = 1/(8ce) with c = 3e^10; nontrivial only above n ~ 10^6.
    kind="general": lower bound on gates-per-site times two (2s/n) for any
        two-site-gate architecture; for qubits this is the printed relaxed
        form log_5(n/eps) - 0.801.
    """
    if epsilon <= 0:
        raise FormulaDomainError("need eps > 0")
    if kind == "brickwork":
        c = 3.0 * math.exp(10.0)
        log_a = -math.log(8.0 * c * math.e)
        return ((math.log(n) + log_a - math.log(math.log(2.0 * (1.0 + epsilon))))
                / math.log((q * q + 1.0) / (2.0 * q)))
    if kind == "general":
        if q == 2:
            const = 0.801
        else:
            const = (math.log(2.0 * (q + 1.0) / math.log(q + 1.0))
                     / math.log(q * q + 1.0))
        return math.log(n / epsilon) / math.log(q * q + 1.0) - const
    raise FormulaDomainError(f"unknown bound kind {kind!r}")


def disconnection_bounds(n: int, q: int, epsilon: float, shape: str,
                         p: float | None = None, m: int | None = None) -> float:
    """Consequences of cuts that are rarely crossed.

    shape="general": lower bound on the multiplicative error of an
        ensemble that with probability p has no gate across a cut
        isolating m sites: p (q^m+1)(q^m+q^n) / ((q^m-1)(q^n-q^m)).
    shape="bridge": lower bound on the gate count for the bridge graph to
        reach error eps: n(n-2)/4 * log(1/eps).
    """
    if shape == "general":
        if p is None or m is None:
            raise FormulaDomainError("general shape needs p and m")
        if not 0 <= p <= 1:
            raise FormulaDomainError("p must be a probability")
        if not 0 < m < n:
            raise FormulaDomainError("cut size m must satisfy 0 < m < n")
        qm = float(q) ** m
        qn = float(q) ** n
        return p * (qm + 1.0) * (qm + qn) / ((qm - 1.0) * (qn - qm))
    if shape == "bridge":
        if not 0 < epsilon < 1:
            raise FormulaDomainError("need 0 < eps < 1")
        return n * (n - 2.0) / 4.0 * math.log(1.0 / epsilon)
    raise FormulaDomainError(f"unknown shape {shape!r}")
