"""Second-moment permutation-basis algebra for qudit circuits.

Every two-copy moment-space vector is expanded in the (non-orthogonal)
site-local basis {|I>, |S>} of identity and swap states, with Gram overlap
<I|S> = 1/q per site.  A state on n sites is a float64 coefficient array of
length 2^n; bit i of the array index is site i's label (0 = I, 1 = S).
This index convention is frozen: the dense oracle and every recorded
fixture depend on it.

Normalization convention: |sigma> carries a 1/q factor per site (the
two-copy permutation state is divided by q^(t/2) with t = 2).  Final error
ratios do not depend on this choice, but intermediate values such as
boundary-state coefficients do.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


class InvalidDimensionError(ValueError):
    pass


def _check_q(q: int) -> int:
    q = int(q)
    if q < 2:
        raise InvalidDimensionError(f"local dimension must be >= 2, got {q}")
    return q


def parity(a) -> int:
    """Parity of the number of antisymmetric (swap-label) sites in a."""
    return int(sum(int(b) for b in a) & 1)


def bits_to_mask(a) -> int:
    """Pack an experiment bit vector into an int, bit i = site i."""
    mask = 0
    for i, b in enumerate(a):
        if int(b):
            mask |= 1 << i
    return mask


def mask_to_bits(mask: int, n: int) -> tuple[int, ...]:
    return tuple((mask >> i) & 1 for i in range(n))


@dataclass
class CommutantState:
    """Coefficients of a two-copy moment-space vector in the |sigma> basis."""

    n: int
    q: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (1 << self.n,):
            raise ValueError(
                f"expected {1 << self.n} coefficients, got {self.coeffs.shape}")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("coefficients must be finite")

    def copy(self) -> "CommutantState":
        return CommutantState(self.n, self.q, self.coeffs.copy())


@dataclass
class GateTransfer:
    """4x4 transfer matrix of one Haar two-site gate over {II, IS, SI, SS}."""

    q: int
    m: np.ndarray


def weingarten_pair(q: int, copies_dim: int) -> tuple[float, float]:
    """Weingarten coefficients (identity, swap) for U(D), D = copies_dim.

    These are the expansion weights of the permutation cobasis: the inverse
    Gram matrix of {|I>, |S>} at dimension D equals D^2 times the matrix
    with Wg(identity) on the diagonal and Wg(swap) off it.
    """
    _check_q(q)
    d = int(copies_dim)
    if d < 2:
        raise InvalidDimensionError(
            f"fused copy dimension must be >= 2, got {d}")
    denom = d * d - 1.0
    return 1.0 / denom, -1.0 / (d * denom)


def gram_matrix(dim: int) -> np.ndarray:
    return np.array([[1.0, 1.0 / dim], [1.0 / dim, 1.0]])


def cobasis_matrix(dim: int) -> np.ndarray:
    """Rows are cobasis vectors expanded in {|I>, |S>} (the inverse Gram)."""
    d = float(dim)
    denom = d * d - 1.0
    return (d * d / denom) * np.array([[1.0, -1.0 / d], [-1.0 / d, 1.0]])


def swap_mix_coefficient(q: int) -> float:
    """Weight with which IS / SI feed II and SS under one gate: q/(q^2+1)."""
    q = _check_q(q)
    return q / (q * q + 1.0)


def gate_transfer(q: int) -> GateTransfer:
    """Transfer matrix of a single Haar gate on two sites.

    Columns II and SS are fixed points; columns IS and SI map to
    q/(q^2+1) * (II + SS).  The matrix is an idempotent projector onto the
    two-site fused commutant, expressed in the site-local basis/cobasis
    pairing.
    """
    q = _check_q(q)
    c = swap_mix_coefficient(q)
    m = np.zeros((4, 4))
    m[0, 0] = 1.0
    m[3, 3] = 1.0
    m[0, 1] = m[0, 2] = c
    m[3, 1] = m[3, 2] = c
    return GateTransfer(q, m)


def boundary_pair(bit: int, q: int) -> tuple[float, float]:
    """(I, S) coefficients of one site's boundary factor.

    bit = 0 prepares the symmetric combination, bit = 1 the antisymmetric
    one; with s = (-1)^bit the pair is ((1 - s/q), (s - 1/q)) / (1 - 1/q^2),
    which collapses to q/(q+1) * (1, 1) and q/(q-1) * (1, -1).
    """
    q = _check_q(q)
    s = -1.0 if int(bit) else 1.0
    norm = 1.0 - 1.0 / (q * q)
    return (1.0 - s / q) / norm, (s - 1.0 / q) / norm


def boundary_state(a, q: int) -> CommutantState:
    """Product boundary state selecting symmetric/antisymmetric sites per a."""
    q = _check_q(q)
    a = tuple(int(b) for b in a)
    n = len(a)
    if n < 1:
        raise ValueError("need at least one site")
    coeffs = np.array([1.0])
    for bit in a:
        fi, fs = boundary_pair(bit, q)
        coeffs = np.concatenate([coeffs * fi, coeffs * fs])
    return CommutantState(n, q, coeffs)


def boundary_scale(a, q: int) -> float:
    """Magnitude shared by all coefficients of boundary_state(a, q)."""
    q = _check_q(q)
    w = sum(int(b) for b in a)
    n = len(a)
    return (q / (q + 1.0)) ** (n - w) * (q / (q - 1.0)) ** w


def boundary_weights(a) -> np.ndarray:
    """Left contraction weights: entry sigma is prod_i (-1)^(a_i [sigma_i=S])."""
    a = tuple(int(b) for b in a)
    return kernels.walsh_signs(len(a), bits_to_mask(a))


def haar_moment_diagonal(n: int, q: int, par) -> float:
    """Diagonal Haar quadratic form: 2/(1 + q^-n) even, 2/(1 - q^-n) odd."""
    q = _check_q(q)
    if n < 1:
        raise ValueError("need at least one site")
    if isinstance(par, str):
        par = {"even": 0, "odd": 1}[par]
    qn = float(q) ** (-n)
    return 2.0 / (1.0 - qn) if int(par) & 1 else 2.0 / (1.0 + qn)


def apply_two_site(state: CommutantState, i: int, j: int) -> CommutantState:
    """Apply one Haar-gate transfer on sites (i, j), updating in place.

    Linear and idempotent; runs over all 2^n basis indices, touching only
    the (i, j) bit pair of each.
    """
    n = state.n
    if i == j:
        raise IndexError("two-site update needs distinct sites")
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"sites ({i}, {j}) out of range for n={n}")
    c = swap_mix_coefficient(state.q)
    kernels.gate_apply_batch(state.coeffs.reshape(1, -1), i, j, c)
    return state


def state_dot(weights: np.ndarray, state: CommutantState) -> float:
    return float(weights @ state.coeffs)


def global_haar_project(state: CommutantState) -> CommutantState:
    """Project onto the global two-element commutant span {|I..I>, |S..S>}."""
    n, q = state.n, state.q
    pc = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)
    qi = float(q) ** (-pc)          # <I..I|tau> = q^(-|tau|)
    qs = float(q) ** (pc - n)       # <S..S|tau> = q^(|tau|-n)
    ov = np.array([state.coeffs @ qi, state.coeffs @ qs])
    ci, cs = cobasis_matrix(q ** n) @ ov
    coeffs = np.zeros_like(state.coeffs)
    coeffs[0] = ci
    coeffs[-1] = cs
    state.coeffs[:] = coeffs
    return state
