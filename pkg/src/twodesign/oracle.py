"""Dense ground-truth oracle for small systems (n <= 3 by default).

Builds exact vectorized moment operators E[conj(U) x conj(U) x U x U] from
the two-element Weingarten sum, and extracts the multiplicative error two
independent ways: a bisection over epsilon testing positive
semidefiniteness of the Choi combinations, and the closed-form maximum of
sector-value ratios.  A Monte Carlo Haar average validates the Weingarten
construction itself.

Layout conventions (frozen; every comparison depends on them):
  * site-major: the q^(4n)-dimensional doubled space factors over sites,
    each site contributing four legs ordered (c0, c1, c2, c3), where
    (c0, c1) are the conjugated copies.  All DenseMoment matrices use it.
  * sigma-vector indices: bit i of a 2^n index is site i's label,
    matching the engine's coefficient arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .architectures import EnsembleSpec, brickwork_layers
from .perm_algebra import (InvalidDimensionError, boundary_pair,
                           cobasis_matrix)

DEFAULT_SIZE_CAP = 3
PSD_SLACK = 1e-10
BISECTION_TOL = 1e-12
BISECTION_MAXITER = 200
EIG_GROUP_RTOL = 1e-9


class OracleSizeError(ValueError):
    pass


def _check_cap(n: int, cap: int | None):
    cap = DEFAULT_SIZE_CAP if cap is None else cap
    if n > cap:
        raise OracleSizeError(
            f"dense oracle capped at n <= {cap} (q^(4n) matrix), got n={n}")


@dataclass
class DenseMoment:
    """Exact vectorized two-copy moment operator, q^(4n) x q^(4n)."""

    n: int
    q: int
    matrix: sp.csr_array

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class SectorMatrix:
    """Cobasis-pairing coefficients M[sigma, tau] = <cob sigma|V|cob tau>.

    For the Haar channel only the four (uniform sigma, uniform tau)
    entries are nonzero.
    """

    n: int
    q: int
    m: np.ndarray


@dataclass
class PsdReport:
    ok: bool
    min_eig: float
    symmetric: bool
    max_eig: float


# ---------------------------------------------------------------------------
# permutation-state vectors in the doubled space
# ---------------------------------------------------------------------------


def perm_site_vectors(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense |I> and |S> on one site's four legs (dim q^4), 1/q normalized."""
    vi = np.zeros(q ** 4)
    vs = np.zeros(q ** 4)
    for i in range(q):
        for j in range(q):
            vi[((i * q + j) * q + i) * q + j] = 1.0 / q
            vs[((i * q + j) * q + j) * q + i] = 1.0 / q
    return vi, vs


def basis_matrix(n: int, q: int) -> np.ndarray:
    """Columns |sigma_vec>, column index bit i = site i's label."""
    vi, vs = perm_site_vectors(q)
    cols = np.empty((q ** (4 * n), 1 << n))
    for x in range(1 << n):
        vec = np.array([1.0])
        for site in range(n):
            vec = np.kron(vec, vs if (x >> site) & 1 else vi)
        cols[:, x] = vec
    return cols


def cobasis_dense_matrix(n: int, q: int) -> np.ndarray:
    """Columns are the dual vectors, <tau|cob sigma> = delta."""
    vi, vs = perm_site_vectors(q)
    inv = cobasis_matrix(q)
    ci = inv[0, 0] * vi + inv[0, 1] * vs
    cs = inv[1, 0] * vi + inv[1, 1] * vs
    cols = np.empty((q ** (4 * n), 1 << n))
    for x in range(1 << n):
        vec = np.array([1.0])
        for site in range(n):
            vec = np.kron(vec, cs if (x >> site) & 1 else ci)
        cols[:, x] = vec
    return cols


def dense_boundary_vector(a, q: int) -> np.ndarray:
    """|Psi(a)> as a dense doubled-space vector (site-major)."""
    vi, vs = perm_site_vectors(q)
    vec = np.array([1.0])
    for bit in a:
        ci, cs = boundary_pair(bit, q)
        vec = np.kron(vec, ci * vi + cs * vs)
    return vec


# ---------------------------------------------------------------------------
# exact moment operators (sparse inside)
# ---------------------------------------------------------------------------


def _site_projector(q: int) -> sp.csr_array:
    vi, vs = perm_site_vectors(q)
    inv = cobasis_matrix(q)
    p = (inv[0, 0] * np.outer(vi, vi) + inv[0, 1] * np.outer(vi, vs)
         + inv[1, 0] * np.outer(vs, vi) + inv[1, 1] * np.outer(vs, vs))
    return sp.csr_array(p)


def dense_singles_moment(n: int, q: int = 2, cap: int | None = None) -> DenseMoment:
    """Moment of independent single-site Haars: the commutant projector."""
    _check_cap(n, cap)
    p = _site_projector(q)
    m = sp.csr_array(sp.identity(1, format="csr"))
    for _ in range(n):
        m = sp.csr_array(sp.kron(m, p, format="csr"))
    return DenseMoment(n, q, m)


def dense_gate_moment(sites, n: int, q: int = 2, cap: int | None = None) -> DenseMoment:
    """E[conj(U) x conj(U) x U x U] for one Haar gate on `sites`.

    Built from the two-element Weingarten sum at fused dimension q^2: the
    orthogonal projector onto the two-site fused commutant, tensored with
    the identity elsewhere.
    """
    _check_cap(n, cap)
    i, j = sites
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise InvalidDimensionError(f"gate needs two distinct sites, got {sites}")
    vi, vs = perm_site_vectors(q)
    inv = cobasis_matrix(q * q)
    vecs = (vi, vs)
    total = None
    for s in range(2):
        for t in range(2):
            factors = []
            for site in range(n):
                if site in (i, j):
                    factors.append(sp.csr_array(np.outer(vecs[s], vecs[t])))
                else:
                    factors.append(sp.identity(q ** 4, format="csr"))
            term = sp.csr_array(sp.identity(1, format="csr"))
            for f in factors:
                term = sp.csr_array(sp.kron(term, f, format="csr"))
            term = inv[s, t] * term
            total = term if total is None else total + term
    return DenseMoment(n, q, sp.csr_array(total))


def dense_haar_moment(n: int, q: int = 2, cap: int | None = None) -> DenseMoment:
    """Global Haar moment: the rank-2 projector onto the global span."""
    _check_cap(n, cap)
    b = basis_matrix(n, q)
    vi = b[:, 0]
    vs = b[:, (1 << n) - 1]
    inv = cobasis_matrix(q ** n)
    m = (inv[0, 0] * np.outer(vi, vi) + inv[0, 1] * np.outer(vi, vs)
         + inv[1, 0] * np.outer(vs, vi) + inv[1, 1] * np.outer(vs, vs))
    return DenseMoment(n, q, sp.csr_array(m))


def _layer_moment(pairs, n: int, q: int) -> sp.csr_array:
    m = sp.identity(q ** (4 * n), format="csr")
    for pair in pairs:
        m = sp.csr_array(dense_gate_moment(pair, n, q, cap=n).matrix @ m)
    return sp.csr_array(m)


def dense_spec_moment(spec: EnsembleSpec, steps: int,
                      cap: int | None = None) -> DenseMoment:
    """Exact ensemble moment after `steps` steps, singles layer included.

    The free single-site unitaries commute with every gate projector, so
    they are multiplied in once regardless of step count; this is what
    makes the ensembles locally invariant at every size.
    """
    _check_cap(spec.n, cap)
    n, q = spec.n, spec.q
    singles = dense_singles_moment(n, q, cap=n).matrix
    if spec.kind == "singles" or steps == 0:
        return DenseMoment(n, q, singles)
    if spec.kind == "graph":
        edges = spec.graph.edges
        t = None
        for e in edges:
            ge = dense_gate_moment(e, n, q, cap=n).matrix
            t = ge if t is None else t + ge
        t = sp.csr_array(t * (1.0 / len(edges)))
        m = sp.identity(q ** (4 * n), format="csr")
        for _ in range(steps):
            m = sp.csr_array(t @ m)
        return DenseMoment(n, q, sp.csr_array(m @ singles))
    if spec.kind in ("brickwork_obc", "brickwork_pbc"):
        boundary = "open" if spec.kind == "brickwork_obc" else "periodic"
        l_odd, l_even = brickwork_layers(n, boundary)
        layer_ms = (_layer_moment(l_odd, n, q), _layer_moment(l_even, n, q))
        m = sp.identity(q ** (4 * n), format="csr")
        for s in range(1, steps + 1):
            m = sp.csr_array(layer_ms[(s - 1) % 2] @ m)
        return DenseMoment(n, q, sp.csr_array(m @ singles))
    raise OracleSizeError(f"no dense construction for kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Monte Carlo Haar averaging
# ---------------------------------------------------------------------------


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: complex Ginibre, QR, diagonal phase fix."""
    z = (rng.standard_normal((dim, dim))
         + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    qm, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return qm * (d / np.abs(d))


def _embed_two_site(w: np.ndarray, i: int, j: int, n: int, q: int) -> np.ndarray:
    """Lift a two-site gate to the full q^n space (site 0 most significant)."""
    dims = [q] * n
    full = np.zeros((q ** n, q ** n), dtype=complex)
    w4 = w.reshape(q, q, q, q)
    for x in range(q ** n):
        digits = list(np.unravel_index(x, dims))
        for a in range(q):
            for b in range(q):
                dd = list(digits)
                xi, xj = dd[i], dd[j]
                dd[i], dd[j] = a, b
                y = int(np.ravel_multi_index(dd, dims))
                full[y, x] += w4[a, b, xi, xj]
    return full


_SM_PERM_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _copy_to_site_major(n: int, q: int) -> np.ndarray:
    """Map each copy-major doubled-space index to its site-major index.

    copy-major leg k holds (copy c, site s) with c = k // n, s = k % n;
    that leg sits at position 4*s + c in the site-major layout.
    """
    key = (n, q)
    if key not in _SM_PERM_CACHE:
        legs = 4 * n
        idx = np.arange(q ** legs)
        digits = np.empty((legs, len(idx)), dtype=np.int64)
        rem = idx.copy()
        for k in range(legs - 1, -1, -1):
            digits[k] = rem % q
            rem //= q
        weights = np.array([q ** (legs - 1 - (4 * (k % n) + k // n))
                            for k in range(legs)], dtype=np.int64)
        _SM_PERM_CACHE[key] = (digits * weights[:, None]).sum(axis=0)
    return _SM_PERM_CACHE[key]


def _reorder_to_site_major(mat_cm: np.ndarray, n: int, q: int) -> np.ndarray:
    perm = _copy_to_site_major(n, q)
    out = np.empty_like(mat_cm)
    out[perm[:, None], perm[None, :]] = mat_cm
    return out


def mc_haar_average(arrangement, n: int, q: int = 2, samples: int = 1000,
                    seed: int = 0, cap: int | None = None) -> DenseMoment:
    """Empirical mean of conj(U) x conj(U) x U x U over sampled circuits.

    Each sample composes Haar two-site gates at the arrangement's
    locations.  Returned in the site-major layout of the exact builders;
    the imaginary part (pure sampling noise) is dropped.
    """
    _check_cap(n, cap)
    d = q ** n
    d2 = d * d
    rng = np.random.default_rng(seed)
    # E[kron(conj(U2), U2)] via batched outer products of raveled U2:
    # outer[(i,j),(k,l)] = conj(U2)[i,j] U2[k,l], then (i,j,k,l)->(i,k,j,l)
    outer_acc = np.zeros((d2 * d2, d2 * d2), dtype=complex)
    chunk = max(1, min(samples, (1 << 23) // (d2 * d2)))
    done = 0
    while done < samples:
        b = min(chunk, samples - done)
        lhs = np.empty((b, d2 * d2), dtype=complex)
        rhs = np.empty((b, d2 * d2), dtype=complex)
        for k in range(b):
            total = np.eye(d, dtype=complex)
            for pair in arrangement:
                w = haar_unitary(q * q, rng)
                total = _embed_two_site(w, pair[0], pair[1], n, q) @ total
            u2 = np.kron(total, total)
            lhs[k] = np.conj(u2).ravel()
            rhs[k] = u2.ravel()
        outer_acc += lhs.T @ rhs
        done += b
    outer_mean = outer_acc / samples
    v_cm = (outer_mean.reshape(d2, d2, d2, d2).transpose(0, 2, 1, 3)
            .reshape(d2 * d2, d2 * d2))
    return DenseMoment(n, q, sp.csr_array(
        _reorder_to_site_major(np.real(v_cm), n, q)))


# ---------------------------------------------------------------------------
# sector formula
# ---------------------------------------------------------------------------


def sector_matrix(moment: DenseMoment) -> SectorMatrix:
    """Extract M[sigma, tau] = <cob sigma| V |cob tau> from a dense moment."""
    c = cobasis_dense_matrix(moment.n, moment.q)
    return SectorMatrix(moment.n, moment.q, c.T @ (moment.matrix @ c))


def haar_sector_matrix(n: int, q: int = 2) -> SectorMatrix:
    """Analytic Haar sector matrix: 4 nonzero entries at uniform labels."""
    d = float(q) ** n
    m = np.zeros((1 << n, 1 << n))
    diag = d * d / (d * d - 1.0)
    off = -d / (d * d - 1.0)
    last = (1 << n) - 1
    m[0, 0] = m[last, last] = diag
    m[0, last] = m[last, 0] = off
    return SectorMatrix(n, q, m)


def _walsh(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint64)
    par = np.bitwise_count(idx[:, None] & idx[None, :]) & np.uint64(1)
    return 1.0 - 2.0 * par.astype(np.float64)


def sector_values(msec: SectorMatrix) -> np.ndarray:
    """Q[a, b] = <Psi(a)| V |Psi(b)> for all sign-vector pairs."""
    w = _walsh(msec.n)
    return w @ msec.m @ w.T


def sector_error(m_spec: SectorMatrix, m_haar: SectorMatrix,
                 n: int, q: int) -> float:
    """Multiplicative error as the max sector-ratio deviation.

    Sectors where the Haar value vanishes (opposite parities) are skipped;
    positivity of the spec's Choi matrix covers them automatically.
    """
    q_spec = sector_values(m_spec)
    q_haar = sector_values(m_haar)
    par = (np.bitwise_count(np.arange(1 << n, dtype=np.uint64))
           & np.uint64(1)).astype(np.int64)
    same = par[:, None] == par[None, :]
    return float(np.abs(q_spec[same] / q_haar[same] - 1.0).max())


def transfer_matrix(moment: DenseMoment) -> np.ndarray:
    """H[sigma, tau] = <cob sigma| V |tau>: the engine's step matrix."""
    c = cobasis_dense_matrix(moment.n, moment.q)
    b = basis_matrix(moment.n, moment.q)
    return c.T @ (moment.matrix @ b)


# ---------------------------------------------------------------------------
# Choi bisection
# ---------------------------------------------------------------------------


def choi_sparse(moment: DenseMoment) -> sp.csr_array:
    """Choi matrix of the channel whose vectorization is the given moment.

    Reshuffle: J[(a,b),(c,d)] = V_cm[(b,d),(a,c)] / q^(2n), computed by
    index arithmetic on the sparse entries.
    """
    n, q = moment.n, moment.q
    d = q ** (2 * n)
    perm = _copy_to_site_major(n, q)
    # invert the site-major storage back to copy-major indices
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    coo = moment.matrix.tocoo()
    rows_cm = inv[coo.row]
    cols_cm = inv[coo.col]
    x1, x2 = np.divmod(rows_cm, d)
    y1, y2 = np.divmod(cols_cm, d)
    j_rows = y1 * d + x1
    j_cols = y2 * d + x2
    return sp.csr_array(
        sp.coo_array((coo.data / d, (j_rows, j_cols)), shape=(d * d, d * d)))


class _JointBasis:
    """Shared eigenbasis for a batch of commuting Choi matrices."""

    def __init__(self, j_list: list[sp.csr_array], rng_seed: int = 7):
        rng = np.random.default_rng(rng_seed)
        mix = None
        for j in j_list:
            term = j * rng.uniform(0.5, 1.5)
            mix = term if mix is None else mix + term
        self.vectors = np.linalg.eigh(mix.toarray())[1]

    def diagonal(self, j: sp.csr_array, check: bool = True) -> np.ndarray:
        jv = j @ self.vectors
        diag = np.einsum("ij,ij->j", self.vectors, jv)
        if check:
            k = min(8, self.vectors.shape[1])
            cols = np.linspace(0, self.vectors.shape[1] - 1, k).astype(int)
            resid = jv[:, cols] - self.vectors[:, cols] * diag[cols]
            scale = max(1.0, float(np.abs(diag).max()))
            if np.abs(resid).max() > 1e-8 * scale:
                raise OracleSizeError(
                    "joint eigenbasis residual too large; Choi matrices do "
                    "not commute as expected")
        return diag


def _bisect_epsilon(a_diag: np.ndarray, b_diag: np.ndarray, tol: float,
                    maxiter: int) -> float:
    # The Choi eigenvalue pairs carry sector-dependent scale factors (the
    # epsilon condition is scale-free), so the PSD slack must be relative
    # to each pair's magnitude or small-scale sectors dominate the noise.
    scale = np.maximum(np.abs(a_diag), np.abs(b_diag))
    slack = 1e-13 * scale + 1e-18

    def passes(eps: float) -> bool:
        upper = (1.0 + eps) * b_diag - a_diag
        lower = a_diag - (1.0 - eps) * b_diag
        return bool(((upper >= -slack) & (lower >= -slack)).all())

    hi = 1.0
    grow = 0
    while not passes(hi):
        hi *= 2.0
        grow += 1
        if grow > 80:
            raise OracleSizeError("Choi bisection found no finite epsilon")
    lo = 0.0
    for _ in range(maxiter):
        if hi - lo <= max(tol, 1e-13 * hi):
            break
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    else:
        raise OracleSizeError(
            f"Choi bisection did not converge in {maxiter} iterations")
    return hi


def choi_bisection_batch(moments: list[DenseMoment], n: int, q: int = 2,
                         tol: float = BISECTION_TOL,
                         maxiter: int = BISECTION_MAXITER) -> list[float]:
    """Multiplicative errors of several moments vs Haar in one basis.

    All Choi matrices of locally invariant ensembles commute (they share
    the per-site twist-operator algebra), so one eigendecomposition of a
    random positive mix serves the whole batch; each spec's eigenvalues
    come from quadratic forms, residual-checked, and the epsilon search is
    a scalar bisection on the joint spectrum.
    """
    _check_cap(n, None)
    j_haar = choi_sparse(dense_haar_moment(n, q, cap=n))
    j_specs = [choi_sparse(m) for m in moments]
    basis = _JointBasis(j_specs + [j_haar])
    b_diag = basis.diagonal(j_haar)
    out = []
    for j in j_specs:
        a_diag = basis.diagonal(j)
        # residual-check the vectors that decide the answer
        live = np.abs(b_diag) > 1e-12 * max(1.0, float(np.abs(b_diag).max()))
        ratios = np.abs(a_diag[live] / b_diag[live] - 1.0)
        binding = np.flatnonzero(live)[np.argsort(ratios)[-4:]]
        for k in binding:
            v = basis.vectors[:, k]
            for mat, lam in ((j, a_diag[k]), (j_haar, b_diag[k])):
                if np.abs(mat @ v - lam * v).max() > 1e-9 * max(1.0, abs(lam)):
                    raise OracleSizeError(
                        "binding Choi eigenvector failed its residual check")
        out.append(_bisect_epsilon(a_diag, b_diag, tol, maxiter))
    return out


def choi_bisection(moment: DenseMoment, n: int, q: int = 2,
                   tol: float = BISECTION_TOL,
                   maxiter: int = BISECTION_MAXITER) -> float:
    """Smallest eps with (1+eps)Haar - spec and spec - (1-eps)Haar both CP.

    Binary search on eps testing the minimum eigenvalue of both Choi
    combinations.  For dimensions up to 256 the eigenvalues are recomputed
    densely at every step; larger systems go through the joint-basis path
    of choi_bisection_batch.
    """
    _check_cap(n, None)
    if q ** (4 * n) > 256:
        return choi_bisection_batch([moment], n, q, tol, maxiter)[0]
    j_a = choi_sparse(moment).toarray()
    j_b = choi_sparse(dense_haar_moment(n, q, cap=n)).toarray()

    def passes(eps: float) -> bool:
        up = np.linalg.eigvalsh((1.0 + eps) * j_b - j_a).min()
        low = np.linalg.eigvalsh(j_a - (1.0 - eps) * j_b).min()
        return up >= -tol and low >= -tol

    hi = 1.0
    grow = 0
    while not passes(hi):
        hi *= 2.0
        grow += 1
        if grow > 80:
            raise OracleSizeError("Choi bisection found no finite epsilon")
    lo = 0.0
    for _ in range(maxiter):
        if hi - lo <= max(tol, 1e-14 * hi):
            return hi
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    raise OracleSizeError(
        f"Choi bisection did not converge in {maxiter} iterations")


# ---------------------------------------------------------------------------
# PSD check and spectral helpers
# ---------------------------------------------------------------------------


def _ortho_span(n: int, q: int) -> np.ndarray:
    """Orthonormal basis of the site-local commutant span (2^n columns)."""
    b = basis_matrix(n, q)
    qmat, _ = np.linalg.qr(b)
    return qmat


def psd_check(moment: DenseMoment, tol: float = PSD_SLACK) -> PsdReport:
    """Min eigenvalue of the vectorized moment, exploiting its range.

    The moment annihilates everything outside the site-local commutant
    span and maps into it, so its nonzero spectrum is that of the 2^n-dim
    restriction; the restriction residual is verified before trusting it.
    Non-symmetric moments (brickwork at even depth) are diagnosed on the
    symmetrized matrix and reported not-PSD.
    """
    n, q = moment.n, moment.q
    v = moment.matrix
    asym = float(np.abs((v - v.T).toarray()).max()) if v.shape[0] <= 1 << 14 \
        else float(abs(v - v.T).max())
    symmetric = asym <= 1e-10
    sym = (v + v.T) * 0.5
    basis = _ortho_span(n, q)
    reduced = basis.T @ (sym @ basis)
    recon = basis @ reduced @ basis.T
    resid = float(np.abs(sym.toarray() - recon).max())
    if resid > 1e-9:
        evals = np.linalg.eigvalsh(sym.toarray())
    else:
        evals = np.linalg.eigvalsh(reduced)
        evals = np.concatenate([evals, [0.0]])
    min_eig = float(evals.min())
    max_eig = float(evals.max())
    return PsdReport(symmetric and min_eig >= -tol, min_eig, symmetric,
                     max_eig)


def eigenspace_error(step_moment: DenseMoment, a, steps: int,
                     group_rtol: float = EIG_GROUP_RTOL) -> float:
    """Depth-s error from the step operator's eigendecomposition.

    Groups the (symmetric) step operator's eigenvalues at the given
    relative tolerance into unique values lambda_i, and returns
    sum_{i>0} lambda_i^s ||P_i psi_a||^2 / ||P_0 psi_a||^2.
    """
    n, q = step_moment.n, step_moment.q
    basis = _ortho_span(n, q)
    reduced = basis.T @ (step_moment.matrix @ basis)
    if np.abs(reduced - reduced.T).max() > 1e-10:
        raise OracleSizeError("eigenspace_error needs a symmetric step")
    evals, evecs = np.linalg.eigh(reduced)
    psi = basis.T @ dense_boundary_vector(a, q)
    coords = evecs.T @ psi
    order = np.argsort(evals)[::-1]
    evals, coords = evals[order], coords[order]
    groups = []
    start = 0
    for k in range(1, len(evals) + 1):
        if (k == len(evals)
                or abs(evals[k] - evals[start]) >
                group_rtol * max(1.0, abs(evals[start]))):
            groups.append((evals[start], float((coords[start:k] ** 2).sum())))
            start = k
    top = groups[0][1]
    return float(sum(lam ** steps * w for lam, w in groups[1:]) / top)
