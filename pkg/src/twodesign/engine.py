"""Evolution of moment-space states and the error/depth calculations.

The quadratic form <Psi(a)| vec(Phi)^d |Psi(a)> is evaluated matrix-free:
the boundary state's 2^n coefficients are evolved step by step and finally
contracted against the +/-1 boundary weights.  The error of experiment a
is qf / haar - 1 with haar the parity-matched Haar diagonal; the
multiplicative error maximizes this over one representative per
experiment-symmetry class, the collisional error is the a = 0 term.

For ensembles whose vectorized moment operator is PSD, every per-class
error is non-increasing in depth, so classes whose error falls below a
floor can be dropped from depth searches (they can never cross the target
again).  Brickwork-style ensembles carry PSD guarantees only at odd
depths; results at other depths are reported with guaranteed=False.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .architectures import (EnsembleSpec, brickwork_layers, sample_pb_layer,
                            sample_pcg_layer)
from .perm_algebra import (CommutantState, bits_to_mask,
                           global_haar_project, haar_moment_diagonal,
                           swap_mix_coefficient)

DEFAULT_CLASS_CAP = 1 << 22
DEFAULT_MAX_STEPS = 1_000_000
_BATCH_ELEMENTS = 1 << 24  # ~128 MB of float64 rows per batch


class EngineError(RuntimeError):
    pass


class ClassExplosionError(EngineError):
    pass


class UnreachedEpsilonError(EngineError):
    def __init__(self, message: str, last_error: float, last_step: int):
        super().__init__(message)
        self.last_error = last_error
        self.last_step = last_step


# ---------------------------------------------------------------------------
# experiment-class systems
# ---------------------------------------------------------------------------


def _bit_reverse(x: int, n: int) -> int:
    out = 0
    for i in range(n):
        if (x >> i) & 1:
            out |= 1 << (n - 1 - i)
    return out


def _rotate(x: int, r: int, n: int) -> int:
    return ((x << r) | (x >> (n - r))) & ((1 << n) - 1) if r else x


def experiment_classes(spec: EnsembleSpec, cap: int | None = None) -> np.ndarray:
    """Representative experiment masks, one per symmetry class.

    The reductions are hard-coded per family: Hamming weight for fully
    site-permutation-symmetric ensembles, center/points weight for the
    star, bit reversal for open chains, dihedral for rings, and no
    reduction otherwise.  Raises ClassExplosionError past the cap; callers
    can then supply an explicit experiment list instead (symmetry-free
    mode).
    """
    n = spec.n
    cap = DEFAULT_CLASS_CAP if cap is None else cap
    sym = spec.symmetry
    if sym == "hamming":
        reps = [(1 << w) - 1 for w in range(n + 1)]
    elif sym == "star":
        reps = [c | (((1 << w) - 1) << 1)
                for c in (0, 1) for w in range(n)]
    elif sym in ("reversal", "dihedral", "none"):
        count_bound = 1 << n
        if count_bound > cap:
            raise ClassExplosionError(
                f"{sym} reduction would enumerate {count_bound} masks at "
                f"n={n} (cap {cap}); pass an explicit experiment list "
                "(symmetry-free mode) or raise the cap")
        if sym == "none":
            reps = list(range(1 << n))
        elif sym == "reversal":
            reps = [x for x in range(1 << n) if x <= _bit_reverse(x, n)]
        else:
            reps = []
            for x in range(1 << n):
                orbit = min(min(_rotate(x, r, n),
                                _rotate(_bit_reverse(x, n), r, n))
                            for r in range(n))
                if x == orbit:
                    reps.append(x)
    else:
        raise EngineError(f"unknown symmetry tag {sym!r}")
    if len(reps) > cap:
        raise ClassExplosionError(
            f"{len(reps)} experiment classes at n={n} exceeds cap {cap}; "
            "pass an explicit experiment list (symmetry-free mode) or "
            "raise the cap")
    return np.asarray(sorted(reps), dtype=np.uint64)


def mask_label(mask: int, n: int) -> str:
    """Bitstring label, site 0 leftmost."""
    return "".join(str((int(mask) >> i) & 1) for i in range(n))


def psd_guaranteed(spec: EnsembleSpec, steps: int) -> bool:
    """Whether the vectorized moment operator is provably PSD at this depth."""
    if spec.kind in ("graph", "pcg", "singles"):
        return True
    return steps == 0 or steps % 2 == 1


# ---------------------------------------------------------------------------
# steppers
# ---------------------------------------------------------------------------


def _build_rows(masks: np.ndarray, n: int, q: int) -> np.ndarray:
    """Boundary states for the given masks, one per row.

    Row sigma-entry = scale(w) * (-1)^popcount(sigma & mask) with
    scale(w) = (q/(q+1))^(n-w) (q/(q-1))^w, w the mask weight.
    """
    block = np.empty((len(masks), 1 << n), dtype=np.float64)
    for r, mask in enumerate(masks):
        w = int(mask).bit_count()
        scale = (q / (q + 1.0)) ** (n - w) * (q / (q - 1.0)) ** w
        block[r] = scale * kernels.walsh_signs(n, int(mask))
    return block


class _DeterministicStepper:
    """Applies one exact step of a graph or brickwork ensemble to a batch."""

    def __init__(self, spec: EnsembleSpec):
        self.spec = spec
        self.c = swap_mix_coefficient(spec.q)
        if spec.kind == "graph":
            self.edges = spec.graph.edges
        elif spec.kind in ("brickwork_obc", "brickwork_pbc"):
            boundary = "open" if spec.kind == "brickwork_obc" else "periodic"
            self.layers = brickwork_layers(spec.n, boundary)
        elif spec.kind != "singles":
            raise EngineError(f"{spec.kind} is not deterministic")

    def apply(self, block: np.ndarray, step_index: int,
              scratch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Returns (stepped block, scratch); graphs swap the two buffers."""
        if self.spec.kind == "singles":
            return block, scratch
        if self.spec.kind == "graph":
            out = scratch[:block.shape[0]]
            kernels.graph_step_batch(block, out, self.edges, self.c)
            return out, block
        layer = self.layers[(step_index - 1) % 2]
        if layer:
            kernels.layer_apply_batch(block, layer, self.c)
        return block, scratch


def _layer_stream(spec: EnsembleSpec, rng: np.random.Generator):
    """Infinite layer generator for one realization of a matching ensemble."""
    prev = None
    step = 0
    while True:
        step += 1
        if spec.kind == "pcg":
            layer = sample_pcg_layer(spec.n, rng)
        elif spec.kind == "pb":
            layer = (sample_pcg_layer(spec.n, rng) if prev is None
                     else sample_pb_layer(prev, spec.n, rng))
            prev = layer
        else:  # pbfe: odd layers sampled against the fixed evens
            if step % 2 == 1:
                layer = sample_pb_layer(spec.fixed_even, spec.n, rng)
            else:
                layer = spec.fixed_even
        yield layer


# ---------------------------------------------------------------------------
# trajectory collection
# ---------------------------------------------------------------------------


def _haar_by_parity(n: int, q: int) -> tuple[float, float]:
    return haar_moment_diagonal(n, q, 0), haar_moment_diagonal(n, q, 1)


def class_trajectories(spec: EnsembleSpec, masks=None, *, floor: float = 0.0,
                       max_steps: int = DEFAULT_MAX_STEPS,
                       keep: tuple[int, ...] = (),
                       cap: int | None = None) -> dict[int, np.ndarray]:
    """Per-class error trajectories for a deterministic ensemble.

    Each class is evolved until its error drops below `floor` (sound for
    PSD-guaranteed depths, where per-class errors are monotone) or until
    max_steps.  Masks listed in `keep` are exempt from pruning, so they
    run to max_steps.  trajectory[s] is the error after s steps; the last
    recorded value is the first one below the floor.
    """
    if spec.stochastic:
        raise EngineError("class_trajectories is for deterministic ensembles")
    if masks is None:
        masks = experiment_classes(spec, cap)
    masks = np.asarray(masks, dtype=np.uint64)
    n, q = spec.n, spec.q
    haar = _haar_by_parity(n, q)
    stepper = _DeterministicStepper(spec)
    keep_set = {int(k) for k in keep}

    batch = max(1, min(len(masks), _BATCH_ELEMENTS // (1 << n)))
    out: dict[int, list[float]] = {}
    for lo in range(0, len(masks), batch):
        chunk = masks[lo:lo + batch]
        hvec = np.array([haar[int(m).bit_count() & 1] for m in chunk])
        block = _build_rows(chunk, n, q)
        scratch = np.empty_like(block)
        alive = np.arange(len(chunk))
        trajs = {int(m): [] for m in chunk}
        step = 0
        while len(alive):
            if step > 0:
                block, scratch = stepper.apply(block, step, scratch)
            qf = kernels.signed_dot_batch(block, chunk[alive])
            err = qf / hvec[alive] - 1.0
            for k, m in enumerate(chunk[alive]):
                trajs[int(m)].append(float(err[k]))
            if step >= max_steps:
                break
            dead = err < floor
            if keep_set:
                for k in range(len(alive)):
                    if dead[k] and int(chunk[alive[k]]) in keep_set:
                        dead[k] = False
            if dead.any():
                live = ~dead
                block = np.ascontiguousarray(block[live])
                scratch = np.ascontiguousarray(scratch[:block.shape[0]])
                alive = alive[live]
            step += 1
        out.update(trajs)
    return {m: np.asarray(v) for m, v in out.items()}


def _curve_from_trajectories(trajs: dict[int, np.ndarray]):
    """Running max over class trajectories; returns (mult, argmax, length)."""
    length = max(len(v) for v in trajs.values())
    mult = np.full(length, -np.inf)
    argmax = np.zeros(length, dtype=np.uint64)
    for mask, v in trajs.items():
        upto = len(v)
        better = v > mult[:upto]
        mult[:upto] = np.where(better, v, mult[:upto])
        argmax[:upto][better] = mask
    return mult, argmax, length


# ---------------------------------------------------------------------------
# Monte Carlo over matching-ensemble realizations
# ---------------------------------------------------------------------------


def _sampled_class_curves(spec: EnsembleSpec, masks: np.ndarray, layers: int,
                          realizations: int, master_seed: int):
    """Mean and standard error of per-class quadratic forms over realizations.

    Realization r uses the r-th spawned child of master_seed, so extending
    the horizon replays identical layer sequences.  Quadratic forms (not
    maxima) are averaged, matching the definition of the ensemble moment
    operator as the realization average.
    """
    if realizations < 1:
        raise EngineError("need at least one realization")
    n, q = spec.n, spec.q
    seeds = np.random.SeedSequence(master_seed).spawn(realizations)
    qf = np.empty((realizations, len(masks), layers + 1))
    c = swap_mix_coefficient(q)
    for r, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        stream = _layer_stream(spec, rng)
        block = _build_rows(masks, n, q)
        qf[r, :, 0] = kernels.signed_dot_batch(block, masks)
        for step in range(1, layers + 1):
            kernels.layer_apply_batch(block, next(stream), c)
            qf[r, :, step] = kernels.signed_dot_batch(block, masks)
    mean = qf.mean(axis=0)
    if realizations > 1:
        se = qf.std(axis=0, ddof=1) / np.sqrt(realizations)
    else:
        se = np.zeros_like(mean)
    return mean, se


def _sampled_error_curves(spec: EnsembleSpec, masks: np.ndarray, layers: int,
                          realizations: int, master_seed: int):
    haar = _haar_by_parity(spec.n, spec.q)
    hvec = np.array([haar[int(m).bit_count() & 1] for m in masks])
    qf_mean, qf_se = _sampled_class_curves(spec, masks, layers, realizations,
                                           master_seed)
    err = qf_mean / hvec[:, None] - 1.0
    se = qf_se / hvec[:, None]
    return err, se


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def quadratic_form(spec: EnsembleSpec, a, steps: int, *,
                   realizations: int = 100, master_seed: int = 0) -> float:
    """<Psi(a)| vec(Phi)^steps |Psi(a)>, exact or Monte Carlo per spec kind."""
    if steps < 0:
        raise EngineError("steps must be >= 0")
    mask = bits_to_mask(a) if not isinstance(a, (int, np.integer)) else int(a)
    masks = np.asarray([mask], dtype=np.uint64)
    if spec.stochastic:
        qf_mean, _ = _sampled_class_curves(spec, masks, steps, realizations,
                                           master_seed)
        return float(qf_mean[0, steps])
    haar = _haar_by_parity(spec.n, spec.q)[int(mask).bit_count() & 1]
    trajs = class_trajectories(spec, masks, floor=-np.inf, max_steps=steps)
    return float((trajs[mask][steps] + 1.0) * haar)


def multiplicative_error(spec: EnsembleSpec, steps: int, *,
                         realizations: int = 100, master_seed: int = 0,
                         cap: int | None = None) -> float:
    """Max class error at the given step count (heuristic when not PSD-
    guaranteed there; see psd_guaranteed)."""
    masks = experiment_classes(spec, cap)
    if spec.stochastic:
        err, _ = _sampled_error_curves(spec, masks, steps, realizations,
                                       master_seed)
        return float(err[:, steps].max())
    trajs = class_trajectories(spec, masks, floor=-np.inf, max_steps=steps)
    return float(max(v[steps] for v in trajs.values()))


def collisional_error(spec: EnsembleSpec, steps: int, *,
                      realizations: int = 100, master_seed: int = 0) -> float:
    """The a = 0 experiment's error (anticoncentration measure)."""
    masks = np.asarray([0], dtype=np.uint64)
    if spec.stochastic:
        err, _ = _sampled_error_curves(spec, masks, steps, realizations,
                                       master_seed)
        return float(err[0, steps])
    trajs = class_trajectories(spec, masks, floor=-np.inf, max_steps=steps)
    return float(trajs[0][steps])


@dataclass
class ErrorCurve:
    steps: np.ndarray
    mult_error: np.ndarray
    coll_error: np.ndarray
    argmax_mask: np.ndarray
    guaranteed: np.ndarray
    stat_err: np.ndarray | None = None

    def __post_init__(self):
        bad = self.mult_error < self.coll_error - 1e-12
        if bad.any():
            raise EngineError("multiplicative error fell below collisional")


def error_curve(spec: EnsembleSpec, steps: int, *, floor: float = 0.0,
                realizations: int = 100, master_seed: int = 0,
                cap: int | None = None) -> ErrorCurve:
    """Multiplicative and collisional errors at steps 0..steps.

    floor > 0 prunes classes once their error drops below it; the a = 0
    class is always kept so the collisional column stays exact.
    """
    masks = experiment_classes(spec, cap)
    grid = np.arange(steps + 1)
    guaranteed = np.array([psd_guaranteed(spec, int(s)) for s in grid])
    if spec.stochastic:
        err, se = _sampled_error_curves(spec, masks, steps, realizations,
                                        master_seed)
        argrow = err.argmax(axis=0)
        mult = err[argrow, grid]
        return ErrorCurve(grid, mult, err[0], masks[argrow], guaranteed,
                          stat_err=se[argrow, grid])
    trajs = class_trajectories(spec, masks, floor=floor, max_steps=steps,
                               keep=(0,))
    mult, argmax, length = _curve_from_trajectories(trajs)
    coll = trajs[0]
    if length < steps + 1 or len(coll) < steps + 1:
        raise EngineError("curve truncated before requested step count")
    return ErrorCurve(grid, mult, coll, argmax, guaranteed)


@dataclass
class SweepResult:
    steps: np.ndarray
    masks: np.ndarray
    errors: np.ndarray  # (classes, steps)
    argmax_mask: np.ndarray
    stat_err: np.ndarray | None = None


def experiment_sweep(spec: EnsembleSpec, steps_list, *,
                     realizations: int = 100, master_seed: int = 0,
                     cap: int | None = None) -> SweepResult:
    """Error trajectory of every experiment class at the requested steps."""
    steps_list = sorted(int(s) for s in steps_list)
    horizon = steps_list[-1]
    masks = experiment_classes(spec, cap)
    if spec.stochastic:
        err, se = _sampled_error_curves(spec, masks, horizon, realizations,
                                        master_seed)
        sel = err[:, steps_list]
        return SweepResult(np.asarray(steps_list), masks, sel,
                           masks[sel.argmax(axis=0)],
                           stat_err=se[:, steps_list])
    trajs = class_trajectories(spec, masks, floor=-np.inf, max_steps=horizon)
    sel = np.array([[trajs[int(m)][s] for s in steps_list] for m in masks])
    return SweepResult(np.asarray(steps_list), masks, sel,
                       masks[sel.argmax(axis=0)])


@dataclass
class DepthResult:
    epsilon: float
    kind: str
    depth: float
    step_lo: int
    step_hi: int
    err_lo: float
    err_hi: float
    guaranteed_lo: bool
    guaranteed_hi: bool
    argmax_lo: int = 0
    argmax_hi: int = 0


def _interpolate_depth(s_lo, s_hi, err_lo, err_hi, epsilon) -> float:
    # linear in step vs log(error); err_hi may be exactly 0 at a projector
    if err_hi <= 0.0:
        return float(s_hi)
    t = (np.log(err_lo) - np.log(epsilon)) / (np.log(err_lo) - np.log(err_hi))
    return float(s_lo + t * (s_hi - s_lo))


def design_depth(spec: EnsembleSpec, epsilon: float,
                 kind: str = "multiplicative", *,
                 realizations: int = 100, master_seed: int = 0,
                 max_steps: int = DEFAULT_MAX_STEPS,
                 prune_floor: float | None = None,
                 cap: int | None = None) -> DepthResult:
    """Smallest step count with error <= epsilon, log-interpolated.

    The returned depth interpolates step vs log(error) between the
    bracketing integers.  Classes are pruned at epsilon/10 by default
    (sound for PSD-guaranteed ensembles, where per-class errors are
    monotone).  For brickwork-style ensembles all integer depths anchor
    the interpolation; the PSD-validity flags of the bracket are recorded.
    """
    if not 0 < epsilon:
        raise EngineError("epsilon must be positive")
    if kind not in ("multiplicative", "collisional"):
        raise EngineError(f"unknown depth kind {kind!r}")
    floor = epsilon / 10.0 if prune_floor is None else prune_floor

    if kind == "collisional":
        masks = np.asarray([0], dtype=np.uint64)
    else:
        masks = experiment_classes(spec, cap)

    if spec.kind == "singles":
        # no gates ever act, so the error never moves
        start = multiplicative_error(spec, 0) if kind == "multiplicative" \
            else collisional_error(spec, 0)
        if start > epsilon:
            raise UnreachedEpsilonError(
                f"singles ensemble error stays at {start:.3g}", start, 0)
        raise EngineError(
            f"epsilon {epsilon} is not below the initial error {start:.3g}")

    if spec.stochastic:
        horizon = 8
        while True:
            err, _ = _sampled_error_curves(spec, masks, horizon, realizations,
                                           master_seed)
            mult = err.max(axis=0)
            argmax = masks[err.argmax(axis=0)]
            below = np.flatnonzero(mult <= epsilon)
            if len(below):
                break
            if horizon >= max_steps:
                raise UnreachedEpsilonError(
                    f"error still {mult[-1]:.3g} after {horizon} steps",
                    float(mult[-1]), horizon)
            horizon = min(2 * horizon, max_steps)
        s_hi = int(below[0])
    else:
        trajs = class_trajectories(spec, masks, floor=floor,
                                   max_steps=max_steps)
        mult, argmax, length = _curve_from_trajectories(trajs)
        below = np.flatnonzero(mult <= epsilon)
        if not len(below):
            raise UnreachedEpsilonError(
                f"error still {mult[-1]:.3g} after {length - 1} steps",
                float(mult[-1]), length - 1)
        s_hi = int(below[0])

    if s_hi == 0:
        raise EngineError(
            f"epsilon {epsilon} is not below the initial error {mult[0]:.3g}")
    s_lo = s_hi - 1
    depth = _interpolate_depth(s_lo, s_hi, mult[s_lo], mult[s_hi], epsilon)
    return DepthResult(epsilon, kind, depth, s_lo, s_hi,
                       float(mult[s_lo]), float(mult[s_hi]),
                       psd_guaranteed(spec, s_lo), psd_guaranteed(spec, s_hi),
                       int(argmax[s_lo]), int(argmax[s_hi]))


def sampled_error(spec: EnsembleSpec, layers: int, realizations: int,
                  master_seed: int) -> tuple[float, float]:
    """Monte Carlo multiplicative error of a matching ensemble.

    Per-class quadratic forms are averaged over realizations and the
    class maximum is taken afterwards (the realization average is the
    ensemble moment operator, so this is the consistent estimator); the
    standard error is the argmax class's.
    """
    if realizations < 2:
        raise EngineError("need at least 2 realizations for a standard error")
    if not spec.stochastic:
        raise EngineError("sampled_error is for matching-based ensembles")
    masks = experiment_classes(spec)
    err, se = _sampled_error_curves(spec, masks, layers, realizations,
                                    master_seed)
    best = int(err[:, layers].argmax())
    return float(err[best, layers]), float(se[best, layers])


def graph_step_operator(g):
    """Callable applying one edge-averaged gate step to a CommutantState.

    One step corresponds to one sampled gate: gate locations are i.i.d.,
    so the ensemble expectation of a product factorizes into a power of
    the single-gate average.
    """
    if not g.edges:
        raise EngineError("graph has no edges")

    def step(state):
        c = swap_mix_coefficient(state.q)
        block = state.coeffs.reshape(1, -1)
        out = np.empty_like(block)
        kernels.graph_step_batch(block, out, g.edges, c)
        state.coeffs[:] = out[0]
        return state

    return step


def global_haar_error(spec: EnsembleSpec, steps: int, *,
                      cap: int | None = None) -> float:
    """Max class error after `steps` steps followed by the global Haar
    projector; zero for anything that composes to Haar."""
    masks = experiment_classes(spec, cap)
    n, q = spec.n, spec.q
    haar = _haar_by_parity(n, q)
    stepper = _DeterministicStepper(spec)
    block = _build_rows(masks, n, q)
    scratch = np.empty_like(block)
    for step in range(1, steps + 1):
        block, scratch = stepper.apply(block, step, scratch)
    worst = 0.0
    for r, mask in enumerate(masks):
        state = CommutantState(n, q, block[r].copy())
        global_haar_project(state)
        qf = float(kernels.walsh_signs(n, int(mask)) @ state.coeffs)
        err = qf / haar[int(mask).bit_count() & 1] - 1.0
        worst = max(worst, abs(err))
    return worst
