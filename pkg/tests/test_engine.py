import numpy as np
import pytest

from twodesign import engine
from twodesign import perm_algebra as pa
from twodesign.architectures import (brickwork_spec, family_spec,
                                     matching_spec, singles_spec)


def test_quadratic_form_initial_norms():
    spec = family_spec("complete", 2)
    assert engine.quadratic_form(spec, (1, 1), 0) == pytest.approx(16.0)
    assert engine.quadratic_form(spec, (0, 0), 0) == pytest.approx(16 / 9)


def test_quadratic_form_converges_to_haar():
    spec = family_spec("complete", 2)
    assert engine.quadratic_form(spec, (0, 0), 60) == pytest.approx(1.6, rel=1e-12)
    lin = family_spec("linear", 3)
    target = pa.haar_moment_diagonal(3, 2, 0)
    assert engine.quadratic_form(lin, (0, 0, 0), 400) == pytest.approx(
        target, rel=1e-10)


def test_singles_only_reference_values():
    spec = singles_spec(2)
    assert engine.multiplicative_error(spec, 0) == pytest.approx(9.0, rel=1e-12)
    assert engine.collisional_error(spec, 0) == pytest.approx(1 / 9, rel=1e-10)
    # single site: locally invariant ensembles are exactly Haar
    assert engine.multiplicative_error(singles_spec(1), 0) == pytest.approx(
        0.0, abs=1e-14)


def test_complete_graph_single_gate_is_haar():
    spec = family_spec("complete", 2)
    assert engine.multiplicative_error(spec, 1) <= 1e-12
    assert engine.collisional_error(spec, 1) <= 1e-12


def test_mult_error_dominates_collisional():
    spec = family_spec("linear", 5)
    for s in (0, 3, 9):
        assert (engine.multiplicative_error(spec, s)
                >= engine.collisional_error(spec, s) - 1e-12)


def test_per_class_monotonicity_psd_specs():
    for spec in (family_spec("linear", 5), family_spec("star", 5),
                 family_spec("bridge", 6)):
        trajs = engine.class_trajectories(spec, floor=-np.inf, max_steps=40)
        for mask, v in trajs.items():
            diffs = np.diff(v)
            assert (diffs <= 1e-12 * np.maximum(1.0, np.abs(v[:-1]))).all(), mask


def test_brickwork_odd_depth_monotonicity():
    spec = brickwork_spec(6)
    trajs = engine.class_trajectories(spec, floor=-np.inf, max_steps=13)
    for mask, v in trajs.items():
        odd = v[1::2]
        assert (np.diff(odd) <= 1e-12 * np.maximum(1.0, np.abs(odd[:-1]))).all()


def test_complete_graph_class_symmetry():
    # errors agree across every mask of equal Hamming weight
    g = family_spec("complete", 4)
    free = engine.EnsembleSpec("graph", 4, 2, graph=g.graph, symmetry="none")
    trajs = engine.class_trajectories(free, floor=-np.inf, max_steps=4)
    for w in range(5):
        masks = [m for m in range(16) if bin(m).count("1") == w]
        vals = np.array([trajs[m] for m in masks])
        assert np.abs(vals - vals[0]).max() < 1e-12


def test_linear_reversal_symmetry():
    g = family_spec("linear", 5)
    free = engine.EnsembleSpec("graph", 5, 2, graph=g.graph, symmetry="none")
    trajs = engine.class_trajectories(free, floor=-np.inf, max_steps=5)
    for m in range(32):
        rev = engine._bit_reverse(m, 5)
        assert np.abs(trajs[m] - trajs[rev]).max() < 1e-12


def test_experiment_class_counts():
    assert len(engine.experiment_classes(family_spec("complete", 6))) == 7
    assert len(engine.experiment_classes(family_spec("star", 6))) == 12
    rev = engine.experiment_classes(family_spec("linear", 4))
    assert len(rev) == 10  # 4 palindromes + 12 others in reversal pairs
    with pytest.raises(engine.ClassExplosionError):
        engine.experiment_classes(family_spec("lollipop", 12), cap=100)


def test_interpolation_arithmetic():
    # bracketing errors 0.02 @ 5 and 0.005 @ 6 with eps 0.01 -> 5.5
    assert engine._interpolate_depth(5, 6, 0.02, 0.005, 0.01) == pytest.approx(5.5)
    # a projector landing exactly on zero anchors at the upper step
    assert engine._interpolate_depth(0, 1, 9.0, 0.0, 0.01) == 1.0


def test_design_depth_bracketing_invariant():
    spec = family_spec("linear", 6)
    r = engine.design_depth(spec, 0.05)
    assert r.err_lo >= 0.05 >= r.err_hi
    assert r.step_hi == r.step_lo + 1
    assert r.step_lo <= r.depth <= r.step_hi
    assert r.guaranteed_lo and r.guaranteed_hi


def test_design_depth_epsilon_above_initial_error():
    with pytest.raises(engine.EngineError):
        engine.design_depth(family_spec("linear", 4), 1e6)


def test_design_depth_unreachable_for_singles():
    with pytest.raises(engine.UnreachedEpsilonError):
        engine.design_depth(singles_spec(4), 1e-3)


def test_collisional_depth_tracks_zero_class():
    spec = brickwork_spec(6, boundary="periodic")
    rm = engine.design_depth(spec, 0.01, "multiplicative")
    rc = engine.design_depth(spec, 0.01, "collisional")
    assert rm.depth == pytest.approx(rc.depth, abs=1e-12)
    assert rm.argmax_lo == 0


def test_error_curve_contract():
    spec = family_spec("linear", 4)
    curve = engine.error_curve(spec, 12)
    assert len(curve.steps) == 13
    assert (curve.mult_error >= curve.coll_error - 1e-12).all()
    assert curve.guaranteed.all()
    brick = engine.error_curve(brickwork_spec(4), 6)
    assert list(brick.guaranteed) == [True, True, False, True, False, True,
                                      False]


def test_sampled_error_pcg_two_sites_is_haar():
    spec = matching_spec("pcg", 2)
    mean, se = engine.sampled_error(spec, 3, realizations=8, master_seed=1)
    assert abs(mean) <= 1e-12
    assert se <= 1e-12


def test_sampled_error_clt_scaling():
    spec = matching_spec("pb", 8)
    _, se1 = engine.sampled_error(spec, 4, realizations=40, master_seed=3)
    _, se2 = engine.sampled_error(spec, 4, realizations=640, master_seed=3)
    # standard error shrinks like 1/sqrt(R): factor 4 within a loose band
    assert 2.0 < se1 / se2 < 8.0


def test_sampled_reproducibility():
    spec = matching_spec("pbfe", 6)
    a = engine.sampled_error(spec, 5, realizations=12, master_seed=9)
    b = engine.sampled_error(spec, 5, realizations=12, master_seed=9)
    assert a == b


def test_matching_error_curve_mean_of_quadratic_forms():
    # the curve averages per-class quadratic forms over realizations, so
    # replaying the same seeds must reproduce it exactly
    spec = matching_spec("pb", 6)
    c1 = engine.error_curve(spec, 6, realizations=10, master_seed=4)
    c2 = engine.error_curve(spec, 6, realizations=10, master_seed=4)
    assert np.array_equal(c1.mult_error, c2.mult_error)
    assert c1.stat_err is not None


def test_experiment_sweep_complete_graph():
    spec = family_spec("complete", 5)
    res = engine.experiment_sweep(spec, [0, 2, 4, 8])
    assert len(res.masks) == 6  # Hamming weights 0..5
    assert res.errors.shape == (6, 4)
    # at step 0 the all-singlets class dominates
    assert res.argmax_mask[0] == (1 << 5) - 1


def test_experiment_sweep_brickwork_boundaries():
    spec = brickwork_spec(8)
    res = engine.experiment_sweep(spec, [17])
    best = int(res.argmax_mask[0])
    ent = 1 | (1 << 7)
    vals = res.errors[:, 0]
    ent_val = vals[list(res.masks).index(ent)]
    # entangled boundaries is optimal up to exact parity ties
    assert ent_val >= vals.max() * (1 - 1e-9)
    assert best in {int(m) for m in res.masks}


def test_experiment_sweep_star_argmax():
    # the optimal star experiment entangles every point of the star; the
    # center bit rides a near-tie that settles onto the odd-parity choice
    # at n = 12 (smaller stars pick either parity depending on depth)
    spec = family_spec("star", 6)
    res = engine.experiment_sweep(spec, [30])
    points = sum(1 << i for i in range(1, 6))
    assert int(res.argmax_mask[0]) & points == points
    spec12 = family_spec("star", 12)
    r = engine.design_depth(spec12, 0.01)
    points12 = sum(1 << i for i in range(1, 12))
    want = points12 if bin(points12).count("1") % 2 else points12 | 1
    assert r.argmax_lo == want


def test_graph_step_operator_matches_average():
    g = family_spec("linear", 3).graph
    step = engine.graph_step_operator(g)
    state = pa.boundary_state((1, 0, 1), 2)
    out = step(state.copy())
    a = pa.apply_two_site(state.copy(), 0, 1)
    b = pa.apply_two_site(state.copy(), 1, 2)
    assert np.allclose(out.coeffs, 0.5 * (a.coeffs + b.coeffs), atol=1e-15)
    # unitality: the all-identity state is fixed
    fixed = pa.CommutantState(3, 2, np.zeros(8))
    fixed.coeffs[0] = 1.0
    assert np.array_equal(step(fixed).coeffs,
                          np.array([1.0, 0, 0, 0, 0, 0, 0, 0]))


def test_haar_absorption():
    for spec in (family_spec("linear", 4), brickwork_spec(4),
                 family_spec("bridge", 4)):
        assert engine.global_haar_error(spec, 3) < 1e-12


def test_numpy_fallback_path_agrees():
    import json
    import subprocess
    import sys

    code = (
        "import json\n"
        "from twodesign import engine\n"
        "from twodesign.architectures import family_spec\n"
        "import twodesign.kernels as k\n"
        "spec = family_spec('linear', 4)\n"
        "vals = [engine.multiplicative_error(spec, s) for s in (0, 2, 5)]\n"
        "print(json.dumps({'numba': k.USE_NUMBA, 'vals': vals}))\n"
    )
    out = subprocess.run([sys.executable, "-c", code],
                         env={"TWODESIGN_NO_NUMBA": "1", "PATH": "/usr/bin:/bin"},
                         capture_output=True, text=True, check=True)
    doc = json.loads(out.stdout.strip().splitlines()[-1])
    assert doc["numba"] is False
    spec = family_spec("linear", 4)
    ref = [engine.multiplicative_error(spec, s) for s in (0, 2, 5)]
    assert np.allclose(doc["vals"], ref, rtol=1e-12)


def test_linear_curve_elbow_then_exponential_tail():
    # the error drops fast early (subdominant eigenspaces) before settling
    # onto a uniform exponential decay; extrapolating the late fit back to
    # s=2 undershoots the true value by a wide margin
    spec = family_spec("linear", 12)
    curve = engine.error_curve(spec, 260, floor=1e-4)
    log_err = np.log(curve.mult_error)
    lo, hi = 180, 260
    slope, intercept = np.polyfit(np.arange(lo, hi + 1), log_err[lo:hi + 1], 1)
    extrapolated = np.exp(intercept + slope * 2)
    assert curve.mult_error[2] > 10 * extrapolated
    # the tail itself is a clean exponential
    resid = log_err[lo:hi + 1] - (intercept + slope * np.arange(lo, hi + 1))
    assert np.abs(resid).max() < 0.05


def test_lollipop_depth_bends_upward_vs_linear():
    # gates-to-0.01 grows superlinearly for the lollipop relative to the
    # linear graph, so their ratio rises with n
    ratios = []
    for n in (8, 10):
        lolli = engine.design_depth(family_spec("lollipop", n), 0.01).depth
        lin = engine.design_depth(family_spec("linear", n), 0.01).depth
        ratios.append(lolli / lin)
    assert ratios[1] > ratios[0]


def test_star_design_vs_anticoncentration_gap_grows():
    gaps = []
    for n in (8, 12):
        spec = family_spec("star", n)
        dm = engine.design_depth(spec, 0.01, "multiplicative").depth
        dc = engine.design_depth(spec, 0.01, "collisional").depth
        gaps.append(dm - dc)
        assert dm > dc
    assert gaps[1] > gaps[0]
