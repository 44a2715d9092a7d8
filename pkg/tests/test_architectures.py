import json
import math

import numpy as np
import pytest

from twodesign import architectures as arch
from twodesign.connectivity import is_connected


def test_linear_and_star():
    g = arch.make_family("linear", 4)
    assert set(g.edges) == {(0, 1), (1, 2), (2, 3)}
    g = arch.make_family("star", 5)
    assert set(g.edges) == {(0, 1), (0, 2), (0, 3), (0, 4)}


def test_bridge_structure():
    g = arch.make_family("bridge", 6)
    assert set(g.edges) == {(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5),
                            (2, 3)}
    # |E| = n^2/4 - n/2 + 1 for even n
    for n in (6, 8, 12):
        g = arch.make_family("bridge", n)
        assert len(g.edges) == n * n // 4 - n // 2 + 1


def test_edge_count_closed_forms():
    for n in (5, 8, 13):
        assert len(arch.make_family("complete", n).edges) == n * (n - 1) // 2
        lolli = arch.make_family("lollipop", n)
        c = (n + 1) // 2
        assert len(lolli.edges) == c * (c - 1) // 2 + n // 2


def test_hourglass_shares_one_node():
    g = arch.make_family("hourglass", 9)
    c = 5
    top = {v for e in g.edges for v in e if max(e) < c}
    bottom = {v for e in g.edges for v in e if min(e) >= c - 1}
    assert top & bottom == {c - 1}
    assert len(top) == c and len(bottom) == 9 + 1 - c


def test_tree_level_order():
    g = arch.make_family("tree", 7, arity=2)
    assert set(g.edges) == {(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)}
    g3 = arch.make_family("tree", 5, arity=3)
    assert set(g3.edges) == {(0, 1), (0, 2), (0, 3), (1, 4)}


def test_all_families_connected():
    for name in ("linear", "circle", "complete", "star", "lollipop",
                 "bridge", "hourglass", "tree"):
        for n in (2, 5, 9, 12):
            if name == "bridge" and n % 2:
                continue
            g = arch.make_family(name, n)
            assert g.is_connected(), (name, n)
    g = arch.make_family("random_regular", 10, degree=3, seed=3)
    assert g.is_connected()


def test_random_regular_degrees_and_errors():
    g = arch.random_regular_graph(3, 8, seed=0)
    deg = np.zeros(8, int)
    for i, j in g.edges:
        deg[i] += 1
        deg[j] += 1
    assert (deg == 3).all()
    with pytest.raises(arch.ConstructionError):
        arch.random_regular_graph(3, 5, seed=0)  # odd d*n
    with pytest.raises(arch.ConstructionError):
        arch.random_regular_graph(8, 8, seed=0)  # d >= n


def test_graph_json_roundtrip(tmp_path):
    g = arch.make_family("lollipop", 7)
    text = g.to_json()
    doc = json.loads(text)
    assert doc["n"] == 7
    assert arch.SiteGraph.from_json(text) == g


def test_graph_validation():
    with pytest.raises(arch.ConstructionError):
        arch.graph(3, [(0, 0)])
    with pytest.raises(arch.ConstructionError):
        arch.graph(3, [(0, 3)])
    with pytest.raises(arch.ConstructionError):
        arch.SiteGraph(3, ((0, 1), (0, 1)))


def test_brickwork_layers():
    lo, le = arch.brickwork_layers(4, "open")
    assert lo == ((0, 1), (2, 3)) and le == ((1, 2),)
    lo, le = arch.brickwork_layers(4, "periodic")
    assert set(le) == {(1, 2), (0, 3)}
    lo, le = arch.brickwork_layers(2, "open")
    assert lo == ((0, 1),) and le == ()
    with pytest.raises(arch.ConstructionError):
        arch.brickwork_layers(5, "periodic")


def test_pcg_layer_is_uniform_matching():
    rng = np.random.default_rng(0)
    assert arch.sample_pcg_layer(2, rng) == ((0, 1),)
    counts = {}
    for _ in range(9000):
        layer = arch.sample_pcg_layer(4, rng)
        counts[layer] = counts.get(layer, 0) + 1
    assert len(counts) == 3  # perfect matchings of K4
    for c in counts.values():
        # binomial 3-sigma around 3000
        assert abs(c - 3000) < 3 * math.sqrt(9000 * (1 / 3) * (2 / 3))
    assert len({arch.sample_pcg_layer(6, rng) for _ in range(4000)}) == 15


def test_pcg_layers_cover_all_sites():
    rng = np.random.default_rng(5)
    for n in (4, 8, 10):
        layer = arch.sample_pcg_layer(n, rng)
        assert sorted(v for p in layer for v in p) == list(range(n))
    with pytest.raises(arch.ConstructionError):
        arch.sample_pcg_layer(5, rng)


def test_pb_layer_conditioning():
    rng = np.random.default_rng(1)
    prev = ((0, 1), (2, 3))
    seen = set()
    for _ in range(2000):
        layer = arch.sample_pb_layer(prev, 4, rng)
        assert layer != prev  # union with itself is disconnected
        assert is_connected(prev + layer, 4)
        seen.add(layer)
    assert seen == {((0, 2), (1, 3)), ((0, 3), (1, 2))}
    # n=2: the only matching unions with itself to a single spanning edge
    assert arch.sample_pb_layer(((0, 1),), 2, rng) == ((0, 1),)


def test_pb_acceptance_rate():
    # 2 of 3 candidate matchings connect against a fixed previous layer
    rng = np.random.default_rng(2)
    prev = ((0, 1), (2, 3))
    draws = 6000
    accepted = 0
    for _ in range(draws):
        cand = arch.sample_pcg_layer(4, rng)
        if is_connected(prev + cand, 4):
            accepted += 1
    p = accepted / draws
    assert abs(p - 2 / 3) < 3 * math.sqrt((2 / 3) * (1 / 3) / draws)


def test_pbfe_layer_mirrors_pb():
    rng = np.random.default_rng(3)
    fixed = arch.default_fixed_even(4)
    for _ in range(200):
        layer = arch.sample_pbfe_odd_layer(fixed, 4, rng)
        assert is_connected(fixed + layer, 4)


def test_default_fixed_even():
    assert arch.default_fixed_even(6) == ((0, 5), (1, 2), (3, 4))
    layer = arch.default_fixed_even(12)
    assert sorted(v for p in layer for v in p) == list(range(12))


def test_graph_realization_sampling():
    g = arch.make_family("complete", 3)
    rng = np.random.default_rng(4)
    assert arch.sample_graph_realization(g, 0, rng) == []
    gates = arch.sample_graph_realization(g, 12000, rng)
    counts = {e: 0 for e in g.edges}
    for e in gates:
        counts[e] += 1
    for c in counts.values():
        assert abs(c - 4000) < 3 * math.sqrt(12000 * (1 / 3) * (2 / 3))
    replay = arch.sample_graph_realization(g, 50, np.random.default_rng(9))
    assert replay == arch.sample_graph_realization(
        g, 50, np.random.default_rng(9))


def test_spec_validation():
    with pytest.raises(arch.ConstructionError):
        arch.matching_spec("pcg", 5)
    with pytest.raises(arch.ConstructionError):
        arch.brickwork_spec(5, boundary="periodic")
    with pytest.raises(arch.ConstructionError):
        arch.EnsembleSpec("graph", 3, graph=None)
    spec = arch.matching_spec("pbfe", 6)
    assert spec.fixed_even == arch.default_fixed_even(6)
    assert arch.singles_spec(1).n == 1
