"""Circuit ensembles: graph families, brickworks, and matching-based layers.

Graph-sampled ensembles draw gate locations i.i.d. uniformly from the edge
set of a fixed graph.  Brickworks alternate two fixed layers.  The three
matching-based ensembles draw whole layers: PCG samples a uniform perfect
matching each layer; PB additionally requires each adjacent layer pair to
union into a connected graph; PBFE keeps one fixed even layer and samples
odd layers against it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class ConstructionError(ValueError):
    pass


def _norm_pair(i: int, j: int) -> tuple[int, int]:
    i, j = int(i), int(j)
    return (i, j) if i < j else (j, i)


def _pairs_connected(pairs, n: int) -> bool:
    # union-find over the union graph of the given pairs
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = n
    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            comps -= 1
    return comps == 1


@dataclass(frozen=True)
class SiteGraph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ConstructionError(f"self-loop at site {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ConstructionError(f"edge ({i},{j}) out of range")
            if (i, j) != _norm_pair(i, j):
                raise ConstructionError("edges must be sorted pairs")
            if (i, j) in seen:
                raise ConstructionError(f"duplicate edge ({i},{j})")
            seen.add((i, j))

    def is_connected(self) -> bool:
        return _pairs_connected(self.edges, self.n)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "edges": [list(e) for e in self.edges]})

    @staticmethod
    def from_json(text: str) -> "SiteGraph":
        doc = json.loads(text)
        edges = tuple(sorted(_norm_pair(*e) for e in doc["edges"]))
        return SiteGraph(int(doc["n"]), edges)


def graph(n: int, edges) -> SiteGraph:
    return SiteGraph(n, tuple(sorted(_norm_pair(*e) for e in edges)))


# ---------------------------------------------------------------------------
# graph families
# ---------------------------------------------------------------------------


def _clique(sites) -> list[tuple[int, int]]:
    sites = list(sites)
    return [_norm_pair(sites[a], sites[b])
            for a in range(len(sites)) for b in range(a + 1, len(sites))]


def make_family(name: str, n: int, *, arity: int = 2, degree: int = 3,
                seed: int | None = None) -> SiteGraph:
    """Construct a named graph family on n sites.

    linear   : path (i, i+1)
    circle   : path plus the wraparound edge
    complete : all pairs
    star     : site 0 joined to every other site
    lollipop : clique on ceil(n/2) sites with a path on the rest attached
               to one clique vertex
    bridge   : cliques of sizes ceil(n/2) and floor(n/2) joined by one edge
    hourglass: cliques of sizes ceil(n/2) and n+1-ceil(n/2) sharing a site
    tree     : complete `arity`-ary tree in level order
    random_regular : uniform simple `degree`-regular graph (configuration
               model with rejection; needs `seed`)
    """
    if n < 2:
        raise ConstructionError(f"graph families need n >= 2, got n={n}")
    c = (n + 1) // 2
    if name == "linear":
        edges = [(i, i + 1) for i in range(n - 1)]
    elif name == "circle":
        edges = [(i, i + 1) for i in range(n - 1)] + [_norm_pair(0, n - 1)]
    elif name == "complete":
        edges = _clique(range(n))
    elif name == "star":
        edges = [(0, i) for i in range(1, n)]
    elif name == "lollipop":
        edges = _clique(range(c)) + [(i, i + 1) for i in range(c - 1, n - 1)]
    elif name == "bridge":
        edges = _clique(range(c)) + _clique(range(c, n)) + [(c - 1, c)]
    elif name == "hourglass":
        edges = _clique(range(c)) + _clique(range(c - 1, n))
    elif name == "tree":
        k = int(arity)
        if k < 1:
            raise ConstructionError("tree arity must be >= 1")
        edges = [(p, k * p + s) for p in range(n)
                 for s in range(1, k + 1) if k * p + s < n]
    elif name == "random_regular":
        return random_regular_graph(int(degree), n, seed)
    else:
        raise ConstructionError(f"unknown graph family {name!r}")
    return graph(n, set(edges))


def random_regular_graph(d: int, n: int, seed=None) -> SiteGraph:
    """Uniform simple d-regular graph via configuration-model rejection."""
    if d < 1 or d >= n:
        raise ConstructionError(f"need 1 <= d < n, got d={d}, n={n}")
    if (d * n) % 2 != 0:
        raise ConstructionError(f"d*n must be even, got d={d}, n={n}")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), d)
    while True:
        perm = rng.permutation(stubs)
        pairs = [_norm_pair(perm[2 * k], perm[2 * k + 1])
                 for k in range(len(perm) // 2)]
        if any(i == j for i, j in pairs):
            continue
        if len(set(pairs)) != len(pairs):
            continue
        return graph(n, pairs)


# ---------------------------------------------------------------------------
# brickwork layers
# ---------------------------------------------------------------------------


def brickwork_layers(n: int, boundary: str = "open"):
    """Alternating layer pair (L_odd, L_even); the circuit starts with L_odd."""
    if n < 2:
        raise ConstructionError(f"brickwork needs n >= 2, got n={n}")
    if boundary not in ("open", "periodic"):
        raise ConstructionError(f"unknown boundary {boundary!r}")
    if boundary == "periodic" and n % 2 != 0:
        raise ConstructionError("periodic brickwork needs even n")
    l_odd = tuple((i, i + 1) for i in range(0, n - 1, 2))
    l_even = tuple((i, i + 1) for i in range(1, n - 1, 2))
    if boundary == "periodic":
        l_even = l_even + (_norm_pair(0, n - 1),)
    return l_odd, l_even


# ---------------------------------------------------------------------------
# matching-based layers
# ---------------------------------------------------------------------------

Layer = tuple[tuple[int, int], ...]


def _canon_layer(pairs) -> Layer:
    return tuple(sorted(_norm_pair(*p) for p in pairs))


def sample_pcg_layer(n: int, rng: np.random.Generator) -> Layer:
    """Uniform perfect matching: random permutation paired consecutively."""
    if n % 2 != 0:
        raise ConstructionError(f"perfect matching needs even n, got {n}")
    perm = rng.permutation(n)
    return _canon_layer((perm[2 * k], perm[2 * k + 1]) for k in range(n // 2))


def sample_pb_layer(prev: Layer, n: int, rng: np.random.Generator) -> Layer:
    """Uniform matching conditioned on prev-union-new being connected.

    Rejection sampling from sample_pcg_layer.  For n = 2 the only matching
    {(0,1)} unions with itself to a single spanning edge, so connectivity
    holds trivially and it is accepted.
    """
    prev = _canon_layer(prev)
    while True:
        cand = sample_pcg_layer(n, rng)
        if _pairs_connected(prev + cand, n):
            return cand


def sample_pbfe_odd_layer(fixed_even: Layer, n: int,
                          rng: np.random.Generator) -> Layer:
    """Odd layer for the fixed-evens ensemble: connected against fixed_even."""
    return sample_pb_layer(fixed_even, n, rng)


def default_fixed_even(n: int) -> Layer:
    """The brickwork even layer with wraparound: (1,2),(3,4),...,(n-1,0)."""
    if n % 2 != 0:
        raise ConstructionError(f"fixed even layer needs even n, got {n}")
    return _canon_layer([(2 * k + 1, (2 * k + 2) % n) for k in range(n // 2)])


def sample_graph_realization(g: SiteGraph, s: int,
                             rng: np.random.Generator) -> list[tuple[int, int]]:
    """s i.i.d. uniform edge draws from g."""
    if s < 0:
        raise ConstructionError("gate count must be >= 0")
    if not g.edges:
        raise ConstructionError("graph has no edges")
    picks = rng.integers(0, len(g.edges), size=int(s))
    return [g.edges[k] for k in picks]


# ---------------------------------------------------------------------------
# ensemble specification
# ---------------------------------------------------------------------------

GRAPH_FAMILIES = ("linear", "circle", "complete", "star", "lollipop",
                  "bridge", "hourglass", "tree", "random_regular")
MATCHING_KINDS = ("pcg", "pb", "pbfe")
BRICKWORK_KINDS = ("brickwork_obc", "brickwork_pbc")

_FAMILY_SYMMETRY = {
    "linear": "reversal",
    "circle": "dihedral",
    "complete": "hamming",
    "star": "star",
}


@dataclass(frozen=True)
class EnsembleSpec:
    """One circuit ensemble, sufficient to evolve a state one step.

    kind is "graph", "brickwork_obc", "brickwork_pbc", "pcg", "pb" or
    "pbfe".  For graphs one step is one sampled gate (gates are i.i.d., so
    the expectation factorizes); for the others one step is one layer.
    `symmetry` names the hard-coded experiment-class reduction the engine
    may use ("hamming", "star", "reversal", "dihedral" or "none").
    """

    kind: str
    n: int
    q: int = 2
    graph: SiteGraph | None = None
    fixed_even: Layer | None = None
    symmetry: str = "none"
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.q < 2:
            raise ConstructionError(f"q must be >= 2, got {self.q}")
        if self.kind == "graph":
            if self.graph is None or self.graph.n != self.n:
                raise ConstructionError("graph spec needs a matching SiteGraph")
            if not self.graph.edges:
                raise ConstructionError("graph spec needs at least one edge")
        elif self.kind in BRICKWORK_KINDS:
            if self.n < 2:
                raise ConstructionError("brickwork needs n >= 2")
            if self.kind == "brickwork_pbc" and self.n % 2 != 0:
                raise ConstructionError("periodic brickwork needs even n")
        elif self.kind in MATCHING_KINDS:
            if self.n % 2 != 0:
                raise ConstructionError(f"{self.kind} needs even n")
            if self.kind == "pbfe" and self.fixed_even is None:
                object.__setattr__(self, "fixed_even", default_fixed_even(self.n))
        elif self.kind == "singles":
            if self.n < 1:
                raise ConstructionError("need at least one site")
        else:
            raise ConstructionError(f"unknown ensemble kind {self.kind!r}")

    @property
    def stochastic(self) -> bool:
        return self.kind in MATCHING_KINDS

    @property
    def step_unit(self) -> str:
        return "gate" if self.kind == "graph" else "layer"


def graph_spec(g: SiteGraph, q: int = 2, symmetry: str = "none",
               label: str = "") -> EnsembleSpec:
    return EnsembleSpec("graph", g.n, q, graph=g, symmetry=symmetry,
                        label=label or "graph")


def family_spec(name: str, n: int, q: int = 2, **params) -> EnsembleSpec:
    g = make_family(name, n, **params)
    return EnsembleSpec("graph", n, q, graph=g,
                        symmetry=_FAMILY_SYMMETRY.get(name, "none"),
                        label=name)


def brickwork_spec(n: int, q: int = 2, boundary: str = "open") -> EnsembleSpec:
    kind = "brickwork_obc" if boundary == "open" else "brickwork_pbc"
    sym = "reversal" if boundary == "open" else "dihedral"
    return EnsembleSpec(kind, n, q, symmetry=sym, label=kind)


def matching_spec(kind: str, n: int, q: int = 2,
                  fixed_even: Layer | None = None) -> EnsembleSpec:
    return EnsembleSpec(kind, n, q, fixed_even=fixed_even,
                        symmetry="hamming", label=kind)


def singles_spec(n: int, q: int = 2) -> EnsembleSpec:
    """The zero-gate ensemble: an independent Haar unitary on every site."""
    return EnsembleSpec("singles", n, q, symmetry="hamming", label="singles")
