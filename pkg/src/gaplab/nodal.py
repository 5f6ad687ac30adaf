"""Nodal domains of graph eigenvectors.

A strong nodal domain is a maximal connected vertex set on which the
eigenvector has one strict sign; a weak domain allows coordinate products
>= 0, so vertices at (numerical) zero can belong to domains of both signs.
Exact zeros have measure zero in floating point, so "zero" means
|v_i| <= zeta for a configurable threshold zeta.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .eigensolver import eig_sym
from .ensemble import ERDOS_RENYI, gen_er_adjacency, stream_for
from .errors import ParameterError
from .params import DEFAULTS
from .util import pmap


@njit(cache=True, nogil=True)
def _uf_roots(n, eu, ev):
    """Union-find over an edge list; returns the root label of every vertex."""
    parent = np.arange(n)
    for k in range(eu.size):
        a = eu[k]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = ev[k]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            parent[b] = a
    for i in range(n):
        root = i
        while parent[root] != root:
            root = parent[root]
        parent[i] = root
    return parent


class UnionFind:
    """Disjoint sets over range(n) with path compression and union by size."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices 0..n-1."""

    n: int
    edges: np.ndarray  # (m, 2) with u < v, no self-loops

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= self.n):
            raise ParameterError("edges", "vertex id out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ParameterError("edges", "self-loops are not allowed")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        canon = np.unique(np.stack([lo, hi], axis=1), axis=0) if e.size else e
        object.__setattr__(self, "edges", canon)

    @classmethod
    def from_adjacency(cls, m):
        """Edges are the nonzero off-diagonal entries of a symmetric matrix."""
        a = m.a
        iu, ju = np.triu_indices(a.shape[0], k=1)
        nz = a[iu, ju] != 0.0
        return cls(a.shape[0], np.stack([iu[nz], ju[nz]], axis=1))

    @classmethod
    def from_edge_file(cls, path):
        """Text edge list, one "u v" pair per line, 0-indexed; # comments allowed."""
        pairs = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                u, v = line.split()
                pairs.append((int(u), int(v)))
        n = 1 + max((max(u, v) for u, v in pairs), default=-1)
        return cls(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))


@dataclass
class NodalReport:
    strong_domains: list
    weak_domains: list
    zero_vertices: frozenset
    weak_eq_strong: bool
    domain_sizes: list = field(init=False)

    def __post_init__(self):
        self.domain_sizes = sorted((len(d) for d in self.strong_domains), reverse=True)


def default_zeta(v, scale=DEFAULTS["zeta"]):
    """Near-zero threshold n * ||v||_inf * scale."""
    v = np.asarray(v)
    return v.size * float(np.max(np.abs(v))) * scale


def _components(graph, member):
    """Connected components of the subgraph induced by the boolean mask."""
    e = graph.edges
    if e.size:
        keep = member[e[:, 0]] & member[e[:, 1]]
        roots = _uf_roots(graph.n, e[keep, 0], e[keep, 1])
    else:
        roots = np.arange(graph.n)
    comps = {}
    for i in np.flatnonzero(member):
        comps.setdefault(int(roots[i]), []).append(int(i))
    return [frozenset(c) for c in comps.values()]


def _sorted_domains(domains):
    return sorted(domains, key=lambda d: (min(d), len(d)))


def strong_nodal_domains(graph, v, zeta):
    """Connected components of {v_i > zeta} and of {v_i < -zeta}."""
    v = np.asarray(v, dtype=np.float64)
    if v.size != graph.n:
        raise ParameterError("v", "length must equal the vertex count")
    return _sorted_domains(_components(graph, v > zeta) + _components(graph, v < -zeta))


def weak_nodal_domains(graph, v, zeta):
    """Maximal connected sets with pairwise coordinate products >= 0.

    Computed as components of the two closed-sign subgraphs {v_i >= -zeta}
    and {v_i <= zeta}; vertices within zeta of zero belong to both sides.
    Duplicates are reported once, and an all-zero component of one side
    that continues into the other side is dropped (it is not maximal).
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size != graph.n:
        raise ParameterError("v", "length must equal the vertex count")
    doms = set(_components(graph, v >= -zeta)) | set(_components(graph, v <= zeta))
    maximal = [d for d in doms if not any(d < other for other in doms)]
    return _sorted_domains(maximal)


def nodal_report(graph, v, zeta=None):
    v = np.asarray(v, dtype=np.float64)
    if zeta is None:
        zeta = default_zeta(v)
    strong = strong_nodal_domains(graph, v, zeta)
    weak = weak_nodal_domains(graph, v, zeta)
    zeros = frozenset(int(i) for i in np.flatnonzero(np.abs(v) <= zeta))
    return NodalReport(
        strong_domains=strong,
        weak_domains=weak,
        zero_vertices=zeros,
        weak_eq_strong=set(strong) == set(weak),
    )


def nodal_experiment(spec, trials, zeta_scale=DEFAULTS["zeta"], threads=1):
    """Weak-vs-strong and two-domain statistics over random graphs.

    The eigenvector of the largest eigenvalue (the one that aligns with
    the all-ones direction) is tabulated separately from the rest:
    non-top eigenvectors are the ones expected to show exactly two strong
    domains partitioning the vertices.
    """
    if spec.kind != ERDOS_RENYI:
        raise ParameterError("kind", "nodal experiment needs an adjacency ensemble")

    def one(t):
        adj = gen_er_adjacency(spec, stream_id=stream_for(t))
        graph = Graph.from_adjacency(adj)
        spectrum = eig_sym(adj)
        out = []
        for idx in range(spec.n):
            v = spectrum.vectors[:, idx]
            rep = nodal_report(graph, v, zeta=default_zeta(v, zeta_scale))
            strong_cover = sum(len(d) for d in rep.strong_domains)
            out.append(
                {
                    "trial_id": t,
                    "seed": stream_for(t),
                    "eig_index": idx,
                    "is_top": idx == spec.n - 1,
                    "weak_count": len(rep.weak_domains),
                    "strong_count": len(rep.strong_domains),
                    "zero_count": len(rep.zero_vertices),
                    "weak_eq_strong": rep.weak_eq_strong,
                    "two_domain": len(rep.strong_domains) == 2 and strong_cover == spec.n,
                }
            )
        return out

    per_trial = pmap(one, range(int(trials)), threads)
    rows = [row for sub in per_trial for row in sub]
    non_top = [r for r in rows if not r["is_top"]]
    top = [r for r in rows if r["is_top"]]
    summary = {
        "graphs": int(trials),
        "freq_weak_eq_strong": float(np.mean([r["weak_eq_strong"] for r in non_top])),
        "freq_two_domain": float(np.mean([r["two_domain"] for r in non_top])),
        "freq_top_single_domain": float(np.mean([r["strong_count"] == 1 for r in top])),
    }
    return rows, summary
