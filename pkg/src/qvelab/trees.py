"""Rooted planar trees via Dyck words, homomorphism densities, and moments.

Unlabelled rooted planar trees with k edges are in bijection with balanced
Dyck words of length 2k, so enumerating the words enumerates the trees with
no symmetry quotient -- exactly Catalan(k) of them.  Summing tree densities
of a kernel gives the even moments of its QVE measure; odd moments vanish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KTooLarge, PartitionMismatch
from .kernels import StepKernel, cut_norm, degree_function
from .report import CheckReport

MAX_EDGES = 10

CATALAN = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796]


@dataclass(frozen=True)
class RootedPlanarTree:
    """Rooted planar tree encoded by its Dyck word (1 = down an edge, 0 = up)."""

    word: tuple

    def __post_init__(self):
        depth = 0
        for b in self.word:
            if b not in (0, 1):
                raise ValueError("Dyck word bits must be 0/1")
            depth += 1 if b else -1
            if depth < 0:
                raise ValueError("Dyck word has a negative prefix")
        if depth != 0:
            raise ValueError("Dyck word is not balanced")

    @classmethod
    def from_string(cls, s: str) -> "RootedPlanarTree":
        return cls(tuple(int(c) for c in s))

    def to_string(self) -> str:
        return "".join(str(b) for b in self.word)

    @property
    def n_edges(self) -> int:
        return len(self.word) // 2

    @property
    def n_vertices(self) -> int:
        return self.n_edges + 1

    def parents(self) -> list:
        """Parent index per vertex (root = 0 with parent -1), DFS order."""
        parent = [-1]
        stack = [0]
        nxt = 1
        for b in self.word:
            if b:
                parent.append(stack[-1])
                stack.append(nxt)
                nxt += 1
            else:
                stack.pop()
        return parent

    def children(self) -> list:
        ch = [[] for _ in range(self.n_vertices)]
        for v, p in enumerate(self.parents()):
            if p >= 0:
                ch[p].append(v)
        return ch

    def edges(self) -> list:
        """Edges (parent, child) in DFS order; edge t is the t-th '1'."""
        return [(p, v) for v, p in enumerate(self.parents()) if p >= 0]


def enumerate_trees(k: int) -> list:
    """All rooted planar trees with k edges, in lexicographic Dyck order."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > MAX_EDGES:
        raise KTooLarge(f"tree enumeration limited to k <= {MAX_EDGES}")
    words = []

    def rec(prefix, opens, closes):
        if opens == k and closes == k:
            words.append(tuple(prefix))
            return
        if opens > closes:
            rec(prefix + [0], opens, closes + 1)
        if opens < k:
            rec(prefix + [1], opens + 1, closes)

    rec([], 0, 0)
    words.sort()
    return [RootedPlanarTree(w) for w in words]


def _edge_kernels(tree: RootedPlanarTree, w):
    """Normalize decoration: one kernel per edge, all sharing a partition."""
    e = tree.n_edges
    if isinstance(w, StepKernel):
        kernels = [w] * e
    else:
        kernels = list(w)
        if len(kernels) != e:
            raise PartitionMismatch(
                f"need {e} edge kernels, got {len(kernels)}"
            )
    if e > 0:
        part = kernels[0].partition
        if any(kk.partition != part for kk in kernels):
            raise PartitionMismatch("edge kernels must share a partition")
    return kernels


def rooted_density_vector(tree: RootedPlanarTree, w) -> np.ndarray:
    """Per-part vector of rooted homomorphism densities, by bottom-up DP.

    The message of a child is contracted through its edge's value matrix with
    part-measure weights; the root-only tree gives the all-ones vector.
    """
    kernels = _edge_kernels(tree, w)
    if tree.n_edges == 0:
        if isinstance(w, StepKernel):
            return np.ones(w.k)
        return np.ones(1)
    part = kernels[0].partition
    mu = part.part_measures
    children = tree.children()
    parents = tree.parents()
    # edge index for each non-root vertex: position of its '1' in DFS order
    edge_of = {v: t for t, (_, v) in enumerate(tree.edges())}

    def message(v):
        f = np.ones(part.k)
        for c in children[v]:
            V = kernels[edge_of[c]].values
            f = f * ((V * mu[None, :]) @ message(c))
        return f

    return message(0)


def rooted_hom_density(tree: RootedPlanarTree, W, part: int) -> float:
    """Rooted density with the root pinned in the given part (t = 1 for the
    single-vertex tree)."""
    vec = rooted_density_vector(tree, W)
    return float(vec[part])


def hom_density(tree: RootedPlanarTree, W) -> float:
    """Homomorphism density t(F, W), integrating the rooted density."""
    vec = rooted_density_vector(tree, W)
    if tree.n_edges == 0:
        if isinstance(W, StepKernel):
            return float(W.partition.part_measures @ vec)
        return 1.0
    kernels = _edge_kernels(tree, W)
    return float(kernels[0].partition.part_measures @ vec)


def qve_moment(order: int, W: StepKernel) -> float:
    """Moment of the QVE measure: sum of tree densities for even orders,
    exactly zero for odd orders."""
    if order < 0:
        raise ValueError("order must be >= 0")
    if order % 2 == 1:
        return 0.0
    k = order // 2
    if k > MAX_EDGES:
        raise KTooLarge(f"moment order limited to {2 * MAX_EDGES}")
    return float(sum(hom_density(t, W) for t in enumerate_trees(k)))


def _max_sup_degree(kernels) -> float:
    return max(float(degree_function(kk).max()) for kk in kernels)


def counting_lemma_check(tree: RootedPlanarTree, w, w_prime,
                         slack: float = 1e-12) -> CheckReport:
    """Counting bound for decorated trees:
    |t(F,w) - t(F,w')| <= M^(e-1) * sum_e ||W_e - W'_e||_box."""
    kernels = _edge_kernels(tree, w)
    kernels_p = _edge_kernels(tree, w_prime)
    if kernels and kernels_p and kernels[0].partition != kernels_p[0].partition:
        raise PartitionMismatch("decorations must share a partition")
    lhs = abs(hom_density(tree, kernels or w) - hom_density(tree, kernels_p or w_prime))
    e = tree.n_edges
    if e == 0:
        return CheckReport(lhs, 0.0, lhs <= slack, {"edges": 0})
    M = max(_max_sup_degree(kernels), _max_sup_degree(kernels_p))
    total = sum(cut_norm(a.sub(b)).value for a, b in zip(kernels, kernels_p))
    rhs = (M ** (e - 1) if e > 1 else 1.0) * total
    return CheckReport(lhs, rhs, lhs <= rhs + slack, {"M": M, "edges": e})


def degree_bound_check(tree: RootedPlanarTree, w, part: int = 0) -> CheckReport:
    """Rooted densities are bounded by the max sup-degree to the edge count."""
    if tree.n_edges == 0:
        return CheckReport(1.0, 1.0, True, {"edges": 0})
    kernels = _edge_kernels(tree, w)
    lhs = rooted_hom_density(tree, kernels, part)
    rhs = _max_sup_degree(kernels) ** tree.n_edges
    return CheckReport(lhs, rhs, lhs <= rhs + 1e-12, {"edges": tree.n_edges})


def moments_table(W: StepKernel, max_order: int):
    """(order, moment) rows for orders 0..max_order."""
    return [(o, qve_moment(o, W)) for o in range(max_order + 1)]
