"""Step kernels on (0,1]: partitions, stepping, cut norm, cut distance, relabelling.

A step kernel is a symmetric function on (0,1]^2 that is constant on products
of partition parts.  All kernel computations in the package run through this
representation; boundaries constructed from graphs are kept as exact rationals
so equal-measure checks never drift.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    AsymmetricInput,
    ExactTooLarge,
    PartMeasureMismatch,
    PartitionMismatch,
)

_TOL = 1e-12


def _as_boundary(b):
    """Normalize a boundary entry: Fractions stay exact, everything else -> float."""
    if isinstance(b, Fraction):
        return b
    if isinstance(b, int):
        return Fraction(b)
    if isinstance(b, str):
        return Fraction(b)
    return float(b)


@dataclass(frozen=True)
class Partition:
    """Ascending boundaries in (0,1] ending at 1; part i is (b_{i-1}, b_i]."""

    boundaries: tuple

    def __init__(self, boundaries):
        bs = tuple(_as_boundary(b) for b in boundaries)
        if len(bs) == 0:
            raise ValueError("partition needs at least one boundary")
        vals = [float(b) for b in bs]
        if any(b2 <= b1 for b1, b2 in zip(vals, vals[1:])):
            raise ValueError("boundaries must be strictly increasing")
        if not (vals[0] > 0):
            raise ValueError("boundaries must lie in (0,1]")
        if abs(vals[-1] - 1.0) > _TOL:
            raise ValueError("last boundary must equal 1")
        object.__setattr__(self, "boundaries", bs)

    @classmethod
    def equal(cls, k: int) -> "Partition":
        """Equal-measure partition into k parts with exact rational boundaries."""
        return cls(tuple(Fraction(i, k) for i in range(1, k + 1)))

    @property
    def k(self) -> int:
        return len(self.boundaries)

    @property
    def part_measures(self) -> np.ndarray:
        vals = np.array([float(b) for b in self.boundaries])
        return np.diff(np.concatenate(([0.0], vals)))

    @property
    def is_rational(self) -> bool:
        return all(isinstance(b, Fraction) for b in self.boundaries)

    def is_equal_measure(self) -> bool:
        if self.is_rational:
            prev = Fraction(0)
            lengths = set()
            for b in self.boundaries:
                lengths.add(b - prev)
                prev = b
            return len(lengths) == 1
        mu = self.part_measures
        return bool(np.all(np.abs(mu - mu[0]) <= _TOL))

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        if self.k != other.k:
            return False
        a = [float(b) for b in self.boundaries]
        b = [float(x) for x in other.boundaries]
        return all(abs(x - y) <= _TOL for x, y in zip(a, b))

    def __hash__(self):
        return hash(tuple(round(float(b), 12) for b in self.boundaries))


@dataclass(frozen=True)
class StepKernel:
    """Symmetric step function on (0,1]^2, nonnegative unless ``signed``.

    ``values[i][j]`` is the constant value on part_i x part_j.  Signed kernels
    arise only as differences W - W' fed to the cut norm.
    """

    partition: Partition
    values: np.ndarray
    signed: bool = field(default=False, compare=False)

    def __init__(self, partition, values, signed=False):
        if not isinstance(partition, Partition):
            partition = Partition(partition)
        v = np.array(values, dtype=float)
        k = partition.k
        if v.shape != (k, k):
            raise ValueError(f"values must be {k}x{k}, got {v.shape}")
        if not np.array_equal(v, v.T):
            raise AsymmetricInput("kernel values must be symmetric")
        if not signed and np.any(v < 0):
            raise ValueError("kernel values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "partition", partition)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "signed", signed)

    @classmethod
    def constant(cls, c: float, k: int = 1) -> "StepKernel":
        return cls(Partition.equal(k), np.full((k, k), float(c)))

    @property
    def k(self) -> int:
        return self.partition.k

    def sub(self, other: "StepKernel") -> "StepKernel":
        """Signed difference self - other on the common refinement."""
        a, b = to_common_partition(self, other)
        return StepKernel(a.partition, a.values - b.values, signed=True)

    def __eq__(self, other):
        if not isinstance(other, StepKernel):
            return NotImplemented
        return self.partition == other.partition and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.partition, self.values.tobytes()))


# ---------------------------------------------------------------------------
# basic operations


def degree_function(W: StepKernel) -> np.ndarray:
    """Per-part degree d_W(i) = sum_j values[i][j] * measure_j."""
    return W.values @ W.partition.part_measures


def truncate_by_degree(W: StepKernel, C: float) -> StepKernel:
    """Zero rows/columns whose degree exceeds C (same partition)."""
    if C < 0:
        raise ValueError("C must be >= 0")
    keep = (degree_function(W) <= C).astype(float)
    return StepKernel(W.partition, W.values * np.outer(keep, keep), signed=W.signed)


def _overlap_matrix(p_out: Partition, p_in: Partition) -> np.ndarray:
    """O[i, a] = Lebesgue measure of (out part i) & (in part a)."""
    bo = np.concatenate(([0.0], [float(b) for b in p_out.boundaries]))
    bi = np.concatenate(([0.0], [float(b) for b in p_in.boundaries]))
    lo = np.maximum(bo[:-1, None], bi[None, :-1])
    hi = np.minimum(bo[1:, None], bi[None, 1:])
    return np.clip(hi - lo, 0.0, None)


def step_average(W: StepKernel, P: Partition) -> StepKernel:
    """P-stepped kernel: average of W over products of P's parts."""
    O = _overlap_matrix(P, W.partition)
    mu = P.part_measures
    num = O @ W.values @ O.T
    out = num / np.outer(mu, mu)
    out = 0.5 * (out + out.T)
    return StepKernel(P, out, signed=W.signed)


def common_refinement(p1: Partition, p2: Partition) -> Partition:
    """Partition generated by the union of both boundary sets."""
    if p1.is_rational and p2.is_rational:
        merged = sorted(set(p1.boundaries) | set(p2.boundaries))
        return Partition(merged)
    vals = sorted(set(float(b) for b in p1.boundaries)
                  | set(float(b) for b in p2.boundaries))
    out = [vals[0]]
    for v in vals[1:]:
        if v - out[-1] > _TOL:
            out.append(v)
    out[-1] = 1.0
    return Partition(out)


def to_common_partition(W1: StepKernel, W2: StepKernel):
    """Re-express both kernels exactly on the common refinement."""
    if W1.partition == W2.partition:
        return W1, W2
    P = common_refinement(W1.partition, W2.partition)
    return step_average(W1, P), step_average(W2, P)


def relabel(W: StepKernel, sigma) -> StepKernel:
    """Relabelled kernel W^sigma: values[i][j] = W.values[sigma(i)][sigma(j)]."""
    sigma = list(sigma)
    if sorted(sigma) != list(range(W.k)):
        raise ValueError("sigma must be a permutation of the part indices")
    if not W.partition.is_equal_measure():
        raise PartMeasureMismatch("relabelling requires equal part measures")
    return StepKernel(W.partition, W.values[np.ix_(sigma, sigma)], signed=W.signed)


def kernel_from_graph(adjacency, p: float) -> StepKernel:
    """Kernel of an edge-weighted graph: equal n-part partition, values a_ij / p."""
    a = np.array(adjacency, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.array_equal(a, a.T):
        raise AsymmetricInput("adjacency must be symmetric")
    if np.any(a < 0):
        raise ValueError("adjacency entries must be nonnegative")
    if not (0 < p < 1):
        raise ValueError("p must lie in (0,1)")
    return StepKernel(Partition.equal(a.shape[0]), a / p)


def l1_norm(W: StepKernel) -> float:
    """Integral of |W| over the unit square."""
    mu = W.partition.part_measures
    return float(np.abs(W.values) @ mu @ mu)


# ---------------------------------------------------------------------------
# cut norm and cut distance

MAX_EXACT_CUTNORM = 12
MAX_EXACT_CUTDIST = 8


@dataclass
class CutNorm:
    value: float
    exact: bool
    s: np.ndarray
    t: np.ndarray


def _indicator_table(k: int) -> np.ndarray:
    """All 2^k 0/1 vectors of length k, row-ordered by bitmask."""
    masks = np.arange(1 << k, dtype=np.int64)
    return ((masks[:, None] >> np.arange(k)) & 1).astype(float)


def _weighted_values(W: StepKernel) -> np.ndarray:
    mu = W.partition.part_measures
    return W.values * np.outer(mu, mu)


def _cut_norm_exact(M: np.ndarray):
    """Max over 0/1 vectors s,t of |s^T M t|.

    For fixed s the inner max over t is attained by taking either all positive
    or all negative coordinates of r = s^T M, which is the vertex enumeration
    reduced along one side.
    """
    k = M.shape[0]
    S = _indicator_table(k)
    R = S @ M
    pos = np.clip(R, 0.0, None).sum(axis=1)
    neg = np.clip(-R, 0.0, None).sum(axis=1)
    best = np.argmax(np.maximum(pos, neg))
    s = S[best]
    r = s @ M
    if pos[best] >= neg[best]:
        t = (r > 0).astype(float)
        val = pos[best]
    else:
        t = (r < 0).astype(float)
        val = neg[best]
    return float(val), s, t


def _cut_norm_heuristic(M: np.ndarray, rng: np.random.Generator, restarts=20):
    """Randomized greedy local search; certified lower bound only."""
    k = M.shape[0]
    best_val, best_s, best_t = 0.0, np.zeros(k), np.zeros(k)
    for _ in range(restarts):
        s = (rng.random(k) < 0.5).astype(float)
        t = (rng.random(k) < 0.5).astype(float)
        improved = True
        while improved:
            improved = False
            for vec, other, left in ((s, t, True), (t, s, False)):
                for i in range(k):
                    cur = abs(s @ M @ t)
                    vec[i] = 1.0 - vec[i]
                    if abs(s @ M @ t) > cur + 1e-15:
                        improved = True
                    else:
                        vec[i] = 1.0 - vec[i]
        val = abs(s @ M @ t)
        if val > best_val:
            best_val, best_s, best_t = val, s.copy(), t.copy()
    return float(best_val), best_s, best_t


def cut_norm(W: StepKernel, mode: str = "exact", seed: int = 0) -> CutNorm:
    """Cut norm sup_{S,T} |int_{SxT} W| of a (possibly signed) step kernel.

    Exact mode enumerates part-indicator vertices (k <= 12); heuristic mode
    returns a certified lower bound flagged non-exact.
    """
    M = _weighted_values(W)
    if mode == "exact":
        if W.k > MAX_EXACT_CUTNORM:
            raise ExactTooLarge(
                f"exact cut norm limited to k <= {MAX_EXACT_CUTNORM}, got {W.k}"
            )
        val, s, t = _cut_norm_exact(M)
        return CutNorm(val, True, s, t)
    if mode == "heuristic":
        rng = np.random.default_rng(seed)
        val, s, t = _cut_norm_heuristic(M, rng)
        return CutNorm(val, False, s, t)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class CutDistance:
    value: float
    exact: bool
    permutation: tuple


def _align_equal_parts(W1: StepKernel, W2: StepKernel):
    a, b = to_common_partition(W1, W2)
    if not a.partition.is_equal_measure():
        raise PartMeasureMismatch(
            "cut distance requires a common equal-measure refinement"
        )
    return a, b


def cut_distance(W1: StepKernel, W2: StepKernel, mode: str = "exact",
                 seed: int = 0, proposals: int = 10_000,
                 cooling: float = 0.995) -> CutDistance:
    """min over part permutations sigma of ||W1 - W2^sigma||_box.

    Exact mode enumerates all k! permutations (k <= 8); anneal mode runs
    simulated annealing over transpositions and returns an upper bound.
    """
    a, b = _align_equal_parts(W1, W2)
    k = a.k
    mu2 = np.outer(a.partition.part_measures, a.partition.part_measures)

    def cost(perm):
        diff = (a.values - b.values[np.ix_(perm, perm)]) * mu2
        if k <= MAX_EXACT_CUTNORM:
            return _cut_norm_exact(diff)[0]
        rng = np.random.default_rng(seed)
        return _cut_norm_heuristic(diff, rng)[0]

    if mode == "exact":
        if k > MAX_EXACT_CUTDIST:
            raise ExactTooLarge(
                f"exact cut distance limited to k <= {MAX_EXACT_CUTDIST}, got {k}"
            )
        best_val, best_perm = math.inf, None
        for perm in itertools.permutations(range(k)):
            v = cost(list(perm))
            if v < best_val:
                best_val, best_perm = v, perm
        return CutDistance(best_val, True, best_perm)
    if mode == "anneal":
        rng = np.random.default_rng(seed)
        perm = list(range(k))
        cur = cost(perm)
        best_val, best_perm = cur, tuple(perm)
        temp = max(cur, 1e-3)
        for _ in range(proposals):
            i, j = rng.integers(0, k, size=2)
            if i == j:
                continue
            perm[i], perm[j] = perm[j], perm[i]
            new = cost(perm)
            if new <= cur or rng.random() < math.exp(-(new - cur) / max(temp, 1e-300)):
                cur = new
                if cur < best_val:
                    best_val, best_perm = cur, tuple(perm)
            else:
                perm[i], perm[j] = perm[j], perm[i]
            temp *= cooling
        return CutDistance(best_val, False, best_perm)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# upper regularity


@dataclass
class RegularityReport:
    passed: bool
    partial: bool
    tested_partitions: int
    violation: tuple | None  # (eps, grouping, mass) of the first violation


def _set_partitions(n: int):
    """All set partitions of range(n), as lists of index lists."""
    if n == 0:
        yield []
        return
    for rest in _set_partitions(n - 1):
        elem = n - 1
        for i in range(len(rest)):
            yield rest[:i] + [rest[i] + [elem]] + rest[i + 1:]
        yield rest + [[elem]]


def _contiguous_partitions(n: int, min_size: int, cap: int):
    """Interval partitions of range(n) with all parts >= min_size."""
    out = []

    def rec(start, acc):
        if len(out) >= cap:
            return
        if start == n:
            out.append([list(range(a, b)) for a, b in acc])
            return
        for size in range(min_size, n - start + 1):
            if n - (start + size) not in (0, *range(min_size, n + 1)):
                continue
            rec(start + size, acc + [(start, start + size)])

    rec(0, [])
    return out


def _random_partition(n: int, min_size: int, rng: np.random.Generator):
    max_parts = max(1, n // min_size)
    for _ in range(200):
        kk = int(rng.integers(1, max_parts + 1))
        labels = rng.integers(0, kk, size=n)
        groups = [list(np.nonzero(labels == g)[0]) for g in range(kk)]
        groups = [g for g in groups if g]
        if all(len(g) >= min_size for g in groups):
            return groups
    return [list(range(n))]


def upper_regularity_check(W: StepKernel, eta: float, K, eps_list,
                           seed: int = 0, n_random: int = 100,
                           contiguous_cap: int = 5000) -> RegularityReport:
    """Test the upper-regularity mass condition over a family of partitions.

    For each candidate partition P (parts of measure >= eta) and eps, checks
    that the mass of the P-stepped kernel above K(eps) is at most eps.  The
    family is exhaustive only for n <= 8 parts; otherwise the report is
    flagged partial.
    """
    if not W.partition.is_equal_measure():
        raise PartMeasureMismatch("upper regularity check expects equal parts")
    n = W.k
    min_size = max(1, math.ceil(eta * n - 1e-12))
    kfun = K if callable(K) else (lambda e, table=dict(K): table[e])
    mu = W.partition.part_measures
    V = W.values

    if n <= 8:
        candidates = [p for p in _set_partitions(n)
                      if all(len(g) >= min_size for g in p)]
        partial = False
    else:
        rng = np.random.default_rng(seed)
        candidates = _contiguous_partitions(n, min_size, contiguous_cap)
        candidates += [_random_partition(n, min_size, rng)
                       for _ in range(n_random)]
        partial = True

    tested = 0
    for groups in candidates:
        sizes = np.array([mu[g].sum() for g in groups])
        block = np.empty((len(groups), len(groups)))
        for i, gi in enumerate(groups):
            for j, gj in enumerate(groups):
                block[i, j] = (mu[gi] @ V[np.ix_(gi, gj)] @ mu[gj]) / (
                    sizes[i] * sizes[j]
                )
        wt = np.outer(sizes, sizes)
        tested += 1
        for eps in eps_list:
            mass = float((block * wt)[block > kfun(eps)].sum())
            if mass > eps + _TOL:
                return RegularityReport(False, partial, tested,
                                        (eps, [list(g) for g in groups], mass))
    return RegularityReport(True, partial, tested, None)


def weak_regularity_partition(W: StepKernel, eps: float, max_parts: int = 64,
                              seed: int = 0):
    """Weak-regularity refinement loop (heuristic).

    Repeatedly finds the cut-norm witness of W - W_P and splits the groups of
    P by it, stopping when the cut norm drops below eps or the part count
    exceeds the cap.  Returns (grouping of W's parts, achieved cut norm).
    """
    n = W.k
    mu = W.partition.part_measures
    groups = [list(range(n))]
    while True:
        # block averages of W on the current grouping, expanded to n parts
        labels = np.empty(n, dtype=int)
        for g, idx in enumerate(groups):
            labels[idx] = g
        sizes = np.array([mu[g].sum() for g in groups])
        agg = np.zeros((len(groups), len(groups)))
        for i, gi in enumerate(groups):
            for j, gj in enumerate(groups):
                agg[i, j] = (mu[gi] @ W.values[np.ix_(gi, gj)] @ mu[gj]) / (
                    sizes[i] * sizes[j]
                )
        stepped = agg[np.ix_(labels, labels)]
        diff = (W.values - stepped) * np.outer(mu, mu)
        if n <= MAX_EXACT_CUTNORM:
            val, s, t = _cut_norm_exact(diff)
        else:
            val, s, t = _cut_norm_heuristic(diff, np.random.default_rng(seed))
        if val <= eps or len(groups) >= max_parts:
            return groups, val
        new_groups = []
        for idx in groups:
            buckets = {}
            for i in idx:
                buckets.setdefault((s[i], t[i]), []).append(i)
            new_groups.extend(buckets.values())
        if len(new_groups) == len(groups):
            return groups, val
        groups = new_groups


# ---------------------------------------------------------------------------
# serialization


def _boundary_to_json(b):
    if isinstance(b, Fraction):
        return f"{b.numerator}/{b.denominator}"
    return float(b)


def kernel_to_json(W: StepKernel) -> str:
    return json.dumps({
        "boundaries": [_boundary_to_json(b) for b in W.partition.boundaries],
        "values": W.values.tolist(),
    })


def kernel_from_json(text: str) -> StepKernel:
    data = json.loads(text)
    bounds = [Fraction(b) if isinstance(b, str) else float(b)
              for b in data["boundaries"]]
    return StepKernel(Partition(bounds), np.array(data["values"]))


def save_kernel(W: StepKernel, path):
    with open(path, "w") as fh:
        fh.write(kernel_to_json(W))
        fh.write("\n")


def load_kernel(path) -> StepKernel:
    with open(path) as fh:
        return kernel_from_json(fh.read())


def save_adjacency_csv(adjacency, path):
    a = np.asarray(adjacency)
    with open(path, "w", newline="") as fh:
        fh.write(f"{a.shape[0]}\n")
        for row in a:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def load_adjacency_csv(path) -> np.ndarray:
    with open(path) as fh:
        n = int(fh.readline())
        rows = [[float(x) for x in fh.readline().split(",")] for _ in range(n)]
    return np.array(rows)
