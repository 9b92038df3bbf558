"""Sparse Wigner samples, exponential tilting, spectra and resolvent identities.

Per-entry randomness comes from a counter-based hash of (seed, i, j, stream),
so sampling is order-independent, reproducible, and parallelizable; identical
seeds give bit-identical samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AsymmetricInput,
    DivisibilityError,
    EigFailure,
    KernelNotPositive,
    SolveFailure,
)
from .kernels import StepKernel, kernel_from_graph
from .measures import ProbMeasure1D
from .rates import EntryLaw, LegendrePair, cgf_L, h_L_prime

# splitmix64 constants
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INC = np.uint64(0x9E3779B97F4A7C15)


def _mix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _M1
        x = (x ^ (x >> np.uint64(27))) * _M2
        return x ^ (x >> np.uint64(31))


def entry_uniform(seed: int, i: np.ndarray, j: np.ndarray, stream: int) -> np.ndarray:
    """Deterministic uniform in [0,1) attached to the entry (i,j) of a stream."""
    with np.errstate(over="ignore"):
        s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        h = _mix64(s + _INC)
        h = _mix64(h ^ (np.asarray(i, dtype=np.uint64) * _M1 + _INC))
        h = _mix64(h ^ (np.asarray(j, dtype=np.uint64) * _M2 + _INC))
        h = _mix64(h ^ (np.uint64(stream) + _INC))
    return (h >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


@dataclass
class SparseWignerSample:
    """Realized X = (A o Xi) / sqrt(np) with its ingredients."""

    n: int
    p: float
    entries: np.ndarray   # X, symmetric, zero diagonal
    mask: np.ndarray      # Xi, symmetric 0/1, zero diagonal
    raw: np.ndarray       # A restricted to the mask support
    seed: int

    @property
    def matrix(self) -> np.ndarray:
        return self.entries

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.mask, 1).sum())


def _upper_indices(n: int):
    return np.triu_indices(n, k=1)


def _symmetrize_from_upper(n: int, iu, vals: np.ndarray) -> np.ndarray:
    out = np.zeros((n, n))
    out[iu] = vals
    return out + out.T


def _draw_values(u: np.ndarray, support: np.ndarray, probs: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    return support[np.searchsorted(cum, u, side="right")]


def sample_sparse_wigner(n: int, p: float, law: EntryLaw,
                         seed: int) -> SparseWignerSample:
    """Sparse Wigner matrix: Bernoulli(p) mask above the diagonal, i.i.d. law
    entries, normalized by sqrt(np)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0,1)")
    iu = _upper_indices(n)
    u_mask = entry_uniform(seed, iu[0], iu[1], 0)
    u_val = entry_uniform(seed, iu[0], iu[1], 1)
    xi_u = (u_mask < p).astype(float)
    a_u = _draw_values(u_val, law.support, law.probs) * xi_u
    mask = _symmetrize_from_upper(n, iu, xi_u)
    raw = _symmetrize_from_upper(n, iu, a_u)
    entries = raw / np.sqrt(n * p)
    return SparseWignerSample(n, p, entries, mask, raw, seed)


def tilted_sample(n: int, p: float, law: EntryLaw, U: StepKernel,
                  seed: int) -> SparseWignerSample:
    """Sample from the exponentially tilted entry law targeting the kernel U.

    On the block containing (i,j) with value u the joint law of (xi, A) is
    reweighted by exp(theta xi A^2)/Z with theta = h_L'(u) and the exact
    partition function Z = 1 + p L(theta).
    """
    k = U.k
    if n % k != 0:
        raise DivisibilityError(f"block count {k} must divide n = {n}")
    if not U.partition.is_equal_measure():
        raise DivisibilityError("tilting kernel must have equal part measures")
    if np.any(U.values <= 0):
        raise KernelNotPositive("tilting kernel values must be strictly positive")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0,1)")

    pair = LegendrePair(law)
    v2 = law.support ** 2
    block_size = n // k
    iu = _upper_indices(n)
    bi, bj = iu[0] // block_size, iu[1] // block_size
    u_mask = entry_uniform(seed, iu[0], iu[1], 0)
    u_val = entry_uniform(seed, iu[0], iu[1], 1)

    xi_u = np.zeros(iu[0].size)
    a_u = np.zeros(iu[0].size)
    for a in range(k):
        for b in range(a, k):
            sel = ((bi == a) & (bj == b)) | ((bi == b) & (bj == a))
            if not sel.any():
                continue
            theta = h_L_prime(pair, float(U.values[a, b]))
            Z = 1.0 + p * cgf_L(pair, theta)
            p_edge = p * (cgf_L(pair, theta) + 1.0) / Z
            cond = law.probs * np.exp(theta * v2)
            cond = cond / cond.sum()
            edge = u_mask[sel] < p_edge
            xi_u[sel] = edge.astype(float)
            a_u[sel] = _draw_values(u_val[sel], law.support, cond) * edge
    mask = _symmetrize_from_upper(n, iu, xi_u)
    raw = _symmetrize_from_upper(n, iu, a_u)
    entries = raw / np.sqrt(n * p)
    return SparseWignerSample(n, p, entries, mask, raw, seed)


@dataclass
class EmpiricalSpectralMeasure:
    eigenvalues: np.ndarray

    @property
    def measure(self) -> ProbMeasure1D:
        return ProbMeasure1D.from_atoms(self.eigenvalues)


def _as_matrix(m) -> np.ndarray:
    if isinstance(m, SparseWignerSample):
        return m.entries
    return np.asarray(m, dtype=float)


def esm(sample_or_matrix) -> EmpiricalSpectralMeasure:
    """Empirical spectral measure of a symmetric matrix."""
    M = _as_matrix(sample_or_matrix)
    if not np.allclose(M, M.T, atol=1e-12, rtol=0.0):
        raise AsymmetricInput("esm requires a symmetric matrix")
    try:
        ev = np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as exc:
        raise EigFailure(str(exc)) from exc
    return EmpiricalSpectralMeasure(np.sort(ev))


def empirical_kernel(sample: SparseWignerSample) -> StepKernel:
    """Kernel of the realized weighted graph: values xi_ij A_ij^2 / p."""
    return kernel_from_graph(sample.raw ** 2 * sample.mask, sample.p)


def resolvent(M, z) -> np.ndarray:
    """G(z) = (M - z)^{-1} for Im z > 0."""
    M = _as_matrix(M)
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("resolvent requires Im z > 0")
    try:
        return np.linalg.inv(M - z * np.eye(M.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise SolveFailure(str(exc)) from exc


def schur_residual(M, z, i: int) -> float:
    """Defect of the Schur complement formula at row i (exact identity)."""
    M = _as_matrix(M)
    z = complex(z)
    G = resolvent(M, z)
    keep = [k for k in range(M.shape[0]) if k != i]
    minor = M[np.ix_(keep, keep)]
    Gi = resolvent(minor, z)
    row = M[i, keep]
    return float(abs(1.0 / G[i, i] - M[i, i] + z + row @ Gi @ row))


def ward_residual(M, z, j: int) -> float:
    """Defect of the Ward identity sum_k |G_jk|^2 = Im G_jj / Im z."""
    M = _as_matrix(M)
    z = complex(z)
    G = resolvent(M, z)
    return float(abs(np.sum(np.abs(G[j]) ** 2) - G[j, j].imag / z.imag))


# ---------------------------------------------------------------------------
# CSV export


def save_sample_csv(sample: SparseWignerSample, path):
    """Sparse triplet export (i, j, value) of the upper triangle of X."""
    iu = _upper_indices(sample.n)
    vals = sample.entries[iu]
    nz = vals != 0
    with open(path, "w", newline="") as fh:
        fh.write("i,j,value\n")
        for i, j, v in zip(iu[0][nz], iu[1][nz], vals[nz]):
            fh.write(f"{i},{j},{float(v)!r}\n")


def load_sample_csv(path, n: int) -> np.ndarray:
    out = np.zeros((n, n))
    with open(path) as fh:
        fh.readline()
        for line in fh:
            if not line.strip():
                continue
            i, j, v = line.split(",")
            out[int(i), int(j)] = float(v)
    return out + out.T


def save_eigenvalues_csv(e: EmpiricalSpectralMeasure, path):
    with open(path, "w", newline="") as fh:
        fh.write("eigenvalue\n")
        for v in e.eigenvalues:
            fh.write(f"{float(v)!r}\n")
