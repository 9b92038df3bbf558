"""Quadratic vector equation solver and Stieltjes inversion for step kernels.

For a kernel on k parts with values V and part measures lambda the QVE reads
-1/m_i = z + sum_j S_ij m_j with S_ij = V_ij * lambda_j; its unique solution
with Im m > 0 encodes the spectral (QVE) measure of the kernel.

The baseline iteration is the damped fixed point m <- (1-w) m + w (-1/(z+Sm))
which contracts for large Im z; near the real axis a Newton stage with
residual-monotone backtracking takes over (the fixed point alone needs
O(1/eta) sweeps there).  Accepted solutions always satisfy the residual and
Herglotz contracts; failures raise per-point, never silently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridTooNarrow, NotConverged, PreconditionViolated
from .kernels import StepKernel, degree_function
from .measures import ProbMeasure1D
from .report import CheckReport

RESIDUAL_TOL = 1e-12
MAX_ITER = 100_000
STABILITY_KAPPA = 128.0


@dataclass(frozen=True)
class SpectralGrid:
    x_min: float
    x_max: float
    n_points: int = 4000
    eta: float = 1e-3

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be < x_max")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass
class QveSolution:
    z_points: np.ndarray           # (nz,) complex
    m_values: np.ndarray           # (nz, k) complex, Im > 0
    residuals: np.ndarray          # (nz,) sup-norm residuals

    def average(self) -> np.ndarray:
        """Stieltjes transform of the QVE measure at each z."""
        return self.m_values @ self._measures

    _measures: np.ndarray = None


def _coupling_matrix(W: StepKernel) -> np.ndarray:
    return W.values * W.partition.part_measures[None, :]


def _residual(m, z, S):
    return m + 1.0 / (z[:, None] + m @ S.T)


def _sup_res(m, z, S):
    return np.abs(_residual(m, z, S)).max(axis=1)


def _fixed_point_sweeps(m, z, S, tol, n_sweeps):
    """Damped fixed point with per-point adaptive omega (spec schedule)."""
    nz = z.size
    omega = np.ones(nz)
    streak = np.zeros(nz, dtype=int)
    res = _sup_res(m, z, S)
    for _ in range(n_sweeps):
        active = res > tol
        if not active.any():
            break
        f = -1.0 / (z[:, None] + m @ S.T)
        m_new = m + omega[:, None] * (f - m)
        res_new = _sup_res(m_new, z, S)
        worse = res_new > res
        omega[worse & active] *= 0.5
        omega = np.maximum(omega, 1e-4)
        streak[worse] = 0
        streak[~worse & active] += 1
        boost = streak >= 10
        omega[boost] = np.minimum(1.0, 1.5 * omega[boost])
        streak[boost] = 0
        m[active] = m_new[active]
        res[active] = res_new[active]
    return m, res


def _newton_sweeps(m, z, S, tol, n_sweeps):
    """Vectorized damped Newton on F(m) = m + 1/(z + Sm)."""
    k = S.shape[0]
    eye = np.eye(k)
    res = _sup_res(m, z, S)
    for _ in range(n_sweeps):
        active = res > tol
        if not active.any():
            break
        ma, za = m[active], z[active]
        denom = za[:, None] + ma @ S.T
        F = ma + 1.0 / denom
        jac = eye[None, :, :] - (S[None, :, :] / denom[:, :, None] ** 2)
        try:
            delta = np.linalg.solve(jac, -F[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            break
        step = np.ones(ma.shape[0])
        res_a = res[active]

        def _ok(trial, res_t):
            # stay in the Herglotz branch: Im m must remain positive
            return (res_t < res_a) & (trial.imag > 0).all(axis=1)

        for _bt in range(40):
            trial = ma + step[:, None] * delta
            res_t = _sup_res(trial, za, S)
            good = _ok(trial, res_t)
            if good.all():
                break
            step[~good] *= 0.5
        trial = ma + step[:, None] * delta
        res_t = _sup_res(trial, za, S)
        improved = _ok(trial, res_t)
        ma[improved] = trial[improved]
        res_a[improved] = res_t[improved]
        m[active], res[active] = ma, res_a
        if not improved.any():
            break
    return m, res


def solve_qve(W: StepKernel, z_points, tol: float = RESIDUAL_TOL,
              max_iter: int = MAX_ITER, m0=None) -> QveSolution:
    """Solve the QVE of W at each z in the upper half-plane.

    ``m0`` optionally warm-starts the iteration (must lie in the upper
    half-plane entrywise); the default start is m = -1/z.
    """
    z = np.atleast_1d(np.asarray(z_points, dtype=complex))
    if np.any(z.imag <= 0):
        raise ValueError("all z must have Im z > 0")
    S = _coupling_matrix(W)
    k = W.k
    if m0 is None:
        m = np.repeat((-1.0 / z)[:, None], k, axis=1)
    else:
        m = np.array(m0, dtype=complex).reshape(z.size, k)
        if np.any(m.imag <= 0):
            raise ValueError("warm start must have Im m > 0")

    # alternate fixed-point and Newton rounds: the fixed point preserves the
    # Herglotz branch (a damped average of Herglotz maps), Newton accelerates
    # the near-axis points.  A Newton result is committed only when it has
    # fully converged on the right branch, so a bad Newton excursion can
    # never poison the fixed-point iterate.
    m, res = _fixed_point_sweeps(m, z, S, tol, min(300, max_iter))
    spent = 300
    while spent < max_iter:
        bad = (res > tol) | np.any(m.imag <= 0, axis=1)
        if not bad.any():
            break
        mc, rc = _newton_sweeps(m[bad].copy(), z[bad], S, tol, 100)
        done = (rc <= tol) & (mc.imag > 0).all(axis=1)
        idx = np.flatnonzero(bad)[done]
        m[idx], res[idx] = mc[done], rc[done]
        bad = (res > tol) | np.any(m.imag <= 0, axis=1)
        if not bad.any():
            break
        m[bad], res[bad] = _fixed_point_sweeps(m[bad], z[bad], S, tol, 2000)
        spent += 2100

    bad = (res > tol) | np.any(m.imag <= 0, axis=1)
    if bad.any():
        raise NotConverged(
            f"QVE solver failed at {int(bad.sum())} of {z.size} points",
            points=z[bad],
        )
    sol = QveSolution(z, m, res)
    sol._measures = W.partition.part_measures
    return sol


def qve_stieltjes(W: StepKernel, z) -> complex:
    """Stieltjes transform of the QVE measure: measure-weighted average of m."""
    sol = solve_qve(W, [z])
    return complex(sol.average()[0])


def support_bound(W: StepKernel) -> float:
    """2 * sqrt(||S||_inf): the QVE measure is supported inside [-b, b]."""
    S = _coupling_matrix(W)
    return float(2.0 * np.sqrt(np.abs(S).sum(axis=1).max()))


def default_grid(W: StepKernel, n_points: int = 4000,
                 eta: float = 1e-3) -> SpectralGrid:
    b = support_bound(W)
    return SpectralGrid(-b - 1.0, b + 1.0, n_points, eta)


def qve_measure(W: StepKernel, grid: SpectralGrid | None = None,
                richardson: bool = True) -> ProbMeasure1D:
    """QVE measure by Stieltjes inversion on the grid.

    Density Im m(x + i eta)/pi; the optional two-point Richardson step
    (eta, eta/2) removes the leading O(eta) smoothing bias.  The grid must
    capture at least 99% of the mass before renormalization.
    """
    if grid is None:
        grid = default_grid(W)
    x = grid.x
    mu = W.partition.part_measures

    def density(eta, m0=None):
        sol = solve_qve(W, x + 1j * eta, m0=m0)
        return (sol.m_values @ mu).imag / np.pi, sol.m_values

    if richardson:
        rho_eta, m_eta = density(grid.eta)
        # warm-start the harder eta/2 solve from the eta solution
        rho_half, _ = density(grid.eta / 2.0, m0=m_eta)
        rho = 2.0 * rho_half - rho_eta
    else:
        rho, _ = density(grid.eta)
    rho = np.clip(rho, 0.0, None)
    mass = float(np.trapz(rho, x))
    if mass < 0.99:
        raise GridTooNarrow(
            f"grid captured mass {mass:.4f} < 0.99; widen the grid"
        )
    return ProbMeasure1D.from_grid(x, rho)


def semicircle_density(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip(4.0 - x ** 2, 0.0, None)) / (2.0 * np.pi)


def semicircle_cdf(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, -2.0, 2.0)
    return 0.5 + xc * np.sqrt(4.0 - xc ** 2) / (4.0 * np.pi) + np.arcsin(xc / 2.0) / np.pi


def semicircle_reference(grid: SpectralGrid | None = None) -> ProbMeasure1D:
    """Semicircle law sampled on the grid, CDF in closed form."""
    if grid is None:
        grid = SpectralGrid(-2.2, 2.2, 2000, 1e-3)
    x = grid.x
    return ProbMeasure1D.from_grid_cdf(x, semicircle_density(x), semicircle_cdf(x))


def stability_check(W: StepKernel, d, z, kappa: float = STABILITY_KAPPA,
                    tol: float = RESIDUAL_TOL) -> CheckReport:
    """Perturbation bound far from the real axis.

    Solves the perturbed equation -1/m~ = z + Sm~ + d and asserts
    ||m - m~||_L2 <= kappa (||S||_inf v 1) ||d||_L2 for admissible z.
    """
    z = complex(z)
    d = np.asarray(d, dtype=complex)
    S = _coupling_matrix(W)
    snorm = float(np.abs(S).sum(axis=1).max())
    threshold = max(kappa * max(snorm, 1.0) ** 2, abs(z.real))
    if z.imag < threshold:
        raise PreconditionViolated(
            f"Im z = {z.imag} below admissible threshold {threshold}"
        )
    m = solve_qve(W, [z]).m_values[0]

    # damped fixed point for the perturbed equation; plain iteration
    # contracts at this height
    zt = np.array([z])
    mt = np.array([-1.0 / z] * W.k, dtype=complex)[None, :]
    omega = 1.0
    res_prev = np.inf
    for _ in range(MAX_ITER):
        f = -1.0 / (z + mt @ S.T + d[None, :])
        res = np.abs(mt + 1.0 / (z + mt @ S.T + d[None, :])).max()
        if res <= tol:
            break
        if res > res_prev:
            omega *= 0.5
        res_prev = res
        mt = mt + omega * (f - mt)
    else:
        raise NotConverged("perturbed QVE did not converge", points=zt)

    lam = W.partition.part_measures
    lhs = float(np.sqrt(np.sum(lam * np.abs(m - mt[0]) ** 2)))
    rhs = float(kappa * max(snorm, 1.0) * np.sqrt(np.sum(lam * np.abs(d) ** 2)))
    return CheckReport(lhs, rhs, lhs <= rhs, {"z": z, "snorm": snorm})


def solution_to_json(sol: QveSolution) -> str:
    import json

    out = []
    for z, m, r in zip(sol.z_points, sol.m_values, sol.residuals):
        out.append({
            "z": [z.real, z.imag],
            "m": [[c.real, c.imag] for c in m],
            "residual": float(r),
        })
    return json.dumps(out)
