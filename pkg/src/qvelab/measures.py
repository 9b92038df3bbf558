"""One-dimensional probability measures and the metrics used for spectra.

Measures are either finite atomic (values + weights) or gridded (x, density,
cdf).  ``metric_d`` evaluates the Stieltjes-transform metric on a fixed grid
of points with Im z >= 2, so it is a certified lower bound of the sup metric;
every inequality asserted against it therefore holds a fortiori.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionViolated
from .report import CheckReport

# fixed evaluation grid for metric_d: lower bound of sup over {Im z >= 2}
_D_RE = np.arange(-8.0, 8.0 + 1e-9, 0.25)
_D_IM = np.array([2.0, 2.5, 3.0, 4.0, 6.0, 10.0])
METRIC_D_GRID = (_D_RE[:, None] + 1j * _D_IM[None, :]).ravel()


@dataclass(frozen=True)
class ProbMeasure1D:
    """Probability measure on R: atoms or a gridded density with CDF."""

    kind: str                      # "atoms" | "grid"
    x: np.ndarray                  # atom locations or grid points
    w: np.ndarray | None = None    # atom weights
    density: np.ndarray | None = None
    cdf_values: np.ndarray | None = None

    @classmethod
    def from_atoms(cls, values, weights=None) -> "ProbMeasure1D":
        v = np.asarray(values, dtype=float)
        if weights is None:
            w = np.full(v.size, 1.0 / v.size)
        else:
            w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = w.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total}")
        order = np.argsort(v, kind="stable")
        return cls("atoms", v[order], w=w[order] / total)

    @classmethod
    def from_grid(cls, x, density, normalize=True) -> "ProbMeasure1D":
        x = np.asarray(x, dtype=float)
        rho = np.clip(np.asarray(density, dtype=float), 0.0, None)
        mass = np.trapz(rho, x)
        if mass <= 0:
            raise ValueError("density has no mass on the grid")
        if normalize:
            rho = rho / mass
        cdf = _cumtrapz(rho, x)
        cdf = np.clip(cdf / cdf[-1], 0.0, 1.0)
        return cls("grid", x, density=rho, cdf_values=cdf)

    @classmethod
    def from_grid_cdf(cls, x, density, cdf) -> "ProbMeasure1D":
        """Grid measure with an externally supplied (e.g. closed-form) CDF."""
        return cls("grid", np.asarray(x, float),
                   density=np.asarray(density, float),
                   cdf_values=np.asarray(cdf, float))

    # -- CDF / quantiles ----------------------------------------------------

    def cdf(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "atoms":
            idx = np.searchsorted(self.x, t, side="right")
            cw = np.concatenate(([0.0], np.cumsum(self.w)))
            return cw[idx]
        return np.interp(t, self.x, self.cdf_values, left=0.0, right=1.0)

    def cdf_left(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "atoms":
            idx = np.searchsorted(self.x, t, side="left")
            cw = np.concatenate(([0.0], np.cumsum(self.w)))
            return cw[idx]
        return self.cdf(t)

    def quantile(self, t) -> np.ndarray:
        """Generalized inverse CDF, inf{x : F(x) >= t}."""
        t = np.asarray(t, dtype=float)
        if self.kind == "atoms":
            cw = np.cumsum(self.w)
            idx = np.clip(np.searchsorted(cw, t - 1e-15, side="left"),
                          0, self.x.size - 1)
            return self.x[idx]
        cdf = self.cdf_values
        keep = np.concatenate(([True], np.diff(cdf) > 0))
        return np.interp(t, cdf[keep], self.x[keep],
                         left=self.x[0], right=self.x[-1])

    def moment(self, order: int) -> float:
        if self.kind == "atoms":
            return float(np.sum(self.w * self.x ** order))
        return float(np.trapz(self.density * self.x ** order, self.x))

    def support_points(self) -> np.ndarray:
        return self.x

    def stieltjes(self, z) -> complex:
        """m(z) = int dmu(x)/(x - z), Im z > 0."""
        z = complex(z)
        if z.imag <= 0:
            raise ValueError("stieltjes transform requires Im z > 0")
        if self.kind == "atoms":
            return complex(np.sum(self.w / (self.x - z)))
        return complex(np.trapz(self.density / (self.x - z), self.x))


def stieltjes(mu: ProbMeasure1D, z) -> complex:
    return mu.stieltjes(z)


def _cumtrapz(y, x):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


# ---------------------------------------------------------------------------
# metrics


def metric_d(mu: ProbMeasure1D, nu: ProbMeasure1D) -> float:
    """Max of |m_mu - m_nu| over the fixed grid with Im z >= 2."""
    diffs = [abs(mu.stieltjes(z) - nu.stieltjes(z)) for z in METRIC_D_GRID]
    return float(max(diffs))


def ks_distance(mu: ProbMeasure1D, nu: ProbMeasure1D) -> float:
    """sup_t |F_mu(t) - F_nu(t)|, evaluated at merged breakpoints and jumps."""
    pts = np.unique(np.concatenate([mu.support_points(), nu.support_points()]))
    d_right = np.abs(mu.cdf(pts) - nu.cdf(pts))
    d_left = np.abs(mu.cdf_left(pts) - nu.cdf_left(pts))
    return float(max(d_right.max(), d_left.max()))


def wasserstein(mu: ProbMeasure1D, nu: ProbMeasure1D, order: int = 1,
                n_grid: int = 10_000) -> float:
    """1-D L^p Wasserstein distance via quantile functions.

    Atom pairs integrate exactly over merged CDF levels; anything involving a
    grid measure uses a midpoint quantile grid.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if mu.kind == "atoms" and nu.kind == "atoms":
        levels = np.unique(np.concatenate(
            [[0.0], np.cumsum(mu.w), np.cumsum(nu.w), [1.0]]))
        levels = np.clip(levels, 0.0, 1.0)
        mids = 0.5 * (levels[:-1] + levels[1:])
        gaps = np.diff(levels)
        q1, q2 = mu.quantile(mids), nu.quantile(mids)
        total = float(np.sum(gaps * np.abs(q1 - q2) ** order))
        return total ** (1.0 / order)
    t = (np.arange(n_grid) + 0.5) / n_grid
    q1, q2 = mu.quantile(t), nu.quantile(t)
    return float(np.mean(np.abs(q1 - q2) ** order) ** (1.0 / order))


def metric_inequality_check(mu: ProbMeasure1D, nu: ProbMeasure1D) -> CheckReport:
    """d <= min(W1, KS) (valid since grid-d lower-bounds the sup metric)."""
    d = metric_d(mu, nu)
    w1 = wasserstein(mu, nu, 1)
    ks = ks_distance(mu, nu)
    rhs = min(w1, ks)
    return CheckReport(d, rhs, d <= rhs + 1e-9,
                       {"w1": w1, "ks": ks})


# ---------------------------------------------------------------------------
# appendix inequalities on QVE measures (lazy import avoids a module cycle)


def hw_check(W, W_prime, slack: float = 2e-3, grid=None) -> CheckReport:
    """Hoeffding/Wielandt-style bound: W2 of the spectral measures is at most
    sqrt of the L1 distance of the kernels, up to grid-inversion slack."""
    from . import kernels as kmod
    from . import qve

    lhs = wasserstein(qve.qve_measure(W, grid), qve.qve_measure(W_prime, grid), 2)
    rhs = float(np.sqrt(kmod.l1_norm(W.sub(W_prime))))
    return CheckReport(lhs, rhs + slack, lhs <= rhs + slack,
                       {"slack": slack})


def interlacing_check(W, W_prime, E_measure: float,
                      slack: float = 1e-3, grid=None) -> CheckReport:
    """Kernel interlacing: metric_d of the spectral measures is at most twice
    the measure of the part set where the kernels differ."""
    from . import qve

    a, b = W, W_prime
    if a.partition != b.partition:
        raise PreconditionViolated("kernels must share a partition")
    # smallest part set E covering the difference support: entry (i,j) may
    # differ only if i in E or j in E, so greedily cover rows of the defect
    diff = a.values != b.values
    cover = np.zeros(a.partition.k, dtype=bool)
    while diff.any():
        i = int(np.argmax(diff.sum(axis=1)))
        cover[i] = True
        diff[i, :] = False
        diff[:, i] = False
    measure_diff = float(a.partition.part_measures[cover].sum())
    if measure_diff > E_measure + 1e-12:
        raise PreconditionViolated(
            f"kernels differ on measure {measure_diff} > E_measure {E_measure}"
        )
    lhs = metric_d(qve.qve_measure(a, grid), qve.qve_measure(b, grid))
    rhs = 2.0 * E_measure
    return CheckReport(lhs, rhs + slack, lhs <= rhs + slack,
                       {"measure_diff": measure_diff})


# ---------------------------------------------------------------------------
# CSV round trips


def save_measure_csv(mu: ProbMeasure1D, path):
    with open(path, "w", newline="") as fh:
        if mu.kind == "atoms":
            fh.write("x,weight\n")
            for x, w in zip(mu.x, mu.w):
                fh.write(f"{float(x)!r},{float(w)!r}\n")
        else:
            fh.write("x,density,cdf\n")
            for x, d, c in zip(mu.x, mu.density, mu.cdf_values):
                fh.write(f"{float(x)!r},{float(d)!r},{float(c)!r}\n")


def load_measure_csv(path) -> ProbMeasure1D:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    data = np.array(rows)
    if header == ["x", "weight"]:
        return ProbMeasure1D.from_atoms(data[:, 0], data[:, 1])
    if header == ["x", "density", "cdf"]:
        return ProbMeasure1D.from_grid_cdf(data[:, 0], data[:, 1], data[:, 2])
    raise ValueError(f"unrecognized measure CSV header: {header}")
