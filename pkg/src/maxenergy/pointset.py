"""The discrete problem: n points maximizing a pair-kernel energy subject to
a minimum separation ``r n^(-1/d)`` and a covering radius ``R n^(-1/d)``.

Includes admissibility checks, the discrete energy, an exhaustive lattice
search for small n on an interval, the (r, R) -> (rho_plus, rho_minus)
bridge and a constructive admissible sequence on an interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from maxenergy import _backend
from maxenergy.energy import DensityField
from maxenergy.geometry import Domain
from maxenergy.kernels import KernelSpec

_EPS = 1e-12
_TIE_RTOL = 1e-12

# Packing density of the triangular lattice, pi / sqrt(12) (Thue; Fejes Toth).
# Covering density of the triangular lattice, 2 pi / sqrt(27) (Kershner 1939).
PACKING_DENSITY = {1: 1.0, 2: math.pi / math.sqrt(12.0)}
COVERING_DENSITY = {1: 1.0, 2: 2.0 * math.pi / math.sqrt(27.0)}


class InfeasibleError(ValueError):
    """No admissible configuration exists (or none was found at the search resolution)."""


@dataclass(frozen=True, eq=False)
class Configuration:
    """A finite pointset; ``points`` has shape ``(n, p)``."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[0] < 2:
            raise ValueError("a configuration needs at least two points")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValueError("configuration points must be pairwise distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def mirrored(self, centre: float = 0.0) -> "Configuration":
        """Reflection ``x -> 2 centre - x`` of a 1-D configuration (re-sorted)."""
        return Configuration(np.sort(2.0 * centre - self.points[:, 0]))


@dataclass(frozen=True)
class AdmissibleParams:
    r: float
    R: float
    d: int = 1

    def __post_init__(self) -> None:
        if not (self.r > 0 and self.R > 0):
            raise ValueError("r and R must be positive")
        if self.d < 1:
            raise ValueError("d must be >= 1")

    def bounds(self, n: int) -> tuple[float, float]:
        """``(r n^(-1/d), R n^(-1/d))``."""
        scale = n ** (-1.0 / self.d)
        return self.r * scale, self.R * scale


class AdmissibilityMargins(NamedTuple):
    separation: float  # delta(X) - r n^(-1/d)
    covering: float  # R n^(-1/d) - eta(X)
    tolerance: float  # bound on the grid error in eta
    uncertain: bool  # a margin lies within the tolerance


def _metric_p(metric: str) -> int:
    return 1 if metric == "manhattan" else 2


def separation(X: Configuration, metric: str = "euclidean") -> float:
    """Minimum pairwise distance."""
    return float(pdist(X.points, "cityblock" if metric == "manhattan" else "euclidean").min())


def interval_covering_radius(points, a: float, b: float) -> float:
    """Exact covering radius of a 1-D pointset in ``[a, b]``."""
    x = np.sort(np.asarray(points, dtype=float).ravel())
    gaps = np.diff(x) / 2.0 if x.size > 1 else np.zeros(0)
    return float(max(x[0] - a, b - x[-1], gaps.max(initial=0.0)))


def covering_tolerance(domain: Domain) -> float:
    """Worst-case underestimate of the covering radius from node sampling."""
    if domain.descriptor.get("shape") == "interval" and domain.ambient_dim == 1:
        return 0.0
    return domain.cell_diameter


def covering_radius(X: Configuration, domain: Domain) -> float:
    """``max_y min_j |y - x_j|`` over the domain.

    Exact for single-interval domains; otherwise the maximum runs over the
    quadrature nodes and may fall short by up to :func:`covering_tolerance`.
    """
    desc = domain.descriptor
    if desc.get("shape") == "interval" and domain.ambient_dim == 1 and X.ambient_dim == 1:
        return interval_covering_radius(X.points, desc["a"], desc["b"])
    if X.ambient_dim != domain.ambient_dim:
        raise ValueError("configuration and domain live in different spaces")
    dist, _ = cKDTree(X.points).query(domain.nodes, p=_metric_p(domain.metric))
    return float(dist.max())


def mesh_ratio(X: Configuration, domain: Domain) -> float:
    return covering_radius(X, domain) / separation(X, domain.metric)


def is_admissible(X: Configuration, params: AdmissibleParams, domain: Domain) -> tuple[bool, AdmissibilityMargins]:
    """Check ``delta(X) >= r n^(-1/d)`` and ``eta(X) <= R n^(-1/d)``."""
    if params.d != domain.intrinsic_dim:
        raise ValueError("params.d does not match the domain dimension")
    sep_bound, cov_bound = params.bounds(X.n)
    m_sep = separation(X, domain.metric) - sep_bound
    m_cov = cov_bound - covering_radius(X, domain)
    tol = covering_tolerance(domain)
    ok = m_sep >= -_EPS and m_cov >= -_EPS
    uncertain = abs(m_cov) <= tol and tol > 0
    return ok, AdmissibilityMargins(m_sep, m_cov, tol, uncertain)


def discrete_energy(X: Configuration, kernel: KernelSpec, metric: str = "euclidean", d: int = 1) -> float:
    """``(1 / 2n^2) sum_{i != j} k(x_i, x_j)``."""
    dist = pdist(X.points, "cityblock" if metric == "manhattan" else "euclidean")
    return math.fsum(kernel.profile(dist, d)) / X.n**2


# -- exhaustive search on an interval ---------------------------------------


class BruteForceResult(NamedTuple):
    configuration: Configuration
    energy: float
    step: float  # final lattice step
    n_admissible: int  # admissible tuples on the coarse lattice


def _search(cand_rows, lo, hi, sep, cover, kernel):
    m = max(len(c) for c in cand_rows)
    cand = np.full((len(cand_rows), m), np.inf)
    counts = np.empty(len(cand_rows), dtype=np.intc)
    for i, c in enumerate(cand_rows):
        cand[i, : len(c)] = c
        counts[i] = len(c)
    code, p0, p1 = kernel.core_args(1)
    impl = _backend.impl
    found, best, _, n_adm = impl.interval_search(cand, counts, lo, hi, sep, cover, code, p0, p1, _EPS, 0, 0.0)
    if not found:
        return None
    # lexicographically first tuple within the tie tolerance of the maximum
    thr = best - _TIE_RTOL * abs(best)
    _, value, idx, _ = impl.interval_search(cand, counts, lo, hi, sep, cover, code, p0, p1, _EPS, 1, thr)
    x = np.array([cand_rows[i][k] for i, k in enumerate(idx)])
    return x, value, n_adm


def brute_force_interval(
    n: int,
    params: AdmissibleParams,
    kernel: KernelSpec,
    coarse: int = 80,
    refine_levels: int = 3,
    a: float = -1.0,
    b: float = 1.0,
) -> BruteForceResult:
    """Best admissible ``x_1 < ... < x_n`` on ``[a, b]`` by lattice search.

    All increasing tuples on the lattice ``a + (b - a) k / coarse`` are
    enumerated (with pruning); then ``refine_levels`` times the step is
    divided by 4 and each coordinate is searched within one old step of the
    incumbent. Ties within a relative ``1e-12`` go to the lexicographically
    smallest tuple.
    """
    if not 2 <= n <= 6:
        raise ValueError("brute force supports 2 <= n <= 6")
    if params.d != 1:
        raise ValueError("brute force runs on an interval (d = 1)")
    sep, cover = params.bounds(n)
    step = (b - a) / coarse
    lattice = a + (b - a) * np.arange(coarse + 1) / coarse
    res = _search([lattice] * n, a, b, sep, cover, kernel)
    if res is None:
        raise InfeasibleError(f"infeasible-at-resolution: no admissible {n}-point configuration on the lattice")
    x, value, n_adm = res
    for _ in range(refine_levels):
        step /= 4.0
        rows = [np.unique(np.clip(xi + step * np.arange(-4, 5), a, b)) for xi in x]
        x, value, _ = _search(rows, a, b, sep, cover, kernel)
    return BruteForceResult(Configuration(x), value / n**2, step, n_adm)


# -- continuous <-> discrete bridge -----------------------------------------


def ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def parameter_bridge(r: float, R: float, d: int) -> tuple[float, float]:
    """Density bounds matched to the separation/covering constants.

    ``rho_plus = 2^d Delta_d / (r^d beta_d)`` and
    ``rho_minus = Theta_d / (R^d beta_d)`` with ``Delta_d``/``Theta_d`` the
    best packing/covering densities (known for d = 1, 2).
    """
    if d not in PACKING_DENSITY:
        raise ValueError("packing/covering constants are only tabulated for d in {1, 2}")
    if not (r > 0 and R > 0):
        raise ValueError("r and R must be positive")
    beta = ball_volume(d)
    return 2**d * PACKING_DENSITY[d] / (r**d * beta), COVERING_DENSITY[d] / (R**d * beta)


def optimal_mesh_ratio(d: int) -> float:
    """``(1/2) (Theta_d / Delta_d)^(1/d)``, the asymptotically best mesh ratio."""
    return 0.5 * (COVERING_DENSITY[d] / PACKING_DENSITY[d]) ** (1.0 / d)


def construct_1d_sequence(n: int, r: float, R: float, a: float = -1.0, b: float = 1.0) -> Configuration:
    """Admissible n-point set on ``[a, b]`` mimicking the optimal density.

    A centred block of ``n_plus`` points at spacing ``r/n`` (density
    ``1/r``) is flanked on each side by points spread evenly up to
    ``R/n`` from the ends (density about ``1/(2R)``). ``n_plus`` starts at
    its largest possible value and is reduced until both constraints hold,
    so excess points are always taken from the packed block.
    """
    if n < 3:
        raise InfeasibleError("n too small for a packed block with covering tails")
    if not (r < 2 * R and r * (n - 1) <= n * (b - a) and R * (b - a) > 0):
        raise InfeasibleError("(r, R) admits no configuration")
    s, c = r / n, R / n
    mid = 0.5 * (a + b)
    for n_plus in range(n, 0, -1):
        half = 0.5 * (n_plus - 1) * s
        span = (b - a) / 2.0 - half - c  # block end -> last allowed position
        rest = n - n_plus
        sides = (rest // 2, rest - rest // 2)
        if not all(_side_ok(span, m, s, c) for m in sides):
            continue
        left = [mid - half - span * k / sides[0] for k in range(sides[0], 0, -1)]
        block = mid + s * (np.arange(n_plus) - 0.5 * (n_plus - 1))
        right = [mid + half + span * k / sides[1] for k in range(1, sides[1] + 1)]
        return Configuration(np.concatenate([left, block, right]))
    raise InfeasibleError(f"no admissible block/tail split for n={n}")


def _side_ok(span: float, m: int, s: float, c: float) -> bool:
    if m == 0:
        return span <= _EPS
    if span <= 0:
        return False
    g = span / m
    return s - _EPS <= g <= 2.0 * c + _EPS


def empirical_density(X: Configuration, domain: Domain, bandwidth_cells: int = 1) -> np.ndarray:
    """Box-filtered histogram of ``X`` on the domain nodes, unit mass.

    Node ``i`` gets the fraction of points within ``bandwidth_cells * h / 2``
    of it divided by the measure of that window inside the domain.
    """
    if bandwidth_cells < 1:
        raise ValueError("bandwidth_cells must be >= 1")
    radius = 0.5 * bandwidth_cells * domain.cell_width * (1 + 1e-9)
    p = _metric_p(domain.metric)
    node_tree = cKDTree(domain.nodes)
    counts = np.array([len(v) for v in cKDTree(X.points).query_ball_point(domain.nodes, radius, p=p)], dtype=float)
    window = np.array([domain.weights[v].sum() for v in node_tree.query_ball_point(domain.nodes, radius, p=p)])
    dens = counts / (X.n * window)
    total = math.fsum(dens * domain.weights)
    return dens / total if total > 0 else dens


def density_from_configuration(X: Configuration, domain: Domain, bandwidth_cells: int, rho_plus: float, rho_minus: float) -> DensityField:
    """Empirical density wrapped with bounds (not clipped; for reporting)."""
    return DensityField(empirical_density(X, domain, bandwidth_cells), rho_minus, rho_plus)
