"""Closed-form solutions checked against the numerical solvers.

Each suite returns a list of :class:`Check` rows; ``run_suites`` gathers them
into the table emitted by ``maxenergy verify-analytic``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.spatial.distance import pdist

from maxenergy import energy, geometry, kernels, oracles, pointset, rearrange
from maxenergy.energy import DensityField
from maxenergy.geometry import Domain


@dataclass
class Check:
    suite: str
    name: str
    value: float
    reference: float
    error: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _check(suite, name, value, reference, tolerance, relative=False, upper_only=False) -> Check:
    err = value - reference
    if relative:
        err /= abs(reference)
    ok = err <= tolerance if upper_only else abs(err) <= tolerance
    return Check(suite, name, float(value), float(reference), float(err), float(tolerance), bool(ok))


# -- shape descriptors of a rho_plus set -------------------------------------


def plus_centroid(domain: Domain, rho: DensityField) -> np.ndarray:
    m = rho.plus_mask
    w = domain.weights[m]
    return (domain.nodes[m] * w[:, None]).sum(axis=0) / w.sum()


def plus_diameter(domain: Domain, rho: DensityField) -> float:
    pts = domain.nodes[rho.plus_mask]
    return float(pdist(pts).max()) if len(pts) > 1 else 0.0


def plus_aspect_ratio(domain: Domain, rho: DensityField) -> float:
    """Ratio of the principal second moments of the ``rho_plus`` set."""
    pts = domain.nodes[rho.plus_mask]
    ev = np.linalg.eigvalsh(np.cov(pts.T))
    return float(ev[-1] / ev[0])


def circular_runs(mask: np.ndarray) -> int:
    """Number of maximal runs of ``True`` in a cyclic boolean sequence."""
    mask = np.asarray(mask, dtype=bool)
    if mask.all():
        return 1
    return int(np.sum(mask & ~np.roll(mask, 1)))


def plus_measure(domain: Domain, rho: DensityField) -> float:
    """Measure of the ``rho_plus`` set counting the fractional node pro rata."""
    frac = (rho.values - rho.rho_minus) / (rho.rho_plus - rho.rho_minus)
    return math.fsum(np.clip(frac, 0, 1) * domain.weights)


# -- suites ---------------------------------------------------------------------


def suite_interval() -> list[Check]:
    S = "interval"
    D = geometry.build_interval(-1.0, 1.0, 2000)
    K = kernels.exponential(1.0)
    rp, rm = pointset.parameter_bridge(1.0, 2.0, 1)
    opt = oracles.interval_optimum(1.0, 2.0)
    rho, rep = rearrange.solve(D, K, rp, rm)
    x = D.nodes[rho.plus_mask, 0]
    h = D.cell_width
    ref_q = energy.energy(D, K, opt.discretize(D))
    return [
        _check(S, "plus_set_left_end", x.min(), -opt.length / 2, 2 * h),
        _check(S, "plus_set_right_end", x.max(), opt.length / 2, 2 * h),
        _check(S, "energy_vs_grid_quadrature", rep.energies[-1], ref_q, 1e-6, relative=True),
        _check(S, "energy_vs_exact_integral", rep.energies[-1], opt.energy(K), 1e-6, relative=True),
        _check(S, "kkt_violating_mass", rep.kkt_violating_mass, 0.0, 2 * h),
    ]


def suite_two_interval() -> list[Check]:
    S = "two-interval"
    D = geometry.build_interval_union([(-2.0, -1.0), (1.0, 2.0)], 2000)
    K = kernels.truncated_linear(2.0)
    out = []
    for t in (0.0, 0.125, 0.25, 0.375, 0.5):
        ref = oracles.two_interval_energy(t)
        out.append(_check(S, f"grid_energy_t={t}", energy.energy(D, K, oracles.two_interval_density(D, t)), ref, 1e-3, relative=True))
        out.append(_check(S, f"exact_energy_t={t}", oracles.piecewise_energy_1d(oracles.two_interval_pieces(t), K), ref, 1e-12, relative=True))
    rho, rep = rearrange.solve(D, K, 2 / 3, 1 / 3, seed=0)
    out.append(_check(S, "solver_energy_vs_endpoint_optimum", rep.energies[-1], oracles.two_interval_energy(0.0), 1e-3, relative=True))
    return out


def suite_interval4() -> list[Check]:
    S = "interval4"
    K = kernels.exponential(1.0)
    out = []
    for r, R in ((2.0, 2.0), (0.5, 2.5), (0.5, 1.5), (0.1, 1.1)):
        case = oracles.interval4_case(r, R)
        X = oracles.interval4_optimum(r, R)
        params = pointset.AdmissibleParams(r, R)
        ref = pointset.discrete_energy(X, K)
        bf = pointset.brute_force_interval(4, params, K)
        tag = f"(r,R)=({r},{R}) case {case}"
        # the search may only do better than the oracle, never worse
        out.append(Check(S, f"{tag} energy", bf.energy, ref, bf.energy - ref, 1e-9, bool(bf.energy >= ref - 1e-9)))
        if case != "i":
            got = bf.configuration.points[:, 0]
            dist = min(np.abs(got - X.points[:, 0]).max(), np.abs(got - X.mirrored().points[:, 0]).max())
            out.append(_check(S, f"{tag} coordinates", dist, 0.0, bf.step))
        ok, _ = pointset.is_admissible(X, params, geometry.build_interval(-1.0, 1.0, 2000))
        out.append(Check(S, f"{tag} oracle admissible", float(ok), 1.0, float(ok) - 1.0, 0.0, ok))
    return out


def suite_disk() -> list[Check]:
    S = "disk"
    D = geometry.build_mask_region(geometry.disk(1.0), 200)
    K = kernels.exponential(1.0)
    rp, rm = rearrange.bounds_from_fraction(D, 0.25)
    rho, rep = rearrange.solve(D, K, rp, rm)
    h = D.cell_width
    # analytic bounds for the continuous disk of area pi with the same ratio
    scale = D.total_measure / math.pi
    radius = oracles.ball_optimum_radius(1.0, 2, rp * scale, rm * scale)
    ball = np.hypot(D.nodes[:, 0], D.nodes[:, 1]) <= radius
    symdiff = math.fsum(D.weights[ball ^ rho.plus_mask])
    return [
        _check(S, "centroid_norm", float(np.linalg.norm(plus_centroid(D, rho))), 0.0, 2 * h),
        _check(S, "symmetric_difference_over_pi", symdiff / math.pi, 0.0, 0.04),
        _check(S, "kkt_violating_mass", rep.kkt_violating_mass, 0.0, 2 * h * h),
    ]


def suite_circle() -> list[Check]:
    S = "circle"
    D = geometry.build_circle(2000)
    rp, rm = 1 / math.pi, 1 / (4 * math.pi)
    rho, rep = rearrange.solve(D, kernels.exponential(1.0), rp, rm)
    w = D.weights[0]
    mask = rho.plus_mask.copy()
    mask[rho.fractional] = True
    return [
        _check(S, "arc_count", circular_runs(mask), 1, 0),
        _check(S, "arc_measure", plus_measure(D, rho), oracles.circle_cap_measure(rp, rm), w),
        _check(S, "kkt_violating_mass", rep.kkt_violating_mass, 0.0, 2 * w),
    ]


def suite_cross() -> list[Check]:
    S = "cross"
    D = geometry.build_cross(1.0, 500)
    rho, rep = rearrange.solve(D, kernels.truncated_linear(2.0), 0.5, 0.125)
    t = oracles.cross_optimum_t(0.5, 0.125)
    h = D.cell_width
    pts = D.nodes[rho.plus_mask]
    on_x = pts[pts[:, 1] == 0, 0]
    on_y = pts[pts[:, 0] == 0, 1]
    return [
        _check(S, "x_segment_left", on_x.min(), -t, 2 * h),
        _check(S, "x_segment_right", on_x.max(), t, 2 * h),
        _check(S, "y_segment_bottom", on_y.min(), -t, 2 * h),
        _check(S, "y_segment_top", on_y.max(), t, 2 * h),
        _check(S, "kkt_violating_mass", rep.kkt_violating_mass, 0.0, 2 * h),
    ]


def suite_delta_limit() -> list[Check]:
    S = "delta-limit"
    D = geometry.build_mask_region(geometry.disk(1.0), 200)
    K = kernels.exponential(1.0)
    rm = 1 / (2 * math.pi)
    centre = oracles.delta_limit_center(D, K, rm)
    diam, out = [], []
    for f in (2, 4, 8, 16):
        rho, _ = rearrange.solve(D, K, f / math.pi, rm)
        diam.append(plus_diameter(D, rho))
    dd = np.diff(diam)
    out.append(Check(S, "diameter_strictly_decreasing", float(dd.max()), 0.0, float(dd.max()), 0.0, bool(dd.max() < 0)))
    out.append(_check(S, "final_centroid_to_limit_point", float(np.linalg.norm(plus_centroid(D, rho) - centre.point)), 0.0, 2 * D.cell_width))
    return out


def suite_bridge() -> list[Check]:
    S = "bridge"
    K = kernels.exponential(1.0)
    e_star = oracles.interval_optimum(1.0, 2.0).energy(K)
    D = geometry.build_interval(-1.0, 1.0, 2000)
    params = pointset.AdmissibleParams(1.0, 2.0)
    out, gaps = [], []
    for n in (64, 128, 256):
        X = pointset.construct_1d_sequence(n, 1.0, 2.0)
        ok, _ = pointset.is_admissible(X, params, D)
        e = pointset.discrete_energy(X, K)
        gaps.append(abs(e - e_star))
        out.append(Check(S, f"n={n} admissible", float(ok), 1.0, float(ok) - 1.0, 0.0, ok))
        out.append(_check(S, f"n={n} energy_upper_bound", e, e_star, 0.02, relative=True, upper_only=True))
    dec = bool(np.all(np.diff(gaps) < 0))
    out.append(Check(S, "gap_decreasing", float(dec), 1.0, float(dec) - 1.0, 0.0, dec))
    return out


SUITES: dict[str, Callable[[], list[Check]]] = {
    "interval": suite_interval,
    "two-interval": suite_two_interval,
    "interval4": suite_interval4,
    "disk": suite_disk,
    "circle": suite_circle,
    "cross": suite_cross,
    "delta-limit": suite_delta_limit,
    "bridge": suite_bridge,
}


def run_suites(name: str = "all") -> list[Check]:
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}")
    rows: list[Check] = []
    for n in names:
        rows.extend(SUITES[n]())
    return rows
