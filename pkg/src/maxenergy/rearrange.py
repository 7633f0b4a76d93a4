"""Volume-preserving threshold rearrangement for bang-bang densities.

Each step applies K to the current density and hands ``rho_plus`` to the
nodes with the largest potential until the prescribed ``rho_plus`` mass is
used up. A single node may receive an intermediate value so that the total
mass is exactly one on any grid.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from maxenergy.energy import DensityField, apply_K, energy_from_potential, inner, kkt_residual
from maxenergy.geometry import Domain
from maxenergy.kernels import KernelSpec

STOP_REASONS = ("stationary_set", "l1_below_tol", "max_iter")


def _measure(domain: Domain | float) -> float:
    return domain.total_measure if isinstance(domain, Domain) else float(domain)


def check_bounds(measure: float, rho_plus: float, rho_minus: float) -> None:
    inv = 1.0 / measure
    if not (rho_minus > 0 and rho_plus >= inv * (1 - 1e-12) and inv * (1 + 1e-12) >= rho_minus):
        raise ValueError(
            f"need rho_plus >= 1/|Omega| >= rho_minus > 0 (rho_plus={rho_plus}, "
            f"1/|Omega|={inv}, rho_minus={rho_minus})"
        )


def target_plus_mass(domain: Domain | float, rho_plus: float, rho_minus: float) -> float:
    """Measure of the region that must carry ``rho_plus``.

    ``((1/|Omega| - rho_minus) / (rho_plus - rho_minus)) |Omega|``, clamped
    to ``[0, |Omega|]``; the whole domain when the bounds coincide.
    """
    measure = _measure(domain)
    check_bounds(measure, rho_plus, rho_minus)
    if rho_plus - rho_minus <= 1e-12 * rho_plus:
        return measure
    m = (1.0 / measure - rho_minus) / (rho_plus - rho_minus) * measure
    return min(max(m, 0.0), measure)


def bounds_from_fraction(domain: Domain | float, fraction: float, rho_minus_scale: float = 0.5) -> tuple[float, float]:
    """``(rho_plus, rho_minus)`` giving ``|Omega_+| = fraction * |Omega|``.

    ``rho_minus = rho_minus_scale / |Omega|``; only the ratio of the bounds
    affects which sets are stationary.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    if not 0 < rho_minus_scale < 1:
        raise ValueError("rho_minus_scale must be in (0, 1)")
    measure = _measure(domain)
    rho_minus = rho_minus_scale / measure
    return rho_minus + (1.0 / measure - rho_minus) / fraction, rho_minus


def volume_threshold(domain: Domain, phi, rho_plus: float, rho_minus: float) -> DensityField:
    """Bathtub step: ``rho_plus`` on the top of ``phi``, ``rho_minus`` elsewhere.

    Nodes are ranked by ``phi`` descending with ties broken by ascending
    index. If the target mass ends strictly inside a node, that node gets the
    intermediate value that makes the total mass one.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (domain.n_nodes,) or not np.all(np.isfinite(phi)):
        raise ValueError("phi must be a finite field on the domain")
    m_plus = target_plus_mass(domain, rho_plus, rho_minus)
    tol = 1e-12 * domain.total_measure
    order = np.argsort(-phi, kind="stable")
    cw = np.cumsum(domain.weights[order])
    k = int(np.searchsorted(cw, m_plus + tol, side="right"))
    values = np.full(domain.n_nodes, float(rho_minus))
    values[order[:k]] = rho_plus
    remainder = m_plus - (cw[k - 1] if k else 0.0)
    if remainder > tol and k < domain.n_nodes:
        j = order[k]
        values[j] = rho_minus + (rho_plus - rho_minus) * remainder / domain.weights[j]
    return DensityField(values, rho_minus, rho_plus)


def random_admissible_init(domain: Domain, rho_plus: float, rho_minus: float, seed: int = 0) -> DensityField:
    """Seeded random ``rho_plus`` set of the right mass."""
    perm = np.random.default_rng(seed).permutation(domain.n_nodes)
    score = np.empty(domain.n_nodes)
    score[perm] = np.arange(domain.n_nodes, 0, -1, dtype=float)
    return volume_threshold(domain, score, rho_plus, rho_minus)


def uniform_init(domain: Domain, rho_plus: float, rho_minus: float) -> DensityField:
    """The constant density ``1/|Omega|`` (admissible, not bang-bang)."""
    check_bounds(domain.total_measure, rho_plus, rho_minus)
    values = np.full(domain.n_nodes, 1.0 / domain.total_measure)
    return DensityField(np.clip(values, rho_minus, rho_plus), rho_minus, rho_plus)


def blob_init(domain: Domain, centre, rho_plus: float, rho_minus: float) -> DensityField:
    """``rho_plus`` on the nodes closest to ``centre``."""
    centre = np.asarray(centre, dtype=float)
    return volume_threshold(domain, -domain.distance(domain.nodes, centre), rho_plus, rho_minus)


@dataclass
class SolveReport:
    """Trace of one rearrangement run.

    ``energies[0]`` is the energy of the initial density and
    ``energies[s]`` that of iterate ``s``; ``l1_changes[s-1]`` and
    ``set_changed[s-1]`` describe the step into iterate ``s``.
    """

    energies: list[float] = field(default_factory=list)
    l1_changes: list[float] = field(default_factory=list)
    set_changed: list[bool] = field(default_factory=list)
    iterations: int = 0
    stop_reason: str = "max_iter"
    kkt_violating_mass: float = math.nan
    kkt_alpha: float = math.nan
    plus_mass: float = math.nan

    def to_dict(self) -> dict:
        return asdict(self)


def _set_key(rho: DensityField) -> tuple[bytes, tuple[int, ...]]:
    return np.packbits(rho.plus_mask).tobytes(), tuple(int(i) for i in rho.fractional)


def monotonicity_violations(report: SolveReport, rtol: float = 1e-12) -> list[str]:
    """Steps where the energy fell (beyond ``rtol``) or a set change failed to raise it."""
    out = []
    e = report.energies
    for s in range(1, len(e)):
        if e[s] < e[s - 1] - rtol * abs(e[s - 1]):
            out.append(f"step {s}: energy decreased {e[s - 1]!r} -> {e[s]!r}")
        elif report.set_changed[s - 1] and not e[s] > e[s - 1]:
            out.append(f"step {s}: set changed but energy did not increase ({e[s]!r})")
    return out


def solve(
    domain: Domain,
    kernel: KernelSpec,
    rho_plus: float,
    rho_minus: float,
    init: DensityField | None = None,
    tol: float = 0.0,
    max_iter: int = 500,
    seed: int = 0,
    method: str = "auto",
    threads: int | None = None,
    callback: Callable[[int, DensityField, np.ndarray], None] | None = None,
) -> tuple[DensityField, SolveReport]:
    """Iterate ``rho <- volume_threshold(K rho)`` until the ``rho_plus`` set is stationary.

    Stops when the ``rho_plus`` set (and fractional node) repeats, when the
    L1 change drops to ``tol`` (only if ``tol > 0``), or after ``max_iter``
    steps. ``init`` defaults to :func:`random_admissible_init` with ``seed``.
    ``callback(s, rho_s, K rho_s)`` is called after every step.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    kernel.validate_for_dim(domain.intrinsic_dim)
    m_plus = target_plus_mass(domain, rho_plus, rho_minus)
    if init is None:
        init = random_admissible_init(domain, rho_plus, rho_minus, seed)
    if (init.rho_plus, init.rho_minus) != (float(rho_plus), float(rho_minus)):
        raise ValueError("init carries different bounds")
    init.validate(domain, mass_tol=1e-9, bang_bang=False)

    rho = init
    phi = apply_K(domain, kernel, rho, method, threads)
    report = SolveReport(energies=[energy_from_potential(domain, rho, phi)], plus_mass=m_plus)
    key = _set_key(rho)
    for s in range(1, max_iter + 1):
        new = volume_threshold(domain, phi, rho_plus, rho_minus)
        new_key = _set_key(new)
        changed = new_key != key
        report.l1_changes.append(inner(domain, np.abs(new.values - rho.values), 1.0))
        report.set_changed.append(changed)
        rho, key = new, new_key
        phi = apply_K(domain, kernel, rho, method, threads)
        report.energies.append(energy_from_potential(domain, rho, phi))
        report.iterations = s
        if callback is not None:
            callback(s, rho, phi)
        if not changed:
            report.stop_reason = "stationary_set"
            break
        if tol > 0 and report.l1_changes[-1] <= tol:
            report.stop_reason = "l1_below_tol"
            break
    else:
        report.stop_reason = "max_iter"
    kkt = kkt_residual(domain, kernel, rho, phi=phi)
    report.kkt_alpha, report.kkt_violating_mass = kkt.alpha, kkt.violating_mass
    return rho, report
