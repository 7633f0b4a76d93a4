"""Quadratic kernel energy, the integral operator K, potentials and KKT checks.

Discretely, ``(K phi)_i = sum_j k(x_i, x_j) phi_j w_j`` and
``E[rho] = 1/2 <rho, K rho>``; self-pairs are omitted for singular kernels.
Two mat-vec routes exist: a direct row-streamed sum (compiled core, O(N)
memory) and a zero-padded FFT convolution for domains on a regular lattice.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from maxenergy import _backend
from maxenergy.geometry import Domain
from maxenergy.kernels import KernelSpec


@dataclass(frozen=True, eq=False)
class DensityField:
    """Node values of a density together with its admissible bounds."""

    values: np.ndarray
    rho_minus: float
    rho_plus: float

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "rho_minus", float(self.rho_minus))
        object.__setattr__(self, "rho_plus", float(self.rho_plus))

    @property
    def plus_mask(self) -> np.ndarray:
        return self.values == self.rho_plus

    @property
    def minus_mask(self) -> np.ndarray:
        return (self.values == self.rho_minus) & ~self.plus_mask

    @property
    def fractional(self) -> np.ndarray:
        """Indices of nodes strictly between the bounds."""
        return np.flatnonzero(~(self.plus_mask | self.minus_mask))

    def plus_set(self) -> np.ndarray:
        return np.flatnonzero(self.plus_mask)

    def mass(self, domain: Domain) -> float:
        return math.fsum(self.values * domain.weights)

    def validate(self, domain: Domain, mass_tol: float = 1e-12, bang_bang: bool = True) -> None:
        """Raise ``ValueError`` unless the admissibility invariants hold."""
        if self.values.shape != (domain.n_nodes,):
            raise ValueError("density length does not match the domain")
        if not 0 < self.rho_minus <= self.rho_plus:
            raise ValueError("need 0 < rho_minus <= rho_plus")
        slack = 1e-12 * self.rho_plus
        if np.any(self.values < self.rho_minus - slack) or np.any(self.values > self.rho_plus + slack):
            raise ValueError("density violates its bounds")
        mass = self.mass(domain)
        if abs(mass - 1.0) > mass_tol:
            raise ValueError(f"density mass {mass!r} is not 1")
        if bang_bang and self.fractional.size > 1:
            raise ValueError(f"{self.fractional.size} nodes are strictly between the bounds")


class KKTResult(NamedTuple):
    alpha: float
    violating_mass: float


class Potential(NamedTuple):
    values: np.ndarray
    argmax: int


def _check(domain: Domain, kernel: KernelSpec, values) -> np.ndarray:
    v = np.asarray(values.values if isinstance(values, DensityField) else values, dtype=float)
    if v.shape != (domain.n_nodes,):
        raise ValueError(f"field has shape {v.shape}, domain has {domain.n_nodes} nodes")
    kernel.validate_for_dim(domain.intrinsic_dim)
    return v


@functools.lru_cache(maxsize=16)
def _kernel_spectrum(shape, spacing, kernel, metric, d):
    padded = tuple(2 * s for s in shape)
    axes = []
    for s, h in zip(shape, spacing):
        off = np.arange(2 * s)
        off[off >= s] -= 2 * s
        axes.append(off * h)
    grids = np.meshgrid(*axes, indexing="ij")
    if metric == "manhattan":
        dist = sum(np.abs(g) for g in grids)
    else:
        dist = np.sqrt(sum(g * g for g in grids))
    kvals = kernel.profile(dist, d)
    if kernel.singular_at_zero:
        kvals[(0,) * len(shape)] = 0.0
    return np.fft.rfftn(kvals, s=padded, axes=tuple(range(len(padded))))


def _apply_fft(domain: Domain, kernel: KernelSpec, v: np.ndarray) -> np.ndarray:
    lat = domain.lattice
    khat = _kernel_spectrum(
        tuple(lat.shape), tuple(float(h) for h in lat.spacing), kernel, domain.metric, domain.intrinsic_dim
    )
    padded = tuple(2 * s for s in lat.shape)
    grid = np.zeros(lat.shape)
    idx = tuple(lat.index.T)
    grid[idx] = v
    ax = tuple(range(len(padded)))
    out = np.fft.irfftn(np.fft.rfftn(grid, s=padded, axes=ax) * khat, s=padded, axes=ax)
    return np.ascontiguousarray(out[idx])


def apply_K(
    domain: Domain,
    kernel: KernelSpec,
    values,
    method: str = "auto",
    threads: int | None = None,
) -> np.ndarray:
    """Discrete integral operator applied to a density or field.

    Parameters
    ----------
    method : {"auto", "direct", "fft"}
        ``auto`` picks the FFT route when the domain sits on a lattice.
    threads : int, optional
        OpenMP threads for the compiled direct route. The result is
        independent of this value.
    """
    v = _check(domain, kernel, values) * domain.weights
    if method == "auto":
        method = "fft" if domain.lattice is not None else "direct"
    if method == "fft":
        if domain.lattice is None:
            raise ValueError("fft route needs a lattice domain")
        return _apply_fft(domain, kernel, v)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    code, p0, p1 = kernel.core_args(domain.intrinsic_dim)
    return _backend.impl.apply_direct(
        domain.nodes,
        np.ascontiguousarray(v),
        code,
        p0,
        p1,
        domain.metric == "manhattan",
        kernel.singular_at_zero,
        _backend.resolve_threads(threads),
    )


def inner(domain: Domain, a, b) -> float:
    """Quadrature inner product ``sum_i a_i b_i w_i`` (order independent)."""
    return math.fsum(np.asarray(a, dtype=float) * np.asarray(b, dtype=float) * domain.weights)


def energy(domain: Domain, kernel: KernelSpec, rho, method: str = "auto", threads: int | None = None) -> float:
    """``E[rho] = 1/2 sum_ij k(x_i, x_j) rho_i rho_j w_i w_j``."""
    v = _check(domain, kernel, rho)
    return 0.5 * inner(domain, v, apply_K(domain, kernel, v, method, threads))


def energy_from_potential(domain: Domain, rho, phi) -> float:
    """Energy when ``phi = K rho`` is already known."""
    values = rho.values if isinstance(rho, DensityField) else rho
    return 0.5 * inner(domain, values, phi)


def potential(domain: Domain, kernel: KernelSpec, method: str = "auto", threads: int | None = None) -> Potential:
    """``V_i = sum_j k(x_i, x_j) w_j`` and its first maximizing node."""
    V = apply_K(domain, kernel, np.ones(domain.n_nodes), method, threads)
    return Potential(V, int(np.argmax(V)))


def threshold_level(domain: Domain, phi: np.ndarray, plus_mass: float) -> tuple[float, int]:
    """Level of ``phi`` at which the super-level set reaches ``plus_mass``.

    Nodes are ranked by ``phi`` descending, ties by ascending index. Returns
    the level and the rank position of the node completing the mass.
    """
    order = np.argsort(-phi, kind="stable")
    cw = np.cumsum(domain.weights[order])
    k = int(np.searchsorted(cw, plus_mass - 1e-12 * domain.total_measure, side="left"))
    k = min(k, domain.n_nodes - 1)
    return float(phi[order[k]]), k


def kkt_residual(
    domain: Domain,
    kernel: KernelSpec,
    rho: DensityField,
    phi: np.ndarray | None = None,
    method: str = "auto",
    threads: int | None = None,
) -> KKTResult:
    """Mass of nodes on the wrong side of the KKT threshold.

    ``alpha`` splits ``phi = K rho`` so its super-level set carries the
    ``rho_plus`` mass. A node violates the condition when it holds
    ``rho_plus`` with ``phi < alpha`` or ``rho_minus`` with ``phi > alpha``.
    Fractional nodes are excluded.
    """
    from maxenergy.rearrange import target_plus_mass

    if phi is None:
        phi = apply_K(domain, kernel, rho, method, threads)
    m_plus = target_plus_mass(domain, rho.rho_plus, rho.rho_minus)
    alpha, _ = threshold_level(domain, phi, m_plus)
    bad = (rho.plus_mask & (phi < alpha)) | (rho.minus_mask & (phi > alpha))
    return KKTResult(alpha, math.fsum(domain.weights[bad]))
