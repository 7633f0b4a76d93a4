"""Closed-form optimizers and limit laws used as reference solutions.

Energies follow ``E[rho] = 1/2 <rho, K rho>`` throughout. Exact 1-D energies
of piecewise-constant densities are available through
:func:`piecewise_energy_1d`, which integrates the kernel analytically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from maxenergy.energy import DensityField, potential
from maxenergy.geometry import Domain
from maxenergy.kernels import KernelSpec
from maxenergy.pointset import AdmissibleParams, Configuration, InfeasibleError, ball_volume
from maxenergy.rearrange import target_plus_mass, volume_threshold

__all__ = [
    "AdmissibleParams",
    "IntervalOptimum",
    "interval_optimum",
    "ball_optimum_radius",
    "circle_cap_measure",
    "TWO_INTERVAL",
    "two_interval_energy",
    "two_interval_pieces",
    "two_interval_density",
    "cross_optimum_t",
    "interval4_case",
    "interval4_optimum",
    "DeltaLimit",
    "delta_limit_center",
    "piecewise_energy_1d",
]

_EPS = 1e-12


@dataclass(frozen=True)
class IntervalOptimum:
    """Optimal density on ``[-1, 1]``: ``rho_plus`` on a centred interval of ``length``."""

    length: float
    rho_plus: float
    rho_minus: float

    def pieces(self) -> list[tuple[float, float, float]]:
        h = self.length / 2.0
        return [(-1.0, -h, self.rho_minus), (-h, h, self.rho_plus), (h, 1.0, self.rho_minus)]

    def discretize(self, domain: Domain) -> DensityField:
        """Grid version: ``rho_plus`` on the nodes nearest 0, exact unit mass."""
        return volume_threshold(domain, -np.abs(domain.nodes[:, 0]), self.rho_plus, self.rho_minus)

    def energy(self, kernel: KernelSpec) -> float:
        return piecewise_energy_1d(self.pieces(), kernel)


def interval_optimum(r: float, R: float) -> IntervalOptimum:
    """Continuous optimum on ``[-1, 1]`` for the bridge bounds ``1/r`` and ``1/(2R)``."""
    if not (0 < r < 2 and R > 1):
        raise ValueError("need 0 < r < 2 and R > 1")
    return IntervalOptimum(2.0 * r * (R - 1.0) / (2.0 * R - r), 1.0 / r, 1.0 / (2.0 * R))


def ball_optimum_radius(domain_radius: float, d: int, rho_plus: float, rho_minus: float) -> float:
    """Radius of the centred ``rho_plus`` ball in a ball domain."""
    if domain_radius <= 0 or d < 1:
        raise ValueError("need domain_radius > 0 and d >= 1")
    beta = ball_volume(d)
    m_plus = target_plus_mass(beta * domain_radius**d, rho_plus, rho_minus)
    return (m_plus / beta) ** (1.0 / d)


def circle_cap_measure(rho_plus: float, rho_minus: float) -> float:
    """Arc length of the optimal ``rho_plus`` cap on the unit circle."""
    return target_plus_mass(2.0 * math.pi, rho_plus, rho_minus)


# -- two intervals [-2, -1] u [1, 2] with f(r) = 2 - r -----------------------

TWO_INTERVAL = {
    "segments": ((-2.0, -1.0), (1.0, 2.0)),
    "rho_plus": Fraction(2, 3),
    "rho_minus": Fraction(1, 3),
    "base": Fraction(185, 432),
    "curvature": Fraction(5, 9),
}


def _check_t(t: float) -> None:
    if not 0 <= t <= 0.5:
        raise ValueError("t must lie in [0, 1/2]")


def two_interval_energy(t: float | Fraction) -> float | Fraction:
    """Energy of ``rho_t``, see :func:`two_interval_pieces`.

    Exact rational arithmetic when ``t`` is a :class:`~fractions.Fraction`.
    """
    _check_t(t)
    if isinstance(t, Fraction):
        dt = t - Fraction(1, 4)
        return TWO_INTERVAL["base"] + TWO_INTERVAL["curvature"] * dt * dt
    dt = t - 0.25
    return float(TWO_INTERVAL["base"]) + float(TWO_INTERVAL["curvature"]) * dt * dt


def two_interval_pieces(t: float) -> list[tuple[float, float, float]]:
    """``rho_plus`` on ``[3/2 - t, 3/2 + t]`` and on ``[-2 + t, -1 - t]``, ``rho_minus`` elsewhere.

    The two blocks have total length one; ``t = 1/4`` is the symmetric state.
    """
    _check_t(t)
    hi, lo = float(TWO_INTERVAL["rho_plus"]), float(TWO_INTERVAL["rho_minus"])
    pieces = [
        (-2.0, -2.0 + t, lo),
        (-2.0 + t, -1.0 - t, hi),
        (-1.0 - t, -1.0, lo),
        (1.0, 1.5 - t, lo),
        (1.5 - t, 1.5 + t, hi),
        (1.5 + t, 2.0, lo),
    ]
    return [p for p in pieces if p[1] > p[0]]


def two_interval_density(domain: Domain, t: float) -> DensityField:
    """``rho_t`` sampled at the nodes (exact mass when the grid resolves the breakpoints)."""
    _check_t(t)
    hi, lo = float(TWO_INTERVAL["rho_plus"]), float(TWO_INTERVAL["rho_minus"])
    x = domain.nodes[:, 0]
    inside = ((x > 1.5 - t) & (x < 1.5 + t)) | ((x > -2.0 + t) & (x < -1.0 - t))
    return DensityField(np.where(inside, hi, lo), lo, hi)


# -- cross ------------------------------------------------------------------


def cross_optimum_t(rho_plus: float, rho_minus: float) -> float:
    """Half-length of each centred ``rho_plus`` segment on the unit cross."""
    if not (0 < rho_minus < 0.25 < rho_plus):
        raise ValueError("need 0 < rho_minus < 1/4 < rho_plus on the unit cross")
    return (1.0 - 4.0 * rho_minus) / (4.0 * (rho_plus - rho_minus))


# -- four points on [-1, 1] --------------------------------------------------


def interval4_case(r: float, R: float) -> str:
    """Region ``"i"``..``"iv"`` of ``(r, R)`` for four points on ``[-1, 1]``.

    Feasibility needs ``r <= 8/3``, ``R >= 1`` and ``r <= 2R`` (a gap of at
    least ``r/4`` cannot be covered by balls of radius ``R/4`` otherwise).
    """
    if not (r > 0 and R > 0):
        raise ValueError("r and R must be positive")
    if r > 8.0 / 3.0 + _EPS or R < 1.0 - _EPS or r > 2.0 * R + _EPS:
        raise InfeasibleError(f"no admissible 4-point configuration for (r, R) = ({r}, {R})")
    if 3 * r + 2 * R >= 8 - _EPS:
        return "i"
    if 2 * r + 4 * R >= 8 - _EPS:
        return "ii"
    if 6 * R + r >= 8 - _EPS:
        return "iii"
    return "iv"


def interval4_optimum(r: float, R: float, kernel: KernelSpec | None = None, mirror: bool = False) -> Configuration:
    """Energy-maximizing four points on ``[-1, 1]`` for decreasing kernels.

    Case i returns the symmetric packed block ``(-3r, -r, r, 3r)/8``. Cases
    ii and iii are asymmetric; the left-anchored one is returned unless
    ``mirror`` is set. ``kernel`` is accepted for interface symmetry: the
    optimizer is the same for every decreasing kernel.
    """
    case = interval4_case(r, R)
    q, c = r / 4.0, R / 4.0
    if case == "i":
        x = [-1.5 * q, -0.5 * q, 0.5 * q, 1.5 * q]
    elif case == "ii":
        x1 = -1.0 + c
        x = [x1, x1 + q, x1 + 2 * q, 1.0 - c]
    elif case == "iii":
        x3 = 1.0 - 3 * c
        x = [-1.0 + c, x3 - q, x3, 1.0 - c]
    else:
        x = [-1.0 + c, -1.0 + 3 * c, 1.0 - 3 * c, 1.0 - c]
    X = Configuration(np.array(x))
    return X.mirrored() if mirror else X


# -- concentration limit ------------------------------------------------------


class DeltaLimit(NamedTuple):
    index: int
    point: np.ndarray
    mass: float  # 1 - rho_minus |Omega|, nan when rho_minus is not given


def delta_limit_center(domain: Domain, kernel: KernelSpec, rho_minus: float | None = None) -> DeltaLimit:
    """Node maximizing the potential ``V(y) = int k(x, y) dx``.

    As ``rho_plus`` grows the optimal density tends to
    ``rho_minus + m delta(x0)`` with ``x0`` this maximizer.
    """
    if kernel.family == "constant":
        raise ValueError("the concentration point is only defined for strictly decreasing kernels")
    pot = potential(domain, kernel)
    mass = math.nan if rho_minus is None else 1.0 - rho_minus * domain.total_measure
    return DeltaLimit(pot.argmax, domain.nodes[pot.argmax].copy(), mass)


# -- exact 1-D energies ------------------------------------------------------


def _second_antiderivative(kernel: KernelSpec, s: float) -> float:
    """``H(s) = int_0^|s| (|s| - u) f(u) du`` for the 1-D profile ``f``."""
    s = abs(s)
    fam, p = kernel.family, kernel.param
    if fam == "constant":
        return 0.5 * s * s
    if fam == "exponential":
        return p * s - p * p * -math.expm1(-s / p)
    if fam == "truncated_linear":
        if s <= p:
            return 0.5 * p * s * s - s**3 / 6.0
        return p**3 / 3.0 + 0.5 * p * p * (s - p)
    if fam == "gaussian":
        a = kernel.prefactor(1)
        return a * (s * math.sqrt(math.pi * p) * math.erf(s / (2.0 * math.sqrt(p))) + 2.0 * p * math.expm1(-s * s / (4.0 * p)))
    if fam == "riesz":
        return s ** (2.0 - p) / ((1.0 - p) * (2.0 - p))
    raise ValueError(f"no closed form for {fam}")


def piecewise_energy_1d(pieces: Sequence[tuple[float, float, float]], kernel: KernelSpec) -> float:
    """Exact ``1/2 int int f(|x - y|) rho(x) rho(y)`` for piecewise-constant ``rho``.

    ``pieces`` lists ``(a, b, value)`` on pairwise disjoint intervals. Uses
    ``int_a^b int_c^d f(x - y) = H(b-c) - H(a-c) - H(b-d) + H(a-d)``.
    """
    kernel.validate_for_dim(1)
    H = lambda s: _second_antiderivative(kernel, s)  # noqa: E731
    terms = []
    for a, b, u in pieces:
        for c, d, v in pieces:
            terms.append(u * v * (H(b - c) - H(a - c) - H(b - d) + H(a - d)))
    return 0.5 * math.fsum(terms)
