"""Radial kernel families k(x, y) = f(|x - y|).

A :class:`KernelSpec` is a small immutable description of one kernel. The
profile ``f`` is evaluated by :meth:`KernelSpec.profile` (vectorized) or the
scalar :func:`eval`. Distances are produced elsewhere by the domain metric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

# family name -> name of its single parameter (None for parameter-free)
FAMILIES: dict[str, str | None] = {
    "constant": None,
    "exponential": "sigma",
    "gaussian": "tau",
    "riesz": "s",
    "truncated_linear": "c",
}

# integer codes understood by the compiled / fallback cores
FAMILY_CODES = {
    "constant": 0,
    "exponential": 1,
    "gaussian": 2,
    "riesz": 3,
    "truncated_linear": 4,
}


class KernelSingularityError(ValueError):
    """Raised when a singular kernel is evaluated at zero distance."""


@dataclass(frozen=True)
class KernelSpec:
    """One member of a supported kernel family.

    Parameters
    ----------
    family : str
        One of ``constant``, ``exponential``, ``gaussian``, ``riesz`` or
        ``truncated_linear``.
    param : float, optional
        ``sigma`` (exponential), ``tau`` (gaussian), ``s`` (riesz) or ``c``
        (truncated_linear). Must be omitted for ``constant``.
    """

    family: str
    param: float | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if FAMILIES[self.family] is None:
            if self.param is not None:
                raise ValueError("constant kernel takes no parameter")
            return
        if self.param is None:
            raise ValueError(f"{self.family} kernel needs {FAMILIES[self.family]}")
        p = float(self.param)
        if not math.isfinite(p) or p <= 0:
            raise ValueError(f"{FAMILIES[self.family]} must be positive, got {p}")
        object.__setattr__(self, "param", p)

    @property
    def singular_at_zero(self) -> bool:
        return self.family == "riesz"

    @property
    def completely_monotone(self) -> bool:
        """Whether ``f`` is completely monotone in the distance.

        The Gaussian is completely monotone in the squared distance only, and
        the truncated linear profile is positive definite on the line but not
        completely monotone.
        """
        return self.family in ("constant", "exponential", "riesz")

    def validate_for_dim(self, d: int) -> None:
        if self.family == "riesz" and not self.param < d:
            raise ValueError(f"riesz exponent s={self.param} must be < d={d}")

    def prefactor(self, d: int) -> float:
        if self.family == "gaussian":
            return (4.0 * math.pi * self.param) ** (-d / 2.0)
        return 1.0

    def profile(self, r: np.ndarray | float, d: int = 1) -> np.ndarray:
        """Evaluate ``f`` elementwise. Riesz returns ``inf`` at ``r == 0``."""
        r = np.asarray(r, dtype=float)
        fam, p = self.family, self.param
        if fam == "constant":
            return np.ones_like(r)
        if fam == "exponential":
            return np.exp(-r / p)
        if fam == "gaussian":
            return self.prefactor(d) * np.exp(-(r * r) / (4.0 * p))
        if fam == "truncated_linear":
            return np.maximum(p - r, 0.0)
        with np.errstate(divide="ignore"):
            return r ** (-p)

    def core_args(self, d: int) -> tuple[int, float, float]:
        """``(code, param, prefactor)`` triple for the numerical cores."""
        return FAMILY_CODES[self.family], float(self.param or 0.0), self.prefactor(d)

    @classmethod
    def from_dict(cls, spec: Mapping[str, Any]) -> "KernelSpec":
        """Parse ``{"family": "exponential", "sigma": 1.0}``-style mappings."""
        spec = dict(spec)
        family = spec.pop("family", None)
        if family not in FAMILIES:
            raise ValueError(f"unknown kernel family {family!r}")
        name = FAMILIES[family]
        param = spec.pop(name, None) if name else None
        if spec:
            raise ValueError(f"unexpected kernel keys: {sorted(spec)}")
        return cls(family, param)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.family}
        if FAMILIES[self.family]:
            out[FAMILIES[self.family]] = self.param
        return out


def exponential(sigma: float = 1.0) -> KernelSpec:
    return KernelSpec("exponential", sigma)


def gaussian(tau: float) -> KernelSpec:
    return KernelSpec("gaussian", tau)


def riesz(s: float) -> KernelSpec:
    return KernelSpec("riesz", s)


def truncated_linear(c: float) -> KernelSpec:
    return KernelSpec("truncated_linear", c)


def constant() -> KernelSpec:
    return KernelSpec("constant")


def eval(kernel: KernelSpec, r: float, d: int = 1) -> float:  # noqa: A001
    """Scalar ``f(r)``; raises at ``r == 0`` for singular kernels."""
    if r < 0:
        raise ValueError("distance must be nonnegative")
    if r == 0 and kernel.singular_at_zero:
        raise KernelSingularityError(f"{kernel.family} kernel is singular at r=0")
    return float(kernel.profile(r, d))


def divided_differences(x: np.ndarray, y: np.ndarray, order: int) -> list[np.ndarray]:
    """Newton forward divided differences of orders ``0..order``."""
    x = np.asarray(x, dtype=float)
    table = [np.asarray(y, dtype=float)]
    for k in range(1, order + 1):
        prev = table[-1]
        table.append((prev[1:] - prev[:-1]) / (x[k:] - x[:-k]))
    return table


def check_complete_monotonicity(
    kernel: KernelSpec, r_grid, order: int, d: int = 1, tol: float = 1e-9
) -> bool:
    """Sampled test of ``(-1)^l f^(l) >= 0`` for ``l = 0..order``.

    The ``l``-th divided difference equals ``f^(l)(xi) / l!`` for some
    ``xi`` in its stencil, so its sign is checked against ``(-1)^l``.
    """
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be positive and strictly increasing")
    if not 0 <= order <= 4:
        raise ValueError("order must be in 0..4")
    table = divided_differences(r, kernel.profile(r, d), order)
    return all(np.all(((-1) ** k) * dd >= -tol) for k, dd in enumerate(table))
