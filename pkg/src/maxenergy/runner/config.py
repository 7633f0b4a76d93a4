"""Strict JSON experiment configurations.

Unknown keys are rejected everywhere so that recipe files cannot silently
drift from what the code reads.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from maxenergy import geometry, pointset, rearrange
from maxenergy.geometry import Domain
from maxenergy.kernels import KernelSpec


class ConfigError(ValueError):
    pass


def _take(obj: Mapping[str, Any], where: str, required: tuple[str, ...], optional: Mapping[str, Any] = ()) -> dict:
    if not isinstance(obj, Mapping):
        raise ConfigError(f"{where}: expected an object")
    optional = dict(optional)
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ConfigError(f"{where}: missing keys {missing}")
    out = dict(optional)
    out.update(obj)
    return out


# -- domain -------------------------------------------------------------------

_DOMAIN_KEYS = {
    "interval": (("a", "b", "n_cells"), {}),
    "interval_union": (("segments", "n_cells_per_unit"), {}),
    "circle": (("n_nodes",), {}),
    "cross": (("n_cells_per_axis",), {"half_length": 1.0}),
    "mask": (("mask", "resolution"), {"params": {}, "bbox": None}),
}


def normalize_domain(spec: Mapping[str, Any]) -> dict:
    if not isinstance(spec, Mapping) or "shape" not in spec:
        raise ConfigError("domain: 'shape' is required")
    shape = spec["shape"]
    if shape not in _DOMAIN_KEYS:
        raise ConfigError(f"domain: unknown shape {shape!r}; expected one of {sorted(_DOMAIN_KEYS)}")
    required, optional = _DOMAIN_KEYS[shape]
    body = {k: v for k, v in spec.items() if k != "shape"}
    return {"shape": shape, **_take(body, f"domain[{shape}]", required, optional)}


def build_domain(spec: Mapping[str, Any]) -> Domain:
    s = normalize_domain(spec)
    try:
        if s["shape"] == "interval":
            return geometry.build_interval(s["a"], s["b"], s["n_cells"])
        if s["shape"] == "interval_union":
            return geometry.build_interval_union([tuple(seg) for seg in s["segments"]], s["n_cells_per_unit"])
        if s["shape"] == "circle":
            return geometry.build_circle(s["n_nodes"])
        if s["shape"] == "cross":
            return geometry.build_cross(s["half_length"], s["n_cells_per_axis"])
        mask = geometry.make_mask(s["mask"], **s["params"])
        bbox = tuple(s["bbox"]) if s["bbox"] is not None else None
        return geometry.build_mask_region(mask, s["resolution"], bbox)
    except TypeError as exc:
        raise ConfigError(f"domain: {exc}") from exc


# -- bounds -------------------------------------------------------------------


def resolve_bounds(spec: Mapping[str, Any], domain: Domain) -> tuple[float, float]:
    """``(rho_plus, rho_minus)`` from one of three forms.

    ``{"rho_plus", "rho_minus"}``, ``{"r", "R", "d"}`` (bridge) or
    ``{"mass_fraction", "rho_minus_scale"?}``.
    """
    if not isinstance(spec, Mapping):
        raise ConfigError("bounds: expected an object")
    keys = set(spec)
    if keys == {"rho_plus", "rho_minus"}:
        rp, rm = float(spec["rho_plus"]), float(spec["rho_minus"])
    elif keys == {"r", "R", "d"}:
        if spec["d"] != domain.intrinsic_dim:
            raise ConfigError(f"bounds: d={spec['d']} but the domain has dimension {domain.intrinsic_dim}")
        rp, rm = pointset.parameter_bridge(spec["r"], spec["R"], spec["d"])
    elif keys in ({"mass_fraction"}, {"mass_fraction", "rho_minus_scale"}):
        rp, rm = rearrange.bounds_from_fraction(domain, spec["mass_fraction"], spec.get("rho_minus_scale", 0.5))
    else:
        raise ConfigError(
            "bounds: give exactly one of {rho_plus, rho_minus}, {r, R, d} or {mass_fraction[, rho_minus_scale]}"
        )
    try:
        rearrange.check_bounds(domain.total_measure, rp, rm)
    except ValueError as exc:
        raise ConfigError(f"bounds: infeasible: {exc}") from exc
    return rp, rm


# -- experiment -----------------------------------------------------------------

_SOLVER_DEFAULTS = {
    "tol": 0.0,
    "max_iter": 500,
    "seed": 0,
    "init": "random",
    "init_file": None,
    "blob_centre": None,
    "method": "auto",
}
_OUTPUT_DEFAULTS = {"dir": None, "snapshot_every": 0}
_INIT_MODES = ("random", "uniform", "file", "blob")


@dataclass
class ExperimentConfig:
    domain: dict
    kernel: KernelSpec
    bounds: dict
    solver: dict = field(default_factory=lambda: dict(_SOLVER_DEFAULTS))
    output: dict = field(default_factory=lambda: dict(_OUTPUT_DEFAULTS))
    description: str = ""
    base_dir: str = "."

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], base_dir: str = ".") -> "ExperimentConfig":
        top = _take(raw, "config", ("domain", "kernel", "bounds"), {"solver": {}, "output": {}, "description": ""})
        solver = _take(top["solver"], "solver", (), _SOLVER_DEFAULTS)
        if solver["init"] not in _INIT_MODES:
            raise ConfigError(f"solver.init must be one of {_INIT_MODES}")
        if solver["init"] == "file":
            if not solver["init_file"]:
                raise ConfigError("solver.init_file is required for init='file'")
            path = os.path.join(base_dir, solver["init_file"])
            if not os.path.exists(path):
                raise ConfigError(f"solver.init_file {path!r} does not exist")
        if solver["init"] == "blob" and solver["blob_centre"] is None:
            raise ConfigError("solver.blob_centre is required for init='blob'")
        if solver["tol"] < 0 or solver["max_iter"] < 1:
            raise ConfigError("solver: need tol >= 0 and max_iter >= 1")
        output = _take(top["output"], "output", (), _OUTPUT_DEFAULTS)
        try:
            kernel = KernelSpec.from_dict(top["kernel"])
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"kernel: {exc}") from exc
        return cls(
            domain=normalize_domain(top["domain"]),
            kernel=kernel,
            bounds=dict(top["bounds"]),
            solver=solver,
            output=output,
            description=str(top["description"]),
            base_dir=base_dir,
        )

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "domain": self.domain,
            "kernel": self.kernel.to_dict(),
            "bounds": self.bounds,
            "solver": self.solver,
            "output": self.output,
        }


@dataclass
class DiscreteConfig:
    n: int
    r: float
    R: float
    kernel: KernelSpec
    coarse: int = 80
    refine_levels: int = 3
    interval: tuple[float, float] = (-1.0, 1.0)
    output: dict = field(default_factory=lambda: dict(_OUTPUT_DEFAULTS))
    description: str = ""

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "DiscreteConfig":
        top = _take(
            raw,
            "config",
            ("n", "r", "R", "kernel"),
            {"coarse": 80, "refine_levels": 3, "interval": [-1.0, 1.0], "output": {}, "description": ""},
        )
        try:
            kernel = KernelSpec.from_dict(top["kernel"])
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"kernel: {exc}") from exc
        a, b = (float(v) for v in top["interval"])
        if not a < b:
            raise ConfigError("interval: need a < b")
        if not (isinstance(top["n"], int) and 2 <= top["n"] <= 6):
            raise ConfigError("n must be an integer in [2, 6]")
        output = _take(top["output"], "output", (), _OUTPUT_DEFAULTS)
        return cls(
            top["n"], float(top["r"]), float(top["R"]), kernel, int(top["coarse"]), int(top["refine_levels"]),
            (a, b), output, str(top["description"]),
        )

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "n": self.n,
            "r": self.r,
            "R": self.R,
            "kernel": self.kernel.to_dict(),
            "coarse": self.coarse,
            "refine_levels": self.refine_levels,
            "interval": list(self.interval),
            "output": self.output,
        }


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc


def _reject_constant(name: str) -> float:
    raise ConfigError(f"non-finite constant {name} in JSON")


def is_discrete(raw: Mapping[str, Any]) -> bool:
    return "n" in raw and "domain" not in raw


def finite(x: float) -> bool:
    return math.isfinite(x)
