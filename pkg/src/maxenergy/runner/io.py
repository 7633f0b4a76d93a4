"""Readers and writers for domains, densities, configurations, traces and images.

All floats are written with ``repr`` so files round-trip exactly, and JSON is
emitted with sorted keys so identical runs give identical bytes.
"""
from __future__ import annotations

import csv
import json
import math
import os
from typing import Any

import numpy as np

from maxenergy.energy import DensityField
from maxenergy.geometry import Domain, Lattice
from maxenergy.pointset import Configuration
from maxenergy.rearrange import SolveReport


def _fmt(x: float) -> str:
    return repr(float(x))


def write_json(path: str, obj: Any) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


# -- domain / field CSV -------------------------------------------------------


def _header_line(domain: Domain) -> str:
    return f"d={domain.intrinsic_dim},p={domain.ambient_dim},metric={domain.metric}"


def write_domain_csv(path: str, domain: Domain, values=None, value_name: str = "rho") -> None:
    """One row per node: ``x0,...,x{p-1},weight[,value]``."""
    cols = [f"x{i}" for i in range(domain.ambient_dim)] + ["weight"]
    if values is not None:
        cols.append(value_name)
        values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write(_header_line(domain) + "\n")
        fh.write(",".join(cols) + "\n")
        for i in range(domain.n_nodes):
            row = [_fmt(v) for v in domain.nodes[i]] + [_fmt(domain.weights[i])]
            if values is not None:
                row.append(_fmt(values[i]))
            fh.write(",".join(row) + "\n")


def _parse_header(line: str) -> dict:
    out = {}
    for part in line.strip().split(","):
        key, _, val = part.partition("=")
        out[key.strip()] = val.strip()
    if not {"d", "p", "metric"} <= set(out):
        raise ValueError("domain CSV must start with a 'd=..,p=..,metric=..' line")
    return out


def _read_table(path: str) -> tuple[dict | None, list[str], np.ndarray]:
    with open(path, newline="") as fh:
        first = fh.readline()
        meta = None
        if first.startswith("d="):
            meta = _parse_header(first)
            first = fh.readline()
        cols = [c.strip() for c in first.strip().split(",")]
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    data = np.array(rows, dtype=float).reshape(len(rows), len(cols))
    return meta, cols, data


def infer_lattice(nodes: np.ndarray, weights: np.ndarray, rtol: float = 1e-9) -> Lattice | None:
    """Recover the regular grid of equal-weight planar nodes, if there is one."""
    if nodes.shape[1] != 2 or not np.allclose(weights, weights[0], rtol=rtol, atol=0):
        return None
    spacing, index, shape, origin = [], [], [], []
    for ax in range(2):
        u = np.unique(nodes[:, ax])
        if u.size < 2:
            return None
        h = float(np.min(np.diff(u)))
        k = np.rint((nodes[:, ax] - u[0]) / h)
        if not np.allclose(u[0] + k * h, nodes[:, ax], rtol=0, atol=rtol * h * (1 + k.max())):
            return None
        spacing.append(h)
        index.append(k.astype(np.intp))
        shape.append(int(k.max()) + 1)
        origin.append(float(u[0]))
    if not math.isclose(spacing[0] * spacing[1], float(weights[0]), rel_tol=1e-6):
        return None
    return Lattice(np.array(origin), np.array(spacing), tuple(shape), np.column_stack(index))


def read_domain_csv(path: str) -> Domain:
    meta, cols, data = _read_table(path)
    if meta is None:
        raise ValueError(f"{path}: missing 'd=..,p=..,metric=..' header line")
    p = int(meta["p"])
    if cols[:p] != [f"x{i}" for i in range(p)] or cols[p] != "weight":
        raise ValueError(f"{path}: expected columns x0..x{p - 1},weight")
    nodes, weights = data[:, :p], data[:, p]
    d = int(meta["d"])
    lattice = infer_lattice(nodes, weights) if d == p == 2 else None
    return Domain(nodes, weights, d, metric=meta["metric"], descriptor={"shape": "file", "path": os.path.basename(path)}, lattice=lattice)


def read_field_csv(path: str, n_nodes: int | None = None) -> np.ndarray:
    """Values from the ``rho`` column (or the last column) of a CSV."""
    _, cols, data = _read_table(path)
    j = cols.index("rho") if "rho" in cols else len(cols) - 1
    values = data[:, j]
    if n_nodes is not None and values.shape[0] != n_nodes:
        raise ValueError(f"{path}: {values.shape[0]} values for {n_nodes} nodes")
    return values


# -- images -------------------------------------------------------------------


def density_gray(rho: DensityField) -> np.ndarray:
    """0 for ``rho_minus``, 255 for ``rho_plus``, linear in between."""
    span = rho.rho_plus - rho.rho_minus
    if span <= 0:
        return np.full(rho.values.shape, 255, dtype=int)
    g = np.rint(255.0 * (rho.values - rho.rho_minus) / span)
    g[rho.plus_mask] = 255
    g[rho.minus_mask] = 0
    return np.clip(g, 0, 255).astype(int)


def write_pgm(path: str, domain: Domain, rho: DensityField) -> None:
    """ASCII PGM at grid resolution; cells outside the domain are black.

    Planar lattice domains map x to columns and y to rows (top row = largest
    y). Other domains are written as a single row in node order.
    """
    gray = density_gray(rho)
    lat = domain.lattice
    if lat is not None and len(lat.shape) == 2:
        nx, ny = lat.shape
        img = np.zeros((ny, nx), dtype=int)
        img[ny - 1 - lat.index[:, 1], lat.index[:, 0]] = gray
    else:
        img = gray[None, :]
    h, w = img.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n{w} {h}\n255\n")
        for row in img:
            fh.write(" ".join(str(v) for v in row) + "\n")


def read_pgm(path: str) -> np.ndarray:
    with open(path) as fh:
        tokens = fh.read().split()
    if tokens[0] != "P2":
        raise ValueError("not an ASCII PGM")
    w, h = int(tokens[1]), int(tokens[2])
    return np.array(tokens[4:], dtype=int).reshape(h, w)


# -- traces, configurations ---------------------------------------------------


def write_trace_csv(path: str, report: SolveReport) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("iteration,energy,l1_change,set_changed\n")
        for s, e in enumerate(report.energies):
            if s == 0:
                fh.write(f"0,{_fmt(e)},,\n")
            else:
                fh.write(f"{s},{_fmt(e)},{_fmt(report.l1_changes[s - 1])},{int(report.set_changed[s - 1])}\n")


def write_configuration_csv(path: str, X: Configuration) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"x{i}" for i in range(X.ambient_dim)) + "\n")
        for pt in X.points:
            fh.write(",".join(_fmt(v) for v in pt) + "\n")


def read_configuration_csv(path: str) -> Configuration:
    _, _, data = _read_table(path)
    return Configuration(data)
