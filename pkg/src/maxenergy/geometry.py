"""Discretized domains: nodes, midpoint/cell-centre quadrature weights, metric.

Every constructor is deterministic. Grid coordinates are computed as
``centre + (k + 1/2 - N/2) * h`` so mirror-image nodes are exact negatives of
each other, which keeps reflection symmetries exact in floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

METRICS = ("euclidean", "manhattan")


@dataclass(frozen=True, eq=False)
class Lattice:
    """Regular grid that a domain's nodes sit on (enables FFT mat-vecs)."""

    origin: np.ndarray  # coordinate of multi-index (0, ..., 0)
    spacing: np.ndarray
    shape: tuple[int, ...]
    index: np.ndarray  # (N, p) integer multi-index of each node


@dataclass(frozen=True, eq=False)
class Domain:
    """A compact set sampled by quadrature nodes.

    Attributes
    ----------
    nodes : ndarray, shape (N, p)
        Node coordinates in the ambient space.
    weights : ndarray, shape (N,)
        d-dimensional measure carried by each node.
    intrinsic_dim : int
        The Hausdorff dimension ``d`` used for the measure.
    metric : {"euclidean", "manhattan"}
    descriptor : dict
        How the domain was built (shape name, parameters, resolution).
    lattice : Lattice or None
        Present when the nodes are a subset of a regular grid.
    """

    nodes: np.ndarray
    weights: np.ndarray
    intrinsic_dim: int
    metric: str = "euclidean"
    descriptor: dict = field(default_factory=dict)
    lattice: Lattice | None = None

    def __post_init__(self) -> None:
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        weights = np.ascontiguousarray(self.weights, dtype=float)
        if nodes.shape[0] != weights.shape[0] or nodes.shape[0] == 0:
            raise ValueError("nodes and weights must be nonempty and of equal length")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ValueError("every quadrature weight must be positive")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not 1 <= self.intrinsic_dim <= nodes.shape[1]:
            raise ValueError("need 1 <= intrinsic_dim <= ambient_dim")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def total_measure(self) -> float:
        return math.fsum(self.weights)

    @property
    def cell_width(self) -> float:
        """Representative linear cell size ``h``."""
        if self.lattice is not None:
            return float(np.max(self.lattice.spacing))
        return float(np.median(self.weights) ** (1.0 / self.intrinsic_dim))

    @property
    def cell_diameter(self) -> float:
        if self.lattice is not None:
            return float(np.linalg.norm(self.lattice.spacing))
        return self.cell_width

    def distance(self, x, y) -> np.ndarray:
        """Pairwise-compatible distance under the domain metric."""
        diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        if self.metric == "manhattan":
            return np.abs(diff).sum(axis=-1)
        return np.sqrt((diff * diff).sum(axis=-1))


def _centres(lo: float, hi: float, n: int) -> np.ndarray:
    mid = 0.5 * (lo + hi)
    h = (hi - lo) / n
    return mid + (np.arange(n) + 0.5 - n / 2.0) * h


def build_interval(a: float, b: float, n_cells: int) -> Domain:
    """Midpoint discretization of ``[a, b]`` with ``n_cells`` equal cells."""
    if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
        raise ValueError(f"invalid interval [{a}, {b}]")
    if n_cells < 2:
        raise ValueError("n_cells must be >= 2")
    nodes = _centres(a, b, n_cells)
    weights = np.full(n_cells, (b - a) / n_cells)
    return Domain(
        nodes[:, None],
        weights,
        1,
        descriptor={"shape": "interval", "a": a, "b": b, "n_cells": n_cells},
    )


def build_interval_union(segments: Sequence[tuple[float, float]], n_cells_per_unit: int) -> Domain:
    """Disjoint union of closed segments, each discretized by midpoints.

    Segment ``[a, b]`` gets ``round((b - a) * n_cells_per_unit)`` cells.
    Closed segments sharing an endpoint count as overlapping.
    """
    segs = sorted((float(a), float(b)) for a, b in segments)
    if not segs:
        raise ValueError("need at least one segment")
    for a, b in segs:
        if not a < b:
            raise ValueError(f"invalid segment [{a}, {b}]")
    for (_, b0), (a1, _) in zip(segs, segs[1:]):
        if a1 <= b0:
            raise ValueError("segments overlap")
    nodes, weights = [], []
    for a, b in segs:
        n = max(2, int(round((b - a) * n_cells_per_unit)))
        nodes.append(_centres(a, b, n))
        weights.append(np.full(n, (b - a) / n))
    return Domain(
        np.concatenate(nodes)[:, None],
        np.concatenate(weights),
        1,
        descriptor={
            "shape": "interval_union",
            "segments": [list(s) for s in segs],
            "n_cells_per_unit": n_cells_per_unit,
        },
    )


def build_circle(n_nodes: int) -> Domain:
    """Equispaced nodes on the unit circle in the plane, starting at (1, 0)."""
    if n_nodes < 8:
        raise ValueError("n_nodes must be >= 8")
    k = np.arange(n_nodes)
    # reflect the upper half exactly: node k and node n-k are mirror images
    signed = np.where(k <= n_nodes // 2, k, k - n_nodes)
    theta = 2.0 * np.pi * signed / n_nodes
    nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    weights = np.full(n_nodes, 2.0 * np.pi / n_nodes)
    return Domain(nodes, weights, 1, descriptor={"shape": "circle", "n_nodes": n_nodes})


def build_cross(half_length: float, n_cells_per_axis: int) -> Domain:
    """Union of the two coordinate segments of half-length ``half_length``.

    One-dimensional weights, Manhattan metric. ``n_cells_per_axis`` must be
    even so no node sits on the shared origin.
    """
    if not half_length > 0:
        raise ValueError("half_length must be positive")
    if n_cells_per_axis < 2 or n_cells_per_axis % 2:
        raise ValueError("n_cells_per_axis must be an even integer >= 2")
    t = _centres(-half_length, half_length, n_cells_per_axis)
    zero = np.zeros_like(t)
    nodes = np.vstack([np.column_stack([t, zero]), np.column_stack([zero, t])])
    w = 2.0 * half_length / n_cells_per_axis
    return Domain(
        nodes,
        np.full(nodes.shape[0], w),
        1,
        metric="manhattan",
        descriptor={"shape": "cross", "half_length": half_length, "n_cells_per_axis": n_cells_per_axis},
    )


# -- planar masks -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Mask:
    """Named membership predicate over the plane."""

    name: str
    params: dict
    contains: Callable[[np.ndarray, np.ndarray], np.ndarray]
    half_width: float
    area: float | None = None

    def describe(self) -> dict[str, Any]:
        return {"mask": self.name, **self.params}


def disk(radius: float = 1.0) -> Mask:
    if not radius > 0:
        raise ValueError("radius must be positive")
    r2 = radius * radius
    return Mask("disk", {"radius": radius}, lambda x, y: x * x + y * y <= r2, radius, math.pi * r2)


def annulus(inner: float, outer: float = 1.2) -> Mask:
    if not 0 <= inner < outer:
        raise ValueError("need 0 <= inner < outer")
    a2, b2 = inner * inner, outer * outer

    def contains(x, y):
        s = x * x + y * y
        return (s >= a2) & (s <= b2)

    return Mask("annulus", {"inner": inner, "outer": outer}, contains, outer, math.pi * (b2 - a2))


def clover(amplitude: float = 0.3, lobes: int = 4) -> Mask:
    """``r <= 1 + amplitude * cos(lobes * theta)`` (default four lobes)."""
    if lobes != 4:
        raise ValueError("only the four-lobed clover is supported")

    def contains(x, y):
        # cos(4 theta) r^4 = x^4 - 6 x^2 y^2 + y^4 keeps the test symmetric
        x2, y2 = x * x, y * y
        r = np.hypot(x, y)
        r4 = (x2 + y2) ** 2
        return r * r4 <= r4 + amplitude * (x2 * x2 - 6.0 * x2 * y2 + y2 * y2)

    area = math.pi * (1.0 + amplitude * amplitude / 2.0)
    return Mask("clover", {"amplitude": amplitude}, contains, 1.0 + amplitude, area)


def dumbbell(lobe_radius: float = 0.5, bar_half_width: float = 0.1) -> Mask:
    """Balls of radius ``lobe_radius`` at (+-1, 0) joined by a bar ``[-1, 1] x [-w, w]``."""
    a, w = lobe_radius, bar_half_width

    def contains(x, y):
        ax = np.abs(x)
        lobe = (ax - 1.0) ** 2 + y * y <= a * a
        bar = (ax <= 1.0) & (np.abs(y) <= w)
        return lobe | bar

    cap = w * math.sqrt(a * a - w * w) + a * a * math.asin(w / a)  # lobe ∩ bar, one side
    area = 2.0 * math.pi * a * a + 4.0 * w - 2.0 * cap
    return Mask("dumbbell", {"lobe_radius": a, "bar_half_width": w}, contains, 1.0 + a, area)


def ellipse(eps: float) -> Mask:
    """``(1 + eps) x^2 + y^2 / (1 + eps) <= 1``; area pi for every ``eps``."""
    if not eps > -1:
        raise ValueError("eps must exceed -1")
    s = 1.0 + eps

    def contains(x, y):
        return s * x * x + y * y / s <= 1.0

    return Mask("ellipse", {"eps": eps}, contains, max(math.sqrt(s), 1.0 / math.sqrt(s)), math.pi)


MASKS: dict[str, Callable[..., Mask]] = {
    "disk": disk,
    "annulus": annulus,
    "clover": clover,
    "dumbbell": dumbbell,
    "ellipse": ellipse,
}


def make_mask(name: str, **params) -> Mask:
    try:
        factory = MASKS[name]
    except KeyError:
        raise ValueError(f"unknown mask {name!r}") from None
    return factory(**params)


def build_mask_region(
    mask: Mask,
    resolution: int,
    bbox: tuple[float, float, float, float] | None = None,
) -> Domain:
    """Cell-centre discretization of a planar mask.

    The bounding box ``(x0, x1, y0, y1)`` (default: the square of the mask's
    half-width centred at the origin) is split into ``resolution`` cells per
    axis; a cell belongs to the domain iff its centre satisfies the mask.
    Nodes are ordered row-major over ``(ix, iy)``.
    """
    if resolution < 16:
        raise ValueError("resolution must be >= 16")
    if bbox is None:
        L = mask.half_width
        bbox = (-L, L, -L, L)
    x0, x1, y0, y1 = map(float, bbox)
    if not (x0 < x1 and y0 < y1):
        raise ValueError("degenerate bounding box")
    xs = _centres(x0, x1, resolution)
    ys = _centres(y0, y1, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    inside = np.asarray(mask.contains(X, Y), dtype=bool)
    if not inside.any():
        raise ValueError(f"mask {mask.name!r} is empty inside {bbox}")
    ix, iy = np.nonzero(inside)
    hx, hy = (x1 - x0) / resolution, (y1 - y0) / resolution
    nodes = np.column_stack([xs[ix], ys[iy]])
    lattice = Lattice(
        origin=np.array([xs[0], ys[0]]),
        spacing=np.array([hx, hy]),
        shape=(resolution, resolution),
        index=np.column_stack([ix, iy]),
    )
    return Domain(
        nodes,
        np.full(nodes.shape[0], hx * hy),
        2,
        descriptor={"shape": "mask", **mask.describe(), "resolution": resolution, "bbox": [x0, x1, y0, y1]},
        lattice=lattice,
    )


def reflection_permutation(domain: Domain, axis: int = 0, centre: float = 0.0) -> np.ndarray:
    """Permutation ``perm`` with ``nodes[perm[i]]`` the mirror image of ``nodes[i]``.

    Reflection is across the hyperplane ``x[axis] = centre``. Raises if the
    node set is not mirror-invariant.
    """
    from scipy.spatial import cKDTree

    mirrored = domain.nodes.copy()
    mirrored[:, axis] = 2.0 * centre - mirrored[:, axis]
    dist, perm = cKDTree(domain.nodes).query(mirrored)
    if np.any(dist > 1e-12 * max(1.0, float(np.abs(domain.nodes).max()))):
        raise ValueError("node set is not invariant under the reflection")
    return perm
