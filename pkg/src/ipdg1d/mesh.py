"""One-dimensional interval meshes.

Elements are numbered from zero: element ``i`` is the open interval
``(vertices[i], vertices[i + 1])``. Mesh nodes coincide with vertices; node
``i`` sits between elements ``i - 1`` and ``i``. Nodes ``0`` and ``N`` are the
boundary nodes, the rest form the interior skeleton.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# rho_K / h_K for a segment: the largest inscribed "ball" is the segment itself.
SHAPE_REGULARITY_1D = 0.5


class Location(NamedTuple):
    element: int
    vertex_distance: float
    nearest_vertex: int


@dataclass(frozen=True)
class SkeletonNode:
    index: int
    kind: str  # "interior" or "boundary"
    h_e: float
    # outward normal of the element on the left (+1) and on the right (-1);
    # a missing neighbour is recorded as 0
    normal_left: int
    normal_right: int


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Immutable mesh of the closed interval ``[vertices[0], vertices[-1]]``."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a mesh needs at least two vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        if not np.all(np.diff(v) > 0):
            raise ValueError("vertices must be strictly increasing")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @property
    def domain(self):
        return float(self.vertices[0]), float(self.vertices[-1])

    @property
    def n_elements(self):
        return self.vertices.size - 1

    @property
    def n_nodes(self):
        return self.vertices.size

    @property
    def element_sizes(self):
        return np.diff(self.vertices)

    @property
    def node_sizes(self):
        """Local length scale ``h_e`` attached to every node.

        Interior nodes take the larger of the two neighbouring element sizes,
        boundary nodes the size of their single element.
        """
        h = self.element_sizes
        he = np.empty(self.n_nodes)
        he[0], he[-1] = h[0], h[-1]
        he[1:-1] = np.maximum(h[:-1], h[1:])
        return he

    @property
    def interior_nodes(self):
        return np.arange(1, self.n_nodes - 1)

    @property
    def boundary_nodes(self):
        return np.array([0, self.n_nodes - 1])

    @property
    def interior_mask(self):
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[[0, -1]] = False
        return mask

    @property
    def h_max(self):
        return float(self.element_sizes.max())

    @property
    def h_min(self):
        return float(self.element_sizes.min())

    @property
    def quasi_uniformity(self):
        return self.h_max / self.h_min

    @property
    def shape_regularity(self):
        return SHAPE_REGULARITY_1D

    def skeleton(self):
        """Describe every node; interior nodes first appear in index order."""
        he = self.node_sizes
        last = self.n_nodes - 1
        nodes = []
        for i in range(self.n_nodes):
            kind = "boundary" if i in (0, last) else "interior"
            nodes.append(
                SkeletonNode(
                    index=i,
                    kind=kind,
                    h_e=float(he[i]),
                    normal_left=+1 if i > 0 else 0,
                    normal_right=-1 if i < last else 0,
                )
            )
        return nodes

    def meshsize(self, x):
        """Piecewise constant meshsize function: max ``h_K`` over closures containing x."""
        x = np.asarray(x, dtype=float)
        a, b = self.domain
        if np.any((x < a) | (x > b)):
            raise ValueError("point outside the mesh domain")
        h = self.element_sizes
        left = np.clip(np.searchsorted(self.vertices, x, side="left") - 1, 0, self.n_elements - 1)
        right = np.clip(np.searchsorted(self.vertices, x, side="right") - 1, 0, self.n_elements - 1)
        return np.maximum(h[left], h[right])

    def element_index(self, x, side=None):
        """Vectorised element lookup.

        ``side=None`` or ``"right"`` uses half-open intervals ``[x_i, x_{i+1})``
        (the last element also owns ``b``); ``"left"`` uses ``(x_i, x_{i+1}]``.
        """
        x = np.asarray(x, dtype=float)
        if side in (None, "right"):
            idx = np.searchsorted(self.vertices, x, side="right") - 1
        elif side == "left":
            idx = np.searchsorted(self.vertices, x, side="left") - 1
        else:
            raise ValueError(f"unknown side {side!r}")
        return np.clip(idx, 0, self.n_elements - 1)

    def locate(self, x):
        a, b = self.domain
        if not a <= x <= b:
            raise ValueError(f"x={x!r} outside the domain [{a}, {b}]")
        element = int(self.element_index(x))
        dist = np.abs(self.vertices - x)
        nearest = int(np.argmin(dist))
        return Location(element, float(dist[nearest]), nearest)

    def __repr__(self):
        a, b = self.domain
        return f"Mesh1D(n_elements={self.n_elements}, domain=[{a:g}, {b:g}], h_max={self.h_max:.4g})"


def _check_domain(domain):
    a, b = (float(t) for t in domain)
    if not b > a:
        raise ValueError(f"empty or reversed domain {domain!r}")
    return a, b


def uniform_mesh(n, domain=(0.0, 1.0)):
    if int(n) != n or n < 1:
        raise ValueError(f"element count must be a positive integer, got {n!r}")
    a, b = _check_domain(domain)
    vertices = a + (b - a) * np.arange(n + 1) / n
    vertices[-1] = b
    return Mesh1D(vertices)


def perturbed_mesh(n, domain=(0.0, 1.0), jitter=0.2, seed=0):
    """Uniform mesh with interior vertices moved by up to ``jitter * h``."""
    if not 0.0 <= jitter < 0.5:
        raise ValueError(f"jitter must lie in [0, 0.5), got {jitter!r}")
    mesh = uniform_mesh(n, domain)
    if jitter == 0.0 or n == 1:
        return mesh
    a, b = mesh.domain
    h = (b - a) / n
    rng = np.random.default_rng(seed)
    vertices = np.array(mesh.vertices)
    vertices[1:-1] += jitter * h * rng.uniform(-1.0, 1.0, size=n - 1)
    return Mesh1D(vertices)


def refine(mesh):
    """Bisect every element."""
    v = mesh.vertices
    out = np.empty(2 * v.size - 1)
    out[0::2] = v
    out[1::2] = 0.5 * (v[:-1] + v[1:])
    return Mesh1D(out)
