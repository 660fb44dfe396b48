"""Lattice discretizations of bounded domains in R^2 and R^3.

Three shape families are supported:

* ``box``    -- the unit square (d=2) or unit cube (d=3), ``[0, 1]^d``;
* ``ball``   -- the disk (d=2) or ball (d=3) of radius ``R`` centred at 0;
* ``lshape`` -- ``(-1, 1)^2`` minus the closed lower-right quadrant
  ``[0, 1] x [-1, 0]`` (re-entrant corner at the origin).

Interior nodes are lattice points ``h * k`` strictly inside the domain.  For
box and L-shape every stencil neighbour of an interior node is a lattice point
on the boundary.  For balls, the stencil arm leaving the domain is cut where it
meets the sphere; the cut point becomes a boundary node and the fraction
``theta`` of the arm that lies inside is stored with the stencil.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class EmptyDomainError(ValueError):
    """Raised when the spacing leaves no interior node."""


# lattice nodes closer than this (relative to h) to the sphere count as outside
_BALL_SNAP = 1e-9

_LSHAPE_VERTICES = np.array(
    [[-1.0, -1.0], [0.0, -1.0], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [-1.0, 1.0]]
)


@dataclass(frozen=True)
class Shape:
    """Shape descriptor.  Use the ``square``/``cube``/``disk``/``ball``/``lshape``
    constructors or :meth:`parse`."""

    kind: str
    dimension: int = 2
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("box", "ball", "lshape"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.dimension not in (2, 3):
            raise ValueError("only d = 2 and d = 3 are supported")
        if self.kind == "lshape" and self.dimension != 2:
            raise ValueError("the L-shape is two-dimensional")
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @classmethod
    def square(cls) -> Shape:
        return cls("box", 2)

    @classmethod
    def cube(cls) -> Shape:
        return cls("box", 3)

    @classmethod
    def disk(cls, radius: float = 1.0) -> Shape:
        return cls("ball", 2, radius)

    @classmethod
    def ball(cls, radius: float = 1.0) -> Shape:
        return cls("ball", 3, radius)

    @classmethod
    def lshape(cls) -> Shape:
        return cls("lshape", 2)

    @classmethod
    def parse(cls, spec) -> Shape:
        """Build a shape from a name (``"disk"``) or a mapping such as
        ``{"name": "ball", "radius": 0.5}``."""
        if isinstance(spec, Shape):
            return spec
        if isinstance(spec, str):
            spec = {"name": spec}
        spec = dict(spec)
        name = spec.pop("name")
        radius = float(spec.pop("radius", 1.0))
        if spec:
            raise ValueError(f"unknown shape keys: {sorted(spec)}")
        table = {
            "square": ("box", 2),
            "cube": ("box", 3),
            "disk": ("ball", 2),
            "ball": ("ball", 3),
            "lshape": ("lshape", 2),
            "l-shape": ("lshape", 2),
        }
        if name not in table:
            raise ValueError(f"unknown shape {name!r}")
        kind, d = table[name]
        if kind != "ball" and radius != 1.0:
            raise ValueError(f"shape {name!r} takes no radius")
        return cls(kind, d, radius)

    @property
    def name(self) -> str:
        if self.kind == "box":
            return "square" if self.dimension == 2 else "cube"
        if self.kind == "ball":
            return "disk" if self.dimension == 2 else "ball"
        return "lshape"

    @property
    def diameter(self) -> float:
        if self.kind == "box":
            return float(np.sqrt(self.dimension))
        if self.kind == "ball":
            return 2.0 * self.radius
        return 2.0 * np.sqrt(2.0)

    def to_dict(self) -> dict:
        out = {"name": self.name}
        if self.kind == "ball":
            out["radius"] = self.radius
        return out

    def distance_to_boundary(self, x: np.ndarray) -> np.ndarray:
        """Exact Euclidean distance from points ``x`` (shape ``(n, d)``) inside
        the domain to its boundary."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "box":
            return np.minimum(x, 1.0 - x).min(axis=1)
        if self.kind == "ball":
            return self.radius - np.linalg.norm(x, axis=1)
        return _polygon_distance(x, _LSHAPE_VERTICES)


def _polygon_distance(x, vertices):
    dist = np.full(len(x), np.inf)
    for a, b in zip(vertices, np.roll(vertices, -1, axis=0)):
        ab = b - a
        t = np.clip(((x - a) @ ab) / (ab @ ab), 0.0, 1.0)
        dist = np.minimum(dist, np.linalg.norm(x - a - t[:, None] * ab, axis=1))
    return dist


@dataclass(frozen=True, eq=False)
class GridDomain:
    """A discretized bounded domain.

    Attributes
    ----------
    shape : Shape
    h : float
        Lattice spacing.
    interior : ndarray, shape (n, d)
        Interior node coordinates, lexicographically ordered.
    boundary : ndarray, shape (nb, d)
        Boundary node coordinates, lexicographically ordered.
    delta : ndarray, shape (n,)
        Distance from each interior node to the continuum boundary.
    neighbors : ndarray of int, shape (n, 2d)
        Stencil neighbour of node ``i`` in direction ``k`` (order
        ``+e_0, -e_0, +e_1, -e_1, ...``).  Values ``>= 0`` index interior
        nodes, a value ``-1 - b`` refers to boundary node ``b``.
    theta : ndarray, shape (n, 2d)
        Length of each stencil arm in units of ``h`` (``1`` except for arms
        cut by a curved boundary).
    """

    shape: Shape
    h: float
    interior: np.ndarray
    boundary: np.ndarray
    delta: np.ndarray
    neighbors: np.ndarray
    theta: np.ndarray
    _keys: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.shape.dimension

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    @property
    def diameter(self) -> float:
        return self.shape.diameter

    @property
    def cell_volume(self) -> float:
        return self.h**self.dimension

    @cached_property
    def irregular(self) -> np.ndarray:
        """Boolean mask of interior nodes with a cut stencil arm."""
        return np.any(self.theta < 1.0, axis=1)

    def refine(self) -> GridDomain:
        return build_domain(self.shape, self.h / 2)

    def node_index(self, point, tol: float = 1e-9) -> int:
        """Index of the interior node at ``point`` (raises ``KeyError``)."""
        d = np.linalg.norm(self.interior - np.asarray(point, dtype=float), axis=1)
        i = int(np.argmin(d))
        if d[i] > tol * max(self.h, 1.0):
            raise KeyError(f"no interior node at {point}")
        return i

    def nearest_node(self, point) -> int:
        d = np.linalg.norm(self.interior - np.asarray(point, dtype=float), axis=1)
        return int(np.argmin(d))

    def to_manifest(self) -> dict:
        """JSON-ready node listing, used for debugging."""
        nodes = [
            {"index": i, "class": "interior", "coords": p.tolist(), "delta": float(dl)}
            for i, (p, dl) in enumerate(zip(self.interior, self.delta))
        ]
        nodes += [
            {"index": b, "class": "boundary", "coords": p.tolist(), "delta": 0.0}
            for b, p in enumerate(self.boundary)
        ]
        return {
            "shape": self.shape.to_dict(),
            "dimension": self.dimension,
            "h": self.h,
            "n_interior": self.n_interior,
            "n_boundary": self.n_boundary,
            "nodes": nodes,
        }

    def write_manifest(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_manifest(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def build_domain(shape, h: float) -> GridDomain:
    """Discretize ``shape`` on the lattice ``h Z^d``.

    Raises
    ------
    EmptyDomainError
        If no lattice point lies inside the domain.
    """
    shape = Shape.parse(shape)
    h = float(h)
    if not h > 0:
        raise ValueError("spacing must be positive")
    if shape.kind == "box":
        return _build_box(shape, h)
    if shape.kind == "lshape":
        return _build_lshape(shape, h)
    return _build_ball(shape, h)


def refine(domain: GridDomain) -> GridDomain:
    """Same shape at half the spacing."""
    return domain.refine()


def _lattice_count(h, length=1.0):
    n = int(round(length / h))
    if n < 1 or abs(n * h - length) > 1e-9 * length:
        raise ValueError(f"spacing {h} does not divide {length}")
    return n


def _lattice(lo, hi, d):
    ax = np.arange(lo, hi + 1)
    grids = np.meshgrid(*([ax] * d), indexing="ij")
    # meshgrid with 'ij' indexing enumerates keys in lexicographic order
    return np.stack([g.ravel() for g in grids], axis=1)


def _assemble(shape, h, keys_int, keys_bnd, delta):
    """Build the stencil tables for lattice-aligned shapes."""
    d = keys_int.shape[1]
    lookup = {tuple(k): i for i, k in enumerate(keys_int.tolist())}
    lookup.update({tuple(k): -1 - b for b, k in enumerate(keys_bnd.tolist())})
    neighbors = np.empty((len(keys_int), 2 * d), dtype=np.int64)
    for k in range(d):
        for s_i, s in enumerate((1, -1)):
            shifted = keys_int.copy()
            shifted[:, k] += s
            neighbors[:, 2 * k + s_i] = [lookup[tuple(v)] for v in shifted.tolist()]
    theta = np.ones(neighbors.shape)
    return GridDomain(
        shape=shape,
        h=h,
        interior=keys_int * h,
        boundary=keys_bnd * h,
        delta=delta,
        neighbors=neighbors,
        theta=theta,
        _keys=keys_int,
    )


def _build_box(shape, h):
    n = _lattice_count(h)
    if n < 2:
        raise EmptyDomainError(f"h = {h} leaves no interior node in the unit {shape.name}")
    keys = _lattice(0, n, shape.dimension)
    inner = np.all((keys > 0) & (keys < n), axis=1)
    keys_int = keys[inner]
    delta = shape.distance_to_boundary(keys_int * h)
    return _assemble(shape, h, keys_int, keys[~inner], delta)


def _build_lshape(shape, h):
    n = _lattice_count(h)
    keys = _lattice(-n, n, 2)
    i, j = keys[:, 0], keys[:, 1]
    inner = (np.abs(i) < n) & (np.abs(j) < n) & ~((i >= 0) & (j <= 0))
    closure = ~((i > 0) & (j < 0))
    keys_int = keys[inner]
    if len(keys_int) == 0:
        raise EmptyDomainError(f"h = {h} leaves no interior node in the L-shape")
    delta = shape.distance_to_boundary(keys_int * h)
    return _assemble(shape, h, keys_int, keys[closure & ~inner], delta)


def _build_ball(shape, h):
    d, R = shape.dimension, shape.radius
    m = int(np.floor(R / h)) + 1
    keys = _lattice(-m, m, d)
    pts = keys * h
    inner = R - np.linalg.norm(pts, axis=1) > _BALL_SNAP * h
    keys_int = keys[inner]
    pts = keys_int * h
    n = len(keys_int)

    side = 2 * m + 1
    lut = np.full(len(keys), -1, dtype=np.int64)
    lut[inner] = np.arange(n)
    sq = np.einsum("ij,ij->i", pts, pts)

    neighbors = np.empty((n, 2 * d), dtype=np.int64)
    theta = np.ones((n, 2 * d))
    cut_owner, cut_col, cut_pts = [], [], []
    for k in range(d):
        for s_i, s in enumerate((1, -1)):
            col = 2 * k + s_i
            shifted = keys_int.copy()
            shifted[:, k] += s
            flat = np.ravel_multi_index((shifted + m).T, (side,) * d)
            nb = lut[flat]
            neighbors[:, col] = nb
            out = np.nonzero(nb < 0)[0]
            # arm length t solving |x + s t e_k| = R
            t = np.sqrt(R * R - (sq[out] - pts[out, k] ** 2)) - s * pts[out, k]
            t = np.minimum(t, h)
            theta[out, col] = t / h
            cp = pts[out].copy()
            cp[:, k] += s * t
            cut_owner.append(out)
            cut_col.append(np.full(len(out), col))
            cut_pts.append(cp)

    owner = np.concatenate(cut_owner)
    cols = np.concatenate(cut_col)
    cpts = np.concatenate(cut_pts)
    # lattice points on the sphere can be reached from two arms; merge them
    rounded = np.round(cpts / h, 9)
    order = np.lexsort(rounded.T[::-1])
    uniq, inverse = np.unique(rounded[order], axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    boundary = np.zeros((len(uniq), d))
    boundary[inverse] = cpts[order]
    neighbors[owner[order], cols[order]] = -1 - inverse

    delta = shape.distance_to_boundary(pts)
    return GridDomain(
        shape=shape,
        h=h,
        interior=pts,
        boundary=boundary,
        delta=delta,
        neighbors=neighbors,
        theta=theta,
        _keys=keys_int,
    )
