"""Nonnegative measures carried by the interior nodes of a grid."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grid_domain import GridDomain


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Per-node masses of a nonnegative measure.

    ``masses`` is the absolutely continuous part (density times ``h^d``);
    ``atom_index``/``atom_mass`` list point masses sitting on interior nodes.
    """

    domain: GridDomain
    masses: np.ndarray
    atom_index: np.ndarray = None
    atom_mass: np.ndarray = None

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float)
        if masses.shape != (self.domain.n_interior,):
            raise ValueError("one mass per interior node expected")
        if not np.all(np.isfinite(masses)) or np.any(masses < 0):
            raise ValueError("masses must be finite and nonnegative")
        idx = np.zeros(0, dtype=np.int64) if self.atom_index is None else self.atom_index
        am = np.zeros(0) if self.atom_mass is None else self.atom_mass
        idx = np.asarray(idx, dtype=np.int64)
        am = np.asarray(am, dtype=float)
        if idx.shape != am.shape:
            raise ValueError("atom indices and masses must match")
        if np.any((idx < 0) | (idx >= self.domain.n_interior)):
            raise ValueError("atom index out of range")
        if not np.all(np.isfinite(am)) or np.any(am < 0):
            raise ValueError("atom masses must be finite and nonnegative")
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "atom_index", idx)
        object.__setattr__(self, "atom_mass", am)

    @property
    def node_masses(self) -> np.ndarray:
        """Total mass at each node, atoms included."""
        if len(self.atom_index) == 0:
            return self.masses
        out = self.masses.copy()
        np.add.at(out, self.atom_index, self.atom_mass)
        return out

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.node_masses))

    @property
    def has_atoms(self) -> bool:
        return bool(np.any(self.atom_mass > 0))

    def is_zero(self) -> bool:
        return not np.any(self.node_masses > 0)

    def __add__(self, other: GridMeasure) -> GridMeasure:
        if other.domain is not self.domain:
            raise ValueError("measures live on different domains")
        return GridMeasure(
            self.domain,
            self.masses + other.masses,
            np.concatenate([self.atom_index, other.atom_index]),
            np.concatenate([self.atom_mass, other.atom_mass]),
        )

    def __rmul__(self, c: float) -> GridMeasure:
        if c < 0:
            raise ValueError("scaling must be nonnegative")
        return GridMeasure(self.domain, c * self.masses, self.atom_index, c * self.atom_mass)

    def weighted(self, psi) -> GridMeasure:
        """The measure ``psi d(self)`` for nonnegative nodal ``psi``."""
        psi = np.asarray(psi, dtype=float)
        if np.any(psi < 0):
            raise ValueError("weight must be nonnegative")
        return GridMeasure(
            self.domain,
            psi * self.masses,
            self.atom_index,
            psi[self.atom_index] * self.atom_mass,
        )

    def restricted(self, mask) -> GridMeasure:
        """Restriction to the node set selected by the boolean ``mask``."""
        mask = np.asarray(mask, dtype=bool)
        keep = mask[self.atom_index]
        return GridMeasure(
            self.domain,
            np.where(mask, self.masses, 0.0),
            self.atom_index[keep],
            self.atom_mass[keep],
        )


def zero_measure(domain: GridDomain) -> GridMeasure:
    return GridMeasure(domain, np.zeros(domain.n_interior))


def measure_from_density(domain: GridDomain, density) -> GridMeasure:
    """Lump a density onto the nodes: ``m_j = a(x_j) h^d``.

    ``density`` is a scalar, an array of nodal values, or a callable taking the
    ``(n, d)`` coordinate array.
    """
    if callable(density):
        a = density(domain.interior)
    else:
        a = density
    a = np.broadcast_to(np.asarray(a, dtype=float), (domain.n_interior,))
    if not np.all(np.isfinite(a)):
        raise ValueError("density must be finite")
    if np.any(a < 0):
        raise ValueError("density must be nonnegative")
    return GridMeasure(domain, a * domain.cell_volume)


def lebesgue(domain: GridDomain) -> GridMeasure:
    return measure_from_density(domain, 1.0)


def atom_measure(domain: GridDomain, atoms) -> GridMeasure:
    """Purely atomic measure from ``(node_index, mass)`` pairs."""
    atoms = list(atoms)
    idx = np.array([a[0] for a in atoms], dtype=np.int64)
    mass = np.array([a[1] for a in atoms], dtype=float)
    return GridMeasure(domain, np.zeros(domain.n_interior), idx, mass)


def dist_alpha_measure(domain: GridDomain, alpha: float, delta_floor: float | None = 0.5):
    """The weight ``delta(x)^(-alpha) dx`` lumped onto nodes.

    Parameters
    ----------
    delta_floor : float or None
        Boundary distances are clamped below at ``delta_floor * h`` before
        taking the power.  Lattice-aligned shapes have ``delta >= h`` so the
        clamp only acts on curved boundaries, where lattice nodes can sit
        arbitrarily close to the sphere and would otherwise carry unbounded
        mass.  ``None`` disables it.
    """
    if alpha >= 2:
        warnings.warn(f"alpha = {alpha} >= 2: the weight is not locally integrable up to the boundary")
    delta = domain.delta
    if delta_floor is not None:
        delta = np.maximum(delta, delta_floor * domain.h)
    return GridMeasure(domain, delta ** (-float(alpha)) * domain.cell_volume)


def default_radii(domain: GridDomain) -> np.ndarray:
    """Geometric radii ``2h, 4h, ...`` closed off by the diameter."""
    radii = []
    r = 2 * domain.h
    while r < domain.diameter:
        radii.append(r)
        r *= 2
    radii.append(domain.diameter)
    return np.array(radii)


def ball_masses(domain: GridDomain, omega: GridMeasure, centers, radii, chunk: int = 256):
    """``omega(B(x, r))`` for every center and radius, open balls.

    Returns an array of shape ``(len(centers), len(radii))``.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.asarray(radii, dtype=float)
    m = omega.node_masses
    pts = domain.interior
    out = np.zeros((len(centers), len(radii)))
    for s in range(0, len(centers), chunk):
        c = centers[s : s + chunk]
        d2 = ((c[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        for k, r in enumerate(radii):
            out[s : s + chunk, k] = np.where(d2 < r * r, m, 0.0).sum(axis=1)
    return out


def growth_constant(domain: GridDomain, omega: GridMeasure, alpha: float, centers=None, radii=None) -> float:
    """Largest sampled ratio ``omega(B(x, r)) / r^(d - 2 + alpha)``.

    By default centers are all interior nodes and radii follow
    :func:`default_radii`.  The value is a lower bound for the best constant
    in the growth condition ``omega(B(x, r)) <= c r^(d - 2 + alpha)``.
    """
    if centers is None:
        centers = domain.interior
    if radii is None:
        radii = default_radii(domain)
    radii = np.asarray(radii, dtype=float)
    if len(radii) == 0 or len(np.atleast_2d(centers)) == 0:
        return 0.0
    mb = ball_masses(domain, omega, centers, radii)
    ratios = mb / radii[None, :] ** (domain.dimension - 2 + alpha)
    return float(ratios.max())
