"""Kato moduli, Green-potential inequalities and integrability sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .checks import Margin, worst
from .grid_domain import GridDomain, Shape, build_domain
from .green import (
    GreenOperator,
    GridFunction,
    build_green,
    green_potential,
    green_potential_of_masses,
)
from .measure import GridMeasure, default_radii, dist_alpha_measure

# exact row streaming is used up to this many nodes when no dense matrix exists
STREAM_CAP = 40000


class SupersolutionError(ValueError):
    """Input to the lower-bound check is not a supersolution."""


def lower_constant(q: float) -> float:
    """``(1 - q)^(1 / (1 - q))``."""
    return (1.0 - q) ** (1.0 / (1.0 - q))


def fit_loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``; NaN with fewer than
    two positive points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


@dataclass
class KatoReport:
    radii: np.ndarray
    modulus: np.ndarray
    sup_norm: float
    h: float
    slope: float
    slope_window: tuple
    lower_bound: bool = False
    centered_modulus: np.ndarray | None = None
    n_centers: int = 0

    @property
    def slope_defined(self) -> bool:
        return not math.isnan(self.slope)

    def monotone(self) -> bool:
        ok = bool(np.all(np.diff(self.modulus) >= 0))
        if self.centered_modulus is not None:
            ok = ok and bool(np.all(np.diff(self.centered_modulus) >= 0))
        return ok

    def covering_margin(self) -> Margin | None:
        """``K(r) <= K_c(2r)`` wherever ``2r`` is on the radius grid."""
        if self.centered_modulus is None:
            return None
        slack = math.inf
        for i, r in enumerate(self.radii):
            j = np.nonzero(np.isclose(self.radii, 2 * r, rtol=1e-12))[0]
            if len(j):
                slack = min(slack, self.centered_modulus[j[0]] - self.modulus[i])
        if slack is math.inf:
            slack = 0.0
        return Margin("kato_covering", float(slack), max(self.sup_norm, 1e-300), 1e-12)

    def to_dict(self) -> dict:
        return {
            "radii": self.radii.tolist(),
            "modulus": self.modulus.tolist(),
            "centered_modulus": None if self.centered_modulus is None else self.centered_modulus.tolist(),
            "sup_norm": self.sup_norm,
            "h": self.h,
            "slope": None if math.isnan(self.slope) else self.slope,
            "slope_defined": self.slope_defined,
            "slope_window": list(self.slope_window),
            "lower_bound": self.lower_bound,
            "n_centers": self.n_centers,
        }


def _block_moduli(G, pts, masses_list, radii, centers, block):
    K = np.zeros((len(masses_list), len(radii)))
    r2 = np.asarray(radii) ** 2
    for s in range(0, len(centers), block):
        idx = centers[s : s + block]
        rows = G.rows(idx)
        d2 = ((pts[idx][:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        masks = [d2 < rr for rr in r2]
        for a, m in enumerate(masses_list):
            gm = rows * m
            for k, mask in enumerate(masks):
                K[a, k] = max(K[a, k], np.where(mask, gm, 0.0).sum(axis=1).max())
    return K


def _centered_moduli(G, masses, radii, block=128):
    """``sup_z sup_x sum_{|y - z| < r} g(x, y) m_y`` over interior and
    boundary centers, exact via dense products."""
    dom = G.domain
    gm = G.dense * masses[None, :]
    pts = dom.interior
    zs = np.vstack([dom.interior, dom.boundary])
    out = np.zeros(len(radii))
    for s in range(0, len(zs), block):
        z = zs[s : s + block]
        d2 = ((pts[:, None, :] - z[None, :, :]) ** 2).sum(-1)
        for k, r in enumerate(radii):
            out[k] = max(out[k], (gm @ (d2 < r * r)).max())
    return out


def _sample_centers(domain, count):
    # deterministic: a strided sweep plus the boundary layer, where the
    # supremum usually sits
    n = domain.n_interior
    layer = np.nonzero(domain.delta < 4 * domain.h)[0]
    stride = np.arange(0, n, max(1, n // count))
    return np.union1d(layer, stride)


def _slope_window(domain):
    return (4 * domain.h, domain.diameter / 4)


def _fit_window(radii, K, window):
    sel = (radii >= window[0] * (1 - 1e-12)) & (radii <= window[1] * (1 + 1e-12))
    if not np.any(K[sel] > 0):
        return math.nan
    return fit_loglog_slope(radii[sel], K[sel])


def kato_moduli(G: GreenOperator, measures, radii=None, centers=None, block: int = 256):
    """Kato moduli of several measures sharing one pass over the Green rows."""
    domain = G.domain
    radii = default_radii(domain) if radii is None else np.sort(np.asarray(radii, dtype=float))
    n = domain.n_interior
    lower = False
    if centers is None:
        if G.has_dense or n <= STREAM_CAP:
            centers = np.arange(n)
        else:
            centers = _sample_centers(domain, 4096)
            lower = True
    else:
        centers = np.unique(np.asarray(centers, dtype=np.int64))
        lower = len(centers) < n
    masses = [w.node_masses for w in measures]
    K = _block_moduli(G, domain.interior, masses, radii, centers, block)
    reports = []
    window = _slope_window(domain)
    for a, w in enumerate(measures):
        sup = float(green_potential(G, w).interior.max(initial=0.0))
        reports.append(
            KatoReport(
                radii=radii,
                modulus=K[a],
                sup_norm=sup,
                h=domain.h,
                slope=_fit_window(radii, K[a], window),
                slope_window=window,
                lower_bound=lower,
                n_centers=len(centers),
            )
        )
    return reports


def kato_modulus(G: GreenOperator, omega: GridMeasure, radii=None, *, centered: bool = False, centers=None) -> KatoReport:
    """Kato modulus ``K(r) = sup_x sum_{|y - x| < r} g(x, y) omega_y``.

    The supremum runs over every interior node (from the dense matrix, or by
    streaming Green rows from the factorization).  Passing ``centers`` or
    exceeding the streaming cap turns the result into a lower bound, flagged
    in the report.  With ``centered=True`` the center-uniform modulus over
    interior and boundary centers is added; it needs the dense matrix.

    The slope of ``log K`` against ``log r`` is fitted on radii in
    ``[4h, diam/4]``.
    """
    report = kato_moduli(G, [omega], radii, centers)[0]
    if centered:
        report.centered_modulus = _centered_moduli(G, omega.node_masses, report.radii)
    return report


def kato_condition_at_infinity(domain: GridDomain) -> bool:
    """The mass-near-infinity half of the Kato condition.

    Every supported domain is bounded, so the balls ``B(0, 1/r)`` eventually
    contain it and the condition holds trivially.
    """
    return True


def fit_green_beta(G: GreenOperator, anchor=None, direction=None, reference=None, delta_max: float = 0.2) -> float:
    """Boundary decay exponent of the discrete Green function.

    Fits ``log g(x, y_ref)`` against ``log delta(x)`` for nodes ``x`` on the
    ray from ``anchor`` (a boundary point) along ``direction``, restricted to
    nodes at distance ``2h .. delta_max`` from the anchor.  Defaults probe the worst boundary point of
    each shape: the re-entrant corner of the L-shape, a face midpoint of the
    box, a pole of the ball.
    """
    dom = G.domain
    d = dom.dimension
    if anchor is None:
        kind = dom.shape.kind
        if kind == "lshape":
            anchor, direction, reference = [0.0, 0.0], [-1.0, 1.0], [-0.5, -0.5]
        elif kind == "box":
            anchor = [0.5] * d
            anchor[-1] = 0.0
            direction = [0.0] * (d - 1) + [1.0]
            reference = [0.5] * d
        else:
            anchor = [dom.shape.radius] + [0.0] * (d - 1)
            direction = [-1.0] + [0.0] * (d - 1)
            reference = [0.0] * d
    anchor = np.asarray(anchor, dtype=float)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    rel = dom.interior - anchor
    t = rel @ direction
    off = np.linalg.norm(rel - t[:, None] * direction, axis=1)
    # only nodes close to the anchor, so other corners do not leak in
    on_ray = (off < 1e-9) & (t >= 2 * dom.h) & (t <= delta_max) & (dom.delta >= 2 * dom.h)
    if on_ray.sum() < 2:
        return math.nan
    ref = dom.nearest_node(reference)
    col = G.rows([ref])[0]
    return fit_loglog_slope(dom.delta[on_ray], col[on_ray])


def classify_slope(slope: float, borderline: float = 0.3) -> str:
    """``pass`` above ``borderline``, ``borderline`` for smaller positive
    slopes, ``fail`` otherwise, ``undefined`` for NaN."""
    if math.isnan(slope):
        return "undefined"
    if slope > borderline:
        return "pass"
    if slope > 0:
        return "borderline"
    return "fail"


def kato_threshold_sweep(shapes, alphas, h: float, *, radii=None, borderline: float = 0.3, delta_floor: float | None = 0.5):
    """Kato-modulus slopes of ``delta^(-alpha) dx`` across shapes.

    Returns a list of row dicts: shape, alpha, fitted slope, classification
    (``pass`` when the slope exceeds ``borderline``, ``borderline`` for small
    positive slopes, ``fail`` otherwise), the boundary exponent beta and
    whether the class agrees with the prediction ``alpha < 1 + beta``.
    Balls use beta = 1; other shapes use the fitted exponent.
    """
    rows = []
    for shape in shapes:
        shape = Shape.parse(shape)
        dom = build_domain(shape, h)
        G = build_green(dom)
        beta_fit = fit_green_beta(G)
        beta = 1.0 if shape.kind == "ball" else min(1.0, beta_fit)
        measures = [dist_alpha_measure(dom, a, delta_floor) for a in alphas]
        reports = kato_moduli(G, measures, radii)
        for a, rep in zip(alphas, reports):
            cls = classify_slope(rep.slope, borderline)
            predicted = a < 1 + beta
            consistent = None if cls in ("borderline", "undefined") else (cls == "pass") == predicted
            rows.append(
                {
                    "shape": shape.name,
                    "h": h,
                    "alpha": float(a),
                    "slope": rep.slope,
                    "classification": cls,
                    "beta": beta,
                    "beta_fitted": beta_fit,
                    "predicted_kato": predicted,
                    "consistent": consistent,
                    "lower_bound": rep.lower_bound,
                }
            )
    return rows


def check_iterated_inequality(G: GreenOperator, omega: GridMeasure, s: float, tol: float = 1e-12) -> Margin:
    """Slack in ``G[omega]^s <= s G[G[omega]^(s-1) d omega]``."""
    if s < 1:
        raise ValueError("s must be at least 1")
    m = omega.node_masses
    pot = green_potential_of_masses(G, m)
    lhs = pot**s
    rhs = s * green_potential_of_masses(G, pot ** (s - 1) * m)
    value = worst(rhs - lhs)
    return Margin("iterated_inequality", value, float(lhs.max(initial=0.0)), tol)


def _interior(v):
    return v.interior if isinstance(v, GridFunction) else np.asarray(v, dtype=float)


def check_lower_bound(G: GreenOperator, omega: GridMeasure, u, q: float, tol: float = 1e-10) -> Margin:
    """Slack in ``u >= (1-q)^(1/(1-q)) G[omega]^(1/(1-q))``.

    The bound holds for positive supersolutions ``u >= G[u^q d omega]``; that
    hypothesis is checked first.

    Raises
    ------
    SupersolutionError
        If ``u < G[u^q d omega]`` beyond the tolerance.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    ui = _interior(u)
    if np.any(ui < 0):
        raise ValueError("u must be nonnegative")
    scale = float(np.abs(ui).max(initial=0.0))
    m = omega.node_masses
    sub = green_potential_of_masses(G, np.where(m > 0, ui**q * m, 0.0))
    gap = worst(ui - sub)
    if gap < -tol * max(scale, 1.0):
        raise SupersolutionError(f"u is not a supersolution: min(u - G[u^q dmu]) = {gap:.3e}")
    pot = green_potential_of_masses(G, m)
    value = worst(ui - lower_constant(q) * pot ** (1.0 / (1.0 - q)))
    return Margin("lower_bound", value, scale, tol)


def lgamma_norm(v, omega: GridMeasure, gamma: float) -> float:
    """``(sum_j v(x_j)^gamma m_j)^(1/gamma)``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    vi = _interior(v)
    if np.any(vi < 0):
        raise ValueError("v must be nonnegative")
    m = omega.node_masses
    return float(np.sum(np.where(m > 0, vi**gamma * m, 0.0)) ** (1.0 / gamma))


def neighbor_oscillation(v: GridFunction) -> float:
    """Largest jump of ``v`` across a stencil arm (boundary nodes included)."""
    dom = v.domain
    nb = dom.neighbors
    inner = nb >= 0
    other = np.where(inner, v.interior[np.where(inner, nb, 0)], v.boundary[np.where(inner, 0, -1 - nb)])
    return float(np.abs(other - v.interior[:, None]).max(initial=0.0))


def energy_exponent(q: float, gamma: float, mode: str = "proof") -> float:
    """Exponent p of the integral ``int G[mu_alpha]^p d mu_alpha``.

    The finite-energy criterion is written with two different exponents:
    ``(gamma + q) / (1 - q)`` (``mode="proof"``, consistent with the stated
    threshold) and ``(gamma + q) / (1 + q)`` (``mode="statement"``).
    """
    if mode == "proof":
        return (gamma + q) / (1 - q)
    if mode == "statement":
        return (gamma + q) / (1 + q)
    raise ValueError(f"unknown exponent mode {mode!r}")


def energy_threshold(q: float, gamma: float) -> float:
    """``(2 gamma + 1 + q) / (gamma + 1)``."""
    return (2 * gamma + 1 + q) / (gamma + 1)


def implied_threshold(p: float) -> float:
    """Continuum integrability threshold ``(2p + 1)/(p + 1)`` for exponent p."""
    return (2 * p + 1) / (p + 1)


def energy_integral(G: GreenOperator, alpha: float, p: float, delta_floor: float | None = 0.5) -> float:
    """``J = sum_j G[mu_alpha](x_j)^p m_j`` with ``mu_alpha = delta^(-alpha) dx``."""
    mu = dist_alpha_measure(G.domain, alpha, delta_floor)
    pot = green_potential(G, mu).interior
    return float(np.sum(pot**p * mu.masses))


def classify_refinement(J, bounded_ratio: float = 1.15, diverging_ratio: float = 1.25) -> str:
    """``bounded`` if the finest ratio is at most ``bounded_ratio``;
    ``diverging`` if J increases at every refinement with every ratio at least
    ``diverging_ratio``; otherwise ``inconclusive``.  Fewer than three levels
    are always inconclusive."""
    J = np.asarray(J, dtype=float)
    if len(J) < 3 or np.any(J <= 0):
        return "inconclusive"
    ratios = J[1:] / J[:-1]
    if ratios[-1] <= bounded_ratio:
        return "bounded"
    if np.all(ratios >= diverging_ratio):
        return "diverging"
    return "inconclusive"


@dataclass
class ThresholdTable:
    shape: str
    q: float
    gamma: float
    mode: str
    exponent: float
    alpha_star: float
    implied_alpha_star: float
    hs: list
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "q": self.q,
            "gamma": self.gamma,
            "mode": self.mode,
            "exponent": self.exponent,
            "alpha_star": self.alpha_star,
            "implied_alpha_star": self.implied_alpha_star,
            "hs": list(self.hs),
            "rows": self.rows,
        }


def finite_energy_threshold_sweep(
    shape,
    q: float,
    gamma: float,
    alphas,
    *,
    h0: float = 1 / 32,
    levels: int = 3,
    mode: str = "proof",
    delta_floor: float | None = 0.5,
    jobs: int = 1,
) -> ThresholdTable:
    """Refinement study of ``J(h)`` for each alpha.

    Each row records the J values, successive ratios ``J(h/2)/J(h)``, the
    classification from :func:`classify_refinement` and the prediction
    ``alpha < alpha*``.  When the exponent mode makes the implied threshold
    differ from ``alpha*`` both are reported.
    """
    shape = Shape.parse(shape)
    p = energy_exponent(q, gamma, mode)
    hs = [h0 / 2**k for k in range(levels)]

    def level(h):
        G = build_green(build_domain(shape, h))
        return [energy_integral(G, a, p, delta_floor) for a in alphas]

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            per_level = list(ex.map(level, hs))
    else:
        per_level = [level(h) for h in hs]

    astar = energy_threshold(q, gamma)
    table = ThresholdTable(shape.name, q, gamma, mode, p, astar, implied_threshold(p), hs)
    for a_i, a in enumerate(alphas):
        J = [per_level[k][a_i] for k in range(levels)]
        ratios = [J[k + 1] / J[k] for k in range(levels - 1)]
        table.rows.append(
            {
                "alpha": float(a),
                "J": J,
                "ratios": ratios,
                "classification": classify_refinement(J),
                "predicted": "bounded" if a < astar else "diverging",
            }
        )
    return table
