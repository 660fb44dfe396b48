"""Monotone iteration for ``u = G[u^q d mu] + G[nu] + H_f``.

From below the iteration starts at ``u_0 = c1 G[mu]^(1/(1-q))`` and increases
to the minimal solution.  From above it starts at the constant ``c2``; this is
a supersolution because for ``c2 >= 1``::

    T[c2] <= c2^q (|G[mu]| + |G[nu]| + |f|) <= c2^q c2^(1-q) = c2

using ``c2^(1-q) >= |G[mu]| + |G[nu]| + |f|``, so the iterates decrease.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .checks import Margin, worst
from .green import (
    BoundaryData,
    GreenOperator,
    GridFunction,
    green_potential,
    green_potential_of_masses,
    harmonic_extension,
)
from .measure import GridMeasure
from .potential import check_lower_bound, lgamma_norm, lower_constant

MONOTONE_SLACK = 1e-12


class DegenerateDataError(ValueError):
    """``|f| + |G[mu]| + |G[nu]| = 0``: the only fixed point is ``u = 0``."""


class NonConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class NewtonFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    q: float
    tol: float = 1e-10
    max_iter: int = 10000
    direction: str = "below"
    oracle: bool = False

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.direction not in ("below", "above"):
            raise ValueError("direction must be 'below' or 'above'")


def upper_constant(q, gmu_sup, gnu_sup, f_sup):
    """``max{1, (|G[mu]| + |G[nu]| + |f|)^(1/(1-q))}``."""
    return max(1.0, (gmu_sup + gnu_sup + f_sup) ** (1.0 / (1.0 - q)))


@dataclass
class SolveReport:
    u: GridFunction
    iterations: int
    residual: float
    converged: bool
    direction: str
    q: float
    c1: float
    c2: float
    monotonicity_violations: int = 0
    bound_violations: int = 0
    margins: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
            "direction": self.direction,
            "q": self.q,
            "c1": self.c1,
            "c2": self.c2,
            "sup_norm": self.u.sup_norm,
            "monotonicity_violations": self.monotonicity_violations,
            "bound_violations": self.bound_violations,
            "margins": {k: m.to_dict() for k, m in self.margins.items()},
            "flags": list(self.flags),
        }


class _Problem:
    """Linear pieces of the fixed-point map, computed once."""

    def __init__(self, G, mu, nu, f, q):
        if not 0 < q < 1:
            raise ValueError("q must lie in (0, 1)")
        for obj in (mu, nu, f):
            if obj.domain is not G.domain:
                raise ValueError("data live on a different domain than the Green operator")
        self.G, self.mu, self.nu, self.f, self.q = G, mu, nu, f, q
        self.m = mu.node_masses
        self.active = self.m > 0
        self.gmu = green_potential(G, mu)
        self.gnu = green_potential(G, nu)
        self.hf = harmonic_extension(G, f)
        self.base = self.gnu.interior + self.hf.interior
        self.size = self.gmu.sup_norm + self.gnu.sup_norm + f.sup_norm

    def T(self, ui):
        if not self.active.any():
            return self.base.copy()
        load = np.zeros_like(ui)
        # nodes without mu-mass contribute nothing (0^q * 0 = 0)
        load[self.active] = ui[self.active] ** self.q * self.m[self.active]
        return green_potential_of_masses(self.G, load) + self.base

    def wrap(self, ui):
        return GridFunction(self.G.domain, ui, self.f.values.copy())


def _as_boundary(G, f):
    return f if isinstance(f, BoundaryData) else BoundaryData(G.domain, f)


def apply_T(G: GreenOperator, mu: GridMeasure, nu: GridMeasure, f, u, q: float) -> GridFunction:
    """``T[u] = G[u^q d mu] + G[nu] + H_f`` with boundary values ``f``."""
    prob = _Problem(G, mu, nu, _as_boundary(G, f), q)
    ui = u.interior if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    if np.any(ui < 0):
        raise ValueError("u must be nonnegative")
    return prob.wrap(prob.T(ui))


def picard_solve(G: GreenOperator, mu: GridMeasure, nu: GridMeasure, f, cfg: SolverConfig) -> SolveReport:
    """Successive approximations from below (minimal solution) or above.

    Stops when ``|u_j - u_{j+1}| <= tol max(1, |u_j|)`` and the residual
    ``|u_j - T[u_j]| <= 2 tol max(1, |u_j|)``; for this iteration the two
    quantities coincide, and the returned iterate ``u_j`` carries exactly the
    reported residual.

    Raises
    ------
    DegenerateDataError
        When ``f``, ``G[mu]`` and ``G[nu]`` all vanish.
    NonConvergenceError
        After ``cfg.max_iter`` iterations.
    """
    f = _as_boundary(G, f)
    q = cfg.q
    prob = _Problem(G, mu, nu, f, q)
    if prob.size == 0:
        raise DegenerateDataError(
            "|f| + |G[mu]| + |G[nu]| = 0: the only fixed point is u = 0, not a positive solution"
        )
    c1 = lower_constant(q)
    c2 = upper_constant(q, prob.gmu.sup_norm, prob.gnu.sup_norm, f.sup_norm)
    uniform_cap = prob.size ** (1.0 / (1.0 - q))

    if cfg.direction == "below":
        u = c1 * prob.gmu.interior ** (1.0 / (1.0 - q))
        sign = 1.0
    else:
        u = np.full(G.n, c2)
        sign = -1.0

    trace = []
    mono_viol = bound_viol = 0
    slow = 0
    warned = False
    prev_res = None
    for it in range(cfg.max_iter + 1):
        Tu = prob.T(u)
        res = float(np.abs(Tu - u).max(initial=0.0))
        unorm = max(float(np.abs(u).max(initial=0.0)), f.sup_norm)
        trace.append((it, res, unorm))
        if unorm >= 1 and unorm > uniform_cap * (1 + 1e-12):
            bound_viol += 1
        scale = max(1.0, unorm)
        # |u_{j+1} - u_j| is the residual of u_j, so both stopping tests
        # (difference <= tol, residual <= 2 tol) reduce to this one
        if res <= cfg.tol * scale:
            break
        if it == cfg.max_iter:
            raise NonConvergenceError(
                f"no convergence after {cfg.max_iter} iterations (residual {res:.3e})", res
            )
        step = sign * (Tu - u)
        if step.min(initial=0.0) < -MONOTONE_SLACK * scale:
            mono_viol += 1
        if prev_res is not None and prev_res > 0 and res / prev_res > 0.999:
            slow += 1
            if slow >= 10 and not warned:
                warnings.warn("Picard iteration contracting at rate > 0.999", RuntimeWarning)
                warned = True
        else:
            slow = 0
        prev_res = res
        u = Tu

    report = SolveReport(
        u=prob.wrap(u),
        iterations=it,
        residual=res,
        converged=True,
        direction=cfg.direction,
        q=q,
        c1=c1,
        c2=c2,
        monotonicity_violations=mono_viol,
        bound_violations=bound_viol,
        trace=trace,
    )
    if mu.is_zero():
        report.flags.append("linear: mu = 0")
    report.margins = _estimate_margins(prob, report.u, c1, c2)
    return report


def _estimate_margins(prob, u, c1, c2, tol=1e-10):
    q = prob.q
    ui = u.interior
    scale = u.sup_norm
    lower = c1 * prob.gmu.interior ** (1.0 / (1.0 - q)) + prob.base
    upper = c2**q * prob.gmu.interior + prob.base
    return {
        "lower": Margin("lower_estimate", worst(ui - lower), scale, tol),
        "upper": Margin("upper_estimate", worst(upper - ui), scale, tol),
        "uniform": Margin("uniform_estimate", c2 - scale, scale, tol),
    }


def verify_estimates(report, G: GreenOperator, mu: GridMeasure, nu: GridMeasure, f, q: float, tol: float = 1e-10) -> dict:
    """Lower, upper and uniform two-sided estimates for a computed solution.

    ``report`` is a :class:`SolveReport` or a :class:`GridFunction`.  Returns
    margins ``lower`` (``u - c1 G[mu]^(1/(1-q)) - G[nu] - H_f``), ``upper``
    (``c2^q G[mu] + G[nu] + H_f - u``) and ``uniform`` (``c2 - |u|``), each
    to be at least ``-tol |u|``.
    """
    f = _as_boundary(G, f)
    prob = _Problem(G, mu, nu, f, q)
    u = report.u if isinstance(report, SolveReport) else report
    c1 = lower_constant(q)
    c2 = upper_constant(q, prob.gmu.sup_norm, prob.gnu.sup_norm, f.sup_norm)
    return _estimate_margins(prob, u, c1, c2, tol)


def newton_oracle(G: GreenOperator, mu: GridMeasure, nu: GridMeasure, f, q: float, u_init, tol: float = 1e-12, max_iter: int = 100) -> GridFunction:
    """Damped Newton on ``F(u) = u - g (u^q m) - G[nu] - H_f`` with the dense
    Green matrix.  Independent of the Picard path except for the linear
    pieces ``G[nu] + H_f``.

    Raises
    ------
    NewtonFailure
        On a singular Jacobian, failed line search or iteration cap.
    """
    f = _as_boundary(G, f)
    prob = _Problem(G, mu, nu, f, q)
    g = G.dense
    m = prob.m
    u = np.array(u_init.interior if isinstance(u_init, GridFunction) else u_init, dtype=float)
    if np.any(u <= 0):
        raise ValueError("u_init must be positive")

    def F(v):
        return v - g @ (v**q * m) - prob.base

    Fu = F(u)
    for _ in range(max_iter):
        fn = float(np.abs(Fu).max())
        if fn <= tol * max(1.0, float(np.abs(u).max())):
            return prob.wrap(u)
        J = np.eye(G.n) - g * (q * u ** (q - 1.0) * m)[None, :]
        try:
            step = np.linalg.solve(J, -Fu)
        except np.linalg.LinAlgError as exc:
            raise NewtonFailure(f"singular Jacobian: {exc}") from exc
        t = 1.0
        while True:
            trial = u + t * step
            if np.all(trial > 0):
                Ft = F(trial)
                if float(np.abs(Ft).max()) <= (1 - 1e-4 * t) * fn:
                    break
            t *= 0.5
            if t < 1e-12:
                raise NewtonFailure(f"line search failed at residual {fn:.3e}")
        u, Fu = trial, Ft
    raise NewtonFailure(f"no convergence in {max_iter} Newton steps")


@dataclass
class UniquenessReport:
    below: SolveReport
    above: SolveReport
    gap: float
    minimality: Margin
    norms: dict
    unique: bool
    note: str = (
        "discrete two-sided gap: a surrogate for uniqueness of exact solutions; "
        "a gap above tolerance would not by itself contradict the continuum result"
    )

    def to_dict(self) -> dict:
        return {
            "gap": self.gap,
            "unique": self.unique,
            "minimality": self.minimality.to_dict(),
            "norms": self.norms,
            "below": self.below.to_dict(),
            "above": self.above.to_dict(),
            "note": self.note,
        }


def uniqueness_experiment(G: GreenOperator, mu: GridMeasure, nu: GridMeasure, f, q: float, gamma: float | None = None, tol: float = 1e-10, max_iter: int = 10000) -> UniquenessReport:
    """Solve from both sides and compare the limits.

    Records L^gamma(d mu) norms of both limits for ``gamma = q`` and, when
    ``f = 0``, ``gamma = q + 1`` (plus any extra ``gamma`` given).
    """
    f = _as_boundary(G, f)
    below = picard_solve(G, mu, nu, f, SolverConfig(q, tol, max_iter, "below"))
    above = picard_solve(G, mu, nu, f, SolverConfig(q, tol, max_iter, "above"))
    diff = above.u.interior - below.u.interior
    unorm = max(below.u.sup_norm, above.u.sup_norm)
    gap = float(np.abs(diff).max(initial=0.0))
    gammas = [q]
    if f.sup_norm == 0:
        gammas.append(q + 1)
    if gamma is not None and gamma not in gammas:
        gammas.append(gamma)
    norms = {
        f"{g:.17g}": {"below": lgamma_norm(below.u, mu, g), "above": lgamma_norm(above.u, mu, g)}
        for g in gammas
    }
    minimality = Margin("minimality", worst(diff), unorm, tol)
    return UniquenessReport(below, above, gap, minimality, norms, gap <= 1e-6 * unorm)


def lower_bound_margin(G, mu, report: SolveReport, tol: float = 1e-10) -> Margin:
    """Lower-bound check on a solver fixed point."""
    return check_lower_bound(G, mu, report.u, report.q, tol)
