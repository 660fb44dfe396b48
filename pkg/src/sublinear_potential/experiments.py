"""Config-driven experiments: solve, kato, threshold, verify and green-test.

A config is a single JSON document validated by :class:`ExperimentConfig`
(unknown keys are rejected).  :func:`run_experiment` writes ``report.json``,
the CSV tables of the chosen experiment and a ``manifest.json`` with the
SHA-256 of every emitted file.  Outputs carry no timestamps or paths, so a
fixed config and seed give byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import export
from .checks import Margin
from .expressions import ExpressionError, evaluate
from .green import (
    BoundaryData,
    DenseUnavailableError,
    analytic_disk_kernel,
    build_green,
    green_invariants,
    green_potential,
)
from .grid_domain import EmptyDomainError, Shape, build_domain
from .measure import (
    GridMeasure,
    atom_measure,
    dist_alpha_measure,
    lebesgue,
    measure_from_density,
    zero_measure,
)
from .oscillation import holder_oscillation
from .potential import (
    SupersolutionError,
    check_iterated_inequality,
    finite_energy_threshold_sweep,
    kato_condition_at_infinity,
    kato_modulus,
    kato_threshold_sweep,
)
from .solver import (
    DegenerateDataError,
    NewtonFailure,
    NonConvergenceError,
    SolverConfig,
    apply_T,
    lower_bound_margin,
    newton_oracle,
    picard_solve,
    uniqueness_experiment,
    verify_estimates,
)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    """Invalid or unreadable experiment config (exit status 2)."""


class NumericalFailure(RuntimeError):
    """A solver or factorization failed (exit status 3)."""


# ---------------------------------------------------------------- config ----


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ShapeSpec(_Strict):
    name: Literal["square", "cube", "disk", "ball", "lshape", "l-shape"]
    radius: float = Field(1.0, gt=0)


class ZeroMeasure(_Strict):
    kind: Literal["zero"]


class DensityMeasure(_Strict):
    """``expression`` in the variables x, y, z, r, delta; lumped as
    ``a(x_j) h^d``."""

    kind: Literal["density"]
    expression: str


class DistAlphaMeasure(_Strict):
    kind: Literal["dist_alpha"]
    alpha: float = Field(ge=0)
    delta_floor: float | None = Field(0.5, ge=0)


class Atom(_Strict):
    point: list[float]
    mass: float = Field(ge=0)


class AtomsMeasure(_Strict):
    """Point masses, each snapped to the nearest interior node."""

    kind: Literal["atoms"]
    atoms: list[Atom]


class CsvMeasure(_Strict):
    kind: Literal["csv"]
    path: str


class RandomMeasure(_Strict):
    """Density uniform on ``[0, scale)`` at a random ``fraction`` of nodes,
    plus ``atoms`` random point masses of size up to ``atom_mass``."""

    kind: Literal["random"]
    scale: float = Field(1.0, ge=0)
    fraction: float = Field(1.0, ge=0, le=1)
    atoms: int = Field(0, ge=0)
    atom_mass: float = Field(0.01, ge=0)


MeasureSpec = Annotated[
    Union[ZeroMeasure, DensityMeasure, DistAlphaMeasure, AtomsMeasure, CsvMeasure, RandomMeasure],
    Field(discriminator="kind"),
]


class ConstantBoundary(_Strict):
    kind: Literal["constant"]
    value: float = Field(ge=0)


class ExpressionBoundary(_Strict):
    kind: Literal["expression"]
    expression: str


class CsvBoundary(_Strict):
    kind: Literal["csv"]
    path: str


class RandomBoundary(_Strict):
    kind: Literal["random"]
    low: float = Field(0.0, ge=0)
    high: float = Field(1.0, ge=0)


BoundarySpec = Annotated[
    Union[ConstantBoundary, ExpressionBoundary, CsvBoundary, RandomBoundary],
    Field(discriminator="kind"),
]


class SolverSpec(_Strict):
    tol: float = Field(1e-10, gt=0)
    max_iter: int = Field(10000, ge=1)
    direction: Literal["below", "above", "both"] = "below"
    oracle: bool = False
    oracle_tol: float = Field(1e-8, gt=0)
    margin_tol: float = Field(1e-10, gt=0)


class KatoSpec(_Strict):
    """Kato moduli of ``mu`` or, when ``alphas`` is set, of the weights
    ``delta^(-alpha) dx``.  ``shapes`` adds a cross-shape threshold sweep.
    ``check_scaling`` asserts ``|slope - (2 - alpha)| <= slope_tolerance``."""

    alphas: list[float] | None = None
    radii: list[float] | None = None
    centered: bool | None = None
    delta_floor: float | None = Field(0.5, ge=0)
    shapes: list[str] | None = None
    check_scaling: bool = False
    slope_tolerance: float = Field(0.3, gt=0)


class ThresholdSpec(_Strict):
    gamma: float = Field(gt=0)
    alphas: list[float]
    mode: Literal["proof", "statement"] = "proof"
    delta_floor: float | None = Field(0.5, ge=0)


class VerifySpec(_Strict):
    random_measures: int = Field(10, ge=0)
    s_values: list[float] = [1.0, 1.5, 2.0, 3.0]
    pairs: int = Field(20, ge=0)
    fault: Literal["asymmetric_green"] | None = None
    tol: float = Field(1e-12, gt=0)


class GreenTestSpec(_Strict):
    export_rows: list[int] = []
    min_ratio: float = Field(3.0, gt=0)


class HolderSpec(_Strict):
    radii: list[float] | None = None
    centers: int = Field(64, ge=1)


class ExperimentConfig(_Strict):
    kind: Literal["solve", "kato", "threshold", "verify", "green-test"]
    shape: ShapeSpec
    h: float = Field(gt=0, le=1)
    levels: int = Field(1, ge=1)
    stencil: Literal["symmetric", "shortley-weller"] = "symmetric"
    q: float = Field(0.5, gt=0, lt=1)
    mu: MeasureSpec = ZeroMeasure(kind="zero")
    nu: MeasureSpec = ZeroMeasure(kind="zero")
    boundary: BoundarySpec = ConstantBoundary(kind="constant", value=0.0)
    exact: str | None = None
    solver: SolverSpec = SolverSpec()
    kato: KatoSpec = KatoSpec()
    threshold: ThresholdSpec | None = None
    verify: VerifySpec = VerifySpec()
    green_test: GreenTestSpec = GreenTestSpec()
    holder: HolderSpec | None = None
    out_dir: str | None = None
    seed: int = Field(0, ge=0, lt=2**64)
    jobs: int = Field(1, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _shape_shorthand(cls, data):
        if isinstance(data, dict) and isinstance(data.get("shape"), str):
            data = {**data, "shape": {"name": data["shape"]}}
        return data

    @model_validator(mode="after")
    def _threshold_present(self):
        if self.kind == "threshold" and self.threshold is None:
            raise ValueError("kind 'threshold' needs a 'threshold' section")
        if self.shape.name not in ("disk", "ball") and self.shape.radius != 1.0:
            raise ValueError(f"shape {self.shape.name!r} takes no radius")
        return self

    def shape_obj(self) -> Shape:
        return Shape.parse(self.shape.model_dump())

    def level_hs(self) -> list[float]:
        return [self.h / 2**k for k in range(self.levels)]


def load_config(source, **overrides) -> ExperimentConfig:
    """Parse a config from a path, JSON text or dict; ``overrides`` replace
    top-level keys (``None`` values are ignored)."""
    if isinstance(source, dict):
        data = dict(source)
    else:
        text = source
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config {source}: {exc}") from exc
        try:
            data = json.loads(text)
        except ValueError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


# ------------------------------------------------------------ data build ----


def _resolve(path, base_dir):
    p = Path(path)
    return p if p.is_absolute() or base_dir is None else Path(base_dir) / p


def build_measure(spec, domain, rng, base_dir=None) -> GridMeasure:
    if isinstance(spec, ZeroMeasure):
        return zero_measure(domain)
    if isinstance(spec, DensityMeasure):
        a = evaluate(spec.expression, domain.interior, domain.delta)
        if np.any(a < 0):
            raise ConfigError(f"density {spec.expression!r} is negative somewhere")
        return measure_from_density(domain, a)
    if isinstance(spec, DistAlphaMeasure):
        return dist_alpha_measure(domain, spec.alpha, spec.delta_floor)
    if isinstance(spec, AtomsMeasure):
        for a in spec.atoms:
            if len(a.point) != domain.dimension:
                raise ConfigError(f"atom point {a.point} has the wrong dimension")
        return atom_measure(domain, [(domain.nearest_node(a.point), a.mass) for a in spec.atoms])
    if isinstance(spec, CsvMeasure):
        try:
            return export.read_measure_csv(_resolve(spec.path, base_dir), domain)
        except OSError as exc:
            raise ConfigError(f"cannot read measure CSV: {exc}") from exc
    # random
    n = domain.n_interior
    keep = rng.random(n) < spec.fraction
    dens = np.where(keep, spec.scale * rng.random(n), 0.0)
    omega = measure_from_density(domain, dens)
    if spec.atoms:
        idx = rng.integers(0, n, spec.atoms)
        omega = omega + atom_measure(domain, zip(idx, spec.atom_mass * rng.random(spec.atoms)))
    return omega


def build_boundary(spec, domain, rng, base_dir=None) -> BoundaryData:
    if isinstance(spec, ConstantBoundary):
        return BoundaryData.constant(domain, spec.value)
    if isinstance(spec, ExpressionBoundary):
        v = evaluate(spec.expression, domain.boundary)
        if np.any(v < 0):
            raise ConfigError(f"boundary data {spec.expression!r} is negative somewhere")
        return BoundaryData(domain, v)
    if isinstance(spec, CsvBoundary):
        try:
            return export.read_boundary_csv(_resolve(spec.path, base_dir), domain)
        except OSError as exc:
            raise ConfigError(f"cannot read boundary CSV: {exc}") from exc
    if spec.high < spec.low:
        raise ConfigError("random boundary needs low <= high")
    return BoundaryData(domain, rng.uniform(spec.low, spec.high, domain.n_boundary))


# --------------------------------------------------------------- results ----


@dataclass
class ExperimentResult:
    kind: str
    status: int
    report: dict
    files: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == EXIT_OK


class _Run:
    """Collects checks, report sections and emitted files."""

    def __init__(self, cfg, out_dir, base_dir):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.base_dir = base_dir
        self.rng = np.random.default_rng(cfg.seed)
        self.report = {"kind": cfg.kind, "config": cfg.model_dump(exclude={"out_dir"}), "checks": []}
        self.files = []
        self.failures = []

    def margin(self, m: Margin, where: str = ""):
        entry = {**m.to_dict(), "where": where}
        self.report["checks"].append(entry)
        if not m.passed:
            self.failures.append(f"{m.name}{' [' + where + ']' if where else ''}: margin {m.value:.3e} (scale {m.scale:.3e}, tol {m.tolerance:g})")

    def check(self, name: str, ok: bool, detail: str = "", where: str = ""):
        self.report["checks"].append({"name": name, "passed": bool(ok), "detail": detail, "where": where})
        if not ok:
            self.failures.append(f"{name}{' [' + where + ']' if where else ''}: {detail}")

    def csv(self, name, writer, *args):
        self.files.append(writer(self.out / name, *args))

    def green(self, h):
        dom = build_domain(self.cfg.shape_obj(), h)
        return dom, build_green(dom, self.cfg.stencil)


def _refinement_table(hs, errors, min_ratio):
    ratios = [errors[k] / errors[k + 1] if errors[k + 1] > 0 else math.inf for k in range(len(errors) - 1)]
    conclusive = len(hs) >= 3
    return {
        "h": list(hs),
        "error": list(errors),
        "ratio": ratios,
        "conclusive": conclusive,
        "min_ratio": min_ratio,
        "status": ("pass" if all(r >= min_ratio for r in ratios) else "fail") if conclusive else "inconclusive",
    }


# ------------------------------------------------------------- runners ----


def _run_solve(run: _Run):
    cfg = run.cfg
    levels = []
    errors = []
    for k, h in enumerate(cfg.level_hs()):
        dom, G = run.green(h)
        mu = build_measure(cfg.mu, dom, run.rng, run.base_dir)
        nu = build_measure(cfg.nu, dom, run.rng, run.base_dir)
        f = build_boundary(cfg.boundary, dom, run.rng, run.base_dir)
        where = f"h={h:.17g}"
        s = cfg.solver
        entry = {"h": h, "n_interior": dom.n_interior}
        if s.direction == "both":
            uq = uniqueness_experiment(G, mu, nu, f, cfg.q, tol=s.tol, max_iter=s.max_iter)
            rep = uq.below
            entry["uniqueness"] = uq.to_dict()
            run.margin(uq.minimality, where)
        else:
            rep = picard_solve(G, mu, nu, f, SolverConfig(cfg.q, s.tol, s.max_iter, s.direction))
            entry["solve"] = rep.to_dict()
        run.check("monotone_iteration", rep.monotonicity_violations == 0, f"{rep.monotonicity_violations} non-monotone steps", where)
        for m in verify_estimates(rep, G, mu, nu, f, cfg.q, s.margin_tol).values():
            run.margin(m, where)
        run.margin(lower_bound_margin(G, mu, rep, s.margin_tol), where)
        if s.oracle:
            if not G.has_dense:
                raise ConfigError("the Newton oracle needs the dense Green matrix; reduce the grid")
            start = np.maximum(rep.u.interior, 1e-3 * max(rep.u.sup_norm, 1e-300))
            un = newton_oracle(G, mu, nu, f, cfg.q, start)
            gap = float(np.abs(un.interior - rep.u.interior).max(initial=0.0))
            entry["oracle_gap"] = gap
            run.margin(Margin("newton_agreement", -gap, 1.0, s.oracle_tol), where)
        if cfg.exact is not None:
            ue = evaluate(cfg.exact, dom.interior, dom.delta)
            errors.append(float(np.abs(rep.u.interior - ue).max(initial=0.0)))
            entry["error"] = errors[-1]
        run.csv(f"field_L{k}.csv", export.write_field_csv, G, rep.u, mu, nu, f)
        trace = np.array(rep.trace, dtype=float)
        run.csv(f"trace_L{k}.csv", export.write_csv, ["iteration", "residual", "sup_norm"], trace.tolist())
        if cfg.holder is not None and k == cfg.levels - 1:
            osc = holder_oscillation(rep.u, dom, cfg.holder.radii, count=cfg.holder.centers)
            entry["holder"] = osc.to_dict()
        levels.append(entry)
    run.report["levels"] = levels
    if cfg.exact is not None and cfg.levels >= 2:
        table = _refinement_table(cfg.level_hs(), errors, 3.0)
        run.report["refinement"] = table
        run.csv("refinement.csv", export.write_csv, ["h", "error"], list(zip(table["h"], table["error"])))
        if table["conclusive"]:
            run.check("refinement_ratio", table["status"] == "pass", f"ratios {table['ratio']}")


def _run_kato(run: _Run):
    cfg = run.cfg
    ks = cfg.kato
    out = []
    for k, h in enumerate(cfg.level_hs()):
        dom, G = run.green(h)
        where = f"h={h:.17g}"
        if ks.alphas is not None:
            items = [(f"alpha={a:g}", a, dist_alpha_measure(dom, a, ks.delta_floor)) for a in ks.alphas]
        else:
            items = [("mu", None, build_measure(cfg.mu, dom, run.rng, run.base_dir))]
        centered = G.has_dense if ks.centered is None else ks.centered
        if centered and not G.has_dense:
            raise ConfigError("centered Kato moduli need the dense Green matrix; reduce the grid")
        for j, (label, a, omega) in enumerate(items):
            rep = kato_modulus(G, omega, ks.radii, centered=centered)
            row = {"h": h, "label": label, "alpha": a, **rep.to_dict()}
            run.check("kato_monotone", rep.monotone(), "K(r) decreases somewhere", f"{where} {label}")
            cov = rep.covering_margin()
            if cov is not None:
                run.margin(cov, f"{where} {label}")
            if ks.check_scaling and a is not None:
                target = 2 - a
                ok = rep.slope_defined and abs(rep.slope - target) <= ks.slope_tolerance
                row["target_slope"] = target
                run.check("kato_scaling", ok, f"slope {rep.slope:.4f} vs {target:g} +- {ks.slope_tolerance:g}", f"{where} {label}")
            out.append(row)
            run.csv(f"kato_L{k}_{j}.csv", export.write_kato_csv, rep)
    run.report["kato"] = out
    run.report["kato_condition_at_infinity"] = kato_condition_at_infinity(dom)
    if ks.shapes:
        alphas = ks.alphas if ks.alphas is not None else [0.5, 1.0, 1.5, 1.9]
        rows = kato_threshold_sweep(ks.shapes, alphas, cfg.h, radii=ks.radii, delta_floor=ks.delta_floor)
        run.report["sweep"] = rows
        run.csv("kato_sweep.csv", export.write_kato_sweep_csv, rows)


def _run_threshold(run: _Run):
    cfg = run.cfg
    th = cfg.threshold
    table = finite_energy_threshold_sweep(
        cfg.shape_obj(), cfg.q, th.gamma, th.alphas, h0=cfg.h, levels=cfg.levels, mode=th.mode, delta_floor=th.delta_floor, jobs=cfg.jobs
    )
    d = table.to_dict()
    if abs(table.alpha_star - table.implied_alpha_star) > 1e-12:
        d["discrepancy"] = (
            f"exponent mode {th.mode!r} implies threshold {table.implied_alpha_star:.6g}, "
            f"stated threshold is {table.alpha_star:.6g}"
        )
    inconclusive = [r["alpha"] for r in table.rows if r["classification"] == "inconclusive"]
    d["inconclusive"] = bool(inconclusive) or cfg.levels < 3
    run.report["threshold"] = d
    for r in table.rows:
        if r["classification"] != "inconclusive":
            run.check(
                "threshold_classification",
                r["classification"] == r["predicted"],
                f"alpha {r['alpha']:g} classified {r['classification']}, predicted {r['predicted']} (ratios {r['ratios']})",
            )
    run.csv("threshold.csv", export.write_threshold_csv, table)


def _run_verify(run: _Run):
    cfg = run.cfg
    vs = cfg.verify
    dom, G = run.green(cfg.h)
    if G.has_dense:
        Gd = G
        if vs.fault == "asymmetric_green":
            g = np.array(G.dense)
            g[0, -1] += 1e-3 * float(np.abs(g).max())
            Gd = G.with_dense(g)
        for m in green_invariants(Gd).values():
            run.margin(m)
    elif vs.fault is not None:
        raise ConfigError("fault injection needs the dense Green matrix; reduce the grid")
    # iterated inequality on random measures
    for i in range(vs.random_measures):
        omega = build_measure(RandomMeasure(kind="random", fraction=0.5, atoms=2), dom, run.rng)
        for s in vs.s_values:
            run.margin(check_iterated_inequality(G, omega, s, vs.tol), f"measure {i} s={s:g}")
    # order preservation of the fixed-point map
    mu = build_measure(cfg.mu, dom, run.rng, run.base_dir)
    nu = build_measure(cfg.nu, dom, run.rng, run.base_dir)
    f = build_boundary(cfg.boundary, dom, run.rng, run.base_dir)
    worst, scale = math.inf, 1.0
    for _ in range(vs.pairs):
        u = run.rng.random(dom.n_interior)
        v = u + run.rng.random(dom.n_interior) * (run.rng.random(dom.n_interior) < 0.5)
        tu = apply_T(G, mu, nu, f, u, cfg.q).interior
        tv = apply_T(G, mu, nu, f, v, cfg.q).interior
        worst = min(worst, float((tv - tu).min()))
        scale = max(scale, float(np.abs(tv).max()))
    if vs.pairs:
        run.margin(Margin("operator_monotonicity", worst, scale, vs.tol))
    # solver fixed point: lower bound and estimates
    if not (mu.is_zero() and nu.is_zero() and f.sup_norm == 0):
        s = cfg.solver
        rep = picard_solve(G, mu, nu, f, SolverConfig(cfg.q, s.tol, s.max_iter, "below"))
        run.margin(lower_bound_margin(G, mu, rep, s.margin_tol))
        for m in verify_estimates(rep, G, mu, nu, f, cfg.q, s.margin_tol).values():
            run.margin(m)
    run.report["n_interior"] = dom.n_interior
    margins = [c for c in run.report["checks"] if "value" in c]
    rows = ([c["name"], c["where"], c["value"], c["scale"], c["tolerance"], c["passed"]] for c in margins)
    run.csv("margins.csv", export.write_csv, ["name", "where", "value", "scale", "tolerance", "passed"], rows)


def _run_green_test(run: _Run):
    cfg = run.cfg
    shape = cfg.shape_obj()
    hs = cfg.level_hs()
    errors = []
    levels = []
    for k, h in enumerate(hs):
        dom, G = run.green(h)
        where = f"h={h:.17g}"
        entry = {"h": h, "n_interior": dom.n_interior}
        if G.has_dense:
            for m in green_invariants(G).values():
                run.margin(m, where)
        if shape.kind == "ball":
            d, R = dom.dimension, shape.radius
            pot = green_potential(G, lebesgue(dom))
            c = dom.nearest_node(np.zeros(d))
            x = dom.interior[c]
            exact = (R * R - float(x @ x)) / (2 * d)
            errors.append(abs(pot.interior[c] - exact))
            entry.update(center_value=float(pot.interior[c]), center_exact=exact, center_error=errors[-1])
            # far-field kernel comparison, pairs closer than 2h excluded
            row = G.rows([c])[0]
            far = np.linalg.norm(dom.interior - x, axis=1) >= 2 * h
            kern = analytic_disk_kernel(x[None, :], dom.interior[far], R, d)
            err = np.abs(row[far] - kern)
            entry["kernel_max_abs_error"] = float(err.max(initial=0.0))
            # at a fixed distance the kernel error is a discretization error
            fixed = np.linalg.norm(dom.interior[far] - x, axis=1) >= R / 4
            entry["kernel_far_field_error"] = float(err[fixed].max(initial=0.0))
        if cfg.green_test.export_rows and G.n > export.DENSE_CAP:
            entry["green_rows"] = "skipped: node count above the export cap"
        elif cfg.green_test.export_rows:
            try:
                run.csv(f"green_rows_L{k}.csv", export.write_green_rows_csv, G, cfg.green_test.export_rows)
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"cannot export Green rows: {exc}") from exc
        levels.append(entry)
    run.report["levels"] = levels
    if errors and len(hs) >= 2:
        table = _refinement_table(hs, errors, cfg.green_test.min_ratio)
        run.report["refinement"] = table
        run.csv("green_refinement.csv", export.write_csv, ["h", "center_error"], list(zip(hs, errors)))
        ok = all(r >= cfg.green_test.min_ratio for r in table["ratio"])
        run.check("green_refinement_ratio", ok, f"ratios {table['ratio']}")


_RUNNERS = {
    "solve": _run_solve,
    "kato": _run_kato,
    "threshold": _run_threshold,
    "verify": _run_verify,
    "green-test": _run_green_test,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None, base_dir=None, manifest=None) -> ExperimentResult:
    """Run one experiment and write its artifacts into ``out_dir``.

    ``manifest`` (verify runs) names an earlier manifest whose hashes are
    re-checked.  The status is ``EXIT_OK`` when every enabled check passes and
    ``EXIT_ASSERTION`` otherwise; config problems raise :class:`ConfigError`
    and numerical breakdowns :class:`NumericalFailure`.
    """
    out_dir = Path(out_dir or cfg.out_dir or "out")
    out_dir.mkdir(parents=True, exist_ok=True)
    run = _Run(cfg, out_dir, base_dir)
    try:
        _RUNNERS[cfg.kind](run)
    except (ExpressionError, EmptyDomainError, DenseUnavailableError) as exc:
        raise ConfigError(str(exc)) from exc
    except (DegenerateDataError, NonConvergenceError, NewtonFailure, SupersolutionError, np.linalg.LinAlgError) as exc:
        raise NumericalFailure(f"{type(exc).__name__}: {exc}") from exc
    if manifest is not None:
        bad = export.verify_manifest(manifest)
        run.report["manifest_checked"] = Path(manifest).name
        run.check("manifest_hashes", not bad, f"mismatching files: {bad}")
    status = EXIT_OK if not run.failures else EXIT_ASSERTION
    run.report["status"] = "pass" if status == EXIT_OK else "fail"
    run.report["failures"] = list(run.failures)
    report_path = export.write_json(out_dir / "report.json", run.report)
    files = [*run.files, report_path]
    files.append(export.write_manifest(out_dir, files))
    return ExperimentResult(cfg.kind, status, run.report, files, run.failures)
