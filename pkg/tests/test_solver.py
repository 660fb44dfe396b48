import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sublinear_potential import (
    BoundaryData,
    DegenerateDataError,
    Shape,
    SolverConfig,
    atom_measure,
    build_domain,
    build_green,
    green_potential,
    lebesgue,
    measure_from_density,
    newton_oracle,
    picard_solve,
    uniqueness_experiment,
    verify_estimates,
    zero_measure,
)
from sublinear_potential.solver import (
    NonConvergenceError,
    apply_T,
    lower_bound_margin,
    upper_constant,
)

D9 = build_domain(Shape.square(), 1 / 9)  # 8 x 8 interior nodes
G9 = build_green(D9)
D16 = build_domain(Shape.square(), 1 / 16)
G16 = build_green(D16)


def _instance(d, seed):
    r = np.random.default_rng(seed)
    mu = measure_from_density(d, r.random(d.n_interior)) + atom_measure(d, [(int(r.integers(d.n_interior)), 0.02)])
    nu = measure_from_density(d, 0.5 * r.random(d.n_interior) * (r.random(d.n_interior) < 0.5))
    f = BoundaryData(d, r.random(d.n_boundary))
    return mu, nu, f


def test_config_validation():
    for bad in (dict(q=0.0), dict(q=1.0), dict(q=0.5, tol=0.0), dict(q=0.5, max_iter=0), dict(q=0.5, direction="sideways")):
        with pytest.raises(ValueError):
            SolverConfig(**bad)


def test_upper_constant():
    assert upper_constant(0.5, 0.1, 0.1, 0.1) == 1.0
    assert upper_constant(0.5, 1.0, 1.0, 1.0) == pytest.approx(9.0)


def test_apply_T_linear_cases():
    d, G = D9, G9
    nu = lebesgue(d)
    f = BoundaryData.constant(d, 2.0)
    u = np.random.default_rng(0).random(d.n_interior)
    t = apply_T(G, zero_measure(d), nu, f, u, 0.5)
    np.testing.assert_allclose(t.interior, green_potential(G, nu).interior + 2.0, rtol=1e-13)
    np.testing.assert_array_equal(t.boundary, f.values)
    t0 = apply_T(G, lebesgue(d), zero_measure(d), f, np.zeros(d.n_interior), 0.5)
    np.testing.assert_allclose(t0.interior, 2.0, rtol=1e-13)
    with pytest.raises(ValueError):
        apply_T(G, nu, nu, f, -u, 0.5)


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.3, 0.5, 0.8]))
def test_apply_T_is_monotone(seed, q):
    r = np.random.default_rng(seed)
    mu, nu, f = _instance(D9, seed)
    u = r.random(D9.n_interior)
    v = u + r.random(D9.n_interior) * (r.random(D9.n_interior) < 0.5)
    tu = apply_T(G9, mu, nu, f, u, q).interior
    tv = apply_T(G9, mu, nu, f, v, q).interior
    assert np.all(tv - tu >= -1e-14 * np.abs(tv).max())


def test_trivial_solve():
    d, G = D16, G16
    rep = picard_solve(G, zero_measure(d), zero_measure(d), BoundaryData.constant(d, 1.0), SolverConfig(0.5))
    assert rep.iterations == 1
    assert rep.residual == 0.0
    np.testing.assert_allclose(rep.u.interior, 1.0, rtol=1e-14)
    assert "linear: mu = 0" in rep.flags


def test_degenerate_data_refused():
    d, G = D16, G16
    with pytest.raises(DegenerateDataError):
        picard_solve(G, zero_measure(d), zero_measure(d), BoundaryData.constant(d, 0.0), SolverConfig(0.5))


def test_poisson_on_disk_converges():
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        d = build_domain(Shape.disk(), h)
        rep = picard_solve(build_green(d), zero_measure(d), lebesgue(d), BoundaryData.constant(d, 0.0), SolverConfig(0.5))
        errs.append(np.abs(rep.u.interior - (1 - (d.interior**2).sum(1)) / 4).max())
    assert errs[0] > errs[1] > errs[2]


def test_below_iterates_increase_and_stop():
    mu, nu, f = _instance(D16, 3)
    rep = picard_solve(G16, mu, nu, f, SolverConfig(0.5))
    assert rep.converged and rep.monotonicity_violations == 0 and rep.bound_violations == 0
    assert rep.residual <= 1e-10 * max(1.0, rep.u.sup_norm)
    res = [t[1] for t in rep.trace]
    assert res[-1] == rep.residual
    up = picard_solve(G16, mu, nu, f, SolverConfig(0.5, direction="above"))
    assert up.monotonicity_violations == 0
    assert np.all(rep.u.interior <= up.u.interior + 1e-10 * up.u.sup_norm)


def test_iteration_cap():
    mu, nu, f = _instance(D16, 4)
    with pytest.raises(NonConvergenceError) as exc:
        picard_solve(G16, mu, nu, f, SolverConfig(0.5, max_iter=1))
    assert exc.value.residual > 0


def test_estimates_square_lebesgue():
    d, G = D16, G16
    mu, nu, f = lebesgue(d), zero_measure(d), BoundaryData.constant(d, 1.0)
    rep = picard_solve(G, mu, nu, f, SolverConfig(0.5))
    m = verify_estimates(rep, G, mu, nu, f, 0.5)
    assert all(x.value >= 0 for x in m.values()), m
    assert rep.c1 == 0.25


def test_estimates_collapse_when_mu_zero():
    d, G = D16, G16
    mu, nu, f = zero_measure(d), lebesgue(d), BoundaryData.constant(d, 0.5)
    rep = picard_solve(G, mu, nu, f, SolverConfig(0.5))
    m = verify_estimates(rep, G, mu, nu, f, 0.5)
    assert abs(m["lower"].value) <= 1e-15 and abs(m["upper"].value) <= 1e-15


def test_manufactured_solution_first_levels():
    errs = []
    for h in (1 / 8, 1 / 16):
        d = build_domain(Shape.disk(), h)
        r2 = (d.interior**2).sum(1)
        ustar = 1 + (1 - r2) / 4
        nu = measure_from_density(d, 1 - 0.5 * np.sqrt(ustar))
        rep = picard_solve(build_green(d), measure_from_density(d, 0.5), nu, BoundaryData.constant(d, 1.0), SolverConfig(0.5))
        errs.append(np.abs(rep.u.interior - ustar).max())
    assert errs[0] / errs[1] >= 3


@pytest.mark.parametrize("seed", range(4))
def test_newton_matches_picard(seed):
    mu, nu, f = _instance(D9, seed)
    for direction in ("below", "above"):
        rep = picard_solve(G9, mu, nu, f, SolverConfig(0.5, direction=direction))
        # Newton starts from the first Picard iterate of the same direction
        u0 = rep.c1 * green_potential(G9, mu).interior ** 2 if direction == "below" else np.full(D9.n_interior, rep.c2)
        un = newton_oracle(G9, mu, nu, f, 0.5, apply_T(G9, mu, nu, f, u0, 0.5))
        assert np.abs(un.interior - rep.u.interior).max() <= 1e-8


def test_newton_linear_case_one_step():
    d, G = D9, G9
    nu = lebesgue(d)
    u = newton_oracle(G, zero_measure(d), nu, BoundaryData.constant(d, 0.0), 0.5, np.ones(d.n_interior))
    np.testing.assert_allclose(u.interior, green_potential(G, nu).interior, rtol=1e-12)


def test_newton_from_small_start_without_data():
    # f = 0, nu = 0: u^(q-1) is large near zero, damping must cope
    d, G = D9, G9
    mu = lebesgue(d)
    z = zero_measure(d)
    f = BoundaryData.constant(d, 0.0)
    rep = picard_solve(G, mu, z, f, SolverConfig(0.5))
    u1 = apply_T(G, mu, z, f, 0.25 * green_potential(G, mu).interior ** 2, 0.5)
    un = newton_oracle(G, mu, z, f, 0.5, u1)
    assert np.abs(un.interior - rep.u.interior).max() <= 1e-8


def test_uniqueness_linear_gap_zero():
    d, G = D9, G9
    rep = uniqueness_experiment(G, zero_measure(d), lebesgue(d), BoundaryData.constant(d, 1.0), 0.5)
    assert rep.gap == 0.0 and rep.unique


def test_uniqueness_square_lebesgue():
    d, G = D16, G16
    rep = uniqueness_experiment(G, lebesgue(d), zero_measure(d), BoundaryData.constant(d, 1.0), 0.5)
    assert rep.unique and rep.gap <= 1e-6 * rep.below.u.sup_norm
    assert rep.minimality.passed
    assert set(rep.norms) == {"0.5"}
    assert "surrogate" in rep.note


def test_uniqueness_records_q_plus_one_norm_without_boundary_data():
    d, G = D9, G9
    rep = uniqueness_experiment(G, lebesgue(d), zero_measure(d), BoundaryData.constant(d, 0.0), 0.5)
    assert set(rep.norms) == {"0.5", "1.5"}


@pytest.mark.parametrize("seed", range(3))
def test_fixed_point_satisfies_lower_bound(seed):
    mu, nu, f = _instance(D16, seed)
    rep = picard_solve(G16, mu, nu, f, SolverConfig(0.3))
    m = lower_bound_margin(G16, mu, rep)
    assert m.value >= -1e-10 * rep.u.sup_norm


def test_report_serializes():
    mu, nu, f = _instance(D9, 0)
    d = picard_solve(G9, mu, nu, f, SolverConfig(0.5)).to_dict()
    assert {"iterations", "residual", "c1", "c2", "margins"} <= set(d)
    assert all(v["passed"] for v in d["margins"].values())
