import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sublinear_potential import (
    Shape,
    atom_measure,
    build_domain,
    build_green,
    check_iterated_inequality,
    check_lower_bound,
    dist_alpha_measure,
    finite_energy_threshold_sweep,
    green_potential,
    kato_modulus,
    kato_threshold_sweep,
    lebesgue,
    lgamma_norm,
    measure_from_density,
    picard_solve,
    zero_measure,
)
from sublinear_potential.green import BoundaryData, GridFunction
from sublinear_potential.potential import (
    SupersolutionError,
    classify_refinement,
    classify_slope,
    energy_exponent,
    energy_threshold,
    fit_green_beta,
    fit_loglog_slope,
    implied_threshold,
    kato_condition_at_infinity,
    kato_moduli,
    lower_constant,
    neighbor_oscillation,
)
from sublinear_potential.solver import SolverConfig

D16 = build_domain(Shape.square(), 1 / 17)
G16 = build_green(D16)


def _random_measure(d, r):
    om = measure_from_density(d, r.random(d.n_interior) * (r.random(d.n_interior) < 0.6))
    idx = r.integers(0, d.n_interior, 2)
    return om + atom_measure(d, zip(idx, 0.05 * r.random(2)))


# ---- Kato moduli


def test_zero_measure_modulus(square8):
    d, G = square8
    rep = kato_modulus(G, zero_measure(d))
    assert not np.any(rep.modulus)
    assert not rep.slope_defined
    assert rep.to_dict()["slope"] is None


def test_lebesgue_square_invariants(square8):
    d, G = square8
    rep = kato_modulus(G, lebesgue(d), centered=True)
    assert rep.monotone()
    assert rep.radii[-1] == pytest.approx(d.diameter)
    # equal up to summation order (dense row sums against one solve)
    assert rep.modulus[-1] == pytest.approx(green_potential(G, lebesgue(d)).interior.max(), rel=1e-14)
    assert rep.covering_margin().passed
    assert not rep.lower_bound


def test_lebesgue_square_slope_matches_log_corrected_scaling():
    # in 2D the Newtonian integral over B(x, r) is r^2 (log(1/r)/2 + 1/4),
    # whose local slope over the fitting window is well below 2
    d = build_domain(Shape.square(), 1 / 64)
    rep = kato_modulus(build_green(d), lebesgue(d))
    lo, hi = rep.slope_window
    r = rep.radii[(rep.radii >= lo) & (rep.radii <= hi)]
    oracle = fit_loglog_slope(r, r**2 * (np.log(1 / r) / 2 + 0.25))
    assert rep.slope == pytest.approx(oracle, abs=0.3)
    assert 1.3 < rep.slope < 2.0


def test_lebesgue_cube_small_radius_slope_is_two():
    d = build_domain(Shape.cube(), 1 / 16)
    rep = kato_moduli(build_green(d), [lebesgue(d)], radii=[2 * d.h, 4 * d.h])[0]
    assert fit_loglog_slope(rep.radii, rep.modulus) == pytest.approx(2.0, abs=0.3)


def test_alpha_three_halves_square_slope():
    d = build_domain(Shape.square(), 1 / 64)
    rep = kato_modulus(build_green(d), dist_alpha_measure(d, 1.5))
    assert rep.slope == pytest.approx(0.5, abs=0.3)


def test_streamed_rows_match_dense():
    d = build_domain(Shape.square(), 1 / 16)
    om = dist_alpha_measure(d, 1.0)
    dense = kato_modulus(build_green(d), om)
    streamed = kato_modulus(build_green(d, dense_cap=0), om)
    np.testing.assert_allclose(streamed.modulus, dense.modulus, rtol=1e-12)
    assert not streamed.lower_bound


def test_sampled_centers_are_a_lower_bound(square8):
    d, G = square8
    full = kato_modulus(G, lebesgue(d))
    part = kato_modulus(G, lebesgue(d), centers=[0, 5])
    assert part.lower_bound
    assert np.all(part.modulus <= full.modulus + 1e-15)


def test_disk_kato_classes(disk64_kato):
    s = {a: r.slope for a, r in disk64_kato.items()}
    assert classify_slope(s[0.5]) == "pass" and s[0.5] == pytest.approx(1.5, abs=0.3)
    # logarithmic correction at alpha = 1
    assert classify_slope(s[1.0]) == "pass" and 0.7 <= s[1.0] <= 1.0
    assert s[1.0] > 0.5
    assert classify_slope(s[1.95]) == "borderline"
    assert s[0.5] > s[1.0] > s[1.5] > s[1.95] > 0
    assert all(r.monotone() for r in disk64_kato.values())


def test_classify_slope():
    assert classify_slope(math.nan) == "undefined"
    assert classify_slope(1.0) == "pass"
    assert classify_slope(0.1) == "borderline"
    assert classify_slope(-0.01) == "fail"


def test_threshold_sweep_small():
    rows = kato_threshold_sweep(["disk", "lshape"], [0.5, 1.9], 1 / 16)
    assert [(r["shape"], r["alpha"]) for r in rows] == [("disk", 0.5), ("disk", 1.9), ("lshape", 0.5), ("lshape", 1.9)]
    disk = rows[0]
    assert disk["beta"] == 1.0 and disk["predicted_kato"]
    assert disk["classification"] == "pass" and disk["consistent"]
    assert all(r["beta"] <= 1.0 for r in rows)


def test_green_beta():
    for shape in (Shape.square(), Shape.disk()):
        G = build_green(build_domain(shape, 1 / 32))
        assert fit_green_beta(G) == pytest.approx(1.0, abs=0.1)
    # re-entrant corner: reported, below 1 (the corner exponent is 2/3)
    beta = fit_green_beta(build_green(build_domain(Shape.lshape(), 1 / 32)))
    assert 0.3 < beta < 0.9


def test_condition_at_infinity_is_vacuous(square8):
    assert kato_condition_at_infinity(square8[0])


# ---- exact inequalities


def test_iterated_inequality_s_one_is_equality():
    om = _random_measure(D16, np.random.default_rng(1))
    m = check_iterated_inequality(G16, om, 1.0)
    assert m.value == 0.0 and m.passed


def test_iterated_inequality_zero_measure():
    m = check_iterated_inequality(G16, zero_measure(D16), 2.0)
    assert m.value == 0.0 and m.passed


def test_iterated_inequality_rejects_small_s():
    with pytest.raises(ValueError):
        check_iterated_inequality(G16, lebesgue(D16), 0.5)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1.5, 2.0, 3.0]))
def test_iterated_inequality_random(seed, s):
    om = _random_measure(D16, np.random.default_rng(seed))
    m = check_iterated_inequality(G16, om, s)
    assert m.value >= -1e-12 * m.scale


@pytest.mark.parametrize("shape,h,stencil", [(Shape.disk(), 1 / 8, "symmetric"), (Shape.lshape(), 1 / 8, "symmetric"), (Shape.disk(), 1 / 8, "shortley-weller")])
def test_iterated_inequality_other_kernels(shape, h, stencil):
    # holds for any M-matrix with nonnegative row sums, symmetric or not
    d = build_domain(shape, h)
    G = build_green(d, stencil=stencil)
    r = np.random.default_rng(7)
    for s in (1.5, 2.0, 3.0):
        m = check_iterated_inequality(G, _random_measure(d, r), s)
        assert m.passed, m


def test_lower_constant():
    assert lower_constant(0.5) == 0.25


def test_lower_bound_zero_measure():
    u = np.full(D16.n_interior, 0.3)
    assert check_lower_bound(G16, zero_measure(D16), u, 0.5).value == pytest.approx(0.3)


def test_lower_bound_on_picard_solution():
    mu = lebesgue(D16)
    rep = picard_solve(G16, mu, zero_measure(D16), BoundaryData.constant(D16, 0.0), SolverConfig(0.5))
    m = check_lower_bound(G16, mu, rep.u, 0.5)
    assert m.value >= 0


def test_lower_bound_rejects_non_supersolution():
    mu = lebesgue(D16)
    with pytest.raises(SupersolutionError):
        check_lower_bound(G16, mu, np.full(D16.n_interior, 1e-6), 0.5)


# ---- norms and thresholds


def test_lgamma_norm_basics():
    om = lebesgue(D16)
    assert lgamma_norm(np.ones(D16.n_interior), om, 2.0) == pytest.approx(om.total_mass**0.5)
    assert lgamma_norm(np.zeros(D16.n_interior), om, 2.0) == 0.0
    with pytest.raises(ValueError):
        lgamma_norm(np.ones(D16.n_interior), om, 0.0)


def test_energy_exponents_and_thresholds():
    assert energy_threshold(0.5, 1.5) == pytest.approx(1.8)
    assert energy_exponent(0.5, 1.5, "proof") == pytest.approx(4.0)
    assert implied_threshold(4.0) == pytest.approx(1.8)
    p = energy_exponent(0.5, 1.5, "statement")
    assert p == pytest.approx(4 / 3)
    assert implied_threshold(p) != pytest.approx(1.8)
    with pytest.raises(ValueError):
        energy_exponent(0.5, 1.5, "other")


@given(st.floats(0.05, 0.95), st.floats(0.1, 5))
def test_proof_mode_exponent_reproduces_threshold(q, gamma):
    assert implied_threshold(energy_exponent(q, gamma)) == pytest.approx(energy_threshold(q, gamma), rel=1e-12)


def test_classify_refinement():
    assert classify_refinement([1.0, 1.1, 1.15]) == "bounded"
    assert classify_refinement([1.0, 2.0, 4.0]) == "diverging"
    assert classify_refinement([1.0, 1.2, 1.44]) == "inconclusive"
    assert classify_refinement([1.0, 2.0]) == "inconclusive"


def test_finite_energy_threshold_square():
    table = finite_energy_threshold_sweep("square", 0.5, 1.5, [1.0, 1.9], h0=1 / 32, levels=3)
    assert table.alpha_star == pytest.approx(1.8)
    assert table.exponent == pytest.approx(4.0)
    cls = {r["alpha"]: r["classification"] for r in table.rows}
    assert cls == {1.0: "bounded", 1.9: "diverging"}
    assert all(r["classification"] == r["predicted"] for r in table.rows)


def test_lgamma_of_potential_is_stable():
    vals = []
    for n in (16, 32, 64):
        d = build_domain(Shape.square(), 1 / n)
        om = dist_alpha_measure(d, 1.0)
        vals.append(lgamma_norm(green_potential(build_green(d), om), om, 4.0))
    assert abs(vals[2] / vals[1] - 1) < abs(vals[1] / vals[0] - 1) < 0.15


# ---- continuity surrogate


def test_neighbor_oscillation_decays_for_smooth_density():
    osc = []
    for n in (8, 16, 32):
        d = build_domain(Shape.square(), 1 / n)
        osc.append(neighbor_oscillation(green_potential(build_green(d), lebesgue(d))))
    assert osc[0] / osc[1] >= 1.4 and osc[1] / osc[2] >= 1.4


def test_neighbor_oscillation_persists_for_atom():
    osc = []
    for n in (8, 16, 32):
        d = build_domain(Shape.square(), 1 / n)
        om = atom_measure(d, [(d.node_index([0.5, 0.5]), 1.0)])
        osc.append(neighbor_oscillation(green_potential(build_green(d), om)))
    assert osc[0] / osc[1] < 1.4 and osc[1] / osc[2] < 1.4
