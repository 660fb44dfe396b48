import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from sublinear_potential import (
    Shape,
    atom_measure,
    build_domain,
    dist_alpha_measure,
    growth_constant,
    lebesgue,
    measure_from_density,
    zero_measure,
)
from sublinear_potential.measure import GridMeasure, ball_masses, default_radii
from sublinear_potential.potential import fit_loglog_slope

SQ4 = build_domain(Shape.square(), 1 / 4)
SQ8 = build_domain(Shape.square(), 1 / 8)


def test_zero_density_has_zero_mass():
    assert measure_from_density(SQ4, 0.0).total_mass == 0.0


def test_unit_density_square_quarter():
    assert lebesgue(SQ4).total_mass == pytest.approx(9 / 16, abs=1e-15)


def test_unit_density_mass_converges():
    errs = [1 - lebesgue(build_domain(Shape.square(), 1 / n)).total_mass for n in (4, 8, 16, 32, 64)]
    assert np.all(np.diff(errs) < 0)
    assert errs[-1] < 0.04


@pytest.mark.parametrize("bad", [-1.0, np.nan, np.inf])
def test_bad_density_rejected(bad):
    with pytest.raises(ValueError):
        measure_from_density(SQ4, bad)


def test_callable_density():
    m = measure_from_density(SQ8, lambda p: p[:, 0] + p[:, 1])
    np.testing.assert_allclose(m.masses, SQ8.interior.sum(axis=1) / 64)


def test_alpha_zero_is_lebesgue():
    np.testing.assert_array_equal(dist_alpha_measure(SQ8, 0.0).masses, lebesgue(SQ8).masses)


def test_alpha_masses_on_lattice_shape_are_unclamped():
    m = dist_alpha_measure(SQ8, 1.5)
    np.testing.assert_allclose(m.masses, SQ8.delta ** -1.5 / 64)


def test_alpha_half_total_mass_converges_to_quadrature():
    # four faces, each owning the triangle where it is the nearest one:
    # 4 * int_0^(1/2) x^(-1/2) (1 - 2x) dx
    oracle = 4 * integrate.quad(lambda x: 1 - 2 * x, 0, 0.5, weight="alg", wvar=(-0.5, 0))[0]
    assert oracle == pytest.approx(8 * np.sqrt(2) / 3, rel=1e-12)
    hs = [1 / 16, 1 / 32, 1 / 64, 1 / 128]
    masses = [dist_alpha_measure(build_domain(Shape.square(), h), 0.5).total_mass for h in hs]
    assert np.all(np.diff(masses) > 0)
    errs = oracle - np.array(masses)
    assert np.all(errs > 0) and np.all(np.diff(errs) < 0)
    # the lumped sum misses an O(h^(1/2)) boundary layer
    assert fit_loglog_slope(hs, errs) == pytest.approx(0.5, abs=0.1)


def test_alpha_three_halves_mass_blows_up_like_h_to_minus_half():
    # M(h) = A h^(-1/2) + B + o(1); successive differences remove B
    hs = [1 / 16, 1 / 32, 1 / 64, 1 / 128]
    masses = [dist_alpha_measure(build_domain(Shape.square(), h), 1.5).total_mass for h in hs]
    diffs = np.diff(masses)
    assert np.all(diffs > 0)
    assert fit_loglog_slope(hs[1:], diffs) == pytest.approx(-0.5, abs=0.05)


def test_alpha_two_warns():
    with pytest.warns(UserWarning):
        dist_alpha_measure(SQ4, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        dist_alpha_measure(SQ4, 1.9)


def test_curved_boundary_floor():
    d = build_domain(Shape.disk(), 1 / 16)
    m = dist_alpha_measure(d, 1.5)
    assert m.masses.max() <= (0.5 * d.h) ** -1.5 * d.h**2 * (1 + 1e-12)
    raw = dist_alpha_measure(d, 1.5, delta_floor=None)
    np.testing.assert_allclose(raw.masses, d.delta ** -1.5 * d.h**2)


def test_atoms_and_validation():
    a = atom_measure(SQ8, [(0, 1.0), (0, 0.5), (3, 2.0)])
    assert a.node_masses[0] == 1.5 and a.node_masses[3] == 2.0
    assert a.total_mass == 3.5 and a.has_atoms
    with pytest.raises(ValueError):
        atom_measure(SQ8, [(SQ8.n_interior, 1.0)])
    with pytest.raises(ValueError):
        atom_measure(SQ8, [(0, -1.0)])
    with pytest.raises(ValueError):
        GridMeasure(SQ8, np.ones(3))


def test_measure_algebra():
    a = lebesgue(SQ8) + atom_measure(SQ8, [(5, 1.0)])
    b = 2.0 * a
    assert b.total_mass == pytest.approx(2 * a.total_mass)
    psi = np.linspace(0, 1, SQ8.n_interior)
    w = a.weighted(psi)
    np.testing.assert_allclose(w.node_masses, psi * a.node_masses)
    r = a.restricted(np.arange(SQ8.n_interior) < 5)
    assert r.total_mass == pytest.approx(5 / 64)


@given(
    arrays(np.float64, SQ8.n_interior, elements=st.floats(0, 10)),
    arrays(np.float64, SQ8.n_interior, elements=st.floats(0, 10)),
)
def test_density_linearity(a1, a2):
    m = measure_from_density(SQ8, a1 + a2).masses
    np.testing.assert_array_equal(m, (a1 + a2) * SQ8.cell_volume)
    np.testing.assert_allclose(m, measure_from_density(SQ8, a1).masses + measure_from_density(SQ8, a2).masses, rtol=1e-15, atol=0)


@given(arrays(np.float64, SQ8.n_interior, elements=st.floats(0, 10)))
def test_total_mass_is_fixed_order_sum(a):
    m = measure_from_density(SQ8, a)
    assert m.total_mass == float(np.sum(m.node_masses))


def test_growth_constant_zero():
    assert growth_constant(SQ8, zero_measure(SQ8), 1.0) == 0.0


def test_growth_constant_lebesgue_bound():
    d = build_domain(Shape.square(), 1 / 16)
    c = growth_constant(d, lebesgue(d), 1.0)
    assert 0 < c <= np.pi * d.diameter


def test_growth_constant_half_stabilizes():
    radii = np.array([1 / 8, 1 / 4, 1 / 2])
    vals = []
    for n in (16, 32, 64):
        d = build_domain(Shape.square(), 1 / n)
        vals.append(growth_constant(d, dist_alpha_measure(d, 0.5), 0.5, radii=radii))
    # oracle: brute-force open-ball sums over all center/node pairs
    fine = build_domain(Shape.square(), 1 / 64)
    m = fine.delta**-0.5 * fine.h**2
    dist = np.linalg.norm(fine.interior[:, None, :] - fine.interior[None, :, :], axis=2)
    brute = max(float((m[None, :] * (dist < r)).sum(axis=1).max()) / r**0.5 for r in radii)
    assert vals[-1] == pytest.approx(brute, rel=1e-12)
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    assert abs(vals[2] / vals[1] - 1) < 0.05


@given(st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_growth_constant_monotone_in_samples(k, seed):
    r = np.random.default_rng(seed)
    om = measure_from_density(SQ8, r.random(SQ8.n_interior))
    radii = default_radii(SQ8)
    idx = r.permutation(SQ8.n_interior)
    small = growth_constant(SQ8, om, 0.5, SQ8.interior[idx[:k]], radii)
    large = growth_constant(SQ8, om, 0.5, SQ8.interior[idx[: k + 5]], radii)
    assert large >= small


def test_ball_masses_open_balls():
    om = atom_measure(SQ4, [(4, 1.0)])
    c = SQ4.interior[4] + np.array([0.25, 0.0])
    assert ball_masses(SQ4, om, c, [0.25])[0, 0] == 0.0
    assert ball_masses(SQ4, om, c, [0.2500001])[0, 0] == 1.0
