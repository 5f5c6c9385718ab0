import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from mflattice.errors import ConfigurationError, ContractViolation, SingularityError, UnsupportedConfiguration
from mflattice.lattice import (LatticeConfig, box_integral, cell_weight_matrix, choose_gamma, choose_p,
                               conjugate_exponent, kernel_constants, lattice_sum, lattice_sum_bound_check,
                               minimal_image, node_cells, p_nearest, positions, power_law, weight_eval)


def test_positions_one_dimension():
    idx, x = positions(LatticeConfig(1, 1))
    assert idx.ravel().tolist() == [-1, 0, 1]
    assert x.ravel().tolist() == [-0.5, 0.0, 0.5]


def test_positions_two_dimensions():
    idx, x = positions(LatticeConfig(2, 1))
    assert len(x) == 9
    k = int(np.nonzero((idx == [1, -1]).all(axis=1))[0][0])
    assert x[k].tolist() == [0.5, -0.5]


def test_positions_half_width_two():
    _, x = positions(LatticeConfig(1, 2))
    assert x.ravel().tolist() == [-0.5, -0.25, 0.0, 0.25, 0.5]


def test_lexicographic_order():
    idx, _ = positions(LatticeConfig(2, 2))
    assert [tuple(r) for r in idx] == sorted(tuple(r) for r in idx)


def test_periodic_lattice_identifies_faces():
    cfg = LatticeConfig(1, 4, "periodic")
    assert cfg.site_count == 8
    _, x = positions(cfg)
    assert x.min() == -0.5 and x.max() == 0.375


def test_site_count_overflow():
    with pytest.raises(ConfigurationError):
        LatticeConfig(3, 10**4)


def test_pnn_inside_and_outside():
    k = p_nearest(0.25)
    assert weight_eval(k, [0.1], [0.0]) == 2.0
    assert weight_eval(k, [0.3], [0.0]) == 0.0


def test_power_law_direct_value():
    assert weight_eval(power_law(0.5), [0.25], [0.0]) == pytest.approx(2.0)


def test_power_law_singularity():
    with pytest.raises(SingularityError):
        weight_eval(power_law(0.5), [0.1], [0.1])


def test_periodic_minimal_image():
    # 0.45 and -0.45 are 0.1 apart on the torus
    assert weight_eval(power_law(0.5), [0.45], [-0.45], "periodic") == pytest.approx(0.1**-0.5)
    assert minimal_image([0.6, -0.6, 0.2]).tolist() == pytest.approx([-0.4, 0.4, 0.2])


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_weights_symmetric(x, y):
    if x == y:
        return
    for k in (p_nearest(0.3), power_law(0.7)):
        assert weight_eval(k, [x], [y]) == weight_eval(k, [y], [x])


@pytest.mark.parametrize("alpha,dim,expected", [(0.2, 1, 0.49), (0.75, 1, 0.5), (0.0, 2, 0.99)])
def test_choose_gamma(alpha, dim, expected):
    assert choose_gamma(alpha, dim, 0.01) == pytest.approx(expected)


def test_choose_gamma_domain():
    with pytest.raises(ContractViolation):
        choose_gamma(1.0, 1)


@pytest.mark.parametrize("alpha,expected", [(0.3, 2), (0.75, 5), (0.5, 3)])
def test_choose_p_strict_ceiling(alpha, expected):
    assert choose_p(alpha, 1) == expected


@given(st.integers(1, 4), st.floats(0, 0.999))
def test_conjugate_exponent_keeps_q_alpha_below_d(dim, frac):
    alpha = frac * dim
    q = conjugate_exponent(choose_p(alpha, dim))
    assert q * alpha < dim


def test_pure_power_law_i1_is_one():
    assert kernel_constants(power_law(0.5)).i1 == pytest.approx(1.0, abs=1e-6)


def test_pnn_s_psi_at_most_one():
    assert kernel_constants(p_nearest(0.5)).s_psi <= 1.0 + 1e-12


def test_power_law_s_psi_closed_form():
    # the sup over x is attained at the centre: int |y|^{-1/2} over [-1/2, 1/2] = 2 sqrt 2
    assert kernel_constants(power_law(0.5)).s_psi == pytest.approx(2 * math.sqrt(2), rel=0.01)


@pytest.mark.parametrize("alpha", [0.3, 0.9])
def test_box_integral_1d_against_quad(alpha):
    lo, hi = -0.2, 0.35
    exact = box_integral(power_law(alpha), np.array([lo]), np.array([hi]))
    num = integrate.quad(lambda u: abs(u) ** -alpha, lo, hi, points=[0.0])[0]
    assert exact == pytest.approx(num, rel=1e-8)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_box_integral_2d_against_nested_quad(alpha):
    lo, hi = np.array([-0.1, 0.05]), np.array([0.3, 0.2])
    exact = box_integral(power_law(alpha, 2), lo, hi)
    num = integrate.dblquad(lambda y, x: (x * x + y * y) ** (-alpha / 2), lo[0], hi[0], lo[1], hi[1])[0]
    assert exact == pytest.approx(num, rel=1e-6)


def test_box_integral_3d_power_law_unsupported():
    with pytest.raises(UnsupportedConfiguration):
        box_integral(power_law(0.5, 3), np.zeros(3), np.ones(3))


@pytest.mark.parametrize("boundary", ["free", "periodic"])
def test_cell_weights_sum_to_the_row_integral(boundary):
    k = power_law(0.6)
    nodes, lo, hi, w = node_cells(8, 1, boundary)
    assert w.sum() == pytest.approx(1.0)
    W = cell_weight_matrix(k, nodes, nodes, lo, hi, boundary)
    x = 0.1875
    row = cell_weight_matrix(k, [[x]], nodes, lo, hi, boundary)[0].sum()
    if boundary == "periodic":
        expected = 2 * 0.5 ** 0.4 / 0.4
    else:
        expected = ((0.5 + x) ** 0.4 + (0.5 - x) ** 0.4) / 0.4
    assert row == pytest.approx(expected)
    assert np.all(W >= 0)


def test_lattice_sum_hand_value():
    value = lattice_sum(0.5, [0.0], LatticeConfig(1, 4), 4)
    assert value == pytest.approx(2 * math.sqrt(8) * (1 + 1 / math.sqrt(2) + 1 / math.sqrt(3) + 0.5))
    assert value == pytest.approx(15.7513, abs=1e-4)


def test_lattice_sum_two_terms():
    assert lattice_sum(0.5, [0.0], LatticeConfig(1, 1), 1) == pytest.approx(2 * 0.5**-0.5)


def test_lattice_sum_empty():
    assert lattice_sum(1.0, [0.0], LatticeConfig(1, 0), 1) == 0.0


def test_lattice_sum_monotone_and_linear_growth():
    sums = [lattice_sum(0.5, [0.0], LatticeConfig(1, n), 1) for n in (16, 32, 64, 128, 256)]
    assert all(b > a for a, b in zip(sums, sums[1:]))
    ratios = np.array(sums) / np.array([16, 32, 64, 128, 256])
    assert ratios.max() / ratios.min() < 1.5


@pytest.mark.parametrize("beta", [0.5, 1.0])
def test_scaling_check_on_lattice(beta):
    rep = lattice_sum_bound_check(beta, 1, [2**k for k in range(4, 13)], 1, [0.0])
    assert rep.passed


def test_scaling_check_near_singular_anchor():
    rep = lattice_sum_bound_check(2.0, 1, [2**k for k in range(4, 13)], 3, [1 / 6])
    assert rep.regime == "super" and rep.passed
