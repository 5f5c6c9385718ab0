import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mflattice.errors import ContractViolation
from mflattice.lattice import LatticeConfig, p_nearest, positions
from mflattice.meanfield import GridSpec, decoupled_law
from mflattice.metrics import (EmpiricalMeasure, GFeature, LinearCombination, TestFunction,
                               anchor_grid, anchors_up_to, build_dictionary, d_infinity, distance_from_differences,
                               empirical_eval, empirical_from_record, estimate_distance, indicator_mass,
                               riemann_discretization_check, riemann_sum, seminorm, seminorm_terms)
from mflattice.models import custom_model, kuramoto, point_mass
from mflattice.rng import generator
from mflattice.simulate import SimConfig, simulate_replicas

ONE = GFeature("constant", {"value": 1.0})
SINE = GFeature("sine", {"k": np.array([1.0]), "phase": 0.0})


def _measure(N, seed=0, dim=1):
    _, x = positions(LatticeConfig(dim, N))
    rng = generator(seed, "test")
    return EmpiricalMeasure(rng.normal(size=(len(x), 1)), rng.normal(size=(len(x), 1)), x)


def test_three_site_pnn_hand_value():
    f = TestFunction("pnn", [0.0], ONE, R=0.25)
    assert empirical_eval(f, _measure(1)) == pytest.approx(2 / 3)


def test_constant_over_full_box():
    f = TestFunction("pnn", [0.0], GFeature("constant", {"value": 3.0 * 2.0}), R=1.0)
    assert empirical_eval(f, _measure(5)) == pytest.approx(3.0)


def test_zero_feature_power_law():
    f = TestFunction("powerlaw", [0.25], GFeature("constant", {"value": 0.0}), alpha=0.5)
    assert empirical_eval(f, _measure(4)) == 0.0


def test_coincident_atom_dropped_and_counted():
    f = TestFunction("powerlaw", [0.0], ONE, alpha=0.5)
    em = _measure(2)
    value, excluded = empirical_eval(f, em, return_excluded=True)
    assert excluded == 1
    assert value == pytest.approx((2 * 0.25**-0.5 + 2 * 0.5**-0.5) / 5)


def test_no_exclusion_without_singularity():
    f = TestFunction("powerlaw", [0.0], ONE, alpha=0.0)
    assert empirical_eval(f, _measure(2), return_excluded=True) == (1.0, 0)


@settings(max_examples=25)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 1000))
def test_empirical_eval_linear(a, b, seed):
    em = _measure(6, seed)
    f = TestFunction("powerlaw", [0.1], SINE, alpha=0.4, bump_width=0.5)
    g = TestFunction("pnn", [-0.2], GFeature("clipped_linear", {"u_theta": np.array([0.6]),
                                                               "u_omega": np.array([0.8]), "offset": 0.1}), R=0.3)
    combo = empirical_eval(LinearCombination(((a, f), (b, g))), em)
    assert combo == pytest.approx(a * empirical_eval(f, em) + b * empirical_eval(g, em), abs=1e-12)


def test_empirical_from_record_needs_snapshot():
    recs = simulate_replicas(kuramoto(), LatticeConfig(1, 2), None, point_mass(0.0), point_mass(0.0),
                             SimConfig(0.1, 0.05), 1, sample_times=[0.0, 0.1])
    em = empirical_from_record(recs[0], 0.1)
    assert em.size == 5 and em.time == pytest.approx(0.1)
    with pytest.raises(ContractViolation):
        empirical_from_record(recs[0], 0.05)


def test_seminorm_of_sine_power_law():
    f = TestFunction("powerlaw", [0.0], SINE, alpha=0.0, gamma=0.0)
    terms = seminorm_terms(f, 4096)
    assert terms["lipschitz"] == pytest.approx(1.0, abs=0.02)
    assert terms["bounded"] == pytest.approx(1.0, abs=0.02)
    assert 1.9 <= seminorm(f, 4096) <= 2.2


def test_seminorm_of_zero_and_homogeneity():
    zero = TestFunction("powerlaw", [0.0], GFeature("constant", {"value": 0.0}), alpha=0.3)
    assert seminorm(zero) == 0.0
    f = TestFunction("powerlaw", [0.1], SINE, alpha=0.3, bump_width=0.25)
    assert seminorm(f.with_scale(2.5)) == pytest.approx(2.5 * seminorm(f))


def test_seminorm_probe_floor():
    with pytest.raises(ContractViolation):
        seminorm(TestFunction("pnn", [0.0], SINE, R=0.5), probe_resolution=32)


def test_anchor_sets():
    assert anchor_grid(2, 1).ravel().tolist() == [-0.5, -0.25, 0.0, 0.25, 0.5]
    union = anchors_up_to([1, 2, 4], 1)
    assert len(union) == 9
    assert np.array_equal(union[:3], anchor_grid(1, 1))


def test_dictionary_deterministic():
    a = build_dictionary("powerlaw", anchor_grid(1, 1), size=10, seed=3, alpha=0.5)
    b = build_dictionary("powerlaw", anchor_grid(1, 1), size=10, seed=3, alpha=0.5)
    assert len(a) == 30
    em = _measure(8)
    assert [empirical_eval(f, em) for f in a] == [empirical_eval(f, em) for f in b]


def test_single_member_dictionary():
    (f,) = build_dictionary("pnn", [[0.0]], size=1, R=0.5)
    assert f.feature.kind == "clipped_linear"
    assert seminorm(f, 4096, seed=99) <= 1.0


@pytest.mark.parametrize("family,kw", [("pnn", {"R": 0.25}), ("powerlaw", {"alpha": 0.25}),
                                        ("powerlaw", {"alpha": 0.75})])
def test_dictionary_members_normalised(family, kw):
    D = build_dictionary(family, anchor_grid(2, 1), size=20, seed=1, **kw)
    rng = generator(7, "probe")
    theta = rng.uniform(-4, 4, (10_000, 1))
    omega = rng.uniform(-4, 4, (10_000, 1))
    x = rng.uniform(-0.5, 0.5, (10_000, 1))
    for f in D:
        assert seminorm(f, 2048, seed=12345) <= 1.0 + 1e-6
        weight = np.linalg.norm(x - f.anchor, axis=-1) ** f.alpha if family == "powerlaw" else 1.0
        assert np.max(weight * np.abs(f(theta, omega, x))) <= 1.0 + 1e-6


def _replicas(N, count, seed, sigma=1.0):
    model = kuramoto(K=0.0, sigma=sigma)
    recs = simulate_replicas(model, LatticeConfig(1, N), None, point_mass(0.0), point_mass(0.0),
                             SimConfig(0.5, 0.01, seed=seed), count, sample_times=[0.5])
    return [empirical_from_record(r, 0.5) for r in recs]


def test_distance_needs_eight_replicas():
    D = build_dictionary("pnn", [[0.0]], size=2, R=1.0)
    ems = _replicas(2, 7, 0)
    with pytest.raises(ContractViolation):
        estimate_distance(ems, ems, 0.5, 2, D)


def test_distance_swap_symmetry_and_sign():
    D = build_dictionary("pnn", anchor_grid(2, 1), size=8, R=0.5)
    a, b = _replicas(4, 8, 1), _replicas(4, 8, 2)
    ab, ba = estimate_distance(a, b, 0.5, 2, D), estimate_distance(b, a, 0.5, 2, D)
    assert ab.value == pytest.approx(ba.value) and ab.value > 0 and ab.stderr >= 0
    assert estimate_distance(a, a, 0.5, 2, D).value == 0.0


def test_constant_members_vanish_against_reference():
    model = kuramoto(K=0.0, sigma=1.0)
    law, _ = decoupled_law(model, p_nearest(1.0), GridSpec(4, 1, 32, 11), SimConfig(0.5, 0.01), point_mass(0.0),
                           point_mass(0.0))
    const = [TestFunction("pnn", [0.0], ONE, R=1.0)]
    est = estimate_distance(_replicas(3, 8, 0), law, 0.5, 2, const)
    assert est.value == pytest.approx(0.0, abs=1e-12)


def test_deterministic_path_distance_vanishes():
    # no noise and no interaction: every atom follows theta(t) = omega0 t
    model = custom_model(lambda t, w: np.broadcast_to(w, t.shape).copy(),
                         lambda t, w, tb, wb: np.zeros(np.broadcast_shapes(t.shape, tb.shape)), 1, 1, 0.0, 0.5)
    law, _ = decoupled_law(model, p_nearest(1.0), GridSpec(16, 1, 1, 11), SimConfig(0.5, 0.01), point_mass(0.0),
                           point_mass(0.7))
    D = build_dictionary("pnn", [[0.0]], size=8, R=1.0)
    recs = simulate_replicas(model, LatticeConfig(1, 8), None, point_mass(0.0), point_mass(0.7),
                             SimConfig(0.5, 0.01), 8, sample_times=[0.5])
    est = estimate_distance([empirical_from_record(r, 0.5) for r in recs], law, 0.5, 2, D)
    assert est.value < 1e-12


def test_iid_sampling_floor_rate():
    model = kuramoto(K=0.0, sigma=1.0)
    law, _ = decoupled_law(model, p_nearest(1.0), GridSpec(2, 1, 8192, 11), SimConfig(0.5, 0.01),
                           point_mass(0.0), point_mass(0.0), seed=9)
    f = build_dictionary("pnn", [[0.0]], size=1, R=1.0)
    Ns = [8, 16, 32, 64, 128]
    values = [estimate_distance(_replicas(N, 48, 100 + N), law, 0.5, 2, f).value for N in Ns]
    slope = np.polyfit(np.log(Ns), np.log(values), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.15)


def test_distance_from_differences_jackknife():
    diffs = np.array([[0.1, -0.1] * 4, [0.0] * 8])
    est = distance_from_differences(diffs, 2)
    assert est.value == pytest.approx(0.1) and est.argmax == 0 and est.stderr == pytest.approx(0.0, abs=1e-12)


def test_d_infinity_weighted_sum():
    est = d_infinity({1: 0.5, 2: 1.2, 3: 0.25}, p=2, C=1.0, K_max=3)
    expected = 0.5 * math.exp(-1) * 0.5 + 0.25 * math.exp(-2) / 4 + 0.125 * math.exp(-3) / 9 * 0.25
    assert est.value == pytest.approx(expected)
    assert est.value == pytest.approx(0.1006, abs=5e-5)
    assert est.truncation_bound == pytest.approx(0.125)


def test_d_infinity_zero_and_clipped():
    assert d_infinity({1: 0.0, 2: 0.0}, 2).value == 0.0
    clipped = d_infinity({1: 5.0, 2: 7.0}, 2)
    assert clipped.value == pytest.approx(0.5 * math.exp(-1) + 0.25 * math.exp(-2) / 4)


def test_d_infinity_needs_all_levels():
    with pytest.raises(ContractViolation):
        d_infinity({1: 0.1, 3: 0.1}, 2)


@given(st.lists(st.floats(0, 3), min_size=4, max_size=4), st.integers(0, 3), st.floats(0, 1),
       st.sampled_from([2, 3, 5]))
def test_d_infinity_monotone_and_bounded(values, k, bump, p):
    base = {K + 1: v for K, v in enumerate(values)}
    raised = dict(base)
    raised[k + 1] += bump
    low, high = d_infinity(base, p).value, d_infinity(raised, p).value
    assert low <= high + 1e-15 and high <= 1.0


def test_indicator_mass_branches():
    assert indicator_mass(Fraction(1, 4), 0) == 1
    assert indicator_mass(Fraction(1, 4), Fraction(-1, 2)) == Fraction(1, 2)
    assert indicator_mass(Fraction(1, 4), Fraction(1, 2)) == Fraction(1, 2)
    assert indicator_mass(1, 0) == Fraction(1, 2)


def test_riemann_sum_hand_value():
    assert riemann_sum(Fraction(1, 4), 0, 10) == Fraction(11, 21) * 2
    diff = float(abs(riemann_sum(Fraction(1, 4), 0, 10) - indicator_mass(Fraction(1, 4), 0)))
    assert diff == pytest.approx(0.047619, abs=1e-6) and diff <= 0.05


def test_full_box_is_exact():
    rep = riemann_discretization_check(1, [Fraction(j, 128) for j in range(-64, 65)], [8, 64, 1024])
    assert rep.passed and rep.worst_scaled == 0.0


def test_half_width_bound_fails_at_boundary_anchor():
    # a = -1/2, R = 1/4, N = 64: 33 sites of 129 lie in the box, the integral is 1/2
    diff = riemann_sum(Fraction(1, 4), Fraction(-1, 2), 64) - indicator_mass(Fraction(1, 4), Fraction(-1, 2))
    assert diff == Fraction(66, 129) - Fraction(1, 2)
    assert diff > Fraction(1, 128)
    rep = riemann_discretization_check(Fraction(1, 4), [Fraction(-1, 2)], [64])
    assert not rep.passed and rep.violations[0][:2] == (-0.5, 64)


@pytest.mark.parametrize("R", [Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), Fraction(1)])
def test_riemann_error_within_cell_count_bound(R):
    # the counting error is at most one site per box edge: (1 + 2R) / (2R (2N + 1))
    anchors = [Fraction(j, 128) for j in range(-64, 65)]
    for N in [8, 16, 32, 64, 128, 256, 512, 1024]:
        bound = (1 + 2 * R) / (2 * R * (2 * N + 1))
        assert all(abs(riemann_sum(R, a, N) - indicator_mass(R, a)) <= bound for a in anchors)


def test_riemann_scaled_error_bounded_along_sweep():
    anchors = [Fraction(j, 64) for j in range(-32, 33)]
    worst = [riemann_discretization_check(Fraction(1, 2), anchors, [N]).worst_scaled for N in (16, 64, 256, 1024)]
    assert max(worst) <= 1.0
