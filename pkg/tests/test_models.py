import numpy as np
import pytest
from hypothesis import given, strategies as st

from mflattice.errors import ContractViolation, DomainError
from mflattice.models import (PolyBound, custom_model, eval_coupling, eval_drift, fhn_one_sided_constant,
                              fitzhugh_nagumo, gaussian, kuramoto, point_mass, probe_regularity,
                              product, uniform_box, zero_coupling)
from mflattice.rng import generator

finite = st.floats(-20, 20, allow_nan=False)


def test_kuramoto_drift_is_the_disorder():
    assert eval_drift(kuramoto(), [1.3], [0.7]) == pytest.approx([0.7])


def test_fhn_drift_vanishes_at_origin():
    assert np.allclose(eval_drift(fitzhugh_nagumo(I=0.0), [0.0, 0.0], [1.0, 1.0]), 0.0)


def test_fhn_drift_hand_value():
    out = eval_drift(fitzhugh_nagumo(I=0.5), [1.0, 0.0], [0.7, 0.8])
    assert out == pytest.approx([1 - 1 / 3 + 0.5, 0.7 * 0.8])


def test_kuramoto_coupling_quarter_turn():
    assert eval_coupling(kuramoto(K=1.0), [0.0], [0.0], [np.pi / 2], [0.0]) == pytest.approx([1.0])


@given(finite, finite)
def test_sine_coupling_vanishes_on_the_diagonal(theta, omega):
    assert eval_coupling(kuramoto(), [theta], [omega], [theta], [omega]) == pytest.approx([0.0], abs=1e-15)


def test_clip_coupling_inside_the_box():
    out = eval_coupling(fitzhugh_nagumo(clip=5.0), [0.0, 0.0], [0.7, 0.8], [2.0, -1.0], [0.7, 0.8])
    assert out == pytest.approx([2.0, -1.0])


def test_dimension_mismatch():
    with pytest.raises(ContractViolation):
        eval_drift(fitzhugh_nagumo(), [0.0], [0.7, 0.8])


def test_non_finite_input():
    with pytest.raises(DomainError):
        eval_drift(kuramoto(), [np.nan], [0.0])


@pytest.mark.parametrize("model", [kuramoto(K=2.0), fitzhugh_nagumo(clip=3.0)], ids=["kuramoto", "fhn"])
def test_coupling_bounded_and_lipschitz(model):
    rng = generator(1, "test")
    m, k = model.state_dim, model.disorder_dim
    pts = [rng.normal(0, 4, (5000, dim)) for dim in (m, k, m, k)]
    g = model.coupling(*pts)
    assert np.max(np.linalg.norm(g, axis=-1)) <= model.gamma_sup + 1e-12
    moved = [p + rng.normal(0, 0.1, p.shape) for p in pts]
    g2 = model.coupling(*moved)
    shift = sum(np.linalg.norm(a - b, axis=-1) for a, b in zip(pts, moved))
    assert np.all(np.linalg.norm(g - g2, axis=-1) <= model.gamma_lip * shift + 1e-12)


def test_kuramoto_constants_pass_probe():
    rep = probe_regularity(kuramoto(), 20000, 5.0, seed=3)
    assert not rep.violation
    assert rep.observed_L <= 0.5 + 1e-12


def test_fhn_point_disorder_passes_probe():
    rep = probe_regularity(fitzhugh_nagumo(), 100000, 10.0, seed=4)
    assert not rep.violation


def test_fhn_box_disorder_passes_probe():
    model = fitzhugh_nagumo(disorder_box=((0.5, 0.6), (0.9, 1.2)), state_radius=10.0)
    assert model.state_radius == 10.0
    rep = probe_regularity(model, 100000, 10.0, seed=5)
    assert not rep.violation


def test_zero_drift_probe():
    model = custom_model(lambda th, om: np.zeros_like(th), zero_coupling, 2, 1, np.eye(2), 0.0)
    rep = probe_regularity(model, 1000, 1.0)
    assert rep.observed_L == 0.0 and not rep.violation


def test_fhn_constant_matches_eigenvalue():
    g1 = abs(0.7 * 0.8 - 1)
    M = np.array([[1.0, g1 / 2], [g1 / 2, -0.7]])
    assert fhn_one_sided_constant(((0.7, 0.8), (0.7, 0.8)), 10.0) == pytest.approx(np.linalg.eigvalsh(M)[-1])


def test_poly_bound_limits():
    with pytest.raises(ContractViolation):
        PolyBound(1.0, 1.5, 1.0)
    with pytest.raises(ContractViolation):
        PolyBound(1.0, 2.0, 0.5)


def test_law_sampling_reproducible():
    law = product(gaussian([0.0], [2.0]), uniform_box([0.0], [1.0]))
    a = law.sample(generator(3, "law"), 100)
    b = law.sample(generator(3, "law"), 100)
    assert a.shape == (100, 2) and np.array_equal(a, b)


@pytest.mark.parametrize("law", [gaussian([1.0, -1.0], [0.5, 2.0]), uniform_box([0.0], [2.0]),
                                 product(point_mass([0.7]), gaussian([0.0], [1.0]))],
                         ids=["gaussian", "box", "product"])
def test_quadrature_weights_and_first_moment(law):
    nodes, weights = law.quadrature(8)
    assert weights.sum() == pytest.approx(1.0)
    sample = law.sample(generator(0, "moment"), 200000)
    assert weights @ nodes == pytest.approx(sample.mean(axis=0), abs=0.02)


def test_gaussian_second_moment_exact():
    # E|X|^2 = sum(mean^2 + std^2)
    law = gaussian([1.0, 2.0], [0.5, 1.5])
    assert law.moment(2) == pytest.approx(1 + 4 + 0.25 + 2.25)
