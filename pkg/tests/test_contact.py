import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tautlab import contact, hk, models
from tautlab.contact import (ContactSphere, DegenerateVolumeError, IllConditionedCoframeError, NonContactError,
                             NormalisationError)
from tautlab.forms import DifferentialForm, ext_d, wedge
from tautlab.jets import ScalarField

unit3 = st.tuples(*[st.floats(-1, 1)] * 3).map(np.array).filter(lambda v: np.linalg.norm(v) > 1e-2).map(
    lambda v: v / np.linalg.norm(v))
CYCLIC = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]


@pytest.fixture(scope="module")
def pts():
    return np.random.default_rng(11).uniform(-1, 1, size=(30, 3))


def test_chart_sphere_residual_at_origin():
    cs = models.chart_sphere()
    assert contact.contact_residual(cs, [1.0, 0.0, 0.0], np.zeros(3)) == pytest.approx(2.0)


def test_hyperplane_sphere_lambda(pts):
    # hand expansion: alpha_i ^ d alpha_i = 2 dx1^dx2^dx3 and the volume is 1 + |x|^2
    data = contact.extract_structure(models.hyperplane_sphere(), pts)
    np.testing.assert_allclose(data.Lambda_values, 2.0 / (1.0 + np.sum(pts**2, -1)), rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(unit3)
def test_contact_residual_is_even_in_lambda(lam):
    cs = models.s1s2_sphere()
    p = cs.sample(5, 1)
    np.testing.assert_allclose(contact.contact_residual(cs, lam, p), contact.contact_residual(cs, -lam, p))


@settings(max_examples=20, deadline=None)
@given(unit3, st.sampled_from([0.0, 0.3, 1.0]))
def test_taut_residual_is_lambda_independent(lam, nu):
    cs = models.nu_family_sphere(nu)
    p = cs.sample(10, 2)
    data = contact.extract_structure(cs, p)
    np.testing.assert_allclose(contact.contact_residual(cs, lam, p), data.Lambda_values, rtol=1e-10)


def test_batched_lambda_shape(pts):
    cs = models.chart_sphere()
    lam = np.eye(3)
    assert contact.contact_residual(cs, lam, pts[:4]).shape == (3, 4)
    with pytest.raises(ValueError):
        contact.contact_residual(cs, [1.0, 1.0, 0.0], pts[:4])


@pytest.mark.parametrize("nu", [0.0, 0.3, 1.0])
def test_nu_family_taut(nu):
    for chart in ("north", "south"):
        cs = models.nu_family_sphere(nu, chart)
        assert np.max(np.abs(contact.tautness_residuals(cs, cs.sample(20, 3)))) < 1e-10


def test_s1s2_sphere_not_taut():
    cs = models.s1s2_sphere()
    assert np.max(np.abs(contact.tautness_residuals(cs, cs.sample(10, 0)))) > 0.1


def test_repeated_form_is_degenerate(pts):
    a = models.chart_sphere().alphas
    with pytest.raises(DegenerateVolumeError):
        contact.tautness_residuals(ContactSphere([a[0], a[0], a[2]]), pts[:3])
    with pytest.raises(IllConditionedCoframeError):
        contact.extract_structure(ContactSphere([a[0], a[0] * 1.0, a[2]]), pts[:3])


def test_chart_sphere_structure(pts):
    data = contact.extract_structure(models.chart_sphere(), pts)
    np.testing.assert_allclose(data.Lambda_values, 2.0, atol=1e-12)
    assert np.max(np.abs(data.b_values)) < 1e-12
    assert data.residual < 1e-12


def test_lambda_scales_inversely(pts):
    cs = models.nu_family_sphere(0.3)
    p = cs.sample(20, 4)
    base = contact.extract_structure(cs, p).Lambda_values
    np.testing.assert_allclose(contact.extract_structure(cs.scaled(3.0), p).Lambda_values, base / 3.0, rtol=1e-12)


@pytest.mark.parametrize("make", [lambda: models.nu_family_sphere(0.5), lambda: models.gh_contact_sphere(),
                                  lambda: models.chart_sphere().scaled(ScalarField(3, lambda x, y, z: 1 + x * x / 4))])
def test_structure_equation_reconstructs_d_alpha(make):
    # independent path: rebuild d alpha_i = beta ^ alpha_i + Lambda alpha_j ^ alpha_k with the forms layer
    cs = make()
    p = cs.sample(15, 5)
    data = contact.extract_structure(cs, p)
    assert data.residual < 1e-9
    a = cs.alphas
    for i, j, k in CYCLIC:
        rhs = wedge(data.beta, a[i]) + wedge(a[j], a[k]) * data.Lambda
        lhs = ext_d(a[i])
        diff = (lhs.at(p).dense() - rhs.at(p).dense())
        assert np.max(np.abs(diff)) < 1e-9 * (1 + np.max(np.abs(lhs.at(p).dense())))
    np.testing.assert_allclose(data.Lambda(p), data.Lambda_values, rtol=1e-12)


def test_gh_sphere_structure():
    cs = models.gh_contact_sphere()
    data = contact.extract_structure(cs, cs.sample(20, 6))
    assert np.all(np.isfinite(data.Lambda_values)) and np.all(data.Lambda_values > 0)
    assert data.residual < 1e-9


@pytest.mark.parametrize("c", [1.0, 2.0])
def test_normalise_chart_sphere(pts, c):
    one = contact.normalise(models.chart_sphere(), c)
    np.testing.assert_allclose(contact.extract_structure(one, pts).Lambda_values, c, rtol=1e-12)
    if c == 2.0:
        a0 = models.chart_sphere().alphas[0].at(pts).dense()
        np.testing.assert_allclose(one.alphas[0].at(pts).dense(), a0, rtol=1e-12)


def test_normalise_gh_sphere_fresh_points():
    cs = models.gh_contact_sphere()
    one = contact.normalise(cs, 1.0)
    fresh = cs.sample(20, 99)
    np.testing.assert_allclose(contact.extract_structure(one, fresh).Lambda_values, 1.0, atol=1e-8)


def test_normalise_rejects_negative_lambda(pts):
    cs = models.chart_sphere()
    flipped = ContactSphere([cs.alphas[1], cs.alphas[0], cs.alphas[2]], cs.box)
    with pytest.raises(NormalisationError):
        contact.normalise(flipped, 1.0)
    with pytest.raises(ValueError):
        contact.normalise(cs, -1.0)


def test_metrics_need_normalisation():
    with pytest.raises(NormalisationError):
        contact.short_metric(models.chart_sphere())


def test_short_and_long_metrics(pts):
    cartan = contact.normalise(models.chart_sphere(), 1.0)
    np.testing.assert_allclose(contact.short_metric(cartan)(pts), contact.long_metric(cartan)(pts), atol=1e-13)
    cs = contact.normalise(models.nu_family_sphere(0.5), 1.0)
    p = cs.sample(10, 7)
    beta = contact.extract_structure(cs, p).beta.at(p).dense()
    diff = contact.long_metric(cs)(p) - contact.short_metric(cs)(p)
    np.testing.assert_allclose(diff, np.einsum("na,nb->nab", beta, beta), atol=1e-12)
    R1 = contact.reeb_field(cartan.alphas[0], p)
    assert np.allclose(np.einsum("na,nab,nb->n", R1, contact.long_metric(cartan)(p), R1), 1.0)


def test_reeb_of_standard_form():
    alpha = DifferentialForm.from_callable(3, 1, lambda x, y, z: {(2,): 1.0, (1,): x})
    p = np.random.default_rng(0).normal(size=(5, 3))
    np.testing.assert_allclose(contact.reeb_field(alpha, p), np.tile([0, 0, 1.0], (5, 1)), atol=1e-15)
    with pytest.raises(NonContactError):
        contact.reeb_field(DifferentialForm.from_callable(3, 1, lambda x, y, z: {(2,): 1.0}), p)


def test_reeb_of_chart_alpha_at_origin():
    R = contact.reeb_field(models.hyperplane_sphere().alphas[0], np.zeros(3))
    np.testing.assert_allclose(R, [1.0, 0, 0], atol=1e-15)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([0.0, 0.3, 1.0]), st.integers(0, 100))
def test_reeb_defining_equations(nu, seed):
    cs = models.nu_family_sphere(nu)
    p = cs.sample(5, seed)
    for a in cs.alphas:
        R = contact.reeb_field(a, p)
        np.testing.assert_allclose(a.at(p).on(R), 1.0, rtol=1e-13)
        w = ext_d(a).at(p).matrix()
        assert np.max(np.abs(np.einsum("na,nab->nb", R, w))) < 1e-12


def test_reeb_dual_frame_for_cartan(pts):
    cs = models.chart_sphere()
    R = [contact.reeb_field(a, pts) for a in cs.alphas]
    pairing = np.stack([np.stack([a.at(pts).on(r) for r in R], -1) for a in cs.alphas], -2)
    np.testing.assert_allclose(pairing, np.broadcast_to(np.eye(3), pairing.shape), atol=1e-10)


def test_reeb_vector_field_matches_pointwise(pts):
    a = models.nu_family_sphere(0.3).alphas[1]
    np.testing.assert_allclose(contact.reeb_vector_field(a)(pts), contact.reeb_field(a, pts), rtol=1e-13)


@pytest.mark.parametrize("make, expected", [
    (lambda: models.nu_family_sphere(0.0), True),
    (models.chart_sphere, True),
    (lambda: models.nu_family_sphere(0.5), False),
    (lambda: models.chart_sphere().scaled(ScalarField(3, lambda x, y, z: 1 + x * x / 4)), False),
])
def test_is_cartan(make, expected):
    cs = make()
    rep = contact.is_cartan(cs, cs.sample(20, 8))
    assert bool(rep) is expected
    if expected:
        assert rep.beta_max < 1e-9


def test_sectional_curvature_quarter():
    one = contact.normalise(models.chart_sphere(), 1.0)
    rng = np.random.default_rng(12)
    p = one.sample(6, rng)
    K = hk.sectional_curvature(contact.short_metric(one), p, rng.normal(size=(6, 3)), rng.normal(size=(6, 3)))
    np.testing.assert_allclose(K, 0.25, atol=1e-9)
