import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tautlab.hk import STANDARD_TRIPLE
from tautlab.quat import (NonUnitError, Quaternion, QuaternionForm, coordinate_quaternion, dq, nu_family_qform,
                          qmul, right_j)

comp = st.floats(-3, 3, allow_nan=False)
quats = st.tuples(comp, comp, comp, comp).map(lambda t: Quaternion(*t))
units = quats.filter(lambda q: q.norm() > 1e-3).map(Quaternion.normalized)

I, J, K = Quaternion(0, 1), Quaternion(0, 0, 1), Quaternion(0, 0, 0, 1)


def qclose(a, b, tol=1e-12):
    return np.max(np.abs(a.as_array() - b.as_array())) < tol


def test_unit_products():
    one = Quaternion(1)
    assert I * J == K and J * K == I and K * I == J
    assert J * I == -K
    assert I * I == -one and J * J == -one and K * K == -one
    assert qmul(I, J) == K


@settings(max_examples=50, deadline=None)
@given(quats, quats, quats)
def test_algebra_laws(a, b, c):
    assert qclose((a * b) * c, a * (b * c), 1e-9 * (1 + a.norm() * b.norm() * c.norm()))
    assert (a * b).norm() == pytest.approx(a.norm() * b.norm(), rel=1e-12, abs=1e-12)
    assert qclose((a * b).conj(), b.conj() * a.conj(), 1e-10 * (1 + a.norm() * b.norm()))


@settings(max_examples=50, deadline=None)
@given(units, units)
def test_rotation_double_cover(u, v):
    R = u.rotation_matrix()
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0)
    np.testing.assert_allclose((-u).rotation_matrix(), R, atol=1e-15)
    # composition law: (uv) acts as u after v
    np.testing.assert_allclose((u * v).rotation_matrix(), R @ v.rotation_matrix(), atol=1e-12)
    w = Quaternion.from_rotation_matrix(R)
    assert qclose(w, u, 1e-10) or qclose(w, -u, 1e-10)


def test_rotation_acts_by_conjugation():
    u = Quaternion(1, 2, -1, 0.5).normalized()
    v = np.array([0.3, -1.2, 0.8])
    w = u * Quaternion(0, *v) * u.conj()
    np.testing.assert_allclose(w.as_array(), [0, *(u.rotation_matrix() @ v)], atol=1e-14)


def test_left_right_matrices():
    a, b = Quaternion(0.5, -1, 2, 0.25), Quaternion(-1, 0.3, 0.7, 2)
    np.testing.assert_allclose(a.left_matrix() @ b.as_array(), (a * b).as_array())
    np.testing.assert_allclose(b.right_matrix() @ a.as_array(), (a * b).as_array())
    assert qclose(a * a.inverse(), Quaternion(1.0))


def _points(n=20, seed=0):
    return np.random.default_rng(seed).normal(size=(n, 4))


def test_dq_wedge_dqbar_gives_standard_triple():
    p = _points(5)
    w = dq().wedge(dq().conj()).scale(-0.5)
    assert w.real.at(p).max_abs() == 0.0
    for i in range(3):
        np.testing.assert_allclose(w[i + 1].at(p).matrix(), np.broadcast_to(STANDARD_TRIPLE[i], (5, 4, 4)))


def test_nu_family_form_is_pure_imaginary():
    for nu in (0.0, 0.3, -1.2):
        assert nu_family_qform(nu).real.at(_points()).max_abs() < 1e-14


@pytest.mark.parametrize("nu", [0.0, 0.7])
def test_complex_split_matches_hand_formulas(nu):
    p = _points(12, seed=5)
    x0, x1, x2, x3 = p.T
    z1, z2 = x0 + 1j * x1, x2 + 1j * x3
    dz1, dz2 = np.array([1, 1j, 0, 0]), np.array([0, 0, 1, 1j])
    circle = (0.5 + 1j * nu) * z1[:, None] * dz2 - (0.5 - 1j * nu) * z2[:, None] * dz1
    a1 = (0.25j * (z1[:, None] * dz1.conj() - z1.conj()[:, None] * dz1 + z2[:, None] * dz2.conj()
                   - z2.conj()[:, None] * dz2)
          - nu * np.stack([x0, x1, -x2, -x3], -1))
    _, i_part, re_b, im_b = nu_family_qform(nu).scale(0.5).complex_split(p)
    np.testing.assert_allclose(a1.imag, 0, atol=1e-15)
    np.testing.assert_allclose(i_part.dense(), a1.real, atol=1e-14)
    np.testing.assert_allclose(re_b.dense(), circle.real, atol=1e-14)
    np.testing.assert_allclose(im_b.dense(), circle.imag, atol=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.floats(-2, 2, allow_nan=False))
def test_right_j_flips_nu(nu):
    p = _points(10, seed=1)
    pulled = nu_family_qform(nu).pullback(right_j())
    target = nu_family_qform(-nu)
    for a in range(4):
        np.testing.assert_allclose(pulled[a].at(p).dense(), target[a].at(p).dense(), atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(units)
def test_conjugation_preserves_sum_of_squares(u):
    p = _points(8, seed=2)
    w = nu_family_qform(0.4)
    rot = w.conjugation_action(u)
    v = np.random.default_rng(3).normal(size=(8, 4))
    sq = lambda f: sum(f[i].at(p).on(v) ** 2 for i in range(1, 4))
    np.testing.assert_allclose(sq(rot), sq(w), rtol=1e-12)
    R = u.rotation_matrix()
    comps = np.stack([w[i].at(p).on(v) for i in range(1, 4)], -1)
    got = np.stack([rot[i].at(p).on(v) for i in range(1, 4)], -1)
    np.testing.assert_allclose(got, comps @ R.T, atol=1e-12)


def test_conjugation_needs_unit():
    with pytest.raises(NonUnitError):
        dq().conjugation_action(Quaternion(1.0, 1e-3))


@settings(max_examples=10, deadline=None)
@given(quats, st.floats(-2, 2))
def test_wedge_bilinear_over_constants(c, s):
    p = _points(4, seed=9)
    a, b = dq(), nu_family_qform(0.2)
    lhs = a.left_mul(c).wedge(b)
    rhs = a.wedge(b).left_mul(c)
    lhs2 = a.wedge(b.right_mul(c))
    rhs2 = a.wedge(b).right_mul(c)
    lhs3 = a.scale(s).wedge(b)
    rhs3 = a.wedge(b.scale(s))
    for k in range(4):
        for x, y in ((lhs, rhs), (lhs2, rhs2), (lhs3, rhs3)):
            np.testing.assert_allclose(x[k].at(p).dense(), y[k].at(p).dense(), atol=1e-10)


def test_coordinate_quaternion_values():
    p = np.array([1.0, 2.0, 3.0, 4.0])
    q = coordinate_quaternion()
    assert [q[a].at(p).coefficient(()) for a in range(4)] == [1.0, 2.0, 3.0, 4.0]
    with pytest.raises(ValueError):
        QuaternionForm(list(q.components[:3]))
