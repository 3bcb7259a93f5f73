"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned in ``TOL`` below and must not be loosened.
"""

import time

import numpy as np
import pytest

from tautlab import contact, hk, models
from tautlab.hk import STANDARD_TRIPLE
from tautlab.quat import Quaternion

SQRT2 = np.sqrt(2.0)
NUS = (0.0, 0.3, 1.0)

TOL = {
    "taut": 1e-9,
    "lambda_spread": 1e-9,
    "c1_runtime": 10.0,
    "beta_lambda": 1e-10,
    "reeb_bracket": 1e-8,
    "sectional": 1e-7,
    "flat": 1e-8,
    "slice": 1e-10,
    "closed": 1e-12,
    "conformal": 1e-10,
    "liouville": 1e-10,
    "gauss": 1e-8,
    "ma2": 1e-9,
    "table": 1e-10,
    "roundtrip": 1e-10,
    "eq_kw": 1e-8,
    "helmholtz": 1e-9,
    "K2222": 1e-6,
    "c6_runtime": 30.0,
    "frame": 1e-9,
    "quaternionic": 1e-10,
    "norm": 1e-10,
    "self_dual": 1e-9,
    "non_extension": 1e-2,
}


@pytest.fixture
def report(capsys):
    def emit(n: int, title: str, checks: dict[str, tuple[float, float, str]]):
        """``checks[name] = (value, bound, op)`` with op ``<`` or ``>``."""
        ok = {k: (v < b if op == "<" else v > b) for k, (v, b, op) in checks.items()}
        status = "PASS" if all(ok.values()) else "FAIL"
        detail = ", ".join(f"{k}={v:.3g}{op}{b:g}" for k, (v, b, op) in checks.items())
        with capsys.disabled():
            print(f"\n[acceptance] criterion {n} {status}: {title} | {detail}")
        failed = [k for k, good in ok.items() if not good]
        assert not failed, f"criterion {n} failed checks: {failed}"

    return emit


def _unit_lambdas(n: int, seed: int) -> np.ndarray:
    v = np.random.default_rng(seed).normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _family_metrics(cs, n_points=100, seed=0):
    pts = cs.sample(n_points, seed)
    taut = float(np.max(np.abs(contact.tautness_residuals(cs, pts))))
    vals = contact.contact_residual(cs, _unit_lambdas(100, seed + 1), pts)
    spread = float(np.max((vals.max(0) - vals.min(0)) / np.abs(vals).max(0)))
    return taut, spread


def test_criterion_1_nu_family_validity(report):
    start = time.perf_counter()
    taut, spread = 0.0, 0.0
    for nu in NUS:
        for chart in ("north", "south"):
            t, s = _family_metrics(models.nu_family_sphere(nu, chart))
            taut, spread = max(taut, t), max(spread, s)
    elapsed = time.perf_counter() - start
    report(1, "nu-family tautness and lambda-independence on both charts", {
        "max_taut": (taut, TOL["taut"], "<"),
        "lambda_spread": (spread, TOL["lambda_spread"], "<"),
        "runtime_s": (elapsed, TOL["c1_runtime"], "<"),
    })


def test_criterion_2_cartan_checkpoint(report):
    cs = models.chart_sphere()
    rng = np.random.default_rng(2)
    pts = cs.sample(50, rng)
    data = contact.extract_structure(cs, pts)
    beta = float(np.max(np.abs(data.b_values)))
    lam = float(np.max(np.abs(data.Lambda_values - 2.0)))
    p20 = pts[:20]
    R = [contact.reeb_vector_field(a) for a in cs.alphas]
    bracket = max(float(np.max(np.abs(R[i].bracket(R[j])(p20) + 2.0 * R[k](p20))))
                  for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)])
    one = contact.normalise(cs, 1.0)
    K = hk.sectional_curvature(contact.short_metric(one), p20, rng.normal(size=(20, 3)), rng.normal(size=(20, 3)))
    report(2, "Cartan structure of the nu = 0 chart sphere", {
        "beta": (beta, TOL["beta_lambda"], "<"),
        "lambda_minus_2": (lam, TOL["beta_lambda"], "<"),
        "reeb_bracket": (bracket, TOL["reeb_bracket"], "<"),
        "sectional_minus_quarter": (float(np.max(np.abs(K - 0.25))), TOL["sectional"], "<"),
    })


def test_criterion_3_flatness(report):
    worst = 0.0
    for nu in NUS:
        cs = models.nu_family_sphere(nu)
        # unit-scale box in (x1, x2, x3, t)
        pts = hk.lift(cs).sample(10, 3)
        worst = max(worst, hk.riemann_curvature(hk.metric_from_structure(cs), pts).max_abs)
    report(3, "metric induced by the nu-family is flat", {"max_riemann": (worst, TOL["flat"], "<")})


def test_criterion_4_canonical_slice(report):
    rng = np.random.default_rng(4)
    flat_dev, struct_dev, radius_dev = 0.0, 0.0, 0.0
    G = hk.metric_from_triple(hk.standard_triple(), rng.normal(size=(50, 4)))
    for nu in NUS:
        # flat side: g(Y, Y) with the metric recovered from the standard triple
        q = rng.normal(size=(50, 4))
        Y = models.liouville_nu(nu)(q)
        norm2 = np.einsum("na,nab,nb->n", Y, G, Y)
        flat_dev = max(flat_dev, float(np.max(np.abs(norm2 - (0.25 + nu * nu) * np.sum(q * q, -1)))))
        # structure side: the delta = i nu sphere is Y _| Omega on S^3, so |q|^2 = e^t along the flow of Y
        cs = models.candidate_sphere(1j * nu)
        x = cs.sample(50, rng)
        t = rng.uniform(-1, 1, 50)
        g = hk.metric_from_structure(cs)(np.column_stack([x, t]))
        struct_dev = max(struct_dev, float(np.max(np.abs(g[:, 3, 3] - (0.25 + nu * nu) * np.exp(t)))))
        # slice radius: |dt| = 1 on the sphere of radius 2 / sqrt(1 + 4 nu^2)
        on = q / np.linalg.norm(q, axis=-1, keepdims=True) * models.canonical_slice(nu)
        radius_dev = max(radius_dev, float(np.max(np.abs(models.dt_norm_squared(nu, on, G) - 1.0))))
    report(4, "canonical slice norm law and radius", {
        "flat_side": (flat_dev, TOL["slice"], "<"),
        "structure_side": (struct_dev, TOL["slice"], "<"),
        "radius": (radius_dev, TOL["slice"], "<"),
    })


def test_criterion_5_gibbons_hawking(report):
    triple, Y, metric = models.gh_example()
    pts = triple.sample(50, 5)
    cs = models.gh_contact_sphere()
    cpts = cs.sample(50, 6)
    x1 = np.array([1.0, 2.0, 3.0])
    K = hk.riemann_curvature(models.sigma_metric(metric), np.column_stack([np.zeros(3), x1])).gauss
    report(5, "Gibbons-Hawking example is hyperkaehler with non-flat Sigma", {
        "closedness": (hk.closedness_residual(triple, pts), TOL["closed"], "<"),
        "conformal": (float(np.max(np.abs(hk.conformal_residuals(triple, pts)))), TOL["conformal"], "<"),
        "tri_liouville": (hk.tri_liouville_residual(triple, Y, pts), TOL["liouville"], "<"),
        "transversal_taut": (float(np.max(np.abs(contact.tautness_residuals(cs, cpts)))), TOL["taut"], "<"),
        "gauss_vs_minus_inv_cube": (float(np.max(np.abs(K + 1.0 / x1**3))), TOL["gauss"], "<"),
    })


def test_criterion_6_appendix_chain(report):
    start = time.perf_counter()
    h = models.sample_h_field()
    s1 = np.linspace(-1.2, 1.2, 12)
    f = np.linspace(1.05, 3.0, 12)
    grid = np.array([[a, np.cos(a) * b] for a in s1 for b in f])
    ma2 = float(np.max(np.abs(models.ma_residual(h, grid))))

    j = h.jet(np.array([0.0, SQRT2]), 4)
    table = max(abs(j.partial(1) - 1.0), abs(j.partial(1, 1) - SQRT2), abs(j.partial(1, 1, 1) + 1.0),
                abs(j.partial(1, 1, 1, 1) - 3 * SQRT2), abs(j.partial(0, 1)), abs(j.partial(0, 1, 1)),
                abs(j.value + j.partial(0, 0) - SQRT2))

    hj = h.jet(grid, 1)
    tv = models.transform_T(h, grid)
    back = models.transform_T_inv_values(tv.r, tv.theta, tv.u, tv.u_r, tv.u_theta)
    rt = max(float(np.max(np.abs(a - b))) for a, b in [
        (back.s1, grid[:, 0]), (back.s2, grid[:, 1]), (back.h, hj.value), (back.h_s1, hj.partial(0)),
        (back.h_s2, hj.partial(1))])

    k = models.legendre_k(h, lambda t1, t2: np.cos(t1) * np.sqrt(1.0 + t2**2))
    eq_k = float(np.max(np.abs(models.eq_k_residual(k, np.column_stack([grid[:, 0], hj.partial(1)])))))
    w = models.mercator_w(k)
    eq_w = float(np.max(np.abs(models.eq_w_residual(w, np.column_stack([grid[:, 0], np.arcsinh(hj.partial(1))])))))

    rpts = np.column_stack([tv.r, tv.theta])
    helm = float(np.max(np.abs(models.spherical_helmholtz_residual(models.sample_u_field(), rpts))))

    H = models.kahler_potential(h)
    K = hk.kahler_curvature(H, np.array([0.0, 0.0, SQRT2 / 2.0, 0.0]))
    elapsed = time.perf_counter() - start
    report(6, "Monge-Ampere / Helmholtz chain and Kaehler curvature", {
        "ma2_12x12": (ma2, TOL["ma2"], "<"),
        "derivative_table": (float(table), TOL["table"], "<"),
        "T_roundtrip": (rt, TOL["roundtrip"], "<"),
        "eq_k": (eq_k, TOL["eq_kw"], "<"),
        "eq_w": (eq_w, TOL["eq_kw"], "<"),
        "helmholtz": (helm, TOL["helmholtz"], "<"),
        "K2222_plus_sqrt2": (float(abs(K[1, 1, 1, 1] + SQRT2)), TOL["K2222"], "<"),
        "runtime_s": (elapsed, TOL["c6_runtime"], "<"),
    })


def _random_rotation(rng) -> np.ndarray:
    Q, R = np.linalg.qr(rng.normal(size=(4, 4)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def test_criterion_7_linear_algebra(report):
    rng = np.random.default_rng(7)
    frame = quat = norm = dual = 0.0
    I4 = np.eye(4)
    for _ in range(1000):
        u = Quaternion(*rng.normal(size=4)).normalized()
        scale = rng.uniform(0.5, 2.0)
        Ms = np.einsum("il,lab->iab", u.rotation_matrix(), STANDARD_TRIPLE) * scale
        # write the triple in a random oriented, well-conditioned coframe
        P = _random_rotation(rng) @ np.diag(rng.uniform(0.5, 2.0, 4)) @ _random_rotation(rng)
        Ms = np.einsum("ba,ibc,cd->iad", P, Ms, P)
        nf = hk.normal_frame(Ms)
        frame = max(frame, nf.residual)
        J = hk.complex_structures(Ms)
        quat = max(quat, float(np.max(np.abs(J[0] @ J[1] - J[2]))),
                   *(float(np.max(np.abs(J[i] @ J[i] + I4))) for i in range(3)))
        norm = max(norm, float(np.max(np.abs(hk.form_norm(Ms, nf.metric) - SQRT2))))
        dual = max(dual, *(float(np.max(np.abs(hk.hodge_star(Ms[i], nf.metric) - Ms[i]))) for i in range(3)))
    report(7, "normal frames and quaternionic identities on 1000 random triples", {
        "normal_frame": (frame, TOL["frame"], "<"),
        "quaternionic": (quat, TOL["quaternionic"], "<"),
        "norm_sqrt2": (norm, TOL["norm"], "<"),
        "self_duality": (dual, TOL["self_dual"], "<"),
    })


def test_criterion_8_moduli_gate(report):
    taut, spread = 0.0, 0.0
    for nu in (0.0, 0.4, 1.0):
        rep = models.moduli(1j * nu)
        assert rep.extends_to_sphere and rep.sphere is not None
        t, s = _family_metrics(rep.sphere)
        taut, spread = max(taut, t), max(spread, s)
    bad = models.moduli(0.3)
    report(8, "imaginary delta extends, real delta does not", {
        "emitted_taut": (taut, TOL["taut"], "<"),
        "emitted_lambda_spread": (spread, TOL["lambda_spread"], "<"),
        "real_delta_candidate_residual": (float(bad.candidate_residual), TOL["non_extension"], ">"),
        "real_delta_extends": (float(bad.extends_to_sphere), 0.5, "<"),
    })


def test_liouville_field_is_dt_on_the_slice():
    # Y_nu generates the t-direction: contracting the flat triple recovers the delta = i nu sphere
    flat = hk.standard_triple()
    for nu in NUS:
        assert hk.tri_liouville_residual(flat, models.liouville_nu(nu), flat.sample(20, 8)) < TOL["liouville"]
