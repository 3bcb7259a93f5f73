"""Symplectic triples on 4-charts and the hyperkaehler linear algebra around them.

Sign conventions. A 2-form ``A`` has matrix ``M`` with ``A(v, w) = v^T M w``.
Complex structures are defined by ``g(v, w) = A_i(v, J_i w)``, i.e.
``J_i = M_i^{-1} G``. Because ``J_i^2 = -1`` this is the same statement as
``A_i(v, w) = -g(v, J_i w)``, so the two ways of writing the relation between
metric, 2-forms and complex structures agree. For the standard triple
``A_i = dx0^dxi + dxj^dxk`` the ``J_i`` are left multiplication by ``i, j, k``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .contact import ContactSphere, MetricField, structure_fields
from .forms import (
    ChartMap,
    DifferentialForm,
    VectorField,
    ext_d,
    interior,
    interior_coeffs,
    lie_derivative,
    pullback,
    wedge_coeffs,
)
from .jets import ScalarField, complex_hessian, exp, inv, wirtinger
from .quat import Quaternion

__all__ = [
    "SymplecticTriple",
    "NormalFrame",
    "RiemannResult",
    "DegenerateTripleError",
    "OrientationError",
    "SingularMetricError",
    "TransversalityError",
    "STANDARD_TRIPLE",
    "standard_triple",
    "lift",
    "closedness_residual",
    "conformal_residuals",
    "tri_liouville_residual",
    "metric_from_triple",
    "normal_frame",
    "complex_structures",
    "hodge_star",
    "form_norm",
    "riemann_curvature",
    "sectional_curvature",
    "metric_from_structure",
    "kahler_metric",
    "kahler_curvature",
    "contact_sphere_from_triple",
]


class DegenerateTripleError(ValueError):
    """The cubic identity cannot determine a metric (all probes vanish)."""


class OrientationError(ValueError):
    """The triple is not naturally ordered: the induced form is not positive."""


class SingularMetricError(ValueError):
    """A metric (or Kaehler matrix) is singular at the requested point."""


class TransversalityError(ValueError):
    """A vector field is tangent to the chosen transversal."""


def _std_matrices() -> np.ndarray:
    S = np.zeros((3, 4, 4))
    for i, (j, k) in zip(range(1, 4), [(2, 3), (3, 1), (1, 2)]):
        S[i - 1, 0, i], S[i - 1, j, k] = 1.0, 1.0
    return S - np.swapaxes(S, -1, -2)


STANDARD_TRIPLE = _std_matrices()


def _matrix_coeffs(M: np.ndarray) -> dict:
    n = M.shape[-1]
    return {(a, b): M[..., a, b] for a in range(n) for b in range(a + 1, n)}


class SymplecticTriple:
    """Three 2-forms on a 4-chart."""

    def __init__(self, omegas: Sequence[DifferentialForm], box=None, name: str | None = None):
        omegas = tuple(omegas)
        if len(omegas) != 3 or any(o.dim != 4 or o.degree != 2 for o in omegas):
            raise ValueError("a symplectic triple is three 2-forms on a 4-chart")
        self.omegas = omegas
        self.box = None if box is None else (np.asarray(box[0], float), np.asarray(box[1], float))
        self.name = name

    def __iter__(self):
        return iter(self.omegas)

    def __repr__(self) -> str:
        return f"SymplecticTriple(name={self.name!r})"

    def sample(self, n: int, seed: int | np.random.Generator = 0) -> np.ndarray:
        if self.box is None:
            raise ValueError("triple has no sampling box")
        rng = np.random.default_rng(seed)
        lo, hi = self.box
        return lo + (hi - lo) * rng.random((n, 4))

    def matrices(self, points) -> np.ndarray:
        """Antisymmetric matrices, shape ``batch + (3, 4, 4)``."""
        return np.stack([o.at(points).matrix() for o in self.omegas], axis=-3)


def standard_triple() -> SymplecticTriple:
    """``A_i = dx0^dxi + dxj^dxk`` on R^4."""
    forms = [DifferentialForm.from_callable(4, 2, lambda *x, i=i, j=j, k=k: {(0, i): 1.0, (j, k): 1.0})
             for i, j, k in [(1, 2, 3), (2, 3, 1), (3, 1, 2)]]
    return SymplecticTriple(forms, box=(-np.ones(4), np.ones(4)), name="standard")


def lift(cs: ContactSphere) -> SymplecticTriple:
    """``Omega_i = d(e^t alpha_i)`` on the 4-chart ``(x1, x2, x3, t)``."""
    proj = ChartMap.from_callable(4, 3, lambda a, b, c, t: [a, b, c], name="drop t")
    et = ScalarField(4, lambda a, b, c, t: exp(t))
    omegas = [ext_d(pullback(proj, a) * et) for a in cs.alphas]
    box = None
    if cs.box is not None:
        box = (np.append(cs.box[0], -1.0), np.append(cs.box[1], 1.0))
    return SymplecticTriple(omegas, box, name=f"lift({cs.name})")


def closedness_residual(triple: SymplecticTriple, points) -> float:
    return max(ext_d(o).at(points).max_abs() for o in triple.omegas)


def conformal_residuals(triple: SymplecticTriple, points) -> np.ndarray:
    """``(O1^2 - O2^2, O2^2 - O3^2, O3^2 - O1^2, O1^O2, O2^O3, O3^O1)`` as 4-form coefficients."""
    M = triple.matrices(points)
    c = [_matrix_coeffs(M[..., i, :, :]) for i in range(3)]

    def top(a, b):
        return wedge_coeffs(a, b).get((0, 1, 2, 3), np.zeros(M.shape[:-3]))

    sq = [top(c[i], c[i]) for i in range(3)]
    return np.stack([sq[0] - sq[1], sq[1] - sq[2], sq[2] - sq[0],
                     top(c[0], c[1]), top(c[1], c[2]), top(c[2], c[0])], axis=-1)


def tri_liouville_residual(triple: SymplecticTriple, Y: VectorField, points) -> float:
    """``max |L_Y Omega_i - Omega_i|`` over the points."""
    return max((lie_derivative(Y, o) - o).at(points).max_abs() for o in triple.omegas)


# -- pointwise linear algebra ------------------------------------------------------------


def _as_matrices(omega, points=None) -> np.ndarray:
    if isinstance(omega, SymplecticTriple):
        if points is None:
            raise ValueError("points are needed to evaluate a triple")
        return omega.matrices(points)
    return np.asarray(omega, dtype=float)


def _cubic_quadratic_form(Ms: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``g(v, v)`` from ``(v_|A1)^(v_|A2)^(v_|A3) = 1/2 g(v, v) v_|(A_i^2)``."""
    # (v _| A)(w) = v^T M w
    cov = [{(b,): np.einsum("...a,...a->...", v, Ms[..., i, :, b]) for b in range(4)} for i in range(3)]
    lhs = wedge_coeffs(wedge_coeffs(cov[0], cov[1]), cov[2])
    vcomp = [v[..., a] for a in range(4)]
    rhs = {}
    for i in range(3):
        c = _matrix_coeffs(Ms[..., i, :, :])
        for K, val in interior_coeffs(vcomp, wedge_coeffs(c, c)).items():
            rhs[K] = rhs.get(K, 0.0) + val / 3.0
    keys = list(itertools.combinations(range(4), 3))
    zero = np.zeros(Ms.shape[:-3])
    L = np.stack([lhs.get(K, zero) for K in keys], axis=-1)
    R = np.stack([rhs.get(K, zero) for K in keys], axis=-1)
    den = np.einsum("...k,...k->...", R, R)
    if np.any(den <= 1e-300):
        raise DegenerateTripleError("v _| (A_i ^ A_i) vanishes for a probe vector")
    return 2.0 * np.einsum("...k,...k->...", L, R) / den


def metric_from_triple(omega, points=None) -> np.ndarray:
    """Metric ``G[..., a, b]`` induced by a conformal triple (matrices ``(..., 3, 4, 4)`` or a triple)."""
    Ms = _as_matrices(omega, points)
    batch = Ms.shape[:-3]
    E = np.eye(4)
    Q = np.empty(batch + (4, 4))
    diag = [_cubic_quadratic_form(Ms, np.broadcast_to(E[a], batch + (4,))) for a in range(4)]
    for a in range(4):
        Q[..., a, a] = diag[a]
        for b in range(a + 1, 4):
            qab = _cubic_quadratic_form(Ms, np.broadcast_to(E[a] + E[b], batch + (4,)))
            Q[..., a, b] = Q[..., b, a] = 0.5 * (qab - diag[a] - diag[b])
    return Q


def _orientation(Ms: np.ndarray) -> np.ndarray:
    """Sign of ``A_1 ^ A_1`` against ``dx0^dx1^dx2^dx3``."""
    c = _matrix_coeffs(Ms[..., 0, :, :])
    return np.sign(wedge_coeffs(c, c)[(0, 1, 2, 3)])


def _levi_civita() -> np.ndarray:
    eps = np.zeros((4,) * 4)
    for perm in itertools.permutations(range(4)):
        eps[perm] = np.linalg.det(np.eye(4)[list(perm)])
    return eps


_EPS = _levi_civita()


def hodge_star(M: np.ndarray, G: np.ndarray, orientation=1.0) -> np.ndarray:
    """``(*w)_cd = 1/2 sqrt|g| eps_abcd w^ab`` for a 2-form matrix ``M``."""
    Gi = np.linalg.inv(G)
    up = np.einsum("...ac,...bd,...cd->...ab", Gi, Gi, M)
    vol = np.sqrt(np.linalg.det(G)) * np.asarray(orientation)
    return 0.5 * vol[..., None, None] * np.einsum("abcd,...ab->...cd", _EPS, up)


def form_norm(M: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``|w|_g`` with ``|w|^2 = 1/2 w_ab w^ab`` (so ``|dx0^dx1| = 1``)."""
    Gi = np.linalg.inv(G)
    return np.sqrt(0.5 * np.einsum("...ab,...ac,...bd,...cd->...", M, Gi, Gi, M))


@dataclass
class NormalFrame:
    """Coframe ``F`` (rows are covectors) with ``M_i = F^T S_i F`` for the standard ``S_i``."""

    F: np.ndarray
    metric: np.ndarray
    residual: float

    def apply(self, Ms: np.ndarray) -> np.ndarray:
        """Matrices of the given 2-forms in the normal coframe."""
        Finv = np.linalg.inv(self.F)
        return np.einsum("ba,...bc,cd->...ad", Finv, Ms, Finv)


def normal_frame(omega, points=None) -> NormalFrame:
    """Coframe putting a conformal, naturally ordered triple at a point into standard shape.

    Metric first, then an oriented orthonormal coframe by Cholesky, then the
    SO(3) rotation carrying the triple onto the standard one, realised as
    left multiplication by a unit quaternion.
    """
    Ms = _as_matrices(omega, points)
    if Ms.shape != (3, 4, 4):
        raise ValueError("normal_frame works at a single point")
    G = metric_from_triple(Ms)
    ev = np.linalg.eigvalsh(G)
    if ev[0] <= 0:
        raise OrientationError("induced quadratic form is not positive: triple is not naturally ordered")
    F0 = np.linalg.cholesky(G).T
    if np.sign(np.linalg.det(F0)) != _orientation(Ms):
        F0[3] = -F0[3]
    Finv = np.linalg.inv(F0)
    B = np.einsum("ba,ibc,cd->iad", Finv, Ms, Finv)
    R = 0.25 * np.einsum("iab,lab->il", B, STANDARD_TRIPLE)
    ubar = Quaternion.from_rotation_matrix(R)
    F = ubar.left_matrix() @ F0
    resid = float(np.max(np.abs(np.einsum("ba,ibc,cd->iad", F, STANDARD_TRIPLE, F) - Ms)))
    return NormalFrame(F, G, resid)


def complex_structures(omega, points=None) -> np.ndarray:
    """``J_i = M_i^{-1} G`` so that ``g(v, w) = A_i(v, J_i w)``; shape ``batch + (3, 4, 4)``."""
    Ms = _as_matrices(omega, points)
    G = metric_from_triple(Ms)
    return np.linalg.solve(Ms, G[..., None, :, :])


# -- curvature --------------------------------------------------------------------------


@dataclass
class RiemannResult:
    """``R[..., a, b, c, d] = R^a_bcd`` with ``R(d_c, d_d) d_b = R^a_bcd d_a``."""

    R: np.ndarray
    metric: np.ndarray

    @property
    def lowered(self) -> np.ndarray:
        return np.einsum("...ae,...ebcd->...abcd", self.metric, self.R)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.R)))

    @property
    def gauss(self) -> np.ndarray:
        if self.metric.shape[-1] != 2:
            raise ValueError("Gauss curvature is for 2-dimensional metrics")
        return self.lowered[..., 0, 1, 0, 1] / np.linalg.det(self.metric)

    def sectional(self, u, v) -> np.ndarray:
        u, v = np.asarray(u, float), np.asarray(v, float)
        num = np.einsum("...abcd,...a,...b,...c,...d->...", self.lowered, u, v, u, v)
        g = self.metric
        guu = np.einsum("...ab,...a,...b->...", g, u, u)
        gvv = np.einsum("...ab,...a,...b->...", g, v, v)
        guv = np.einsum("...ab,...a,...b->...", g, u, v)
        return num / (guu * gvv - guv**2)


def riemann_curvature(g: MetricField, points) -> RiemannResult:
    """Curvature tensor from second-order jets of the metric coefficients."""
    points = np.asarray(points, float)
    n = g.dim
    gj = g.jet(points, 2)
    G = np.stack([np.stack([c.value for c in row], axis=-1) for row in gj], axis=-2)
    scale = np.max(np.abs(G), axis=(-2, -1)) ** n
    if np.any(np.abs(np.linalg.det(G)) <= 1e-14 * scale):
        raise SingularMetricError("metric is singular at a sampled point")
    g1 = [[c.truncate(1) for c in row] for row in gj]
    gi = inv(g1)
    dg = [[[gj[a][b].diff(c) for c in range(n)] for b in range(n)] for a in range(n)]  # order 1
    gam = [[[sum(gi[a][d] * (dg[d][c][b] + dg[d][b][c] - dg[b][c][d]) for d in range(n)) * 0.5
             for c in range(n)] for b in range(n)] for a in range(n)]
    R = np.zeros(points.shape[:-1] + (n,) * 4)
    for a, b, c, d in itertools.product(range(n), repeat=4):
        if c >= d:
            continue
        val = gam[a][d][b].partial(c) - gam[a][c][b].partial(d)
        for e in range(n):
            val = val + gam[a][c][e].value * gam[e][d][b].value - gam[a][d][e].value * gam[e][c][b].value
        R[..., a, b, c, d] = val
        R[..., a, b, d, c] = -val
    return RiemannResult(R, G)


def sectional_curvature(g: MetricField, points, u, v) -> np.ndarray:
    return riemann_curvature(g, points).sectional(u, v)


def metric_from_structure(cs: ContactSphere, sample=None) -> MetricField:
    """``e^t (Lambda^-1 (dt + beta)^2 + Lambda sum alpha_i^2)`` on ``(x1, x2, x3, t)``."""
    Lam, _, beta = structure_fields(cs)
    if sample is None and cs.box is not None:
        sample = cs.sample(50, seed=0)
    if sample is not None and np.any(Lam(np.atleast_2d(sample)) <= 0):
        raise ValueError("Lambda <= 0 at a sampled point")
    proj = ChartMap.from_callable(4, 3, lambda a, b, c, t: [a, b, c])
    dt = DifferentialForm.from_callable(4, 1, lambda *x: {(3,): 1.0})
    et = ScalarField(4, lambda a, b, c, t: exp(t))
    lam4 = proj.pull_function(Lam)
    coframe = [dt + pullback(proj, beta)] + [pullback(proj, a) for a in cs.alphas]
    return MetricField.from_coframe(coframe, [et / lam4, et * lam4, et * lam4, et * lam4])


# -- Kaehler side -------------------------------------------------------------------------


def kahler_metric(H: ScalarField, points) -> np.ndarray:
    """``g_{a bbar} = 1/2 H_{z_a zbar_b}`` at each point."""
    return 0.5 * complex_hessian(H.jet(points, 2))


def kahler_curvature(H: ScalarField, points) -> np.ndarray:
    """``K[..., a, b, c, d] = (G_{z_c zbar_d} - G_{z_c} G^-1 G_{zbar_d})_{a bbar}``."""
    Hj = H.jet(np.asarray(points, float), 4)
    k = 2
    G = 0.5 * complex_hessian(Hj)
    if np.any(np.abs(np.linalg.det(G)) < 1e-14):
        raise SingularMetricError("complex Hessian of the potential is singular")
    Gi = np.linalg.inv(G)

    def entry(holo, anti):
        return 0.5 * wirtinger(Hj, holo, anti)

    Gz = [np.stack([np.stack([entry((a, c), (b,)) for b in range(k)], -1) for a in range(k)], -2) for c in range(k)]
    Gzb = [np.stack([np.stack([entry((a,), (b, d)) for b in range(k)], -1) for a in range(k)], -2) for d in range(k)]
    K = np.zeros(Hj.batch_shape + (k,) * 4, dtype=complex)
    for c, d in itertools.product(range(k), repeat=2):
        Gzz = np.stack([np.stack([entry((a, c), (b, d)) for b in range(k)], -1) for a in range(k)], -2)
        K[..., :, :, c, d] = Gzz - Gz[c] @ Gi @ Gzb[d]
    return K


# -- back to contact spheres ------------------------------------------------------------------


def contact_sphere_from_triple(triple: SymplecticTriple, Y: VectorField, iota: ChartMap, sample=None,
                               tol: float = 1e-9, box=None) -> ContactSphere:
    """``alpha_i = iota^*(Y _| Omega_i)`` on a transversal ``iota``.

    With ``sample`` given, transversality and the tri-Liouville property of
    ``Y`` are checked at those transversal points first.
    """
    if iota.target_dim != 4 or iota.source_dim != 3:
        raise ValueError("transversal must embed a 3-chart into the 4-chart")
    if sample is not None:
        sample = np.atleast_2d(np.asarray(sample, float))
        image = iota(sample)
        J = iota.jacobian(sample)
        Yv = Y(image)
        det = np.linalg.det(np.concatenate([J, Yv[..., :, None]], axis=-1))
        scale = np.linalg.norm(Yv, axis=-1) * np.prod(np.linalg.norm(J, axis=-2), axis=-1)
        if np.any(np.abs(det) <= 1e-10 * scale):
            raise TransversalityError("Y is tangent to the transversal at a sampled point")
        res = tri_liouville_residual(triple, Y, image)
        if res > tol:
            raise ValueError(f"Y is not tri-Liouville: residual {res:.3g}")
    alphas = [pullback(iota, interior(Y, o)) for o in triple.omegas]
    return ContactSphere(alphas, box=box, name="from triple")
