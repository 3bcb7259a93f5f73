"""Concrete geometric models.

* contact spheres on S^3 (hyperplane, gnomonic and stereographic charts of the
  nu-family) and the non-taut sphere on S^1 x S^2;
* Gibbons-Hawking triples, including the ``V = x1`` example and a monopole;
* the Monge-Ampere / spherical Helmholtz chain with its sample solutions and
  the Kaehler potential built from ``h``;
* the moduli picture ``delta -> delta^2`` and the canonical slice radius.

Chart coordinates on R^4 are ``(x0, x1, x2, x3)`` with ``z1 = x0 + i x1``,
``z2 = x2 + i x3``. Two-variable fields of the chain use ``(s1, s2)``,
``(r, theta)``, ``(t1, t2)`` and ``(x, y)`` in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from . import jets as J
from .contact import ContactSphere, MetricField, tautness_residuals
from .forms import ChartMap, DifferentialForm, FormJet, VectorField, pullback
from .hk import SymplecticTriple, contact_sphere_from_triple
from .jets import DomainError, Jet, ScalarField, invert_map
from .quat import nu_family_qform

__all__ = [
    # spheres
    "hyperplane_sphere",
    "chart_sphere",
    "stereographic",
    "nu_family_sphere",
    "s1s2_sphere",
    # Gibbons-Hawking
    "GHData",
    "CurlConditionError",
    "curl_residual",
    "harmonic_residual",
    "gh_triple",
    "gh_flat",
    "gh_example",
    "gh_monopole",
    "gh_transversal",
    "gh_contact_sphere",
    "sigma_metric",
    # Monge-Ampere / Helmholtz chain
    "DegenerateTransformError",
    "sample_h_field",
    "sample_h",
    "ma_residual",
    "sample_u_field",
    "spherical_laplacian",
    "spherical_helmholtz_residual",
    "TValues",
    "TInvValues",
    "transform_T",
    "transform_T_values",
    "transform_T_inv",
    "transform_T_inv_values",
    "u_from_h",
    "h_from_u",
    "legendre_k",
    "legendre_h",
    "eq_k_residual",
    "mercator_w",
    "eq_w_residual",
    "polar_u",
    "kahler_potential",
    "ma_complex_residual",
    # moduli
    "ModuliReport",
    "StripError",
    "canonical_delta",
    "delta_circle",
    "candidate_sphere",
    "moduli",
    "canonical_slice",
    "liouville_nu",
    "dt_norm_squared",
]

_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))
UNIT_BOX = (-np.ones(3), np.ones(3))


# -- contact spheres --------------------------------------------------------------------


def _hyperplane_coeffs(x):
    """``alpha_i = dx_i + x_j dx_k - x_k dx_j`` as coefficient dicts."""
    return [{(i,): 1.0, (k,): x[j], (j,): -x[k]} for i, j, k in _CYCLIC]


def hyperplane_sphere() -> ContactSphere:
    """The nu = 0 forms restricted to the hyperplane ``x0 = 1``."""
    alphas = [DifferentialForm.from_callable(3, 1, lambda *x, i=i: _hyperplane_coeffs(x)[i]) for i in range(3)]
    return ContactSphere(alphas, UNIT_BOX, name="hyperplane")


def chart_sphere() -> ContactSphere:
    """The nu = 0 sphere in the gnomonic chart ``x -> (1, x)/sqrt(1 + |x|^2)`` of S^3.

    Equal to the hyperplane forms divided by ``1 + |x|^2``; a Cartan structure
    with ``beta = 0`` and ``Lambda = 2``.
    """

    def coeffs(i, x):
        s = 1.0 / (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
        return {K: c * s for K, c in _hyperplane_coeffs(x)[i].items()}

    alphas = [DifferentialForm.from_callable(3, 1, lambda *x, i=i: coeffs(i, x)) for i in range(3)]
    return ContactSphere(alphas, UNIT_BOX, name="chart nu=0")


def stereographic(chart: str = "north") -> ChartMap:
    """Inverse stereographic projection R^3 -> S^3 in R^4.

    ``north`` misses ``(-1, 0, 0, 0)``, ``south`` misses ``(1, 0, 0, 0)``.
    """
    if chart not in ("north", "south"):
        raise ValueError("chart is 'north' or 'south'")
    sign = 1.0 if chart == "north" else -1.0

    def fn(a, b, c):
        r2 = a * a + b * b + c * c
        s = 1.0 / (1.0 + r2)
        return [sign * (1.0 - r2) * s, 2.0 * a * s, 2.0 * b * s, 2.0 * c * s]

    return ChartMap.from_callable(3, 4, fn, name=f"stereographic {chart}")


def nu_family_sphere(nu: float, chart: str = "north") -> ContactSphere:
    """Imaginary parts of the nu-family quaternionic form on S^3, in a stereographic chart."""
    F = nu_family_qform(nu).pullback(stereographic(chart))
    return ContactSphere(F.imag, UNIT_BOX, name=f"nu={nu:g} {chart}")


def s1s2_sphere() -> ContactSphere:
    """``x dtheta + y dz - z dy`` and cyclic, on S^1 x S^2 in the chart ``(theta, a, b)``.

    ``(x, y, z) = (sin a cos b, sin a sin b, cos a)``. A contact sphere that is not taut.
    """
    emb = ChartMap.from_callable(
        3, 4, lambda th, a, b: [th, J.sin(a) * J.cos(b), J.sin(a) * J.sin(b), J.cos(a)], name="S1xS2")

    def ambient(i):
        # chart (theta, x, y, z) = indices (0, 1, 2, 3)
        def fn(th, x, y, z):
            p = (x, y, z)
            _, j, k = _CYCLIC[i]
            return {(0,): p[i], (k + 1,): p[j], (j + 1,): -p[k]}

        return DifferentialForm.from_callable(4, 1, fn)

    alphas = [pullback(emb, ambient(i)) for i in range(3)]
    return ContactSphere(alphas, (np.array([-1.0, 0.4, -1.0]), np.array([1.0, 2.7, 1.0])), name="S1xS2")


# -- Gibbons-Hawking -------------------------------------------------------------------------


class CurlConditionError(ValueError):
    """``grad V = -curl b`` fails at a sampled point."""


@dataclass
class GHData:
    """Potential ``V`` and vector potential ``b`` on a box in R^3 (coordinates x1, x2, x3)."""

    V: ScalarField
    b: tuple[ScalarField, ScalarField, ScalarField]
    box: tuple[np.ndarray, np.ndarray]
    name: str = ""

    def sample(self, n: int, seed=0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        lo, hi = (np.asarray(v, float) for v in self.box)
        return lo + (hi - lo) * rng.random((n, 3))


def curl_residual(data: GHData, points) -> float:
    """``max |grad V + curl b|``."""
    Vj = data.V.jet(points, 1)
    bj = [c.jet(points, 1) for c in data.b]
    curl = [bj[2].partial(1) - bj[1].partial(2), bj[0].partial(2) - bj[2].partial(0),
            bj[1].partial(0) - bj[0].partial(1)]
    return float(max(np.max(np.abs(Vj.partial(m) + curl[m])) for m in range(3)))


def harmonic_residual(data: GHData, points) -> float:
    Vj = data.V.jet(points, 2)
    return float(np.max(np.abs(sum(Vj.partial(m, m) for m in range(3)))))


def gh_triple(data: GHData, tol: float = 1e-10, n_check: int = 50, seed: int = 0):
    """``Omega_i = (dtheta + beta) ^ dx_i + V dx_j ^ dx_k`` and the metric
    ``V^-1 (dtheta + beta)^2 + V sum dx_i^2`` on ``(theta, x1, x2, x3)``."""
    pts = data.sample(n_check, seed)
    res = curl_residual(data, pts)
    if res > tol:
        raise CurlConditionError(f"grad V + curl b = {res:.3g} exceeds {tol:g}")
    if np.any(data.V(pts) <= 0):
        raise ValueError("V is not positive on the box")
    drop = ChartMap.from_callable(4, 3, lambda th, a, b, c: [a, b, c])
    V = drop.pull_function(data.V)
    b = [drop.pull_function(c) for c in data.b]

    def theta_beta(points, order):
        # coefficients of dtheta + b1 dx1 + b2 dx2 + b3 dx3
        return [None] + [c.jet(points, order) for c in b]

    def omega(i, j, k):
        def evaluate(points, order):
            points = np.asarray(points, float)
            tb = theta_beta(points, order)
            Vj = V.jet(points, order)
            comps = {(0, i): 1.0, (j, k): Vj}
            for m in (1, 2, 3):
                if m != i:
                    comps[(m, i)] = comps.get((m, i), 0.0) + tb[m]
            return FormJet(2, 4, comps, order, points.shape[:-1])

        return DifferentialForm(2, 4, evaluate)

    omegas = [omega(1, 2, 3), omega(2, 3, 1), omega(3, 1, 2)]
    lo, hi = (np.asarray(v, float) for v in data.box)
    triple = SymplecticTriple(omegas, (np.append(-1.0, lo), np.append(1.0, hi)), name=data.name)
    dth = DifferentialForm.from_callable(4, 1, lambda *x: {(0,): 1.0})
    beta = DifferentialForm.from_coefficients(4, {(m,): b[m - 1] for m in (1, 2, 3)})
    coframe = [dth + beta] + [DifferentialForm.from_callable(4, 1, lambda *x, m=m: {(m,): 1.0}) for m in (1, 2, 3)]
    metric = MetricField.from_coframe(coframe, [1.0 / V, V, V, V])
    return triple, metric


def _coord3(i):
    return ScalarField.coordinate(3, i)


def gh_flat() -> GHData:
    zero = ScalarField.constant(3, 0.0)
    return GHData(ScalarField.constant(3, 1.0), (zero, zero, zero), UNIT_BOX, name="flat")


def _example_data() -> GHData:
    zero = ScalarField.constant(3, 0.0)
    box = (np.array([0.5, -1.0, -1.0]), np.array([3.0, 1.0, 1.0]))
    return GHData(_coord3(0), (zero, _coord3(2), zero), box, name="V=x1")


def gh_example():
    """The ``V = x1``, ``beta = x3 dx2`` triple, its tri-Liouville field and metric."""
    triple, metric = gh_triple(_example_data())
    Y = VectorField.from_callable(4, lambda x0, x1, x2, x3: [2.0 / 3.0 * x0, x1 / 3.0, x2 / 3.0, x3 / 3.0],
                                  name="Y")
    return triple, Y, metric


def gh_monopole() -> GHData:
    """``V = 1/rho`` with the Dirac potential ``b = (-y, x, 0) / (rho (rho + z))``, away from the axis."""

    def rho(x, y, z):
        return J.sqrt(x * x + y * y + z * z)

    V = ScalarField(3, lambda x, y, z: 1.0 / rho(x, y, z))
    b1 = ScalarField(3, lambda x, y, z: -y / (rho(x, y, z) * (rho(x, y, z) + z)))
    b2 = ScalarField(3, lambda x, y, z: x / (rho(x, y, z) * (rho(x, y, z) + z)))
    box = (np.array([0.5, -0.5, -0.5]), np.array([1.5, 0.5, 0.5]))
    return GHData(V, (b1, b2, ScalarField.constant(3, 0.0)), box, name="monopole")


def gh_transversal() -> ChartMap:
    """The hyperplane ``x0 = 1`` with chart ``(x1, x2, x3)``."""
    return ChartMap.from_callable(3, 4, lambda a, b, c: [1.0, a, b, c], name="x0=1")


def gh_contact_sphere(check: bool = True) -> ContactSphere:
    """Taut contact sphere induced by the example on ``{x0 = 1}``."""
    triple, Y, _ = gh_example()
    box = (np.array([0.5, -1.0, -1.0]), np.array([3.0, 1.0, 1.0]))
    sample = None
    if check:
        rng = np.random.default_rng(0)
        sample = box[0] + (box[1] - box[0]) * rng.random((20, 3))
    cs = contact_sphere_from_triple(triple, Y, gh_transversal(), sample=sample, box=box)
    cs.name = "GH x0=1"
    return cs


def sigma_metric(metric: MetricField) -> MetricField:
    """Restriction of a GH metric to ``Sigma = {x2 = x3 = 0}``, chart ``(x0, x1)``."""
    return metric.pullback(ChartMap.from_callable(2, 4, lambda a, b: [a, b, 0.0, 0.0]))


# -- Monge-Ampere / Helmholtz chain --------------------------------------------------------------


class DegenerateTransformError(ValueError):
    """A transformation of the chain is singular at the requested point."""


def _F(xi):
    """``int_1^xi sqrt(t^2 - 1) dt = 1/2 (xi sqrt(xi^2 - 1) - arccosh xi)``."""
    return 0.5 * (xi * J.sqrt(xi * xi - 1.0) - J.arccosh(xi))


def _G(t):
    """``int_0^t sqrt(1 + s^2) ds = 1/2 (t sqrt(1 + t^2) + arcsinh t)``."""
    return 0.5 * (t * J.sqrt(1.0 + t * t) + J.arcsinh(t))


def _check_uprime(points) -> None:
    p = np.asarray(points, float)
    s1, s2 = p[..., 0], p[..., 1]
    if np.any(np.abs(s1) >= np.pi / 2) or np.any(s2 < np.cos(s1)):
        raise DomainError("point outside U' = {|s1| < pi/2, s2 >= cos s1}")


def sample_h_field() -> ScalarField:
    """``h(s1, s2) = cos s1 int_1^{s2/cos s1} sqrt(xi^2 - 1) dxi`` on U'."""

    def evaluate(points, order):
        _check_uprime(points)
        s1, s2 = Jet.seed(points, order)
        c = J.cos(s1)
        return c * _F(s2 / c)

    return ScalarField(2, evaluator=evaluate, name="h")


def sample_h(p, order: int = 4) -> Jet:
    return J.eval_jet(sample_h_field(), p, order)


def ma_residual(h: ScalarField, points) -> np.ndarray:
    """``h11 h22 - h12^2 + h h22 - h2^2 - 1``."""
    j = h.jet(points, 2)
    h11, h12, h22 = j.partial(0, 0), j.partial(0, 1), j.partial(1, 1)
    return h11 * h22 - h12**2 + j.value * h22 - j.partial(1) ** 2 - 1.0


def sample_u_field() -> ScalarField:
    """``u(r, theta) = cos theta sin r g(r)`` with ``g(r) = int_{cot r}^0 sqrt(1 + t^2) dt``."""

    def fn(r, th):
        return J.cos(th) * J.sin(r) * (-_G(J.cos(r) / J.sin(r)))

    return ScalarField(2, fn, name="u")


def _check_poles(r) -> None:
    if np.any(np.abs(np.sin(r)) < 1e-12):
        raise DomainError("spherical Laplacian evaluated at a pole")


def spherical_laplacian(u: ScalarField, points) -> np.ndarray:
    """``cot r u_r + u_rr + u_thth / sin^2 r`` in the chart ``(r, theta)``."""
    points = np.asarray(points, float)
    r = points[..., 0]
    _check_poles(r)
    j = u.jet(points, 2)
    return np.cos(r) / np.sin(r) * j.partial(0) + j.partial(0, 0) + j.partial(1, 1) / np.sin(r) ** 2


def spherical_helmholtz_residual(u: ScalarField, points) -> np.ndarray:
    """``Delta u + 2 u`` on the round unit sphere."""
    return spherical_laplacian(u, points) + 2.0 * u(points)


@dataclass
class TValues:
    theta: np.ndarray
    r: np.ndarray
    u: np.ndarray
    u_r: np.ndarray
    u_theta: np.ndarray


@dataclass
class TInvValues:
    s1: np.ndarray
    s2: np.ndarray
    h: np.ndarray
    h_s1: np.ndarray
    h_s2: np.ndarray


def transform_T_values(s1, s2, h, h1, h2) -> TValues:
    """``r = arccot h_s2``, ``u = -s2 cos r + h sin r`` and the first derivatives of ``u``."""
    r = J.arccot(np.asarray(h2, float))
    sr, cr = np.sin(r), np.cos(r)
    return TValues(np.asarray(s1, float), r, -s2 * cr + h * sr, s2 * sr + h * cr, h1 * sr)


def transform_T(h: ScalarField, points) -> TValues:
    points = np.asarray(points, float)
    j = h.jet(points, 2)
    if np.any(j.partial(1, 1) == 0):
        raise DegenerateTransformError("h_s2s2 = 0: transform (T) is singular")
    return transform_T_values(points[..., 0], points[..., 1], j.value, j.partial(0), j.partial(1))


def transform_T_inv_values(r, theta, u, u_r, u_theta) -> TInvValues:
    """``s2 = u_r sin r - u cos r``, ``h = u_r cos r + u sin r``, ``h_s1 = u_th / sin r``, ``h_s2 = cot r``."""
    r = np.asarray(r, float)
    _check_poles(r)
    sr, cr = np.sin(r), np.cos(r)
    return TInvValues(np.asarray(theta, float), u_r * sr - u * cr, u_r * cr + u * sr, u_theta / sr, cr / sr)


def transform_T_inv(u: ScalarField, points) -> TInvValues:
    points = np.asarray(points, float)
    j = u.jet(points, 2)
    if np.any(j.value + j.partial(0, 0) == 0):
        raise DegenerateTransformError("u + u_rr = 0: transform (T^-1) is singular")
    return transform_T_inv_values(points[..., 0], points[..., 1], j.value, j.partial(0), j.partial(1))


def _newton(fn: Callable, dfn: Callable, x0: np.ndarray) -> np.ndarray:
    x0 = np.asarray(x0, float)
    if x0.size == 0:
        return x0
    return np.asarray(optimize.newton(fn, x0, fprime=dfn, tol=1e-15, maxiter=100))


def _first_order_at_least(evaluate: Callable) -> Callable:
    # inverting a change of variables needs its first derivatives
    return lambda points, order: evaluate(points, max(order, 1)).truncate(order)


def _transformed(points, order, preimage, forward, build):
    """Shared machinery for fields defined through a change of variables.

    ``preimage(points)`` returns source points mapping to ``points``;
    ``forward(src_jets)`` gives the target coordinates as jets in the source
    variables; ``build(src_of_target, target_coords)`` assembles the field.
    """
    src = preimage(points)
    sj = Jet.seed(src, order + 1)
    fwd = forward(sj, order)
    inverse = invert_map(fwd, base=np.moveaxis(src, -1, 0))
    tgt = Jet.seed(np.asarray(points, float), order)
    return build(inverse, tgt, order)


def u_from_h(h: ScalarField, s2_guess: Callable) -> ScalarField:
    """The Helmholtz solution ``u(r, theta)`` obtained from ``h`` by (T).

    ``s2_guess(r, theta)`` seeds the Newton solve for ``h_s2(theta, s2) = cot r``.
    """

    def preimage(points):
        r, th = points[..., 0], points[..., 1]

        def f(s2):
            return h.jet(np.stack([th, s2], -1), 1).partial(1) - np.cos(r) / np.sin(r)

        def df(s2):
            return h.jet(np.stack([th, s2], -1), 2).partial(1, 1)

        return np.stack([th, _newton(f, df, s2_guess(r, th))], -1)

    def evaluate(points, order):
        points = np.asarray(points, float)
        _check_poles(points[..., 0])

        def forward(sj, m):
            hj = h.apply(sj)
            return [J.arccot(hj.diff(1)), sj[0].truncate(m)]

        def build(s_of, tgt, m):
            r = tgt[0]
            hs = h.jet(np.stack([c.value for c in s_of], -1), m).compose(s_of)
            return -s_of[1] * J.cos(r) + hs * J.sin(r)

        return _transformed(points, order, preimage, forward, build)

    return ScalarField(2, evaluator=_first_order_at_least(evaluate), name="u from h")


def h_from_u(u: ScalarField, r_guess: Callable) -> ScalarField:
    """The Monge-Ampere solution ``h(s1, s2)`` obtained from ``u`` by (T^-1).

    ``r_guess(s1, s2)`` seeds the Newton solve for ``u_r sin r - u cos r = s2``.
    """

    def preimage(points):
        s1, s2 = points[..., 0], points[..., 1]

        def f(r):
            j = u.jet(np.stack([r, s1], -1), 1)
            return j.partial(0) * np.sin(r) - j.value * np.cos(r) - s2

        def df(r):
            j = u.jet(np.stack([r, s1], -1), 2)
            return (j.value + j.partial(0, 0)) * np.sin(r)

        return np.stack([_newton(f, df, r_guess(s1, s2)), s1], -1)

    def evaluate(points, order):
        points = np.asarray(points, float)

        def forward(rj, m):
            uj = u.apply(rj)
            r = rj[0].truncate(m)
            return [rj[1].truncate(m), uj.diff(0) * J.sin(r) - uj.truncate(m) * J.cos(r)]

        def build(r_of, tgt, m):
            at = np.stack([c.value for c in r_of], -1)
            uj = u.jet(at, m + 1)
            r = r_of[0]
            return uj.diff(0).compose(r_of) * J.cos(r) + uj.truncate(m).compose(r_of) * J.sin(r)

        # h needs u_r, so evaluate the inverse one order higher
        src = preimage(points)
        rj = Jet.seed(src, order + 1)
        inverse = invert_map(forward(rj, order), base=np.moveaxis(src, -1, 0))
        return build(inverse, None, order)

    return ScalarField(2, evaluator=_first_order_at_least(evaluate), name="h from u")


def legendre_k(h: ScalarField, s2_guess: Callable) -> ScalarField:
    """``k(t1, t2) = h - s2 h_s2`` with ``t1 = s1``, ``t2 = h_s2``.

    ``s2_guess(t1, t2)`` seeds the Newton solve for ``h_s2(t1, s2) = t2``.
    """

    def preimage(points):
        t1, t2 = points[..., 0], points[..., 1]

        def f(s2):
            return h.jet(np.stack([t1, s2], -1), 1).partial(1) - t2

        def df(s2):
            j = h.jet(np.stack([t1, s2], -1), 2).partial(1, 1)
            if np.any(j == 0):
                raise DegenerateTransformError("h_s2s2 = 0: Legendre transform is singular")
            return j

        return np.stack([t1, _newton(f, df, s2_guess(t1, t2))], -1)

    def evaluate(points, order):
        def forward(sj, m):
            return [sj[0].truncate(m), h.apply(sj).diff(1)]

        def build(s_of, tgt, m):
            hs = h.jet(np.stack([c.value for c in s_of], -1), m).compose(s_of)
            return hs - s_of[1] * tgt[1]

        return _transformed(np.asarray(points, float), order, preimage, forward, build)

    return ScalarField(2, evaluator=_first_order_at_least(evaluate), name="k")


def legendre_h(k: ScalarField, t2_guess: Callable) -> ScalarField:
    """Inverse transform: ``s1 = t1``, ``s2 = -k_t2``, ``h = k - t2 k_t2``.

    ``t2_guess(s1, s2)`` seeds the Newton solve for ``-k_t2(s1, t2) = s2``.
    """

    def preimage(points):
        s1, s2 = points[..., 0], points[..., 1]

        def f(t2):
            return -k.jet(np.stack([s1, t2], -1), 1).partial(1) - s2

        def df(t2):
            return -k.jet(np.stack([s1, t2], -1), 2).partial(1, 1)

        return np.stack([s1, _newton(f, df, t2_guess(s1, s2))], -1)

    def evaluate(points, order):
        points = np.asarray(points, float)
        src = preimage(points)
        tj = Jet.seed(src, order + 1)
        kj = k.apply(tj)
        fwd = [tj[0].truncate(order), -kj.diff(1)]
        t_of = invert_map(fwd, base=np.moveaxis(src, -1, 0))
        at = np.stack([c.value for c in t_of], -1)
        kk = k.jet(at, order + 1)
        return kk.truncate(order).compose(t_of) - t_of[1] * kk.diff(1).compose(t_of)

    return ScalarField(2, evaluator=_first_order_at_least(evaluate), name="h from k")


def eq_k_residual(k: ScalarField, points) -> np.ndarray:
    """``k11 + (1 + t2^2) k22 - t2 k2 + k``."""
    points = np.asarray(points, float)
    t2 = points[..., 1]
    j = k.jet(points, 2)
    return j.partial(0, 0) + (1.0 + t2**2) * j.partial(1, 1) - t2 * j.partial(1) + j.value


def mercator_w(k: ScalarField) -> ScalarField:
    """``w(x, y) = k(x, sinh y) / cosh y``."""
    return ScalarField(2, evaluator=lambda p, m: _mercator(k, p, m), name="w")


def _mercator(k, points, order):
    x, y = Jet.seed(np.asarray(points, float), order)
    return k.apply([x, J.sinh(y)]) / J.cosh(y)


def eq_w_residual(w: ScalarField, points) -> np.ndarray:
    """``w_xx + w_yy + 2 w / cosh^2 y``."""
    points = np.asarray(points, float)
    j = w.jet(points, 2)
    return j.partial(0, 0) + j.partial(1, 1) + 2.0 * j.value / np.cosh(points[..., 1]) ** 2


def polar_u(w: ScalarField) -> ScalarField:
    """``u(r, theta) = w(theta, y)`` with ``cosh y = 1/sin r``, ``sinh y = cot r``."""

    def fn(r, th):
        return w.apply([th, J.arcsinh(J.cos(r) / J.sin(r))])

    return ScalarField(2, fn, name="u from w")


def kahler_potential(h: ScalarField) -> ScalarField:
    """``H = e^{2 Re z1} h(2 Im z1, 2 Re z2)`` on R^4."""
    return ScalarField(4, lambda x0, x1, x2, x3: J.exp(2.0 * x0) * h.apply([2.0 * x1, 2.0 * x2]), name="H")


def ma_complex_residual(H: ScalarField, points) -> np.ndarray:
    """``det(H_{z_a zbar_b}) - |e^{2 z1}|^2``."""
    points = np.asarray(points, float)
    Hm = J.complex_hessian(H.jet(points, 2))
    return np.real(np.linalg.det(Hm)) - np.exp(4.0 * points[..., 0])


# -- moduli and canonical slice --------------------------------------------------------------------


class StripError(ValueError):
    """``|Re delta| >= 1/2``."""


def canonical_delta(delta: complex) -> complex:
    """Representative of ``delta ~ -delta`` with ``Re >= 0`` (``Im >= 0`` when ``Re = 0``)."""
    delta = complex(delta)
    if delta.real < 0 or (delta.real == 0 and delta.imag < 0):
        delta = -delta
    return delta + 0.0  # normalises -0.0


def _complex_one_forms(c1: complex, c2: complex):
    """Real and imaginary parts of ``c1 z1 dz2 + c2 z2 dz1`` on R^4, as coefficient dicts."""

    def parts(x0, x1, x2, x3):
        # z1 dz2 = (x0 + i x1)(dx2 + i dx3); z2 dz1 = (x2 + i x3)(dx0 + i dx1)
        a = (c1.real * x0 - c1.imag * x1, c1.real * x1 + c1.imag * x0)  # c1 z1
        b = (c2.real * x2 - c2.imag * x3, c2.real * x3 + c2.imag * x2)  # c2 z2
        re = {(2,): a[0], (3,): -a[1], (0,): b[0], (1,): -b[1]}
        im = {(2,): a[1], (3,): a[0], (0,): b[1], (1,): b[0]}
        return re, im

    return parts


def delta_circle(delta: complex):
    """``(alpha_2, alpha_3)`` with ``alpha_2 + i alpha_3 = (1/2 + delta) z1 dz2 - (1/2 - delta) z2 dz1`` on R^4."""
    parts = _complex_one_forms(0.5 + delta, -(0.5 - delta))
    a2 = DifferentialForm.from_callable(4, 1, lambda *x: parts(*x)[0])
    a3 = DifferentialForm.from_callable(4, 1, lambda *x: parts(*x)[1])
    return a2, a3


def _alpha1_quarter(nu: float) -> DifferentialForm:
    """``(i/4)(z1 dz1bar - z1bar dz1 + z2 dz2bar - z2bar dz2) - (nu/2) d(|z1|^2 - |z2|^2)``."""
    def fn(x0, x1, x2, x3):
        return {(0,): -0.5 * x1 - nu * x0, (1,): 0.5 * x0 - nu * x1,
                (2,): -0.5 * x3 + nu * x2, (3,): 0.5 * x2 + nu * x3}

    return DifferentialForm.from_callable(4, 1, fn)


def candidate_sphere(delta: complex, chart: str = "north") -> ContactSphere:
    """The delta-circle completed by the nu-family ``alpha_1`` (``nu = Im delta``), on S^3.

    Taut exactly when ``delta`` is purely imaginary, where it is half the
    nu-family sphere.
    """
    delta = complex(delta)
    a2, a3 = delta_circle(delta)
    phi = stereographic(chart)
    forms = [pullback(phi, f) for f in (_alpha1_quarter(delta.imag), a2, a3)]
    return ContactSphere(forms, UNIT_BOX, name=f"candidate delta={delta:g}")


@dataclass
class ModuliReport:
    delta: complex
    nu: float
    delta_squared: complex
    inside_parabola: bool
    extends_to_sphere: bool
    sphere: ContactSphere | None = field(default=None, repr=False)
    candidate_residual: float | None = None

    def as_dict(self) -> dict:
        return {
            "delta": [self.delta.real, self.delta.imag],
            "nu": self.nu,
            "delta_squared": [self.delta_squared.real, self.delta_squared.imag],
            "inside_parabola": self.inside_parabola,
            "extends_to_sphere": self.extends_to_sphere,
            "candidate_residual": self.candidate_residual,
        }


def moduli(delta: complex, tol: float = 1e-12, n_points: int = 20, seed: int = 0) -> ModuliReport:
    """Place ``delta`` in the strip picture and decide whether its circle extends to a sphere.

    If not, the natural candidate (the circle paired with the nu-family
    ``alpha_1``, ``nu = Im delta``) is evaluated and its largest tautness
    residual over ``n_points`` generic points is reported.
    """
    delta = complex(delta)
    if abs(delta.real) >= 0.5:
        raise StripError(f"|Re delta| = {abs(delta.real):g} is not below 1/2")
    d = canonical_delta(delta)
    nu = d.imag
    sq = d * d
    inside = sq.real < 0.25 - sq.imag**2
    extends = abs(d.real) <= tol
    if extends:
        return ModuliReport(d, nu, sq, inside, True, sphere=nu_family_sphere(nu))
    cs = candidate_sphere(d)
    pts = cs.sample(n_points, seed)
    resid = float(np.max(np.abs(tautness_residuals(cs, pts))))
    return ModuliReport(d, nu, sq, inside, False, candidate_residual=resid)


def canonical_slice(nu: float) -> float:
    """Radius ``2 / sqrt(1 + 4 nu^2)`` of the slice ``|dt| = 1``."""
    return 2.0 / np.sqrt(1.0 + 4.0 * nu * nu)


def liouville_nu(nu: float) -> VectorField:
    """``Y = 2 Re((1/2 + i nu) z1 d/dz1 + (1/2 - i nu) z2 d/dz2)`` on R^4."""

    def fn(x0, x1, x2, x3):
        return [0.5 * x0 - nu * x1, 0.5 * x1 + nu * x0, 0.5 * x2 + nu * x3, 0.5 * x3 - nu * x2]

    return VectorField.from_callable(4, fn, name=f"Y_nu={nu:g}")


def dt_norm_squared(nu: float, points, metric=None) -> np.ndarray:
    """``g(Y, Y)`` for the flat metric (or a given ``(..., 4, 4)`` metric array)."""
    points = np.asarray(points, float)
    Y = liouville_nu(nu)(points)
    G = np.broadcast_to(np.eye(4), points.shape[:-1] + (4, 4)) if metric is None else metric
    return np.einsum("...a,...ab,...b->...", Y, G, Y)
