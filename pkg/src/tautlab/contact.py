"""Contact spheres on 3-charts: tautness, structure data, metrics, Reeb fields.

Pointwise algebra uses the cross-product picture of R^3: a 2-form ``w`` is
stored as the vector ``(w_12, w_20, w_01)``, the wedge of two 1-forms is
their cross product and ``a ^ w`` is ``a . w`` times ``dx0^dx1^dx2``.

For a taut sphere, ``d alpha_i = beta ^ alpha_i + Lambda alpha_j ^ alpha_k``.
Writing every ``d alpha_i`` in the basis ``(alpha_2^alpha_3, alpha_3^alpha_1,
alpha_1^alpha_2)`` gives a 3x3 matrix ``C = Lambda I + [b]`` where ``[b]`` is
the skew matrix carrying ``beta = sum b_m alpha_m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .forms import ChartMap, DifferentialForm, FormJet, VectorField
from .jets import Jet, ScalarField, det3

__all__ = [
    "ContactSphere",
    "StructureData",
    "MetricField",
    "CartanReport",
    "DegenerateVolumeError",
    "IllConditionedCoframeError",
    "NonContactError",
    "NormalisationError",
    "contact_residual",
    "tautness_residuals",
    "wedge_matrix",
    "extract_structure",
    "structure_fields",
    "normalise",
    "short_metric",
    "long_metric",
    "reeb_field",
    "reeb_vector_field",
    "is_cartan",
    "COND_LIMIT",
]

COND_LIMIT = 1e10
VOLUME_TOL = 1e-12


class DegenerateVolumeError(ValueError):
    """alpha_1 ^ alpha_2 ^ alpha_3 vanishes at a sampled point."""


class IllConditionedCoframeError(ValueError):
    """The coframe matrix is too close to singular for a reliable solve."""


class NonContactError(ValueError):
    """A 1-form fails the contact condition where it was needed."""


class NormalisationError(ValueError):
    """A sphere is not c-normalised, or Lambda is not positive."""


_PAIRS = ((1, 2), (2, 0), (0, 1))


def _two_form_vectors(fj: FormJet) -> np.ndarray:
    return np.stack([fj.coefficient(p) for p in _PAIRS], axis=-1)


def _two_form_jets(fj: FormJet, zero: Jet) -> list[Jet]:
    out = []
    for p in _PAIRS:
        c = fj.comps.get(tuple(sorted(p)))
        out.append(zero if c is None else (c if p[0] < p[1] else -c))
    return out


class ContactSphere:
    """Three 1-forms on a 3-chart, ``alpha_1 ^ alpha_2 ^ alpha_3`` taken positive.

    ``box`` is an optional sampling box ``(lo, hi)`` inside the chart domain.
    """

    def __init__(self, alphas: Sequence[DifferentialForm], box=None, name: str | None = None):
        alphas = tuple(alphas)
        if len(alphas) != 3:
            raise ValueError("a contact sphere has three forms")
        for a in alphas:
            if a.dim != 3 or a.degree != 1:
                raise ValueError("contact sphere forms must be 1-forms on a 3-chart")
        self.alphas = alphas
        self.box = None if box is None else (np.asarray(box[0], float), np.asarray(box[1], float))
        self.name = name

    def __repr__(self) -> str:
        return f"ContactSphere(name={self.name!r})"

    def __iter__(self):
        return iter(self.alphas)

    def sample(self, n: int, seed: int | np.random.Generator = 0) -> np.ndarray:
        if self.box is None:
            raise ValueError("sphere has no sampling box")
        rng = np.random.default_rng(seed)
        lo, hi = self.box
        return lo + (hi - lo) * rng.random((n, 3))

    def scaled(self, v) -> ContactSphere:
        """``(v alpha_1, v alpha_2, v alpha_3)`` for a constant or a ScalarField ``v``."""
        return ContactSphere([a * v for a in self.alphas], self.box, self.name)

    def frames(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Coframe matrix ``A[..., i, :]`` and ``D[..., i, :]`` for ``d alpha_i`` (cross-product form)."""
        jets = [a.jet(points, 1) for a in self.alphas]
        A = np.stack([np.stack([fj.coefficient((m,)) for m in range(3)], axis=-1) for fj in jets], axis=-2)
        D = np.stack([_two_form_vectors(fj.d()) for fj in jets], axis=-2)
        return A, D


def _volume(A: np.ndarray) -> np.ndarray:
    vol = np.linalg.det(A)
    scale = np.prod(np.linalg.norm(A, axis=-1), axis=-1)
    if np.any(np.abs(vol) <= VOLUME_TOL * np.maximum(scale, 1e-300)):
        raise DegenerateVolumeError("alpha_1 ^ alpha_2 ^ alpha_3 vanishes at a sampled point")
    return vol


def wedge_matrix(cs: ContactSphere, points) -> np.ndarray:
    """``M[..., i, j]`` with ``alpha_i ^ d alpha_j = M_ij alpha_1 ^ alpha_2 ^ alpha_3``."""
    A, D = cs.frames(np.asarray(points, float))
    vol = _volume(A)
    return np.einsum("...im,...jm->...ij", A, D) / vol[..., None, None]


def contact_residual(cs: ContactSphere, lam, points) -> np.ndarray:
    """Coefficient of ``(lam.alpha) ^ (lam.d alpha)`` against the volume form.

    ``lam`` is a unit 3-vector or a stack ``(L, 3)`` of them; in the latter
    case the result has a leading axis of length ``L``.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(np.abs(np.linalg.norm(lam, axis=-1) - 1.0) > 1e-12):
        raise ValueError("lambda must be a unit vector")
    M = wedge_matrix(cs, points)
    if lam.ndim == 1:
        return np.einsum("i,...ij,j->...", lam, M, lam)
    return np.einsum("li,...ij,lj->l...", lam, M, lam)


def tautness_residuals(cs: ContactSphere, points) -> np.ndarray:
    """Six residuals, shape ``(..., 6)``.

    The first three are ``M_11 - M_22, M_22 - M_33, M_33 - M_11`` and the last
    three ``M_12 + M_21, M_23 + M_32, M_31 + M_13`` (see :func:`wedge_matrix`).
    """
    M = wedge_matrix(cs, points)
    d = [M[..., 0, 0] - M[..., 1, 1], M[..., 1, 1] - M[..., 2, 2], M[..., 2, 2] - M[..., 0, 0]]
    s = [M[..., 0, 1] + M[..., 1, 0], M[..., 1, 2] + M[..., 2, 1], M[..., 2, 0] + M[..., 0, 2]]
    return np.stack(d + s, axis=-1)


# -- structure data -----------------------------------------------------------------

# unknowns (b1, b2, b3, Lambda); rows are C flattened row-major
_DESIGN = np.zeros((9, 4))
_DESIGN[[0, 4, 8], 3] = 1.0
for (_r, _c), (_k, _s) in {(0, 1): (2, 1), (1, 0): (2, -1), (1, 2): (0, 1), (2, 1): (0, -1),
                           (2, 0): (1, 1), (0, 2): (1, -1)}.items():
    _DESIGN[3 * _r + _c, _k] = _s
_DESIGN_PINV = np.linalg.pinv(_DESIGN)


def _structure_matrix(A: np.ndarray, D: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(A)
    if np.any(~np.isfinite(cond)) or np.any(cond > COND_LIMIT):
        raise IllConditionedCoframeError(f"coframe condition number {np.max(cond):.3g} exceeds {COND_LIMIT:g}")
    # C = D Cof^-1 with Cof = det(A) A^-T
    return np.einsum("...im,...lm->...il", D, A) / np.linalg.det(A)[..., None, None]


@dataclass
class StructureData:
    """beta and Lambda as fields, plus the fit at the sampled points."""

    beta: DifferentialForm
    Lambda: ScalarField
    b: tuple[ScalarField, ScalarField, ScalarField]
    points: np.ndarray
    Lambda_values: np.ndarray
    b_values: np.ndarray
    residuals: np.ndarray = field(repr=False)

    @property
    def residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0


def structure_fields(cs: ContactSphere) -> tuple[ScalarField, tuple[ScalarField, ...], DifferentialForm]:
    """Lambda, (b1, b2, b3) and beta as jet-evaluable fields.

    These are the least-squares projections of ``C`` (trace part and skew
    part), computed in jet arithmetic so they can be differentiated further.
    """

    def C_jets(points, order):
        fjs = [a.jet(points, order + 1) for a in cs.alphas]
        zero = Jet.constant(np.zeros(fjs[0].batch), 3, order)
        A = [[fj.comps[(m,)].truncate(order) if (m,) in fj.comps else zero for m in range(3)] for fj in fjs]
        D = [_two_form_jets(fj.d(), zero) for fj in fjs]
        det = det3(A)
        return [[sum(D[i][m] * A[l][m] for m in range(3)) / det for l in range(3)] for i in range(3)]

    Lam = ScalarField(3, evaluator=lambda p, m: sum(C_jets(p, m)[i][i] for i in range(3)) / 3.0)

    def b_field(k):
        r, c = _PAIRS[k]

        def evaluate(p, m):
            C = C_jets(p, m)
            return (C[r][c] - C[c][r]) * 0.5

        return ScalarField(3, evaluator=evaluate)

    b = tuple(b_field(k) for k in range(3))
    beta = cs.alphas[0] * b[0] + cs.alphas[1] * b[1] + cs.alphas[2] * b[2]
    return Lam, b, beta


def extract_structure(cs: ContactSphere, sample) -> StructureData:
    """Fit ``(b1, b2, b3, Lambda)`` at each sample point by least squares over nine equations."""
    points = np.atleast_2d(np.asarray(sample, dtype=float))
    A, D = cs.frames(points)
    C = _structure_matrix(A, D).reshape(points.shape[:-1] + (9,))
    x = C @ _DESIGN_PINV.T
    resid = np.linalg.norm(C - x @ _DESIGN.T, axis=-1)
    Lam, b, beta = structure_fields(cs)
    return StructureData(beta, Lam, b, points, x[..., 3], x[..., :3], resid)


def normalise(cs: ContactSphere, c: float = 1.0, sample=None) -> ContactSphere:
    """The representative ``v alpha`` with ``Lambda = c``, where ``v = Lambda / c``.

    Lambda is checked to be positive at ``sample`` (default: 50 points of the box).
    """
    if c <= 0:
        raise ValueError("normalisation constant must be positive")
    Lam, _, _ = structure_fields(cs)
    if sample is None and cs.box is not None:
        sample = cs.sample(50, seed=0)
    if sample is not None:
        vals = Lam(np.atleast_2d(sample))
        if np.any(vals <= 0):
            raise NormalisationError(f"Lambda <= 0 at a sampled point (min {np.min(vals):.3g})")
    return cs.scaled(Lam / float(c))


# -- metrics ------------------------------------------------------------------------


class MetricField:
    """A symmetric (0,2)-tensor field on an n-chart, evaluable as jets."""

    def __init__(self, dim: int, evaluator: Callable[[np.ndarray, int], list[list[Jet]]], name: str | None = None):
        self.dim = dim
        self._evaluator = evaluator
        self.name = name

    @classmethod
    def from_callable(cls, dim: int, fn: Callable, name: str | None = None) -> MetricField:
        """``fn(*coordinate_jets)`` returns an n-by-n nested list (numbers or jets)."""

        def evaluate(points, order):
            coords = Jet.seed(np.asarray(points, float), order)
            zero = coords[0] * 0.0
            return [[c if isinstance(c, Jet) else zero + c for c in row] for row in fn(*coords)]

        return cls(dim, evaluate, name)

    @classmethod
    def from_coframe(cls, forms: Sequence[DifferentialForm], weights: Sequence | None = None) -> MetricField:
        """``sum_a w_a theta_a (x) theta_a`` for 1-forms ``theta_a`` and constant or field weights."""
        dim = forms[0].dim
        weights = [1.0] * len(forms) if weights is None else list(weights)

        def evaluate(points, order):
            points = np.asarray(points, float)
            zero = Jet.constant(np.zeros(points.shape[:-1]), dim, order)
            rows = []
            for th in forms:
                fj = th.jet(points, order)
                rows.append([fj.comps.get((m,), zero) for m in range(dim)])
            ws = [w.jet(points, order) if isinstance(w, ScalarField) else w for w in weights]
            return [[sum((ws[a] * rows[a][i] * rows[a][j] for a in range(len(forms))), zero)
                     for j in range(dim)] for i in range(dim)]

        return cls(dim, evaluate)

    def jet(self, points, order: int) -> list[list[Jet]]:
        return self._evaluator(np.asarray(points, float), order)

    def __call__(self, points) -> np.ndarray:
        g = self.jet(points, 0)
        return np.stack([np.stack([c.value for c in row], axis=-1) for row in g], axis=-2)

    def __add__(self, other: MetricField) -> MetricField:
        return MetricField(self.dim, lambda p, m: [[a + b for a, b in zip(r, s)]
                                                    for r, s in zip(self.jet(p, m), other.jet(p, m))])

    def __sub__(self, other: MetricField) -> MetricField:
        return MetricField(self.dim, lambda p, m: [[a - b for a, b in zip(r, s)]
                                                    for r, s in zip(self.jet(p, m), other.jet(p, m))])

    def scale(self, f) -> MetricField:
        if isinstance(f, ScalarField):
            return MetricField(self.dim, lambda p, m: [[c * f.jet(p, m) for c in r] for r in self.jet(p, m)])
        return MetricField(self.dim, lambda p, m: [[c * f for c in r] for r in self.jet(p, m)])

    def pullback(self, phi: ChartMap) -> MetricField:
        """``(phi* g)_ab = d_a phi^i d_b phi^j g_ij(phi)``."""
        if phi.target_dim != self.dim:
            raise ValueError("metric does not live on the map's target")
        m_dim = phi.source_dim

        def evaluate(points, order):
            pj = phi.jets(points, order + 1)
            image = np.stack([j.value for j in pj], axis=-1)
            inner = [j.truncate(order) for j in pj]
            g = [[c.compose(inner) for c in row] for row in self.jet(image, order)]
            dphi = [[j.diff(a) for a in range(m_dim)] for j in pj]
            return [[sum(dphi[i][a] * dphi[j][b] * g[i][j] for i in range(self.dim) for j in range(self.dim))
                     for b in range(m_dim)] for a in range(m_dim)]

        return MetricField(m_dim, evaluate)

    def check_positive(self, points) -> np.ndarray:
        """Smallest eigenvalue at each point; raises if asymmetric or not positive."""
        G = self(points)
        if not np.allclose(G, np.swapaxes(G, -1, -2), rtol=1e-12, atol=1e-14):
            raise ValueError("metric is not symmetric")
        ev = np.linalg.eigvalsh(G)[..., 0]
        if np.any(ev <= 0):
            raise ValueError("metric is not positive definite at a sampled point")
        return ev


def _check_normalised(cs: ContactSphere, sample, tol: float) -> None:
    if sample is None:
        if cs.box is None:
            return
        sample = cs.sample(50, seed=0)
    M = wedge_matrix(cs, np.atleast_2d(sample))
    Lam = np.trace(M, axis1=-2, axis2=-1) / 3.0
    if np.max(np.abs(Lam - 1.0)) > tol:
        raise NormalisationError(f"sphere is not 1-normalised: Lambda deviates by {np.max(np.abs(Lam - 1.0)):.3g}")


def short_metric(cs: ContactSphere, sample=None, tol: float = 1e-8) -> MetricField:
    """``g_s = alpha_1^2 + alpha_2^2 + alpha_3^2`` of a 1-normalised sphere."""
    _check_normalised(cs, sample, tol)
    return MetricField.from_coframe(cs.alphas)


def long_metric(cs: ContactSphere, sample=None, tol: float = 1e-8) -> MetricField:
    """``g_l = beta^2 + alpha_1^2 + alpha_2^2 + alpha_3^2`` of a 1-normalised sphere."""
    _check_normalised(cs, sample, tol)
    _, _, beta = structure_fields(cs)
    return MetricField.from_coframe([beta, *cs.alphas])


# -- Reeb fields ----------------------------------------------------------------------


def reeb_field(alpha: DifferentialForm, points) -> np.ndarray:
    """Solve ``alpha(R) = 1``, ``R _| d alpha = 0`` at each point."""
    if alpha.dim != 3 or alpha.degree != 1:
        raise ValueError("Reeb fields are computed for 1-forms on 3-charts")
    fj = alpha.jet(np.asarray(points, float), 1)
    a = np.stack([fj.coefficient((m,)) for m in range(3)], axis=-1)
    w = _two_form_vectors(fj.d())
    ak = np.einsum("...m,...m->...", a, w)
    scale = np.linalg.norm(a, axis=-1) * np.linalg.norm(w, axis=-1)
    if np.any(np.abs(ak) <= 1e-12 * np.maximum(scale, 1e-300)):
        raise NonContactError("alpha ^ d alpha vanishes: no Reeb field")
    # d alpha has kernel spanned by its vector w; alpha(R) = 1 fixes the scale
    R = w / ak[..., None]
    return R


def reeb_vector_field(alpha: DifferentialForm) -> VectorField:
    """The Reeb field of a contact form as a jet-evaluable vector field."""

    def evaluate(points, order):
        fj = alpha.jet(points, order + 1)
        zero = Jet.constant(np.zeros(fj.batch), 3, order)
        a = [fj.comps[(m,)].truncate(order) if (m,) in fj.comps else zero for m in range(3)]
        w = _two_form_jets(fj.d(), zero)
        ak = sum(a[m] * w[m] for m in range(3))
        return [w[m] / ak for m in range(3)]

    return VectorField(3, evaluate)


@dataclass
class CartanReport:
    is_cartan: bool
    max_residual: float
    beta_max: float
    tolerance: float

    def __bool__(self) -> bool:
        return self.is_cartan


def is_cartan(cs: ContactSphere, sample, tol: float = 1e-9) -> CartanReport:
    """Check ``alpha_i ^ d alpha_j = 0`` for ``i != j`` at the sample points."""
    points = np.atleast_2d(np.asarray(sample, float))
    M = wedge_matrix(cs, points)
    off = M - np.einsum("...ii->...i", M)[..., None] * np.eye(3)
    resid = float(np.max(np.abs(off)))
    data = extract_structure(cs, points)
    beta_max = float(np.max(np.abs(data.b_values)))
    ok = resid < tol
    if ok and beta_max >= tol:
        # a Cartan structure forces beta = 0; anything else is an internal inconsistency
        raise ArithmeticError(f"Cartan residual {resid:.3g} but |beta| = {beta_max:.3g}")
    return CartanReport(ok, resid, beta_max, tol)
