"""Differential forms, vector fields and chart maps on coordinate charts.

Forms are stored as coefficient maps over strictly increasing index tuples,
so ``{(0, 2): f}`` is ``f dx0^dx2``. A :class:`DifferentialForm` is lazy: it
carries an evaluator that produces a :class:`FormJet` (coefficients as
jets) at a batch of points. Operations compose evaluators, and ``d`` simply
asks its argument for one more order of derivatives.

Evaluation convention: ``(dx^1 ^ ... ^ dx^k)(d_1, ..., d_k) = 1``, i.e. a
k-form evaluated on vectors is the sum over coefficients of the matching
k-by-k minors.
"""

from __future__ import annotations

import itertools
from typing import Callable, Mapping, Sequence

import numpy as np

from .jets import Jet, ScalarField

__all__ = [
    "FormJet",
    "DifferentialForm",
    "VectorField",
    "ChartMap",
    "wedge",
    "ext_d",
    "interior",
    "lie_derivative",
    "pullback",
    "dx",
]


def _sort_sign(idx: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``idx`` and the sorted tuple (sign 0 on repeats)."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


def _accumulate(out: dict, key, value) -> None:
    if key in out:
        out[key] = out[key] + value
    else:
        out[key] = value


# -- coefficient-level algebra (works for jets and plain arrays alike) ----------


def wedge_coeffs(a: Mapping, b: Mapping) -> dict:
    out: dict = {}
    for I, ca in a.items():
        for J, cb in b.items():
            sign, K = _sort_sign(I + J)
            if sign:
                _accumulate(out, K, ca * cb if sign > 0 else -(ca * cb))
    return out


def interior_coeffs(X: Sequence, a: Mapping) -> dict:
    out: dict = {}
    for I, c in a.items():
        for pos, v in enumerate(I):
            term = X[v] * c
            _accumulate(out, I[:pos] + I[pos + 1:], term if pos % 2 == 0 else -term)
    return out


def d_coeffs(a: Mapping[tuple, Jet], dim: int) -> dict:
    out: dict = {}
    for I, c in a.items():
        for v in range(dim):
            if v in I:
                continue
            sign = -1 if sum(1 for i in I if i < v) % 2 else 1
            K = tuple(sorted(I + (v,)))
            dc = c.diff(v)
            _accumulate(out, K, dc if sign > 0 else -dc)
    return out


class FormJet:
    """A k-form at a batch of points with jet-valued coefficients."""

    def __init__(self, degree: int, dim: int, comps: Mapping, order: int, batch: tuple):
        self.degree = degree
        self.dim = dim
        self.order = order
        self.batch = tuple(batch)
        self.comps: dict[tuple, Jet] = {}
        for I, c in comps.items():
            sign, K = _sort_sign(I)
            if len(I) != degree:
                raise ValueError(f"index {I} does not fit a {degree}-form")
            if sign == 0:
                continue
            if not isinstance(c, Jet):
                c = Jet.constant(np.asarray(c, dtype=float) + np.zeros(self.batch), dim, order)
            c = c.truncate(min(order, c.order)) if c.order > order else c
            _accumulate(self.comps, K, c if sign > 0 else -c)
        self.order = min([order] + [c.order for c in self.comps.values()])
        self.comps = {K: c.truncate(self.order) for K, c in self.comps.items()}

    def _new(self, degree, comps, order=None) -> FormJet:
        return FormJet(degree, self.dim, comps, self.order if order is None else order, self.batch)

    def __add__(self, other: FormJet) -> FormJet:
        out = dict(self.comps)
        for K, c in other.comps.items():
            _accumulate(out, K, c)
        return self._new(self.degree, out, min(self.order, other.order))

    def __neg__(self) -> FormJet:
        return self._new(self.degree, {K: -c for K, c in self.comps.items()})

    def __sub__(self, other: FormJet) -> FormJet:
        return self + (-other)

    def scale(self, f) -> FormJet:
        order = min(self.order, f.order) if isinstance(f, Jet) else self.order
        return self._new(self.degree, {K: c * f for K, c in self.comps.items()}, order)

    def wedge(self, other: FormJet) -> FormJet:
        if self.dim != other.dim:
            raise ValueError("forms live on charts of different dimension")
        return self._new(self.degree + other.degree, wedge_coeffs(self.comps, other.comps),
                         min(self.order, other.order))

    def d(self) -> FormJet:
        return self._new(self.degree + 1, d_coeffs(self.comps, self.dim), self.order - 1)

    def interior(self, X: Sequence) -> FormJet:
        order = min([self.order] + [x.order for x in X if isinstance(x, Jet)])
        return self._new(self.degree - 1, interior_coeffs(X, self.comps), order)

    def truncate(self, order: int) -> FormJet:
        return self._new(self.degree, {K: c.truncate(order) for K, c in self.comps.items()}, order)

    def coefficient(self, idx: Sequence[int]) -> np.ndarray:
        """Value of the coefficient of ``dx^idx`` (any index order)."""
        sign, K = _sort_sign(idx)
        if sign == 0 or K not in self.comps:
            return np.zeros(self.batch)
        return sign * self.comps[K].value

    def values(self) -> dict[tuple, np.ndarray]:
        return {K: c.value for K, c in self.comps.items()}

    def dense(self) -> np.ndarray:
        """Coefficient values as an array over all increasing index tuples."""
        keys = list(itertools.combinations(range(self.dim), self.degree))
        return np.stack([self.coefficient(K) for K in keys], axis=-1)

    def matrix(self) -> np.ndarray:
        """A 2-form as the antisymmetric matrix ``M`` with ``A(v, w) = v^T M w``."""
        if self.degree != 2:
            raise ValueError("matrix form only for 2-forms")
        M = np.zeros(self.batch + (self.dim, self.dim))
        for (a, b), c in self.comps.items():
            M[..., a, b] = c.value
            M[..., b, a] = -c.value
        return M

    def on(self, *vectors) -> np.ndarray:
        """Alternating evaluation on ``degree`` vectors, each of shape ``(..., dim)``."""
        if len(vectors) != self.degree:
            raise ValueError(f"a {self.degree}-form takes {self.degree} vectors")
        V = np.stack([np.asarray(v, dtype=float) for v in vectors], axis=-1) if vectors else None
        total = np.zeros(self.batch)
        for K, c in self.comps.items():
            total = total + c.value * (np.linalg.det(V[..., list(K), :]) if vectors else 1.0)
        return total

    def max_abs(self) -> float:
        if not self.comps:
            return 0.0
        return float(max(np.max(np.abs(c.value)) for c in self.comps.values()))


def _batch_of(points) -> tuple:
    return np.asarray(points).shape[:-1]


class DifferentialForm:
    """A lazily evaluated k-form on an n-dimensional chart."""

    def __init__(self, degree: int, dim: int, evaluator: Callable[[np.ndarray, int], FormJet],
                 name: str | None = None):
        if not 0 <= degree <= dim + 1:
            raise ValueError(f"degree {degree} on a {dim}-chart")
        self.degree = degree
        self.dim = dim
        self._evaluator = evaluator
        self.name = name

    def __repr__(self) -> str:
        return f"DifferentialForm(degree={self.degree}, dim={self.dim}, name={self.name!r})"

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_callable(cls, dim: int, degree: int, fn: Callable, name: str | None = None) -> DifferentialForm:
        """``fn(*coordinate_jets)`` returns ``{index_tuple: coefficient}``."""

        def evaluate(points, order):
            points = np.asarray(points, dtype=float)
            return FormJet(degree, dim, fn(*Jet.seed(points, order)), order, _batch_of(points))

        return cls(degree, dim, evaluate, name)

    @classmethod
    def from_coefficients(cls, dim: int, coeffs: Mapping[tuple, ScalarField | float]) -> DifferentialForm:
        degrees = {len(I) for I in coeffs}
        if len(degrees) != 1:
            raise ValueError("mixed degrees in coefficient map")
        degree = degrees.pop()

        def evaluate(points, order):
            comps = {I: (f.jet(points, order) if isinstance(f, ScalarField) else f) for I, f in coeffs.items()}
            return FormJet(degree, dim, comps, order, _batch_of(points))

        return cls(degree, dim, evaluate)

    @classmethod
    def zero(cls, dim: int, degree: int) -> DifferentialForm:
        return cls(degree, dim, lambda p, m: FormJet(degree, dim, {}, m, _batch_of(p)), name="0")

    @classmethod
    def function(cls, f: ScalarField) -> DifferentialForm:
        return cls(0, f.dim, lambda p, m: FormJet(0, f.dim, {(): f.jet(p, m)}, m, _batch_of(p)))

    # -- evaluation -----------------------------------------------------------

    def jet(self, points, order: int) -> FormJet:
        return self._evaluator(np.asarray(points, dtype=float), order)

    def at(self, points) -> FormJet:
        return self.jet(points, 0)

    def coefficient(self, idx: Sequence[int]) -> ScalarField:
        sign, K = _sort_sign(idx)

        def evaluate(points, order):
            fj = self.jet(points, order)
            c = fj.comps.get(K)
            if c is None or sign == 0:
                return Jet.constant(np.zeros(fj.batch), self.dim, order)
            return c if sign > 0 else -c

        return ScalarField(self.dim, evaluator=evaluate)

    # -- algebra ------------------------------------------------------------------

    def __add__(self, other: DifferentialForm) -> DifferentialForm:
        _same_shape(self, other)
        return DifferentialForm(self.degree, self.dim, lambda p, m: self.jet(p, m) + other.jet(p, m))

    def __sub__(self, other: DifferentialForm) -> DifferentialForm:
        _same_shape(self, other)
        return DifferentialForm(self.degree, self.dim, lambda p, m: self.jet(p, m) - other.jet(p, m))

    def __neg__(self) -> DifferentialForm:
        return DifferentialForm(self.degree, self.dim, lambda p, m: -self.jet(p, m))

    def __mul__(self, f) -> DifferentialForm:
        if isinstance(f, ScalarField):
            return DifferentialForm(self.degree, self.dim, lambda p, m: self.jet(p, m).scale(f.jet(p, m)))
        return DifferentialForm(self.degree, self.dim, lambda p, m: self.jet(p, m).scale(f))

    __rmul__ = __mul__

    def __xor__(self, other: DifferentialForm) -> DifferentialForm:
        return wedge(self, other)


def _same_shape(a: DifferentialForm, b: DifferentialForm) -> None:
    if a.dim != b.dim or a.degree != b.degree:
        raise ValueError(f"cannot add a {a.degree}-form on R^{a.dim} and a {b.degree}-form on R^{b.dim}")


def dx(dim: int, *idx: int) -> DifferentialForm:
    """Coordinate form ``dx^i1 ^ dx^i2 ^ ...`` on an ``dim``-chart."""
    return DifferentialForm.from_callable(dim, len(idx), lambda *x: {tuple(idx): 1.0}, name=f"dx{idx}")


class VectorField:
    """A vector field given by ``n`` component fields."""

    def __init__(self, dim: int, evaluator: Callable[[np.ndarray, int], list[Jet]], name: str | None = None):
        self.dim = dim
        self._evaluator = evaluator
        self.name = name

    @classmethod
    def from_callable(cls, dim: int, fn: Callable, name: str | None = None) -> VectorField:
        def evaluate(points, order):
            coords = Jet.seed(np.asarray(points, dtype=float), order)
            return [c if isinstance(c, Jet) else coords[0] * 0 + c for c in fn(*coords)]

        return cls(dim, evaluate, name)

    @classmethod
    def from_components(cls, components: Sequence[ScalarField]) -> VectorField:
        return cls(len(components), lambda p, m: [c.jet(p, m) for c in components])

    @classmethod
    def coordinate(cls, dim: int, var: int) -> VectorField:
        return cls.from_callable(dim, lambda *x: [1.0 if i == var else 0.0 for i in range(dim)])

    def jets(self, points, order: int) -> list[Jet]:
        return self._evaluator(np.asarray(points, dtype=float), order)

    def __call__(self, points) -> np.ndarray:
        return np.stack([j.value for j in self.jets(points, 0)], axis=-1)

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.dim, evaluator=lambda p, m: self.jets(p, m)[i])

    def apply(self, f: ScalarField) -> ScalarField:
        """Directional derivative ``X f``."""

        def evaluate(points, order):
            X = self.jets(points, order)
            fj = f.jet(points, order + 1)
            return sum(X[a] * fj.diff(a) for a in range(self.dim))

        return ScalarField(self.dim, evaluator=evaluate)

    def bracket(self, other: VectorField) -> VectorField:
        """Lie bracket ``[X, Y]^a = X^b d_b Y^a - Y^b d_b X^a``."""

        def evaluate(points, order):
            X = self.jets(points, order + 1)
            Y = other.jets(points, order + 1)
            Xm = [x.truncate(order) for x in X]
            Ym = [y.truncate(order) for y in Y]
            return [sum(Xm[b] * Y[a].diff(b) - Ym[b] * X[a].diff(b) for b in range(self.dim))
                    for a in range(self.dim)]

        return VectorField(self.dim, evaluate)

    def __mul__(self, f) -> VectorField:
        if isinstance(f, ScalarField):
            return VectorField(self.dim, lambda p, m: [x * f.jet(p, m) for x in self.jets(p, m)])
        return VectorField(self.dim, lambda p, m: [x * f for x in self.jets(p, m)])

    __rmul__ = __mul__

    def __add__(self, other: VectorField) -> VectorField:
        return VectorField(self.dim, lambda p, m: [a + b for a, b in zip(self.jets(p, m), other.jets(p, m))])

    def __sub__(self, other: VectorField) -> VectorField:
        return VectorField(self.dim, lambda p, m: [a - b for a, b in zip(self.jets(p, m), other.jets(p, m))])


class ChartMap:
    """A smooth map from an m-chart to an n-chart, by component fields."""

    def __init__(self, source_dim: int, target_dim: int, evaluator: Callable[[np.ndarray, int], list[Jet]],
                 name: str | None = None):
        self.source_dim = source_dim
        self.target_dim = target_dim
        self._evaluator = evaluator
        self.name = name

    @classmethod
    def from_callable(cls, source_dim: int, target_dim: int, fn: Callable, name: str | None = None) -> ChartMap:
        def evaluate(points, order):
            coords = Jet.seed(np.asarray(points, dtype=float), order)
            out = [c if isinstance(c, Jet) else coords[0] * 0 + c for c in fn(*coords)]
            if len(out) != target_dim:
                raise ValueError(f"map returned {len(out)} components, expected {target_dim}")
            return out

        return cls(source_dim, target_dim, evaluate, name)

    @classmethod
    def identity(cls, dim: int) -> ChartMap:
        return cls.from_callable(dim, dim, lambda *x: list(x), name="id")

    def jets(self, points, order: int) -> list[Jet]:
        return self._evaluator(np.asarray(points, dtype=float), order)

    def __call__(self, points) -> np.ndarray:
        return np.stack([j.value for j in self.jets(points, 0)], axis=-1)

    def jacobian(self, points) -> np.ndarray:
        """``J[..., i, a] = d phi^i / d y^a``."""
        J = self.jets(points, 1)
        return np.stack([np.stack([j.partial(a) for a in range(self.source_dim)], axis=-1) for j in J], axis=-2)

    def __matmul__(self, inner: ChartMap) -> ChartMap:
        """Composition ``self o inner``."""
        if inner.target_dim != self.source_dim:
            raise ValueError("chart maps do not compose")

        def evaluate(points, order):
            ij = inner.jets(points, order)
            at = np.stack([j.value for j in ij], axis=-1)
            return [o.compose(ij) for o in self.jets(at, order)]

        return ChartMap(inner.source_dim, self.target_dim, evaluate)

    def pull_function(self, f: ScalarField) -> ScalarField:
        if f.dim != self.target_dim:
            raise ValueError("function does not live on the map's target")
        return ScalarField(self.source_dim, evaluator=lambda p, m: f.apply(self.jets(p, m)))


# -- operations ----------------------------------------------------------------------


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    if a.dim != b.dim:
        raise ValueError("forms live on charts of different dimension")
    if a.degree + b.degree > a.dim:
        return DifferentialForm.zero(a.dim, a.degree + b.degree)
    return DifferentialForm(a.degree + b.degree, a.dim, lambda p, m: a.jet(p, m).wedge(b.jet(p, m)))


def ext_d(a: DifferentialForm) -> DifferentialForm:
    """Exterior derivative; on a top-degree form the result is the zero form."""
    if a.degree >= a.dim:
        return DifferentialForm.zero(a.dim, a.degree + 1)
    return DifferentialForm(a.degree + 1, a.dim, lambda p, m: a.jet(p, m + 1).d())


def interior(X: VectorField, a: DifferentialForm) -> DifferentialForm:
    if X.dim != a.dim:
        raise ValueError("vector field and form live on different charts")
    if a.degree == 0:
        raise ValueError("interior product of a 0-form")
    return DifferentialForm(a.degree - 1, a.dim, lambda p, m: a.jet(p, m).interior(X.jets(p, m)))


def lie_derivative(X: VectorField, a: DifferentialForm) -> DifferentialForm:
    """``L_X a = X _| da + d(X _| a)``."""
    if X.dim != a.dim:
        raise ValueError("vector field and form live on different charts")

    def evaluate(points, order):
        A = a.jet(points, order + 1)
        Xj = X.jets(points, order + 1)
        out = A.d().interior([x.truncate(order) for x in Xj]) if a.degree < a.dim else None
        if a.degree > 0:
            inner = A.interior(Xj).d()
            out = inner if out is None else out + inner
        return out

    return DifferentialForm(a.degree, a.dim, evaluate)


def pullback(phi: ChartMap, a: DifferentialForm) -> DifferentialForm:
    if phi.target_dim != a.dim:
        raise ValueError("form does not live on the map's target")
    m_dim = phi.source_dim

    def evaluate(points, order):
        pj = phi.jets(points, order + 1)
        image = np.stack([j.value for j in pj], axis=-1)
        A = a.jet(image, order)
        inner = [j.truncate(order) for j in pj]
        dphi = [{(s,): j.diff(s) for s in range(m_dim)} for j in pj]
        out: dict = {}
        for I, c in A.comps.items():
            term = {(): c.compose(inner)}
            for i in I:
                term = wedge_coeffs(term, dphi[i])
            for K, v in term.items():
                _accumulate(out, K, v)
        return FormJet(a.degree, m_dim, out, order, _batch_of(points))

    return DifferentialForm(a.degree, m_dim, evaluate)
