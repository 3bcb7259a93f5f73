"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` stores the Taylor coefficients of a scalar quantity at a
point (or a batch of points) up to a fixed total degree. Arithmetic and the
elementary functions below act on those coefficients exactly, so every
partial derivative up to the truncation order is available without
finite-difference noise.

Coefficients live in an array of shape ``(ncoef, *batch)``; the first axis
runs over monomials in graded order (all degree-0 terms, then degree 1, ...),
so truncating to a lower order is a prefix slice.
"""

from __future__ import annotations

import functools
import itertools
import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

MAX_ORDER = 4


class DomainError(ValueError):
    """A field was evaluated outside its natural domain."""


class OrderError(ValueError):
    """A derivative order beyond what the engine supports was requested."""


@functools.lru_cache(maxsize=None)
def _monomials(dim: int, order: int) -> tuple[tuple[int, ...], ...]:
    monos = []
    for deg in range(order + 1):
        level = [a for a in itertools.product(range(deg + 1), repeat=dim) if sum(a) == deg]
        level.sort(reverse=True)
        monos.extend(level)
    return tuple(monos)


class _Tables:
    def __init__(self, dim: int, order: int):
        self.dim = dim
        self.order = order
        self.monos = _monomials(dim, order)
        self.index = {m: k for k, m in enumerate(self.monos)}
        self.degree = np.array([sum(m) for m in self.monos])
        self.factorial = np.array(
            [math.prod(math.factorial(e) for e in m) for m in self.monos], dtype=float
        )

        triples = []
        for i, a in enumerate(self.monos):
            for j, b in enumerate(self.monos):
                c = tuple(x + y for x, y in zip(a, b))
                if sum(c) <= order:
                    triples.append((self.index[c], i, j))
        triples.sort()
        k, i, j = (np.array(t) for t in zip(*triples))
        self.mul_i = i
        self.mul_j = j
        self.mul_starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])

        # d/dx_v maps the order-n jet to an order-(n-1) jet
        self.diff_src = []
        self.diff_fac = []
        lower = _monomials(dim, max(order - 1, 0)) if order > 0 else ()
        for v in range(dim):
            src, fac = [], []
            for b in lower:
                a = list(b)
                a[v] += 1
                src.append(self.index[tuple(a)])
                fac.append(b[v] + 1)
            self.diff_src.append(np.array(src, dtype=int))
            self.diff_fac.append(np.array(fac, dtype=float))

        # each nonconstant monomial = predecessor * x_var
        self.pred = np.zeros(len(self.monos), dtype=int)
        self.pred_var = np.zeros(len(self.monos), dtype=int)
        for k_, m in enumerate(self.monos[1:], start=1):
            v = next(i for i, e in enumerate(m) if e)
            b = list(m)
            b[v] -= 1
            self.pred[k_] = self.index[tuple(b)]
            self.pred_var[k_] = v


@functools.lru_cache(maxsize=None)
def _tables(dim: int, order: int) -> _Tables:
    return _Tables(dim, order)


def ncoef(dim: int, order: int) -> int:
    return math.comb(dim + order, order)


def _check_order(order: int) -> None:
    if order < 0 or order > MAX_ORDER:
        raise OrderError(f"derivative order {order} outside 0..{MAX_ORDER}")


class Jet:
    """Taylor coefficients of a scalar up to total degree ``order`` in ``dim`` variables."""

    __array_priority__ = 100

    def __init__(self, coeffs, dim: int, order: int):
        _check_order(order)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[0] != ncoef(dim, order):
            raise ValueError("coefficient count does not match dim/order")
        self.coeffs = coeffs
        self.dim = dim
        self.order = order

    # -- construction -------------------------------------------------------

    @classmethod
    def constant(cls, value, dim: int, order: int) -> Jet:
        value = np.asarray(value, dtype=float)
        c = np.zeros((ncoef(dim, order),) + value.shape)
        c[0] = value
        return cls(c, dim, order)

    @classmethod
    def variable(cls, value, var: int, dim: int, order: int) -> Jet:
        """The coordinate function ``x_var`` expanded around ``value``."""
        jet = cls.constant(value, dim, order)
        if order >= 1:
            jet.coeffs[1 + var] = 1.0
        return jet

    @classmethod
    def seed(cls, point, order: int) -> list[Jet]:
        """Coordinate jets for a point of shape ``(..., n)``."""
        point = np.asarray(point, dtype=float)
        dim = point.shape[-1]
        return [cls.variable(point[..., v], v, dim, order) for v in range(dim)]

    # -- inspection -----------------------------------------------------------

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    def partial(self, *idx: int) -> np.ndarray:
        """Partial derivative over the listed variable indices (repeats allowed)."""
        if len(idx) > self.order:
            raise OrderError(f"jet of order {self.order} has no derivative of order {len(idx)}")
        alpha = [0] * self.dim
        for v in idx:
            alpha[v] += 1
        t = _tables(self.dim, self.order)
        k = t.index[tuple(alpha)]
        return self.coeffs[k] * t.factorial[k]

    def partials(self) -> dict[tuple[int, ...], np.ndarray]:
        """All partials keyed by sorted variable-index tuples; ``()`` is the value."""
        t = _tables(self.dim, self.order)
        out = {}
        for k, m in enumerate(t.monos):
            key = tuple(v for v, e in enumerate(m) for _ in range(e))
            out[key] = self.coeffs[k] * t.factorial[k]
        return out

    def gradient(self) -> np.ndarray:
        return np.stack([self.partial(v) for v in range(self.dim)], axis=-1)

    def __repr__(self) -> str:
        return f"Jet(dim={self.dim}, order={self.order}, value={self.value!r})"

    # -- structural -----------------------------------------------------------

    def truncate(self, order: int) -> Jet:
        if order > self.order:
            raise OrderError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.coeffs[: ncoef(self.dim, order)], self.dim, order)

    def diff(self, var: int) -> Jet:
        """Derivative with respect to ``x_var`` as a jet one order lower."""
        if self.order == 0:
            raise OrderError("cannot differentiate an order-0 jet")
        t = _tables(self.dim, self.order)
        fac = t.diff_fac[var].reshape((-1,) + (1,) * len(self.batch_shape))
        return Jet(self.coeffs[t.diff_src[var]] * fac, self.dim, self.order - 1)

    def compose(self, inner: Sequence[Jet]) -> Jet:
        """Substitute jets for this jet's variables.

        ``self`` is the expansion of ``f`` about ``y0``; ``inner[i]`` expands
        ``y_i(x)`` about ``x0`` with ``y(x0) = y0``. Returns ``f(y(x))`` about ``x0``.
        """
        if len(inner) != self.dim:
            raise ValueError("composition needs one inner jet per variable")
        order = min(self.order, min(j.order for j in inner))
        inner = [j.truncate(order) for j in inner]
        outer = self.truncate(order)
        t = _tables(self.dim, order)
        deltas = [j - j.value for j in inner]
        powers: list[Jet | None] = [None] * len(t.monos)
        m_dim = inner[0].dim
        result = Jet.constant(outer.coeffs[0] + 0 * inner[0].value, m_dim, order)
        for k in range(1, len(t.monos)):
            p = t.pred[k]
            base = deltas[t.pred_var[k]]
            powers[k] = base if p == 0 else powers[p] * base
            result = result + powers[k] * outer.coeffs[k]
        return result

    def _apply(self, taylor: Sequence[np.ndarray]) -> Jet:
        """``f(self)`` given the Taylor coefficients ``f^(n)(a0)/n!`` of a univariate f."""
        out = Jet.constant(taylor[0], self.dim, self.order)
        if self.order == 0:
            return out
        delta = self - self.value
        power = delta
        for n in range(1, self.order + 1):
            out = out + power * taylor[n]
            if n < self.order:
                power = power * delta
        return out

    # -- arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> tuple[Jet, Jet]:
        if isinstance(other, Jet):
            if other.dim != self.dim:
                raise ValueError("jets over different variable counts")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, Jet.constant(other, self.dim, self.order)

    def _lift(self, other: np.ndarray) -> np.ndarray:
        # coefficient array broadcast against a batch-shaped constant
        shape = np.broadcast_shapes(self.batch_shape, other.shape)
        return np.broadcast_to(
            self.coeffs.reshape(self.coeffs.shape[:1] + (1,) * (len(shape) - len(self.batch_shape)) + self.batch_shape),
            self.coeffs.shape[:1] + shape,
        )

    def __add__(self, other) -> Jet:
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            c = self._lift(other).copy()
            c[0] += other
            return Jet(c, self.dim, self.order)
        a, b = self._coerce(other)
        if a.batch_shape != b.batch_shape:
            return Jet(a._lift(b.value) + b._lift(a.value), a.dim, a.order)
        return Jet(a.coeffs + b.coeffs, a.dim, a.order)

    __radd__ = __add__

    def __neg__(self) -> Jet:
        return Jet(-self.coeffs, self.dim, self.order)

    def __sub__(self, other) -> Jet:
        return self + (-other)

    def __rsub__(self, other) -> Jet:
        return (-self) + other

    def __mul__(self, other) -> Jet:
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self._lift(other) * other, self.dim, self.order)
        a, b = self._coerce(other)
        t = _tables(a.dim, a.order)
        if a.batch_shape != b.batch_shape:
            a, b = Jet(a._lift(b.value), a.dim, a.order), Jet(b._lift(a.value), b.dim, b.order)
        prod = a.coeffs[t.mul_i] * b.coeffs[t.mul_j]
        return Jet(np.add.reduceat(prod, t.mul_starts, axis=0), a.dim, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other) -> Jet:
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * reciprocal(other)

    def __rtruediv__(self, other) -> Jet:
        return reciprocal(self) * other

    def __pow__(self, p) -> Jet:
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(np.ones(self.batch_shape), self.dim, self.order)
            for _ in range(int(p)):
                out = out * self
            return out
        return power(self, float(p))


# -- elementary functions ------------------------------------------------------
#
# Each accepts a Jet or a plain number/array; plain inputs fall through to numpy.


def _taylor_from_derivatives(derivs: Sequence[np.ndarray]) -> list[np.ndarray]:
    return [d / math.factorial(n) for n, d in enumerate(derivs)]


def _univariate(x: Jet, value, derivative: Callable[[Jet], Jet]) -> Jet:
    """Apply ``f`` to ``x`` knowing ``f(a0)`` and a jet-capable ``f'``."""
    taylor = [np.asarray(value, dtype=float)]
    if x.order > 0:
        s = Jet.variable(x.value, 0, 1, x.order - 1)
        dc = derivative(s).coeffs
        taylor += [dc[n - 1] / n for n in range(1, x.order + 1)]
    return x._apply(taylor)


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    e = np.exp(x.value)
    return x._apply(_taylor_from_derivatives([e] * (x.order + 1)))


def log(x):
    if not isinstance(x, Jet):
        return np.log(x)
    a = x.value
    if np.any(a <= 0):
        raise DomainError("log of a nonpositive value")
    derivs = [np.log(a)] + [(-1) ** (n - 1) * math.factorial(n - 1) / a**n for n in range(1, x.order + 1)]
    return x._apply(_taylor_from_derivatives(derivs))


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cyc = [s, c, -s, -c]
    return x._apply(_taylor_from_derivatives([cyc[n % 4] for n in range(x.order + 1)]))


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cyc = [c, -s, -c, s]
    return x._apply(_taylor_from_derivatives([cyc[n % 4] for n in range(x.order + 1)]))


def sinh(x):
    if not isinstance(x, Jet):
        return np.sinh(x)
    s, c = np.sinh(x.value), np.cosh(x.value)
    return x._apply(_taylor_from_derivatives([s if n % 2 == 0 else c for n in range(x.order + 1)]))


def cosh(x):
    if not isinstance(x, Jet):
        return np.cosh(x)
    s, c = np.sinh(x.value), np.cosh(x.value)
    return x._apply(_taylor_from_derivatives([c if n % 2 == 0 else s for n in range(x.order + 1)]))


def power(x, p: float):
    """``x**p`` for real ``p``; requires ``x > 0`` unless ``p`` is a nonnegative integer."""
    if not isinstance(x, Jet):
        return np.power(x, p)
    a = x.value
    if float(p).is_integer() and p < 0:
        if np.any(a == 0):
            raise DomainError("negative power of zero")
    elif not float(p).is_integer() and np.any(a <= 0) and (x.order > 0 or np.any(a < 0)):
        raise DomainError(f"power {p} of a nonpositive value")
    taylor = [np.power(a, p)]
    coef = 1.0
    for n in range(1, x.order + 1):
        coef *= (p - n + 1) / n
        taylor.append(coef * np.power(a, p - n))
    return x._apply(taylor)


def sqrt(x):
    if not isinstance(x, Jet):
        if np.any(np.asarray(x) < 0):
            raise DomainError("sqrt of a negative value")
        return np.sqrt(x)
    return power(x, 0.5)


def reciprocal(x):
    if not isinstance(x, Jet):
        return 1.0 / np.asarray(x, dtype=float)
    return power(x, -1.0)


def arctan(x):
    if not isinstance(x, Jet):
        return np.arctan(x)
    return _univariate(x, np.arctan(x.value), lambda s: reciprocal(1 + s * s))


def arccot(x):
    """Inverse cotangent with values in ``(0, pi)``."""
    if not isinstance(x, Jet):
        return np.pi / 2 - np.arctan(x)
    return _univariate(x, np.pi / 2 - np.arctan(x.value), lambda s: -reciprocal(1 + s * s))


def arcsinh(x):
    if not isinstance(x, Jet):
        return np.arcsinh(x)
    return _univariate(x, np.arcsinh(x.value), lambda s: power(1 + s * s, -0.5))


def arccosh(x):
    if not isinstance(x, Jet):
        if np.any(np.asarray(x) < 1):
            raise DomainError("arccosh below 1")
        return np.arccosh(x)
    a = x.value
    if np.any(a < 1) or (x.order > 0 and np.any(a <= 1)):
        raise DomainError("arccosh at or below 1")
    return _univariate(x, np.arccosh(a), lambda s: power(s * s - 1, -0.5))


def integral(integrand: Callable, lower: float, x):
    """``int_lower^x integrand(xi) dxi`` with exact derivatives in ``x``.

    The value comes from adaptive quadrature; derivatives come from applying
    ``integrand`` (which must accept jets) to the upper limit.
    """
    upper = x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)
    flat = np.atleast_1d(upper).ravel()
    vals = np.array([
        integrate.quad(lambda s: float(np.asarray(integrand(s))), lower, u, epsabs=1e-14, epsrel=1e-13)[0]
        for u in flat
    ]).reshape(np.shape(upper))
    if not isinstance(x, Jet):
        return vals
    return _univariate(x, vals, integrand)


# -- linear algebra over jets --------------------------------------------------


def inv(matrix: Sequence[Sequence[Jet]]) -> list[list[Jet]]:
    """Inverse of a small jet-valued matrix by Gauss-Jordan elimination.

    No pivoting: intended for definite matrices (metrics) and other cases
    where the leading minors are bounded away from zero.
    """
    n = len(matrix)
    a = [list(row) for row in matrix]
    dim, order = a[0][0].dim, min(x.order for row in a for x in row)
    batch = np.broadcast_shapes(*(x.batch_shape for row in a for x in row))
    one = Jet.constant(np.ones(batch), dim, order)
    zero = Jet.constant(np.zeros(batch), dim, order)
    b = [[one if i == j else zero for j in range(n)] for i in range(n)]
    for k in range(n):
        if np.any(np.abs(a[k][k].value) < 1e-300):
            raise ZeroDivisionError("singular pivot in jet inverse")
        piv = reciprocal(a[k][k])
        a[k] = [x * piv for x in a[k]]
        b[k] = [x * piv for x in b[k]]
        for i in range(n):
            if i == k:
                continue
            f = a[i][k]
            a[i] = [x - f * y for x, y in zip(a[i], a[k])]
            b[i] = [x - f * y for x, y in zip(b[i], b[k])]
    return b


def det3(m: Sequence[Sequence]) -> Jet:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def invert_map(components: Sequence[Jet], base=None) -> list[Jet]:
    """Jets of the inverse of a local diffeomorphism.

    ``components[i]`` expands ``t_i(s)`` about ``s0 = base`` (zeros by
    default). The result expands ``s_i(t)`` about ``t0 = t(s0)`` to the same
    order, by fixed-point iteration on the nonlinear remainder; each sweep
    fixes one more order.
    """
    n = len(components)
    order = min(c.order for c in components)
    if order == 0:
        raise OrderError("inverting a map needs first derivatives")
    comps = [c.truncate(order) for c in components]
    batch = comps[0].batch_shape
    jac = np.stack([np.stack([c.partial(a) for a in range(n)], axis=-1) for c in comps], axis=-2)
    if np.any(np.abs(np.linalg.det(jac)) < 1e-14):
        raise ZeroDivisionError("map is not locally invertible")
    jinv = np.linalg.inv(jac)
    base = np.zeros((n,) + batch) if base is None else np.asarray(base, dtype=float)
    t0 = [c.value for c in comps]
    dtau = [Jet.variable(t0[i], i, n, order) - t0[i] for i in range(n)]
    s = [sum((dtau[j] * jinv[..., i, j] for j in range(n)), Jet.constant(base[i] + np.zeros(batch), n, order))
         for i in range(n)]
    for _ in range(order):
        # compose only sees displacements, so s may carry any base value
        resid = [dtau[j] - (c.compose(s) - t0[j]) for j, c in enumerate(comps)]
        s = [s[i] + sum(resid[j] * jinv[..., i, j] for j in range(n)) for i in range(n)]
    return s


# -- fields ----------------------------------------------------------------------


def _as_jet(value, like: Jet) -> Jet:
    if isinstance(value, Jet):
        return value
    return Jet.constant(np.asarray(value, dtype=float) + np.zeros(like.batch_shape), like.dim, like.order)


class ScalarField:
    """A scalar function on an ``n``-dimensional chart, evaluable as jets.

    Build one from a callable on coordinate jets (``fn``), which may use the
    operators and the elementary functions of this module, or from a raw
    ``evaluator(points, order) -> Jet`` for derived fields.
    """

    def __init__(self, dim: int, fn: Callable | None = None, *, evaluator: Callable | None = None,
                 name: str | None = None):
        if (fn is None) == (evaluator is None):
            raise ValueError("give exactly one of fn or evaluator")
        self.dim = dim
        self.fn = fn
        self._evaluator = evaluator
        self.name = name

    def __repr__(self) -> str:
        return f"ScalarField(dim={self.dim}, name={self.name!r})"

    @classmethod
    def constant(cls, dim: int, value: float) -> ScalarField:
        return cls(dim, lambda *x: value, name=repr(value))

    @classmethod
    def coordinate(cls, dim: int, var: int) -> ScalarField:
        return cls(dim, lambda *x: x[var], name=f"x{var}")

    def jet(self, points, order: int) -> Jet:
        points = np.asarray(points, dtype=float)
        if self.fn is not None:
            coords = Jet.seed(points, order)
            return _as_jet(self.fn(*coords), coords[0])
        return self._evaluator(points, order)

    def apply(self, inner: Sequence[Jet]) -> Jet:
        """Evaluate on jets of the coordinates (composition with a map)."""
        if self.fn is not None:
            return _as_jet(self.fn(*inner), inner[0])
        order = min(j.order for j in inner)
        at = np.stack([j.value for j in inner], axis=-1)
        return self.jet(at, order).compose(inner)

    def __call__(self, points) -> np.ndarray:
        return self.jet(points, 0).value

    def diff(self, var: int) -> ScalarField:
        return ScalarField(self.dim, evaluator=lambda p, m: self.jet(p, m + 1).diff(var))

    # field algebra; numbers and other fields mix freely

    def _binary(self, other, op) -> ScalarField:
        if isinstance(other, ScalarField):
            return ScalarField(self.dim, evaluator=lambda p, m: op(self.jet(p, m), other.jet(p, m)))
        return ScalarField(self.dim, evaluator=lambda p, m: op(self.jet(p, m), other))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __neg__(self):
        return ScalarField(self.dim, evaluator=lambda p, m: -self.jet(p, m))

    def __pow__(self, q):
        return ScalarField(self.dim, evaluator=lambda p, m: self.jet(p, m) ** q)


def eval_jet(f: ScalarField, p, order: int) -> Jet:
    """Value and all partials of ``f`` up to ``order`` at ``p`` (shape ``(n,)`` or ``(N, n)``)."""
    _check_order(order)
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != f.dim:
        raise ValueError(f"point has {p.shape[-1]} coordinates, field expects {f.dim}")
    if not np.all(np.isfinite(p)):
        raise DomainError("non-finite point")
    return f.jet(p, order)


# -- complex (Wirtinger) derivatives --------------------------------------------

Z_PAIRS = ((0, 1), (2, 3))  # z1 = x0 + i x1, z2 = x2 + i x3


def wirtinger(jet: Jet, holo: Sequence[int] = (), anti: Sequence[int] = (), pairs=Z_PAIRS) -> np.ndarray:
    """``d/dz_a ... d/dzbar_b ...`` of a real jet, with ``d/dz = (d/dx - i d/dy)/2``.

    ``holo`` and ``anti`` list complex-variable indices (0-based) for the
    holomorphic and antiholomorphic derivatives.
    """
    ops = [(pairs[a], -1j) for a in holo] + [(pairs[b], 1j) for b in anti]
    if len(ops) > jet.order:
        raise OrderError(f"{len(ops)} complex derivatives need a jet of order >= {len(ops)}")
    total = np.zeros(jet.batch_shape, dtype=complex)
    for choice in itertools.product((0, 1), repeat=len(ops)):
        coef = 1.0 + 0j
        idx = []
        for (pair, sign), c in zip(ops, choice):
            coef *= 0.5 * (sign if c else 1.0)
            idx.append(pair[c])
        total = total + coef * jet.partial(*idx)
    return total


def complex_hessian(jet: Jet, pairs=Z_PAIRS) -> np.ndarray:
    """Matrix ``H_{z_a zbar_b}``, shape ``batch + (k, k)``."""
    k = len(pairs)
    return np.stack(
        [np.stack([wirtinger(jet, (a,), (b,), pairs) for b in range(k)], axis=-1) for a in range(k)], axis=-2
    )
