"""Quaternions and quaternion-valued differential forms.

Units satisfy ``i j = k``. A point of R^4 is read as
``q = x0 + i x1 + j x2 + k x3 = z1 + z2 j`` with ``z1 = x0 + i x1`` and
``z2 = x2 + i x3``.

Quaternion-valued forms keep four real components. Their wedge product reads
``(a ^ b)(v, w) = a(v) b(w) - a(w) b(v)`` with the quaternion product taken in
the written order, so on components it is ``sum (a_p ^ b_q) e_p e_q``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .forms import ChartMap, DifferentialForm, FormJet, ext_d, pullback, wedge
from .jets import ScalarField

__all__ = [
    "Quaternion",
    "qmul",
    "QuaternionForm",
    "NonUnitError",
    "coordinate_quaternion",
    "dq",
    "nu_family_qform",
    "right_j",
    "UNIT_TOL",
]

UNIT_TOL = 1e-12


class NonUnitError(ValueError):
    """A conjugation action was requested with a non-unit quaternion."""


# e_p e_q = _SIGN[p, q] e_{_IDX[p, q]}
_IDX = np.array([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]])
_SIGN = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, -1, -1, 1], [1, 1, -1, -1]])


def _product(a: Sequence, b: Sequence, mul) -> list:
    out = [None] * 4
    for p in range(4):
        for q in range(4):
            term = mul(a[p], b[q])
            if term is None:
                continue
            if _SIGN[p, q] < 0:
                term = -term
            r = _IDX[p, q]
            out[r] = term if out[r] is None else out[r] + term
    return out


@dataclass(frozen=True)
class Quaternion:
    w: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        for name in ("w", "x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_array(cls, a) -> Quaternion:
        a = np.asarray(a, dtype=float)
        return cls(*(float(v) for v in a))

    @classmethod
    def from_rotation_matrix(cls, R) -> Quaternion:
        """A unit quaternion ``u`` (sign arbitrary) with ``u v u^-1 = R v`` on pure quaternions."""
        R = np.asarray(R, dtype=float)
        tr = np.trace(R)
        # pick the largest diagonal term of the 4x4 symmetric form to divide by
        cands = [tr, R[0, 0], R[1, 1], R[2, 2]]
        k = int(np.argmax(cands))
        if k == 0:
            s = 2.0 * np.sqrt(1.0 + tr)
            q = (0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s)
        elif k == 1:
            s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
            q = ((R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s)
        elif k == 2:
            s = 2.0 * np.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2])
            q = ((R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s)
        else:
            s = 2.0 * np.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2])
            q = ((R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s)
        return cls(*q).normalized()

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(*_product(self.as_array(), other.as_array(), lambda a, b: a * b))
        return Quaternion(self.w * other, self.x * other, self.y * other, self.z * other)

    def __rmul__(self, other):
        return self * other

    def __add__(self, other: Quaternion) -> Quaternion:
        return Quaternion(*(self.as_array() + other.as_array()))

    def __sub__(self, other: Quaternion) -> Quaternion:
        return Quaternion(*(self.as_array() - other.as_array()))

    def __neg__(self) -> Quaternion:
        return Quaternion(*(-self.as_array()))

    def conj(self) -> Quaternion:
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def normalized(self) -> Quaternion:
        n = self.norm()
        if n == 0.0:
            raise ZeroDivisionError("zero quaternion")
        return Quaternion(*(self.as_array() / n))

    def inverse(self) -> Quaternion:
        return self.conj() * (1.0 / self.norm() ** 2)

    def is_unit(self, tol: float = UNIT_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def left_matrix(self) -> np.ndarray:
        """Matrix of ``q -> self * q`` on R^4 = H."""
        return np.stack([(self * Quaternion(*e)).as_array() for e in np.eye(4)], axis=1)

    def right_matrix(self) -> np.ndarray:
        """Matrix of ``q -> q * self`` on R^4 = H."""
        return np.stack([(Quaternion(*e) * self).as_array() for e in np.eye(4)], axis=1)

    def rotation_matrix(self) -> np.ndarray:
        """SO(3) matrix of ``v -> u v u^-1`` on the pure quaternions."""
        u = self.normalized()
        return (u.left_matrix() @ u.conj().right_matrix())[1:, 1:]


def qmul(a: Quaternion, b: Quaternion) -> Quaternion:
    return a * b


def _check_unit(u: Quaternion) -> None:
    if not u.is_unit():
        raise NonUnitError(f"|u| = {u.norm():.17g} is not 1 within {UNIT_TOL}")


class QuaternionForm:
    """An H-valued k-form, stored as four real k-forms ``(a0, a1, a2, a3)``."""

    def __init__(self, components: Sequence[DifferentialForm]):
        comps = list(components)
        if len(comps) != 4:
            raise ValueError("need four real components")
        dims = {c.dim for c in comps}
        degrees = {c.degree for c in comps}
        if len(dims) != 1 or len(degrees) != 1:
            raise ValueError("components do not share a chart and degree")
        self.components = tuple(comps)
        self.dim = dims.pop()
        self.degree = degrees.pop()

    def __getitem__(self, i: int) -> DifferentialForm:
        return self.components[i]

    @property
    def real(self) -> DifferentialForm:
        return self.components[0]

    @property
    def imag(self) -> tuple[DifferentialForm, DifferentialForm, DifferentialForm]:
        return self.components[1:]

    def _check(self, other: QuaternionForm) -> None:
        if self.dim != other.dim:
            raise ValueError("quaternion forms live on different charts")

    def __add__(self, other: QuaternionForm) -> QuaternionForm:
        self._check(other)
        return QuaternionForm([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: QuaternionForm) -> QuaternionForm:
        self._check(other)
        return QuaternionForm([a - b for a, b in zip(self.components, other.components)])

    def __neg__(self) -> QuaternionForm:
        return QuaternionForm([-a for a in self.components])

    def scale(self, c) -> QuaternionForm:
        """Multiply by a real constant or a real ScalarField."""
        return QuaternionForm([a * c for a in self.components])

    def left_mul(self, q: Quaternion) -> QuaternionForm:
        """``q * self`` for a constant quaternion ``q``."""
        return QuaternionForm(_product(q.as_array(), self.components, lambda s, a: a * float(s) if s else None)
                              if any(q.as_array()) else [a * 0.0 for a in self.components])

    def right_mul(self, q: Quaternion) -> QuaternionForm:
        """``self * q`` for a constant quaternion ``q``."""
        return QuaternionForm(_product(self.components, q.as_array(), lambda a, s: a * float(s) if s else None)
                              if any(q.as_array()) else [a * 0.0 for a in self.components])

    def conj(self) -> QuaternionForm:
        a0, a1, a2, a3 = self.components
        return QuaternionForm([a0, -a1, -a2, -a3])

    def wedge(self, other: QuaternionForm) -> QuaternionForm:
        self._check(other)
        return QuaternionForm(_product(self.components, other.components, wedge))

    def d(self) -> QuaternionForm:
        return QuaternionForm([ext_d(a) for a in self.components])

    def pullback(self, phi: ChartMap) -> QuaternionForm:
        return QuaternionForm([pullback(phi, a) for a in self.components])

    def conjugation_action(self, u: Quaternion) -> QuaternionForm:
        """``u * self * conj(u)`` for a unit quaternion ``u``."""
        _check_unit(u)
        return self.left_mul(u).right_mul(u.conj())

    def jet(self, points, order: int) -> list[FormJet]:
        return [a.jet(points, order) for a in self.components]

    def at(self, points) -> list[FormJet]:
        return self.jet(points, 0)

    def complex_split(self, points) -> tuple[FormJet, FormJet, FormJet, FormJet]:
        """Real and imaginary FormJets of ``(a, b)`` in ``self = a + b j``.

        With components ``(a0, a1, a2, a3)`` one has ``a = a0 + i a1`` and
        ``b = a2 + i a3``; returned as ``(Re a, Im a, Re b, Im b)``.
        """
        return tuple(self.at(points))


def coordinate_quaternion(dim: int = 4) -> QuaternionForm:
    """The H-valued function ``q = x0 + i x1 + j x2 + k x3`` as a 0-form."""
    return QuaternionForm([DifferentialForm.function(ScalarField.coordinate(dim, i)) for i in range(4)])


def dq(dim: int = 4) -> QuaternionForm:
    return coordinate_quaternion(dim).d()


def nu_family_qform(nu: float) -> QuaternionForm:
    """``1/2 (dq qbar - q dqbar) - nu d(q i qbar)`` on R^4."""
    q = coordinate_quaternion()
    dqq = q.d()
    half = dqq.wedge(q.conj()) - q.wedge(dqq.conj())
    qiq = q.right_mul(Quaternion(0.0, 1.0)).wedge(q.conj())
    return half.scale(0.5) - qiq.d().scale(float(nu))


def right_j() -> ChartMap:
    """The map ``q -> q j`` of R^4."""
    return ChartMap.from_callable(4, 4, lambda x0, x1, x2, x3: [-x2, -x3, x0, x1], name="q->qj")
