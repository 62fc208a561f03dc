"""Conical G-operators: cone geometry, group action and coefficient data.

Only data at the conical points is modelled.  A term of the operator is a
shift ``T_h`` composed with a conical differential operator frozen at
``r = 0``, written as a polynomial in ``-r d/dr`` whose coefficients act on
base Fourier modes ``n`` (circle base) or are scalars (point base)::

    D = sum_h sum_k D_{h,k}(n) (-r d/dr)^k T_h

Group elements are tuples of integers: ``(l,)`` for Z and ``(j, k)`` for Z^2.
The radial exponent of a word is the sum of the generator exponents, so that
near the tip ``h(r, w) = (r exp(beta_h), h(w))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import InputError, NonFiniteInput, NonpositiveBeta, NonpositiveExponent

Shift = tuple  # tuple[int, ...]


class BaseKind(str, Enum):
    CIRCLE = "Circle"
    POINT = "Point"


class GroupKind(str, Enum):
    Z = "Z"
    Z2 = "Z2"


class FamilyKind(str, Enum):
    SPHERE = "SphereFirstOrder"
    HALFLINE = "HalflineZeroOrder"
    GENERIC = "GenericBanded"


TIP = "r=0"
INFINITY = "r=inf"


@dataclass(frozen=True)
class ConicalPoint:
    label: str
    gamma: float


@dataclass(frozen=True)
class ConeGeometry:
    base_kind: BaseKind
    conical_points: tuple[ConicalPoint, ...]

    def __post_init__(self):
        if not 1 <= len(self.conical_points) <= 2:
            raise InputError("a cone geometry carries one or two conical points")
        labels = [p.label for p in self.conical_points]
        if len(set(labels)) != len(labels):
            raise InputError(f"duplicate conical point labels {labels}")
        for p in self.conical_points:
            _check_finite(p.gamma, f"gamma at {p.label}")

    @property
    def base_dim(self) -> int:
        return 1 if self.base_kind is BaseKind.CIRCLE else 0

    def gamma_at(self, label: str) -> float:
        for p in self.conical_points:
            if p.label == label:
                return p.gamma
        raise InputError(f"no conical point labelled {label!r}")

    @property
    def gamma_plus(self) -> float:
        return self.gamma_at(TIP)

    @property
    def gamma_minus(self) -> float:
        # with a single conical point both weights coincide
        try:
            return self.gamma_at(INFINITY)
        except InputError:
            return self.gamma_plus


@dataclass(frozen=True)
class Generator:
    beta: float
    base_angle: float | None = None


@dataclass(frozen=True)
class GroupAction:
    group: GroupKind
    generators: tuple[Generator, ...]

    def __post_init__(self):
        want = 1 if self.group is GroupKind.Z else 2
        if len(self.generators) != want:
            raise InputError(f"group {self.group.value} needs {want} generator(s)")
        for g in self.generators:
            _check_finite(g.beta, "generator beta")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def radial_exponent(self, h: Sequence[int]) -> float:
        """beta_h of the word h, i.e. h(r) = r exp(beta_h) near the tip."""
        return float(sum(c * g.beta for c, g in zip(h, self.generators)))

    def base_angle(self, h: Sequence[int]) -> float:
        return float(sum(c * (g.base_angle or 0.0) for c, g in zip(h, self.generators)))


@dataclass(frozen=True)
class ConicalCoefficient:
    """Coefficients D_{h,k}(n) of one shift term.

    ``polys[k]`` lists the coefficients of the polynomial in the base mode
    ``n`` multiplying ``(-r d/dr)^k``, lowest degree first.  For a point base
    each polynomial is a constant.
    """

    polys: tuple[tuple[complex, ...], ...]

    def at_mode(self, k: int, n) -> complex:
        if k >= len(self.polys):
            return 0j
        acc = 0j
        for c in reversed(self.polys[k]):
            acc = acc * n + c
        return acc

    def principal(self, k: int, order: int) -> complex:
        """Coefficient of n^(order-k): the part homogeneous of degree ``order``."""
        if k >= len(self.polys):
            return 0j
        deg = order - k
        poly = self.polys[k]
        return complex(poly[deg]) if 0 <= deg < len(poly) else 0j

    def is_zero(self) -> bool:
        return all(c == 0 for poly in self.polys for c in poly)


@dataclass(frozen=True)
class ConicalGOperator:
    geometry: ConeGeometry
    action: GroupAction
    order: int
    terms: Mapping[Shift, ConicalCoefficient]
    family: FamilyKind
    params: Mapping[str, complex | float] = field(default_factory=dict)
    commensurability_warning: bool = False

    def __post_init__(self):
        if self.order < 0:
            raise InputError("operator order must be nonnegative")
        for h, coeff in self.terms.items():
            if len(h) != self.action.rank:
                raise InputError(f"shift {h} does not match group {self.action.group.value}")
            if len(coeff.polys) > self.order + 1:
                raise InputError(f"term {h} has radial degree above the order {self.order}")
            for k, poly in enumerate(coeff.polys):
                if self.geometry.base_kind is BaseKind.POINT and len(poly) > 1:
                    raise InputError(f"term {h}: point base admits constant coefficients only")
                if len(poly) - 1 > self.order - k:
                    raise InputError(f"term {h}, k={k}: mode polynomial degree exceeds {self.order - k}")
                for c in poly:
                    _check_finite(c, f"coefficient of term {h}")

    @property
    def gamma_plus(self) -> float:
        return self.geometry.gamma_plus

    @property
    def gamma_minus(self) -> float:
        return self.geometry.gamma_minus

    @property
    def shifts(self) -> list[Shift]:
        return sorted(self.terms)

    @property
    def bandwidth(self) -> int:
        return max((max(abs(c) for c in h) for h in self.terms), default=0)

    def param(self, name: str):
        return self.params[name]


def _check_finite(x, what: str) -> None:
    z = complex(x)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise NonFiniteInput(f"{what} must be finite, got {x!r}")


def _two_point_geometry(base: BaseKind, gamma_plus: float, gamma_minus: float) -> ConeGeometry:
    return ConeGeometry(base, (ConicalPoint(TIP, float(gamma_plus)), ConicalPoint(INFINITY, float(gamma_minus))))


def _drop_zero(terms: dict) -> dict:
    return {h: c for h, c in terms.items() if not c.is_zero()}


def make_sphere_operator(a, b, c, d, beta: float, phi0: float,
                         gamma_plus: float = 0.0, gamma_minus: float = 0.0) -> ConicalGOperator:
    """D = -r d/dr + (a + bT)(-i d/dphi) + (c + dT) on the sphere with two cone points.

    T is the shift along z -> z exp(beta + i phi0); gamma_plus sits at z = 0
    and gamma_minus at z = infinity.
    """
    a, b, c, d = (complex(x) for x in (a, b, c, d))
    for name, x in dict(a=a, b=b, c=c, d=d, beta=beta, phi0=phi0,
                        gamma_plus=gamma_plus, gamma_minus=gamma_minus).items():
        _check_finite(x, name)
    if not beta > 0:
        raise NonpositiveBeta(f"beta must be positive, got {beta!r}")
    if not 0.0 <= phi0 < 2 * math.pi:
        raise InputError(f"phi0 must lie in [0, 2pi), got {phi0!r}")
    terms = _drop_zero({
        (0,): ConicalCoefficient(((c, a), (1 + 0j,))),
        (1,): ConicalCoefficient(((d, b),)),
    })
    return ConicalGOperator(
        geometry=_two_point_geometry(BaseKind.CIRCLE, gamma_plus, gamma_minus),
        action=GroupAction(GroupKind.Z, (Generator(float(beta), float(phi0)),)),
        order=1,
        terms=terms,
        family=FamilyKind.SPHERE,
        params=dict(a=a, b=b, c=c, d=d, beta=float(beta), phi0=float(phi0)),
    )


def commensurate_ratio(x: float, y: float, max_pq: int = 64, tol: float = 1e-12) -> Fraction | None:
    """Return p/q with p, q <= max_pq and |x/y - p/q| < tol, else None."""
    ratio = x / y
    frac = Fraction(ratio).limit_denominator(max_pq)
    if abs(frac.numerator) <= max_pq and abs(ratio - float(frac)) < tol:
        return frac
    return None


def make_halfline_operator(a, b, alpha: float, beta: float,
                           gamma_plus: float = 0.0, gamma_minus: float = 0.0) -> ConicalGOperator:
    """A = 1 + a T_alpha + b T_beta on the half-line, (T_alpha u)(r) = u(r e^alpha).

    T_alpha is the shift by the group element g with g(r) = r e^{-alpha}, so
    the stored radial exponents of the two generators are -alpha and -beta.
    """
    a, b = complex(a), complex(b)
    for name, x in dict(a=a, b=b, alpha=alpha, beta=beta,
                        gamma_plus=gamma_plus, gamma_minus=gamma_minus).items():
        _check_finite(x, name)
    if not alpha > 0 or not beta > 0:
        raise NonpositiveExponent(f"alpha and beta must be positive, got {alpha!r}, {beta!r}")
    terms = _drop_zero({
        (0, 0): ConicalCoefficient(((1 + 0j,),)),
        (1, 0): ConicalCoefficient(((a,),)),
        (0, 1): ConicalCoefficient(((b,),)),
    })
    return ConicalGOperator(
        geometry=_two_point_geometry(BaseKind.POINT, gamma_plus, gamma_minus),
        action=GroupAction(GroupKind.Z2, (Generator(-float(alpha)), Generator(-float(beta)))),
        order=0,
        terms=terms,
        family=FamilyKind.HALFLINE,
        params=dict(a=a, b=b, alpha=float(alpha), beta=float(beta)),
        commensurability_warning=commensurate_ratio(alpha, beta) is not None,
    )


def make_generic_operator(group: GroupKind | str, base_kind: BaseKind | str, order: int,
                          generators: Sequence[Generator],
                          terms: Mapping[Sequence[int], Sequence[Sequence[complex]]],
                          gamma_plus: float = 0.0, gamma_minus: float = 0.0) -> ConicalGOperator:
    """Banded operator from raw coefficient polynomials, ``terms[h][k][j]`` = coeff of n^j."""
    group, base_kind = GroupKind(group), BaseKind(base_kind)
    coeffs = {
        tuple(int(i) for i in h): ConicalCoefficient(tuple(tuple(complex(c) for c in poly) for poly in polys))
        for h, polys in terms.items()
    }
    return ConicalGOperator(
        geometry=_two_point_geometry(base_kind, gamma_plus, gamma_minus),
        action=GroupAction(group, tuple(generators)),
        order=int(order),
        terms=_drop_zero(coeffs),
        family=FamilyKind.GENERIC,
    )


def identity_operator(gamma_plus: float = 0.0, gamma_minus: float = 0.0) -> ConicalGOperator:
    return make_generic_operator(GroupKind.Z, BaseKind.CIRCLE, 0, [Generator(1.0, 0.0)],
                                 {(0,): [[1.0]]}, gamma_plus, gamma_minus)
