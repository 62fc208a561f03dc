"""Conormal symbol families and the mode truncation bound.

Freezing the coefficients at the tip and Mellin transforming turns a term
``D_h(-r d/dr, -i d/dphi) T_h`` into ``D_h(p, n) exp(-beta_h p - i n phi_h)``
on the Fourier mode n, where ``beta_h`` and ``phi_h`` are the radial exponent
and rotation angle of the word h.  For the sphere family this gives

    f_n(p) = p + (a + b E) n + (c + d E),   E = exp(-beta p - i n phi0),

and for the half-line family, whose generators carry exponents -alpha and
-beta, f(p) = 1 + a exp(alpha p) + b exp(beta p).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import FamilyMismatch, KindMismatch, NoBoundAvailable
from .operator_model import BaseKind, ConicalGOperator, FamilyKind

Evaluator = Callable[..., "np.ndarray | complex"]


@dataclass(frozen=True)
class ConormalFamily:
    """Holomorphic family p -> value(p, n), one scalar function per base mode.

    ``per_mode`` families depend on the Fourier mode n (circle base); scalar
    families ignore it.  ``derivative`` is d/dp of ``value``.
    """

    value: Evaluator
    derivative: Evaluator
    order: int
    per_mode: bool
    kind: str = "Scalar"

    def __call__(self, p, n: int = 0):
        return self.value(p, n)

    @classmethod
    def scalar(cls, value: Callable, derivative: Callable, order: int = 0, kind: str = "Scalar") -> ConormalFamily:
        return cls(lambda p, n=0: value(p), lambda p, n=0: derivative(p), order, False, kind)


def _sphere_family(a, b, c, d, beta, phi0) -> ConormalFamily:
    def value(p, n=0):
        E = np.exp(-beta * p - 1j * n * phi0)
        return p + (a + b * E) * n + (c + d * E)

    def derivative(p, n=0):
        E = np.exp(-beta * p - 1j * n * phi0)
        return 1 - beta * (b * n + d) * E

    return ConormalFamily(value, derivative, 1, True, "SphereModes")


def _generic_family(op: ConicalGOperator) -> ConormalFamily:
    per_mode = op.geometry.base_kind is BaseKind.CIRCLE
    data = []
    for h in op.shifts:
        bh = op.action.radial_exponent(h)
        ph = op.action.base_angle(h)
        data.append((bh, ph, op.terms[h]))

    def parts(n):
        # polynomial in p for each term, coefficients lowest first
        out = []
        for bh, ph, coeff in data:
            cp = [coeff.at_mode(k, n if per_mode else 0) for k in range(len(coeff.polys))]
            out.append((bh, ph, cp))
        return out

    def value(p, n=0):
        p = np.asarray(p, dtype=complex)
        acc = np.zeros_like(p)
        for bh, ph, cp in parts(n):
            poly = np.polyval(cp[::-1], p) if cp else 0
            acc = acc + poly * np.exp(-bh * p - 1j * (n if per_mode else 0) * ph)
        return acc if acc.ndim else complex(acc)

    def derivative(p, n=0):
        p = np.asarray(p, dtype=complex)
        acc = np.zeros_like(p)
        for bh, ph, cp in parts(n):
            poly = np.polyval(cp[::-1], p) if cp else 0
            dpoly = np.polyval(np.polyder(cp[::-1]), p) if len(cp) > 1 else 0
            acc = acc + (dpoly - bh * poly) * np.exp(-bh * p - 1j * (n if per_mode else 0) * ph)
        return acc if acc.ndim else complex(acc)

    kind = {FamilyKind.SPHERE: "SphereModes", FamilyKind.HALFLINE: "HalflineScalar"}.get(
        op.family, "ModeFamily" if per_mode else "Scalar")
    return ConormalFamily(value, derivative, op.order, per_mode, kind)


def conormal_family(op: ConicalGOperator) -> ConormalFamily:
    """Conormal family of any operator; closed-form evaluators for the two named families."""
    pr = op.params
    if op.family is FamilyKind.SPHERE:
        return _sphere_family(pr["a"], pr["b"], pr["c"], pr["d"], pr["beta"], pr["phi0"])
    if op.family is FamilyKind.HALFLINE:
        a, b, al, be = pr["a"], pr["b"], pr["alpha"], pr["beta"]
        return ConormalFamily.scalar(
            lambda p: 1 + a * np.exp(al * p) + b * np.exp(be * p),
            lambda p: al * a * np.exp(al * p) + be * b * np.exp(be * p),
            0, "HalflineScalar")
    return _generic_family(op)


def conormal_eval(op: ConicalGOperator, p: complex, n: int = 0) -> complex:
    """Value of the conormal symbol at p on mode n (n is ignored for the half-line)."""
    pr = op.params
    p = complex(p)
    if op.family is FamilyKind.SPHERE:
        E = cmath.exp(-pr["beta"] * p - 1j * n * pr["phi0"])
        return p + (pr["a"] + pr["b"] * E) * n + (pr["c"] + pr["d"] * E)
    if op.family is FamilyKind.HALFLINE:
        return 1 + pr["a"] * cmath.exp(p * pr["alpha"]) + pr["b"] * cmath.exp(p * pr["beta"])
    raise FamilyMismatch(f"closed-form conormal evaluation needs SphereFirstOrder or HalflineZeroOrder, got {op.family.value}")


def conormal_compose(f1: ConormalFamily, f2: ConormalFamily) -> ConormalFamily:
    """Family of the composition D2 D1: p -> f2(p + m1) f1(p), m1 the order of D1."""
    if f1.per_mode != f2.per_mode:
        raise KindMismatch(f"cannot compose {f1.kind} with {f2.kind}")
    m1 = f1.order

    def value(p, n=0):
        return f2.value(p + m1, n) * f1.value(p, n)

    def derivative(p, n=0):
        return f2.derivative(p + m1, n) * f1.value(p, n) + f2.value(p + m1, n) * f1.derivative(p, n)

    kind = f1.kind if f1.kind == f2.kind else "Composite"
    return ConormalFamily(value, derivative, f1.order + f2.order, f1.per_mode, kind)


MAX_MODE_CUTOFF = 10_000  # beyond this the bound is useless in practice


@dataclass(frozen=True)
class ModeBound:
    """Modes |n| > N have no zero in the strip (for |Im p| <= height_limit when finite).

    ``root_height`` bounds |Im p| of every zero of the retained modes.
    """

    N: int
    certificate: str
    all_heights: bool
    root_height: float
    height_limit: float = math.inf


def mode_truncation_bound(op: ConicalGOperator, strip: tuple[float, float], height: float | None = None) -> ModeBound:
    """Smallest certified mode cutoff N for the sphere family on sigma1 <= Re p <= sigma2.

    With E = exp(-beta Re p) <= Emax = exp(-beta sigma1) and P = max |Re p|,

    * real-part estimate: |Re f_n| >= |n|(|Re a| - |b| Emax) - P - |c| - |d| Emax,
      valid at every height;
    * modulus estimate: |f_n| >= |n|(|a| - |b| Emax) - |p| - |c| - |d| Emax,
      valid for |Im p| <= height only.

    Retained modes satisfy |Im f_n| >= |Im p| - N(|a| + |b| Emax) - |c| - |d| Emax,
    which gives the root height bound.
    """
    if op.family is not FamilyKind.SPHERE:
        raise FamilyMismatch(f"mode truncation applies to SphereFirstOrder, got {op.family.value}")
    s1, s2 = (float(x) for x in strip)
    pr = op.params
    a, b, c, d, beta = pr["a"], pr["b"], pr["c"], pr["d"], pr["beta"]
    emax = math.exp(-beta * s1)
    P = max(abs(s1), abs(s2))
    K = abs(c) + abs(d) * emax

    def root_height(N):
        return N * (abs(a) + abs(b) * emax) + K

    def cutoff(num, den):
        x = num / den
        if not x <= MAX_MODE_CUTOFF:
            raise NoBoundAvailable(f"certified mode cutoff {x:.3g} exceeds {MAX_MODE_CUTOFF}")
        return int(math.floor(x))

    if a == 0 and b == 0:
        return ModeBound(0, "coefficient of n vanishes", True, root_height(0))
    dr = abs(a.real) - abs(b) * emax
    if dr > 0:
        N = cutoff(P + K, dr)
        return ModeBound(N, "real-part estimate", True, root_height(N))
    dm = abs(a) - abs(b) * emax
    if dm > 0 and height is not None:
        N = cutoff(math.hypot(P, height) + K, dm)
        return ModeBound(N, f"modulus estimate for |Im p| <= {height:g}", False, root_height(N), float(height))
    raise NoBoundAvailable(
        f"|Re a| = {abs(a.real):.6g} and |a| = {abs(a):.6g} do not exceed |b| exp(-beta sigma1) = "
        f"{abs(b) * emax:.6g}" + ("" if height is not None else " (no height given for the modulus estimate)"))


def generic_mode_bound(op: ConicalGOperator) -> ModeBound | None:
    """Bound for operators whose coefficients do not depend on the base mode.

    Then every mode carries the same family, so N = 0.  With a single shift
    term the family is a polynomial times an exponential, whose zeros obey
    Cauchy's bound; with several terms the zero heights are not bounded here.
    """
    if any(len(poly) > 1 for h in op.shifts for poly in op.terms[h].polys):
        return None
    if len(op.shifts) != 1:
        return ModeBound(0, "coefficient of n vanishes", False, math.inf)
    coeffs = [poly[0] if poly else 0j for poly in op.terms[op.shifts[0]].polys]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) <= 1:
        return ModeBound(0, "coefficient of n vanishes; no zeros", True, 0.0)
    lead = abs(coeffs[-1])
    cauchy = 1 + max(abs(c) / lead for c in coeffs[:-1])
    return ModeBound(0, "coefficient of n vanishes; polynomial zeros", True, cauchy)
