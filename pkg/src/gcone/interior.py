"""Interior symbol on group orbits, weight functions and the annulus reduction.

The interior symbol of ``D = sum_h D_h T_h`` at a cotangent point is the
banded operator

    (S w)(g) = sum_h c_h(g) w(g + h)

on functions of the group (the orbit is parametrized by g -> g^{-1}(x0)),
acting on a weighted l^2.  Conjugating by the square root of the weight
turns it into an operator on plain l^2, whose finite sections are what we
compute with.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .errors import ContextMismatch, FamilyMismatch, InputError, NonmonotoneSchedule, ZeroCovector
from .operator_model import INFINITY, TIP, BaseKind, ConicalGOperator, FamilyKind


@dataclass(frozen=True)
class InteriorPoint:
    """A cotangent point over the open part of the manifold (cylinder coordinate t0)."""

    t0: float = 0.0


@dataclass(frozen=True)
class BoundaryPoint:
    """A cotangent point over one end of the cylinder, r = 0 or r = infinity."""

    which: str
    tau: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        if self.which not in (TIP, INFINITY):
            raise ContextMismatch(f"boundary point must sit at {TIP!r} or {INFINITY!r}, got {self.which!r}")


Context = Union[InteriorPoint, BoundaryPoint]

# dense sections beyond this many window sites are refused (memory grows quadratically)
MAX_SECTION_SITES = 4500
DEFAULT_SCHEDULES = {1: (16, 32, 64), 2: (4, 8, 12)}


def _check_context(op: ConicalGOperator, context) -> None:
    if not isinstance(context, (InteriorPoint, BoundaryPoint)):
        raise ContextMismatch(f"unknown context {context!r}")
    if isinstance(context, BoundaryPoint):
        labels = [p.label for p in op.geometry.conical_points]
        if context.which not in labels:
            raise ContextMismatch(f"operator has no conical point {context.which!r}")


def _covector_factor(context, s: float) -> float:
    # base maps are rotations (or absent), so |dg^{-1} eta| = |eta| and the
    # (tau^2 + |eta|^2)^s ratio along the orbit is exactly one
    if s == 0 or not isinstance(context, BoundaryPoint):
        return 1.0
    q = context.tau ** 2 + context.eta ** 2
    return (q / q) ** s if q > 0 else 1.0


def weight_function(op: ConicalGOperator, context: Context, s: float, n) -> float:
    """Weight of the orbit element ``n`` in the piecewise form printed for the sphere.

    Interior points: exp(2 gamma_- beta_n) for beta_n >= 0, exp(2 gamma_+ beta_n)
    otherwise.  Boundary points: exp(2 gamma beta_n) with the weight of that
    end.  ``beta_n`` is the radial exponent of the word n (beta * n for Z).
    The s-dependence is dropped up to equivalence in the interior; at the
    boundary the covector ratio is kept (it equals one for rotations).

    The matrices below use :func:`orbit_weight`, which is this function at -n.
    """
    _check_context(op, context)
    h = (n,) if np.ndim(n) == 0 else tuple(n)
    if len(h) != op.action.rank:
        raise ContextMismatch(f"group element {n!r} does not match group {op.action.group.value}")
    bn = op.action.radial_exponent(h)
    if isinstance(context, InteriorPoint):
        g = op.gamma_minus if bn >= 0 else op.gamma_plus
        return math.exp(2 * g * bn)
    g = op.geometry.gamma_at(context.which)
    return math.exp(2 * g * bn) * _covector_factor(context, s)


def orbit_weight(op: ConicalGOperator, context: Context, s: float, n) -> float:
    """Transport weight of the measure along the orbit, g -> (dg^{-1})^* mu_gamma / mu_gamma.

    Equals ``weight_function`` at the inverse element; at a boundary point it
    is exp(-2 beta_g gamma).
    """
    h = (n,) if np.ndim(n) == 0 else tuple(n)
    return weight_function(op, context, s, tuple(-x for x in h))


def log_orbit_weights(op: ConicalGOperator, context: Context, indices: np.ndarray) -> np.ndarray:
    """Vectorized log of :func:`orbit_weight` (s = 0) for an (N, rank) index array."""
    _check_context(op, context)
    betas = np.array([g.beta for g in op.action.generators])
    bn = np.asarray(indices, dtype=float).reshape(len(indices), -1) @ betas
    if isinstance(context, InteriorPoint):
        g = np.where(bn >= 0, op.gamma_plus, op.gamma_minus)
    else:
        g = op.geometry.gamma_at(context.which)
    return -2.0 * g * bn


def transport_weight_oracle(beta: float, phi0: float, gamma: float, n: int,
                            point=(0.7, 0.3), step: float = 1e-4) -> float:
    """Pull back the weighted cylinder measure r^(2 gamma) dr/r dphi by g^{-n} numerically.

    g(r, phi) = (r e^beta, phi + phi0).  The Jacobian of g^{-n} is taken by
    central differences; the map is affine in (r, phi) so the difference
    quotient is exact up to rounding.
    """
    def inv(x):
        r, ph = x
        return np.array([r * math.exp(-n * beta), ph - n * phi0])

    def density(x):
        return x[0] ** (2 * gamma - 1)

    x = np.asarray(point, dtype=float)
    jac = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = step * max(1.0, abs(x[j]))
        jac[:, j] = (inv(x + e) - inv(x - e)) / (2 * e[j])
    return float(density(inv(x)) * abs(np.linalg.det(jac)) / density(x))


# -- orbit symbols -------------------------------------------------------------

Coefficient = Union[complex, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class OrbitSymbol:
    """Banded operator (S w)(g) = sum_h c_h(g) w(g + h) on functions of Z or Z^2.

    Coefficients are constants or vectorized callables of an (N, rank) array
    of group elements.
    """

    rank: int
    coeffs: Mapping[tuple, Coefficient]

    def coefficient(self, h: tuple, g: np.ndarray) -> np.ndarray:
        c = self.coeffs[h]
        if callable(c):
            return np.asarray(c(g), dtype=complex)
        return np.full(len(g), complex(c))

    @property
    def shifts(self) -> list[tuple]:
        return sorted(self.coeffs)

    @property
    def bandwidth(self) -> int:
        return max((max(abs(x) for x in h) for h in self.coeffs), default=0)

    def compose(self, other: OrbitSymbol) -> OrbitSymbol:
        """Symbol of (self o other): coefficient at h + k is c_h(g) * d_k(g + h)."""
        if self.rank != other.rank:
            raise InputError("symbols over different groups")
        pairs: dict[tuple, list] = {}
        for h in self.coeffs:
            for k in other.coeffs:
                hk = tuple(x + y for x, y in zip(h, k))
                pairs.setdefault(hk, []).append((h, k))

        def make(plist):
            def coeff(g):
                g = np.asarray(g)
                tot = np.zeros(len(g), dtype=complex)
                for h, k in plist:
                    tot += self.coefficient(h, g) * other.coefficient(k, g + np.asarray(h))
                return tot
            return coeff

        return OrbitSymbol(self.rank, {hk: make(pl) for hk, pl in pairs.items()})


def principal_coefficient(op: ConicalGOperator, h: tuple, eta: float, tau: float) -> complex:
    """Principal symbol of D_h at the covector (eta, tau): sum_k d_k (i tau)^k eta^(m-k)."""
    m = op.order
    coeff = op.terms[h]
    return sum(coeff.principal(k, m) * (1j * tau) ** k * eta ** (m - k) for k in range(m + 1))


def operator_symbol(op: ConicalGOperator, xi) -> OrbitSymbol:
    """Orbit symbol of ``op`` at the covector xi = (eta, tau).

    Coefficients are frozen at the cone points and the base maps are
    rotations, so every coefficient is constant along the orbit.
    """
    eta, tau = (float(x) for x in xi)
    if eta == 0 and tau == 0:
        raise ZeroCovector("the covector (eta, tau) must be nonzero")
    if op.geometry.base_kind is BaseKind.POINT:
        eta = 0.0
    return OrbitSymbol(op.action.rank, {h: principal_coefficient(op, h, eta, tau) for h in op.shifts})


def window_indices(rank: int, radius: int) -> np.ndarray:
    """Group elements with max-norm <= radius, in lexicographic order, shape (N, rank)."""
    rng = range(-radius, radius + 1)
    return np.array(list(itertools.product(rng, repeat=rank)), dtype=np.int64).reshape(-1, rank)


def _index_map(indices: np.ndarray, radius: int) -> Callable[[np.ndarray], np.ndarray]:
    rank = indices.shape[1]
    width = 2 * radius + 1
    strides = width ** np.arange(rank - 1, -1, -1)

    def lookup(g):
        g = np.asarray(g)
        inside = np.all(np.abs(g) <= radius, axis=1)
        pos = ((g + radius) * strides).sum(axis=1)
        return np.where(inside, pos, -1)

    return lookup


def section_matrix(symbol: OrbitSymbol, row_radius: int, col_radius: int,
                   log_weight: Callable[[np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """Matrix of the (weight-conjugated) symbol from the col window to the row window.

    Entry [i, j] = sqrt(m(g_i) / m(g_j)) * c_h(g_i) with g_j = g_i + h.
    """
    rows = window_indices(symbol.rank, row_radius)
    cols = window_indices(symbol.rank, col_radius)
    locate = _index_map(cols, col_radius)
    M = np.zeros((len(rows), len(cols)), dtype=complex)
    lr = log_weight(rows) if log_weight is not None else None
    lc = log_weight(cols) if log_weight is not None else None
    ar = np.arange(len(rows))
    for h in symbol.shifts:
        target = locate(rows + np.asarray(h))
        ok = target >= 0
        vals = symbol.coefficient(h, rows)[ok]
        if log_weight is not None:
            vals = vals * np.exp(0.5 * (lr[ok] - lc[target[ok]]))
        M[ar[ok], target[ok]] += vals
    return M


def section_matrix_explicit(symbol: OrbitSymbol, row_radius: int, col_radius: int,
                            weight: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Same matrix as :func:`section_matrix` built as diag(sqrt m) M diag(1/sqrt m)."""
    M = section_matrix(symbol, row_radius, col_radius)
    wr = np.sqrt(weight(window_indices(symbol.rank, row_radius)))
    wc = np.sqrt(weight(window_indices(symbol.rank, col_radius)))
    return (wr[:, None] * M) / wc[None, :]


def _check_size(rank: int, radius: int) -> None:
    if (2 * radius + 1) ** rank > MAX_SECTION_SITES:
        raise InputError(f"window radius {radius} over Z^{rank} exceeds {MAX_SECTION_SITES} sites "
                         "for a dense section")


def section_sigma_min(symbol: OrbitSymbol, radius: int,
                      log_weight: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
    """Smallest singular value of the finite sections A P_W and P_W A.

    A P_W keeps every row the window can reach (columns truncated), P_W A
    keeps every column (rows truncated).  Both are lower-bound estimates of
    the operator and its adjoint; they decrease with W to 1/||A^{-1}|| when A
    is invertible and to 0 otherwise.  Square truncations are avoided since
    they destroy isometries such as the shift.
    """
    _check_size(symbol.rank, radius)
    band = symbol.bandwidth
    tall = section_matrix(symbol, radius + band, radius, log_weight)
    wide = section_matrix(symbol, radius, radius + band, log_weight)
    s1 = np.linalg.svd(tall, compute_uv=False)[-1]
    s2 = np.linalg.svd(wide, compute_uv=False)[-1]
    return float(min(s1, s2))


@dataclass(frozen=True)
class OrbitWindow:
    radius: int
    indices: np.ndarray
    matrix: np.ndarray
    weights: np.ndarray
    bandwidth: int
    symbol: OrbitSymbol = field(repr=False, compare=False)
    log_weight: Callable | None = field(default=None, repr=False, compare=False)

    def sigma_min(self) -> float:
        return section_sigma_min(self.symbol, self.radius, self.log_weight)


def interior_symbol_matrix(op: ConicalGOperator, context: Context, xi, W: int, s: float = 0.0) -> OrbitWindow:
    """Truncated interior symbol at the covector xi = (eta, tau) on the window |g| <= W.

    The square matrix acts on unweighted l^2 of the window: it is the orbit
    symbol conjugated by the square root of the orbit weight.
    """
    _check_context(op, context)
    symbol = operator_symbol(op, xi)
    if W < max(symbol.bandwidth, 1):
        raise InputError(f"window radius {W} is below the bandwidth {symbol.bandwidth}")

    def logw(g):
        return log_orbit_weights(op, context, g)

    _check_size(symbol.rank, W)
    idx = window_indices(symbol.rank, W)
    mat = section_matrix(symbol, W, W, logw)
    return OrbitWindow(W, idx, mat, np.exp(logw(idx)), symbol.bandwidth, symbol, logw)


def write_matrix_csv(window: OrbitWindow, dest) -> None:
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        rows, cols = np.nonzero(window.matrix)
        for i, j in zip(rows, cols):
            z = window.matrix[i, j]
            w.writerow([int(i), int(j), repr(float(z.real)), repr(float(z.imag))])
    finally:
        if own:
            fh.close()


# -- sphere: annulus reduction -------------------------------------------------

@dataclass(frozen=True)
class Annulus:
    """Closed region inner <= |zeta| <= outer; ``standard`` is gamma_+ > gamma_-."""

    inner: float
    outer: float
    standard: bool

    @property
    def degenerate(self) -> bool:
        return self.inner == self.outer


def annulus_radii(beta: float, gamma_plus: float, gamma_minus: float) -> Annulus:
    """Radii exp(-gamma_+ beta) and exp(-gamma_- beta), stored as (min, max)."""
    r1, r2 = math.exp(-gamma_plus * beta), math.exp(-gamma_minus * beta)
    return Annulus(min(r1, r2), max(r1, r2), gamma_plus > gamma_minus)


@dataclass
class InteriorVerdict:
    verdict: bool | None
    margin: float
    witness: complex | None = None
    certificate: str = ""
    trace: list = field(default_factory=list)


def _require_sphere(op: ConicalGOperator) -> None:
    if op.family is not FamilyKind.SPHERE:
        raise FamilyMismatch(f"expected a SphereFirstOrder operator, got {op.family.value}")


def check_interior_elliptic_sphere(op: ConicalGOperator) -> InteriorVerdict:
    """|Re a| > |b| / r with r the inner annulus radius.

    The multiplier a + b / zeta maps the circle |zeta| = rho onto the circle
    of radius |b| / rho around a, so Re(a + b / zeta) avoids zero on the
    annulus exactly when it does on the inner circle.
    """
    _require_sphere(op)
    a, b, beta = op.param("a"), op.param("b"), op.param("beta")
    ann = annulus_radii(beta, op.gamma_plus, op.gamma_minus)
    reach = abs(b) / ann.inner
    margin = abs(a.real) - reach
    if margin > 0:
        return InteriorVerdict(True, margin, None, "analytic: |Re a| > |b|/r")
    if b == 0:
        witness = complex(ann.inner)
    else:
        # b / zeta = reach * u with |u| = 1 and Re(reach * u) = -Re a; scaled to avoid underflow
        c = max(-1.0, min(1.0, -a.real / reach))
        u = complex(c, math.sqrt(max(1.0 - c * c, 0.0)))
        witness = ann.inner * (b / abs(b)) * u.conjugate()
    return InteriorVerdict(False, margin, witness, "analytic: |Re a| > |b|/r fails")


def interior_grid_oracle(a: complex, b: complex, beta: float, gamma_plus: float, gamma_minus: float,
                         n: int = 4096, threshold: float = 1e-9) -> tuple[bool, float]:
    """Sample Re(a + b / zeta) on both boundary circles of the annulus.

    Re of a holomorphic function is harmonic, so it has no zero in the closed
    annulus iff it keeps one strict sign on the two circles.
    """
    theta = 2 * np.pi * np.arange(n) / n
    vals = []
    for rho in (math.exp(-gamma_plus * beta), math.exp(-gamma_minus * beta)):
        zeta = rho * np.exp(1j * theta)
        vals.append((a + b / zeta).real)
    v = np.concatenate(vals)
    mn = float(np.abs(v).min())
    same_sign = bool(np.all(v > 0) or np.all(v < 0))
    return same_sign and mn > threshold, mn


def circle_multiplier_min(a: complex, b: complex, eta: float, tau: float, n: int = 4096) -> float:
    """min over the unit circle of |i tau + (a + b e^{-i theta}) eta|."""
    theta = 2 * np.pi * np.arange(n) / n
    return float(np.abs(1j * tau + (a + b * np.exp(-1j * theta)) * eta).min())


# -- generic window heuristic ------------------------------------------------------

def default_contexts(op: ConicalGOperator, n_angles: int = 16) -> list[tuple[Context, tuple[float, float]]]:
    """Covectors on the cosphere at every conical end and one interior point."""
    if op.geometry.base_kind is BaseKind.POINT:
        covs = [(0.0, 1.0), (0.0, -1.0)]
    else:
        th = 2 * np.pi * np.arange(n_angles) / n_angles
        covs = [(float(np.cos(t)), float(np.sin(t))) for t in th]
    places: list[Context] = [InteriorPoint()] + [BoundaryPoint(p.label) for p in op.geometry.conical_points]
    return [(c, xi) for c in places for xi in covs]


def _refine_angle(op, ctx, xi, width: float, W: int) -> tuple[float, float]:
    """Locally minimize the section sigma_min over the covector angle near xi."""
    from scipy.optimize import minimize_scalar

    t0 = math.atan2(xi[1], xi[0])

    def f(t):
        return interior_symbol_matrix(op, ctx, (math.cos(t), math.sin(t)), W).sigma_min()

    res = minimize_scalar(f, bounds=(t0 - width, t0 + width), method="bounded",
                          options={"xatol": 1e-6})
    return (math.cos(res.x), math.sin(res.x))


def check_interior_elliptic_generic(op: ConicalGOperator,
                                    contexts: Sequence[tuple[Context, tuple[float, float]]] | None = None,
                                    W_schedule: Sequence[int] | None = None, tol: float = 1e-3,
                                    stable_rel: float = 0.05) -> InteriorVerdict:
    """Numerical certificate from finite sections over a window schedule.

    Per sampled context the smallest singular value is tracked across the
    schedule.  It is read as stable (likely elliptic) when the last two
    values agree within ``stable_rel`` and exceed ``tol``, as decaying
    (likely degenerate) when it drops below ``tol`` or falls by more than
    ``stable_rel`` at every step, and as unresolved otherwise (verdict None).
    The default schedule depends on the group rank, since a Z^2 window of
    radius W has (2W+1)^2 sites.
    """
    if W_schedule is None:
        W_schedule = DEFAULT_SCHEDULES[op.action.rank]
    W = [int(w) for w in W_schedule]
    if len(W) < 3 or any(y <= x for x, y in zip(W, W[1:])):
        raise NonmonotoneSchedule(f"window schedule must be strictly increasing with >= 3 entries, got {W}")
    if contexts is None:
        contexts = default_contexts(op)
        if op.geometry.base_kind is BaseKind.CIRCLE:
            # the coarse angle grid can straddle a degenerate covector; add the
            # local minimizer around the worst sample of each place
            width = math.pi / 8
            extra = []
            for place in {c for c, _ in contexts}:
                cand = [(interior_symbol_matrix(op, c, xi, W[0]).sigma_min(), xi)
                        for c, xi in contexts if c == place]
                extra.append((place, _refine_angle(op, place, min(cand)[1], width, W[0])))
            contexts = contexts + sorted(extra, key=lambda e: _context_label(e[0]))
    contexts = list(contexts)
    trace = []
    verdicts = []
    for ctx, xi in contexts:
        sig = [interior_symbol_matrix(op, ctx, xi, w).sigma_min() for w in W]
        last, prev = sig[-1], sig[-2]
        drops = all(y < (1 - stable_rel) * x for x, y in zip(sig, sig[1:]))
        if last <= tol or drops:
            v = False
        elif abs(last - prev) <= stable_rel * last:
            v = True
        else:
            v = None
        verdicts.append(v)
        trace.append({"context": _context_label(ctx), "xi": list(xi), "sigma_min": sig, "verdict": v})
    smin = min(t["sigma_min"][-1] for t in trace)
    if any(v is False for v in verdicts):
        overall = False
    elif any(v is None for v in verdicts):
        overall = None
    else:
        overall = True
    return InteriorVerdict(overall, smin, None, "numerical: finite-section window heuristic", trace)


def _context_label(ctx: Context) -> str:
    if isinstance(ctx, InteriorPoint):
        return f"interior(t0={ctx.t0})"
    return f"boundary({ctx.which})"
