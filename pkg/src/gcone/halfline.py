"""Invertibility of 1 + a T_alpha + b T_beta on weighted spaces of the half-line.

On the line Re p = g the symbol sweeps 1 + A e^{i phi} + B e^{i psi} with
A = |a| e^{alpha g}, B = |b| e^{beta g}, i.e. the circles |z - 1| = A and
|z| = B.  These miss each other exactly when one of

    h_A = A - 1 - B,   h_B = B - 1 - A,   h_I = 1 - A - B

is positive.  At most one h can be positive at any g (any two sum to a
nonpositive number), so on an interval of weights the symbol is invertible
iff a single h stays positive throughout, and that h names the dominant term.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, least_squares

from .errors import InputError
from .operator_model import ConicalGOperator, FamilyKind

IDENTITY, TERM_A, TERM_B = "Identity", "TermA", "TermB"


@dataclass
class RegionVerdict:
    verdict: bool
    dominant: str | None
    failing: list[tuple[float, float]] = field(default_factory=list)
    commensurate: bool = False

    def as_dict(self) -> dict:
        return {"verdict": self.verdict, "dominant": self.dominant,
                "failing_intervals": [list(iv) for iv in self.failing],
                "commensurate_caveat": self.commensurate}


def _dominance(abs_a, abs_b, alpha, beta):
    """The three functions as (c0, c1, k1, c2, k2): c0 + c1 e^{k1 g} + c2 e^{k2 g}."""
    return {
        TERM_A: (-1.0, abs_a, alpha, -abs_b, beta),
        TERM_B: (-1.0, abs_b, beta, -abs_a, alpha),
        IDENTITY: (1.0, -abs_a, alpha, -abs_b, beta),
    }


def _ev(coef, g):
    c0, c1, k1, c2, k2 = coef
    return c0 + c1 * math.exp(k1 * g) + c2 * math.exp(k2 * g)


def _critical_point(coef):
    # derivative c1 k1 e^{k1 g} + c2 k2 e^{k2 g} has at most one zero
    _, c1, k1, c2, k2 = coef
    if k1 == k2 or c1 == 0 or c2 == 0:
        return None
    ratio = -(c2 * k2) / (c1 * k1)
    if ratio <= 0:
        return None
    return math.log(ratio) / (k1 - k2)


def _zeros(coef, lo, hi):
    """Zeros of a dominance function on [lo, hi], by bracketing on monotone pieces."""
    pts = [lo, hi]
    gc = _critical_point(coef)
    if gc is not None and lo < gc < hi:
        pts.insert(1, gc)
        if abs(_ev(coef, gc)) <= 1e-15 * (1 + abs(coef[1]) * math.exp(coef[2] * gc)):
            return [gc]  # tangential zero
    out = []
    for x0, x1 in zip(pts, pts[1:]):
        f0, f1 = _ev(coef, x0), _ev(coef, x1)
        if f0 == 0:
            out.append(x0)
        elif f0 * f1 < 0:
            out.append(brentq(lambda g: _ev(coef, g), x0, x1, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    if _ev(coef, hi) == 0:
        out.append(hi)
    return sorted(set(out))


def halfline_region_classify(abs_a: float, abs_b: float, alpha: float, beta: float,
                             gamma_minus: float, gamma_plus: float) -> RegionVerdict:
    """Invertibility of the half-line symbol on every line gamma_- <= Re p <= gamma_+."""
    if gamma_minus > gamma_plus:
        raise InputError(f"need gamma_minus <= gamma_plus, got {gamma_minus} > {gamma_plus}")
    if not (alpha > 0 and beta > 0):
        raise InputError("alpha and beta must be positive")
    if abs_a < 0 or abs_b < 0:
        raise InputError("moduli must be nonnegative")
    lo, hi = float(gamma_minus), float(gamma_plus)
    funcs = _dominance(float(abs_a), float(abs_b), float(alpha), float(beta))
    if lo == hi:
        for name, coef in funcs.items():
            if _ev(coef, lo) > 0:
                return RegionVerdict(True, name)
        return RegionVerdict(False, None, [(lo, hi)])
    cuts = sorted({z for coef in funcs.values() for z in _zeros(coef, lo, hi) if lo < z < hi})
    bps = [lo] + cuts + [hi]
    failing_pts = []
    for x0, x1 in zip(bps, bps[1:]):
        mid = 0.5 * (x0 + x1)
        if all(_ev(c, mid) <= 0 for c in funcs.values()):
            failing_pts.append((x0, x1))
    for x in bps:
        # zeros of a dominance function always fail; the ends are evaluated
        if x in cuts or all(_ev(c, x) <= 0 for c in funcs.values()):
            failing_pts.append((x, x))
    failing = _merge(failing_pts)
    if failing:
        return RegionVerdict(False, None, failing)
    for name, coef in funcs.items():
        if _ev(coef, 0.5 * (lo + hi)) > 0:
            return RegionVerdict(True, name)
    raise AssertionError("covering without a dominant term")  # pragma: no cover


def _merge(ivs):
    out: list[list[float]] = []
    for a, b in sorted(ivs):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def classify_operator(op: ConicalGOperator, gamma_minus: float | None = None,
                      gamma_plus: float | None = None) -> RegionVerdict:
    if op.family is not FamilyKind.HALFLINE:
        raise InputError(f"region classification applies to HalflineZeroOrder, got {op.family.value}")
    pr = op.params
    lo = op.gamma_minus if gamma_minus is None else gamma_minus
    hi = op.gamma_plus if gamma_plus is None else gamma_plus
    lo, hi = min(lo, hi), max(lo, hi)
    v = halfline_region_classify(abs(pr["a"]), abs(pr["b"]), pr["alpha"], pr["beta"], lo, hi)
    v.commensurate = op.commensurability_warning
    return v


def torus_min_modulus(abs_a: float, abs_b: float, alpha: float, beta: float, gamma: float) -> float:
    """min over phases of |1 + A e^{i phi} + B e^{i psi}|: the gap between the two circles."""
    A, B = abs_a * math.exp(alpha * gamma), abs_b * math.exp(beta * gamma)
    return max(0.0, 1 - A - B, A - 1 - B, B - 1 - A)


def halfline_line_verdict(op: ConicalGOperator, gamma: float, halfwidth: float = 1.0):
    """Line verdict for the half-line family, with the distance to the nearest failing weight."""
    from .contour import LineVerdict

    pr = op.params
    aa, bb = abs(pr["a"]), abs(pr["b"])
    mm = torus_min_modulus(aa, bb, pr["alpha"], pr["beta"], gamma)
    here = halfline_region_classify(aa, bb, pr["alpha"], pr["beta"], gamma, gamma)
    near = halfline_region_classify(aa, bb, pr["alpha"], pr["beta"], gamma - halfwidth, gamma + halfwidth)
    dist = min((0.0 if a <= gamma <= b else min(abs(gamma - a), abs(gamma - b)) for a, b in near.failing),
               default=math.inf)
    notes = ["commensurate exponents: the circle criterion is conservative"] if op.commensurability_warning else []
    return LineVerdict(gamma, here.verdict, mm, dist, None, True, notes)


# -- brute-force oracle -------------------------------------------------------------

def halfline_min_modulus_oracle(a: complex, b: complex, alpha: float, beta: float,
                                gamma_range: tuple[float, float], grid: Sequence[int] = (128, 128, 128),
                                polish: bool = True, n_starts: int = 8) -> float:
    """Brute-force min of |1 + |a| e^{g alpha} e^{i phi} + |b| e^{g beta} e^{i psi}|.

    The (g, phi, psi) grid minimum is refined, when it is small enough for
    the grid to hide a zero, by bounded least squares on the real and
    imaginary parts started from the best grid points.
    """
    ng, nphi, npsi = (int(x) for x in grid)
    if min(nphi, npsi) < 64 or ng < 1:
        raise InputError("phase grids need at least 64 points")
    lo, hi = (float(x) for x in gamma_range)
    aa, bb = abs(a), abs(b)
    gs = np.linspace(lo, hi, ng) if hi > lo else np.array([lo])
    phi = 2 * np.pi * np.arange(nphi) / nphi
    psi = 2 * np.pi * np.arange(npsi) / npsi
    trig = np.stack([np.cos(psi), np.sin(psi)])
    best = []
    for g in gs:
        A, B = aa * math.exp(alpha * g), bb * math.exp(beta * g)
        x = 1 + A * np.cos(phi)
        y = A * np.sin(phi)
        # |x + iy + B e^{i psi}|^2 = x^2 + y^2 + B^2 + 2B (x cos psi + y sin psi)
        val = (x * x + y * y)[:, None] + B * B + 2 * B * (np.stack([x, y], axis=1) @ trig)
        k = int(np.argmin(val))
        best.append((float(val.flat[k]), g, phi[k // npsi], psi[k % npsi]))
    best.sort()
    m2 = max(best[0][0], 0.0)
    # a grid minimum beyond the grid's own Lipschitz error cannot hide a zero
    amax, bmax = aa * math.exp(alpha * max(abs(lo), abs(hi))), bb * math.exp(beta * max(abs(lo), abs(hi)))
    dg = (hi - lo) / max(ng - 1, 1)
    slack = math.pi / nphi * amax + math.pi / npsi * bmax + 0.5 * dg * (alpha * amax + beta * bmax)
    if polish and 0 < m2 <= (2 * slack) ** 2:
        def resid(v, g):
            ph, ps = v[-2:]
            A, B = aa * math.exp(alpha * g), bb * math.exp(beta * g)
            return np.array([1 + A * math.cos(ph) + B * math.cos(ps), A * math.sin(ph) + B * math.sin(ps)])

        def jac(v, g, free_g):
            ph, ps = v[-2:]
            A, B = aa * math.exp(alpha * g), bb * math.exp(beta * g)
            cols = [[-A * math.sin(ph), A * math.cos(ph)], [-B * math.sin(ps), B * math.cos(ps)]]
            if free_g:
                cols.insert(0, [alpha * A * math.cos(ph) + beta * B * math.cos(ps),
                                alpha * A * math.sin(ph) + beta * B * math.sin(ps)])
            return np.array(cols).T

        opts = dict(method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=100)
        for _, g, ph, ps in best[:n_starts]:
            # phases alone at the grid weight, then the weight as well from a strictly
            # interior start (trf stalls when started on a bound)
            res = least_squares(lambda v: resid(v, g), np.array([ph, ps]), jac=lambda v: jac(v, g, False), **opts)
            m2 = min(m2, float(np.sum(resid(res.x, g) ** 2)))
            if m2 < 1e-24:
                break
            if hi > lo:
                eps = 1e-6 * (hi - lo)
                x0 = np.array([min(max(g, lo + eps), hi - eps), *res.x])
                res = least_squares(lambda v: resid(v, v[0]), x0, jac=lambda v: jac(v, v[0], True),
                                    bounds=([lo, -np.inf, -np.inf], [hi, np.inf, np.inf]), **opts)
                m2 = min(m2, float(np.sum(resid(res.x, res.x[0]) ** 2)))
                if m2 < 1e-24:
                    break
    return math.sqrt(m2)


# -- parameter region grid -----------------------------------------------------------

@dataclass
class RegionGrid:
    abs_a: np.ndarray
    abs_b: np.ndarray
    elliptic: np.ndarray  # shape (len(abs_a), len(abs_b))
    dominant: np.ndarray  # object array of labels or ""

    def components(self) -> int:
        """Connected elliptic components, 4-connectivity."""
        from scipy import ndimage

        _, n = ndimage.label(self.elliptic, structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]])
        return int(n)

    def rows(self):
        for i, av in enumerate(self.abs_a):
            for j, bv in enumerate(self.abs_b):
                yield float(av), float(bv), bool(self.elliptic[i, j]), str(self.dominant[i, j])


def halfline_region_plot(alpha: float, beta: float, gamma_minus: float, gamma_plus: float,
                         abs_a: Sequence[float], abs_b: Sequence[float]) -> RegionGrid:
    a_vals = np.asarray(abs_a, dtype=float)
    b_vals = np.asarray(abs_b, dtype=float)
    if np.any(a_vals <= 0) or np.any(b_vals <= 0):
        raise InputError("grid bounds must be positive")
    ell = np.zeros((a_vals.size, b_vals.size), dtype=bool)
    dom = np.full(ell.shape, "", dtype=object)
    for i, av in enumerate(a_vals):
        for j, bv in enumerate(b_vals):
            v = halfline_region_classify(av, bv, alpha, beta, gamma_minus, gamma_plus)
            ell[i, j] = v.verdict
            dom[i, j] = v.dominant or ""
    return RegionGrid(a_vals, b_vals, ell, dom)


def uniform_axis(vmax: float, n: int) -> np.ndarray:
    """n points vmax/n, 2 vmax/n, ..., vmax."""
    return vmax * np.arange(1, n + 1) / n


def write_region_csv(grid: RegionGrid, dest) -> None:
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fh)
        w.writerow(["abs_a", "abs_b", "elliptic", "dominant"])
        for av, bv, e, d in grid.rows():
            w.writerow([repr(av), repr(bv), int(e), d])
    finally:
        if own:
            fh.close()
