"""Numerical Mellin transform on a logarithmic grid.

With r = exp(-t) the transform

    M u(p) = (2 pi i)^{-1/2} int_0^inf r^p u(r) dr / r
           = (2 pi i)^{-1/2} int_R exp(-t p) u(exp(-t)) dt

is a two-sided Laplace integral with a smooth, exponentially decaying
integrand inside the convergence strip, so the trapezoid rule on a uniform
t grid converges faster than any power of the step.  (2 pi i)^{1/2} is
taken on the principal branch, arg = pi/4.
"""
from __future__ import annotations

import cmath
import csv
import io
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DivergentTail, InputError

SQRT_2PI_I = cmath.sqrt(2j * math.pi)
TAIL = 1e-12
_CHUNK = 512


@dataclass(frozen=True)
class RadialFunction:
    """Samples u(exp(-t_j)) on a uniform grid t_j in [-T, T].

    ``order_at_zero`` = k means u = O(r^k) as r -> 0 and ``order_at_infinity``
    = k means u = O(r^-k) as r -> infinity; ``math.inf`` stands for decay at
    least like exp(-r).  For a circle base ``values`` has one row per Fourier
    mode listed in ``modes``.
    """

    t: np.ndarray
    values: np.ndarray
    order_at_zero: float = 0.0
    order_at_infinity: float = math.inf
    modes: tuple[int, ...] | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if t.ndim != 1 or t.size < 16:
            raise InputError("a radial function needs at least 16 samples")
        dt = np.diff(t)
        if not np.all(dt > 0):
            raise InputError("t grid must be strictly increasing")
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            raise InputError("t grid must be uniform")
        if v.shape[-1] != t.size:
            raise InputError("values and grid lengths differ")
        if self.modes is None and v.ndim != 1:
            raise InputError("multi-row values need a mode list")
        if self.modes is not None and (v.ndim != 2 or v.shape[0] != len(self.modes)):
            raise InputError("one row of values per Fourier mode")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, f: Callable, extent: float, n: int, *,
                      order_at_zero: float = 0.0, order_at_infinity: float = math.inf,
                      modes: Sequence[int] | None = None) -> RadialFunction:
        """Sample f(r) (or f(r, n) per mode when ``modes`` is given) on [-extent, extent]."""
        t = np.linspace(-extent, extent, n)
        r = np.exp(-t)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            if modes is None:
                vals = np.asarray(f(r), dtype=complex)
            else:
                vals = np.array([np.asarray(f(r, k), dtype=complex) for k in modes])
        vals = np.where(np.isfinite(vals), vals, 0.0)
        return cls(t, vals, float(order_at_zero), float(order_at_infinity),
                   None if modes is None else tuple(int(k) for k in modes))

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def r(self) -> np.ndarray:
        return np.exp(-self.t)

    @property
    def strip(self) -> tuple[float, float]:
        """Open interval of Re p where r^p u(r) dr/r is integrable."""
        return -self.order_at_zero, self.order_at_infinity

    def require_line(self, re_p: float) -> None:
        lo, hi = self.strip
        if not lo < re_p < hi:
            raise DivergentTail(f"Re p = {re_p} lies outside the convergence strip ({lo}, {hi})")

    def euler_derivative(self) -> RadialFunction:
        """-r du/dr, which is d/dt of the samples (second-order differences)."""
        d = np.gradient(self.values, self.step, axis=-1, edge_order=2)
        return replace(self, values=d)

    def __add__(self, other: RadialFunction) -> RadialFunction:
        return self._combine(other, 1.0, 1.0)

    def scaled(self, alpha: complex) -> RadialFunction:
        return replace(self, values=alpha * self.values)

    def _combine(self, other, x, y):
        if self.t.shape != other.t.shape or not np.array_equal(self.t, other.t):
            raise InputError("functions live on different grids")
        return RadialFunction(self.t, x * self.values + y * other.values,
                              min(self.order_at_zero, other.order_at_zero),
                              min(self.order_at_infinity, other.order_at_infinity), self.modes)


def extent_for(re_p_lo: float, re_p_hi: float, order_at_zero: float = 0.0,
               order_at_infinity: float = math.inf, tail: float = TAIL) -> float:
    """Half-width T of the t grid so that the integrand tails fall below ``tail``.

    Covers every line Re p in [re_p_lo, re_p_hi] (for squared integrands pass
    2*gamma and halve nothing: the bound is on |exp(-tp) u|).
    """
    logt = math.log(1.0 / tail)
    k0 = re_p_lo + order_at_zero
    if k0 <= 0:
        raise DivergentTail("lines reach the boundary of the convergence strip at r = 0")
    t_zero = logt / k0
    if math.isinf(order_at_infinity):
        # exp(-r) beats r^{Re p} once r > logt + |Re p| log r
        t_inf = math.log(logt + 2 * abs(re_p_hi) * math.log(logt + 1) + 1.0)
    else:
        k1 = order_at_infinity - re_p_hi
        if k1 <= 0:
            raise DivergentTail("lines reach the boundary of the convergence strip at r = inf")
        t_inf = logt / k1
    return max(t_zero, t_inf)


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


def _laplace_sum(t, weighted_values, p):
    """sum_j exp(-t_j p) * weighted_values[..., j] for an array of p."""
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    out = np.empty(weighted_values.shape[:-1] + p.shape, dtype=complex)
    for s in range(0, p.size, _CHUNK):
        blk = p[s:s + _CHUNK]
        kernel = np.exp(-np.outer(t, blk))
        out[..., s:s + _CHUNK] = weighted_values @ kernel
    return out


def _tail_check(u: RadialFunction, re_p: np.ndarray) -> None:
    mag = np.abs(np.atleast_2d(u.values)).max(axis=0)
    for x in np.unique(re_p):
        integrand = mag * np.exp(-u.t * x)
        peak = integrand.max()
        if peak > 0 and max(integrand[0], integrand[-1]) > 1e-10 * peak:
            warnings.warn(f"grid extent too small for Re p = {x}: tail integrand "
                          f"{max(integrand[0], integrand[-1]) / peak:.1e} of peak", RuntimeWarning,
                          stacklevel=3)


def mellin_transform(u: RadialFunction, p, *, return_error: bool = False):
    """(2 pi i)^{-1/2} int_0^inf r^p u(r) dr/r by the trapezoid rule in t = -log r.

    ``p`` may be a scalar or an array.  With ``return_error`` the difference to
    the same sum on every other sample (a Richardson-style check) is returned
    as a second value.
    """
    scalar = np.ndim(p) == 0
    p_arr = np.atleast_1d(np.asarray(p, dtype=complex))
    for x in np.unique(p_arr.real):
        u.require_line(float(x))
    _tail_check(u, p_arr.real)
    w = _trapezoid_weights(u.t.size, u.step)
    val = _laplace_sum(u.t, u.values * w, p_arr) / SQRT_2PI_I
    if return_error:
        n2 = (u.t.size - 1) // 2 * 2 + 1
        t2 = u.t[:n2:2]
        w2 = _trapezoid_weights(t2.size, 2 * u.step)
        coarse = _laplace_sum(t2, u.values[..., :n2:2] * w2, p_arr) / SQRT_2PI_I
        fine = val if n2 == u.t.size else _laplace_sum(
            u.t[:n2], u.values[..., :n2] * _trapezoid_weights(n2, u.step), p_arr) / SQRT_2PI_I
        err = np.abs(fine - coarse)
        if scalar:
            return val[..., 0], err[..., 0]
        return val, err
    return val[..., 0] if scalar else val


def _mode_eigenvalues(u: RadialFunction) -> np.ndarray:
    if u.modes is None:
        return np.zeros(1)
    return np.asarray(u.modes, dtype=float) ** 2


def _base_measure(u: RadialFunction) -> float:
    return 1.0 if u.modes is None else 2 * math.pi


def line_density(u: RadialFunction, s: float, gamma: float, y: np.ndarray) -> np.ndarray:
    """|| (1 - p^2 + Delta)^s M u(p) ||^2_{L^2(base)} at p = gamma + i y."""
    p = gamma + 1j * np.asarray(y, dtype=float)
    m = np.atleast_2d(mellin_transform(u, p))
    lam = _mode_eigenvalues(u)[:, None]
    factor = (1 - p[None, :] ** 2 + lam) ** s if s != 0 else 1.0
    return _base_measure(u) * np.sum(np.abs(factor * m) ** 2, axis=0)


def _line_step(u: RadialFunction, gamma: float) -> float:
    # Poisson summation: trapezoid error in y is the autocorrelation of
    # exp(-gamma t) u(exp(-t)) at lag 2 pi / dy
    lo, hi = u.strip
    kappa = min(gamma - lo, hi - gamma, 4.0)
    return min(0.25, 2 * math.pi * kappa / 40.0)


def line_integral(u: RadialFunction, s: float, gamma: float, *, dy: float | None = None,
                  y_max: float | None = None, rel_tail: float = 1e-16) -> float:
    """int_{Re p = gamma} || (1 - p^2 + Delta)^s M u ||^2 |dp| by the trapezoid rule in Im p."""
    u.require_line(gamma)
    dy = dy or _line_step(u, gamma)
    nyquist = math.pi / u.step
    Y = y_max or min(8.0, nyquist)
    while True:
        n = int(math.ceil(Y / dy))
        y = np.linspace(-n * dy, n * dy, 2 * n + 1)
        dens = line_density(u, s, gamma, y)
        peak = dens.max()
        edge = max(dens[:5].max(), dens[-5:].max())
        if y_max is not None or peak == 0 or edge <= rel_tail * peak:
            break
        if Y >= nyquist:
            warnings.warn("line integrand has not decayed at the Nyquist limit of the t grid",
                          RuntimeWarning, stacklevel=2)
            break
        Y = min(2 * Y, nyquist)
    return float(np.sum(dens * _trapezoid_weights(y.size, y[1] - y[0])))


def weighted_norm(u: RadialFunction, s: float, gamma: float, **kw) -> float:
    """Squared weighted Sobolev norm ||u||^2_{s,gamma} as a weight-line integral.

    The value is the line integral itself (no square root).  For s = 0 it is
    the squared L^2 norm of r^gamma u for the measure dr/r (times the base
    measure on a circle base).
    """
    if s == 0 and not np.any(u.values):
        u.require_line(gamma)
        return 0.0
    return line_integral(u, s, gamma, **kw)


def radial_l2(u: RadialFunction, gamma: float) -> float:
    """int_0^inf r^{2 gamma} |u|^2 dr/r directly from the samples."""
    u.require_line(gamma)
    w = _trapezoid_weights(u.t.size, u.step)
    dens = np.sum(np.abs(np.atleast_2d(u.values)) ** 2, axis=0) * np.exp(-2 * gamma * u.t)
    return float(_base_measure(u) * np.sum(w * dens))


def plancherel_residual(u: RadialFunction, gamma: float, **kw) -> float:
    """|int_{Re p = gamma} |M u|^2 |dp| - int_0^inf r^{2 gamma} |u|^2 dr/r|."""
    rhs = radial_l2(u, gamma)
    if rhs == 0.0:
        return 0.0
    return abs(line_integral(u, 0, gamma, **kw) - rhs)


# -- CSV ---------------------------------------------------------------------

def write_csv(u: RadialFunction, dest) -> None:
    if u.modes is not None:
        raise InputError("CSV export covers scalar radial functions only")
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fh)
        w.writerow(["t", "re_u", "im_u"])
        for t, v in zip(u.t, u.values):
            w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])
    finally:
        if own:
            fh.close()


def read_csv(src, *, order_at_zero: float = 0.0, order_at_infinity: float = math.inf) -> RadialFunction:
    text = Path(src).read_text() if isinstance(src, (str, Path)) else src.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["t", "re_u", "im_u"]:
        raise InputError("expected CSV header t,re_u,im_u")
    try:
        data = np.array([[float(c) for c in row] for row in rows[1:] if row], dtype=float)
    except ValueError as exc:
        raise InputError(f"bad CSV value: {exc}") from exc
    return RadialFunction(data[:, 0], data[:, 1] + 1j * data[:, 2], order_at_zero, order_at_infinity)


# -- self-test -----------------------------------------------------------------

SELFTEST_FUNCTIONS = {
    "exp(-r)": (lambda r: np.exp(-r), 0.0),
    "r exp(-r)": (lambda r: r * np.exp(-r), 1.0),
    "exp(-r) sin r": (lambda r: np.exp(-r) * np.sin(r), 1.0),
}


def selftest(gammas: Sequence[float] = (0.0, 0.5)) -> dict:
    """Plancherel, shift-law and derivative-law residuals on the standard test set.

    Returns a dict with the per-case residuals, the maxima, and the observed
    convergence orders of the derivative law over three grid refinements.
    Pairs (function, gamma) outside the convergence strip are listed as skipped.
    """
    out = {"plancherel": {}, "skipped": [], "shift": {}, "derivative": {}}
    for name, (f, k0) in SELFTEST_FUNCTIONS.items():
        for g in gammas:
            if not g > -k0:
                out["skipped"].append(f"{name} @ gamma={g}")
                continue
            T = extent_for(g, g, k0)
            u = RadialFunction.from_callable(f, T, int(T / 0.05) | 1, order_at_zero=k0)
            out["plancherel"][f"{name} @ gamma={g}"] = plancherel_residual(u, g)
    p = np.array([1.0 + 0.5j, 1.5 - 2.0j, 2.0 + 0.0j])
    beta = 0.7
    for name, (f, k0) in SELFTEST_FUNCTIONS.items():
        T = extent_for(1.0, 2.0, k0)
        u = RadialFunction.from_callable(f, T, int(T / 0.05) | 1, order_at_zero=k0)
        v = RadialFunction.from_callable(lambda r: f(r * math.exp(-beta)), T, u.t.size, order_at_zero=k0)
        out["shift"][name] = float(np.max(np.abs(mellin_transform(v, p) - np.exp(beta * p) * mellin_transform(u, p))))
    levels = (2 ** 18 + 1, 2 ** 19 + 1, 2 ** 20 + 1)
    for name, (f, k0) in SELFTEST_FUNCTIONS.items():
        T = extent_for(1.0, 2.0, k0)
        errs = []
        for n in levels:
            u = RadialFunction.from_callable(f, T, n, order_at_zero=k0)
            du = u.euler_derivative()
            errs.append(float(np.max(np.abs(mellin_transform(du, p) - p * mellin_transform(u, p)))))
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
        out["derivative"][name] = {"residuals": errs, "orders": orders}
    out["max_plancherel"] = max(out["plancherel"].values())
    out["max_shift"] = max(out["shift"].values())
    out["max_derivative"] = max(d["residuals"][-1] for d in out["derivative"].values())
    out["min_derivative_order"] = min(min(d["orders"]) for d in out["derivative"].values())
    return out
