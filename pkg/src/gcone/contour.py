"""Zeros of conormal families in a vertical strip by the argument principle.

Each retained mode is searched on the rectangle [sigma1, sigma2] x [-H, H].
Winding numbers come from summed phase increments along the boundary, with
segments bisected until every increment is below pi/2.  Rectangles are split
until each holds at most one zero (or is too small to split, which signals
a multiple zero); the zero is then located from the contour moment
(1/2 pi i) \\oint p f'/f dp and polished by Newton's method.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .conormal import ConormalFamily, ModeBound, conormal_family, generic_mode_bound, mode_truncation_bound
from .errors import ContourThroughZero, FamilyMismatch, InputError, NewtonDivergence, NoBoundAvailable
from .operator_model import ConicalGOperator, FamilyKind

SPLIT_AT = 0.5 + 0.0123  # off-centre cuts keep symmetric zeros off the cut lines
MAX_CONTOUR_POINTS = 1 << 18


@dataclass(frozen=True)
class StripSearchConfig:
    """Search region and numerical controls.

    ``modes`` None asks for the certified mode bound; an integer N retains
    |n| <= N.  ``height`` None uses the certified root height plus one.
    ``max_cell`` caps the side length of leaf rectangles before moments are
    taken, ``min_cell`` is the size below which a multi-zero cell is treated
    as one multiple zero.
    """

    sigma: tuple[float, float] = (-1.0, 1.0)
    height: float | None = None
    modes: int | None = None
    newton_tol: float = 1e-12
    max_newton_iter: int = 60
    points_per_edge: int = 64
    max_cell: float = 2.0
    min_cell: float = 1e-7
    contour_tol: float = 1e-10
    jitter: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        s1, s2 = self.sigma
        if not s1 < s2:
            raise InputError(f"strip needs sigma1 < sigma2, got {self.sigma}")
        if self.height is not None and not self.height > 0:
            raise InputError("strip height must be positive")
        for name in ("newton_tol", "contour_tol", "max_cell", "min_cell", "jitter"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if self.points_per_edge < 4 or self.max_newton_iter < 1:
            raise InputError("points_per_edge >= 4 and max_newton_iter >= 1 required")
        if self.modes is not None and self.modes < 0:
            raise InputError("mode count must be nonnegative")

    @classmethod
    def from_mapping(cls, opts: dict) -> StripSearchConfig:
        kw = dict(opts)
        if "sigma" in kw:
            kw["sigma"] = tuple(float(x) for x in kw["sigma"])
        for k in ("modes", "max_newton_iter", "points_per_edge", "workers"):
            if k in kw and kw[k] is not None:
                kw[k] = int(kw[k])
        return cls(**kw)


@dataclass(frozen=True)
class RootRecord:
    mode: int | None
    root: complex
    residual: float
    multiplicity: int
    count_check: bool

    def as_dict(self) -> dict:
        return {"mode": self.mode, "re": self.root.real, "im": self.root.imag, "residual": self.residual,
                "multiplicity": self.multiplicity, "count_check": self.count_check}


@dataclass
class SearchResult:
    roots: list[RootRecord]
    modes: list[int | None]
    height: float
    bound: ModeBound | None
    certified: bool
    notes: list[str] = field(default_factory=list)

    @property
    def singular_weights(self) -> list[float]:
        return sorted({r.root.real for r in self.roots})


class _NearZero(Exception):
    pass


# -- argument principle ----------------------------------------------------------

def _perimeter(rect, per_edge):
    x0, x1, y0, y1 = rect
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]
    pts = [np.linspace(corners[k], corners[k + 1], per_edge, endpoint=False) for k in range(4)]
    return np.concatenate(pts + [np.array([corners[0]])])


def winding_number(f, rect, per_edge: int = 64, tol: float = 1e-10) -> int:
    """Zeros of f inside rect = (x0, x1, y0, y1), counted with multiplicity.

    Raises _NearZero when |f| on the boundary drops below ``tol`` or the
    boundary cannot be resolved.
    """
    z = _perimeter(rect, per_edge)
    fz = np.asarray(f(z), dtype=complex)
    while True:
        if not np.all(np.isfinite(fz)):
            raise _NearZero("non-finite values on the contour")
        if np.abs(fz).min() < tol:
            raise _NearZero("contour passes near a zero")
        dphi = np.angle(fz[1:] / fz[:-1])
        bad = np.flatnonzero(np.abs(dphi) >= math.pi / 2)
        if bad.size == 0:
            total = dphi.sum() / (2 * math.pi)
            k = int(round(total))
            if abs(total - k) > 1e-3:
                raise _NearZero("winding sum is not close to an integer")
            return k
        if z.size + bad.size > MAX_CONTOUR_POINTS:
            raise _NearZero("contour refinement limit reached")
        mid = 0.5 * (z[bad] + z[bad + 1])
        fmid = np.asarray(f(mid), dtype=complex)
        z = np.insert(z, bad + 1, mid)
        fz = np.insert(fz, bad + 1, fmid)


def _gauss_legendre_edges(rect, nodes):
    x, w = np.polynomial.legendre.leggauss(nodes)
    x0, x1, y0, y1 = rect
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    pts, wts = [], []
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        pts.append(0.5 * (a + b) + 0.5 * (b - a) * x)
        wts.append(0.5 * (b - a) * w)
    return np.concatenate(pts), np.concatenate(wts)


def contour_moment(f, df, rect, nodes: int = 64) -> complex:
    """(1/2 pi i) \\oint p f'(p)/f(p) dp over the rectangle boundary."""
    z, w = _gauss_legendre_edges(rect, nodes)
    return complex(np.sum(w * z * df(z) / f(z)) / (2j * math.pi))


def _newton(f, df, p0, mult, tol, maxit, box):
    p = complex(p0)
    x0, x1, y0, y1 = box
    span = max(x1 - x0, y1 - y0)
    for _ in range(maxit):
        fp, dfp = complex(f(p)), complex(df(p))
        if fp == 0:
            return p
        if dfp == 0 or not np.isfinite(dfp):
            raise NewtonDivergence(f"vanishing derivative at {p}")
        step = mult * fp / dfp
        p -= step
        if not (x0 - span <= p.real <= x1 + span and y0 - span <= p.imag <= y1 + span):
            raise NewtonDivergence(f"Newton left the search cell at {p}")
        if abs(step) <= tol * max(1.0, abs(p)):
            return p
    raise NewtonDivergence(f"Newton did not converge in {maxit} iterations near {p0}")


def _split(rect):
    x0, x1, y0, y1 = rect
    if x1 - x0 >= y1 - y0:
        xm = x0 + SPLIT_AT * (x1 - x0)
        return (x0, xm, y0, y1), (xm, x1, y0, y1)
    ym = y0 + SPLIT_AT * (y1 - y0)
    return (x0, x1, y0, ym), (x0, x1, ym, y1)


def _nudge(rect, k):
    # shift the cut position by a small irrational amount on retries
    x0, x1, y0, y1 = rect
    e = 0.0137 * k
    if x1 - x0 >= y1 - y0:
        xm = x0 + (SPLIT_AT + e) * (x1 - x0)
        return (x0, xm, y0, y1), (xm, x1, y0, y1)
    ym = y0 + (SPLIT_AT + e) * (y1 - y0)
    return (x0, x1, y0, ym), (x0, x1, ym, y1)


def _locate(f, df, rect, count, cfg: StripSearchConfig):
    """Zeros in ``rect`` known to hold ``count`` of them: [(root, multiplicity)]."""
    if count == 0:
        return []
    x0, x1, y0, y1 = rect
    size = max(x1 - x0, y1 - y0)
    if count == 1 and size <= cfg.max_cell:
        guess = contour_moment(f, df, rect, cfg.points_per_edge)
        try:
            return [(_newton(f, df, guess, 1, cfg.newton_tol, cfg.max_newton_iter, rect), 1)]
        except NewtonDivergence:
            centre = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
            return [(_newton(f, df, centre, 1, cfg.newton_tol, cfg.max_newton_iter, rect), 1)]
    if size <= cfg.min_cell:
        guess = contour_moment(f, df, rect, cfg.points_per_edge) / count
        return [(_newton(f, df, guess, count, cfg.newton_tol, cfg.max_newton_iter, rect), count)]
    for attempt in range(4):
        left, right = _split(rect) if attempt == 0 else _nudge(rect, attempt)
        try:
            kl = winding_number(f, left, cfg.points_per_edge, cfg.contour_tol)
            kr = winding_number(f, right, cfg.points_per_edge, cfg.contour_tol)
        except _NearZero:
            continue
        if kl + kr == count and kl >= 0 and kr >= 0:
            return _locate(f, df, left, kl, cfg) + _locate(f, df, right, kr, cfg)
    raise ContourThroughZero(f"could not split cell {rect} without touching a zero")


def _search_mode(family: ConormalFamily, n, rect, cfg: StripSearchConfig):
    def f(p):
        return family.value(p, n)

    def df(p):
        return family.derivative(p, n)

    box = rect
    for attempt in range(4):
        try:
            total = winding_number(f, box, cfg.points_per_edge, cfg.contour_tol)
            break
        except _NearZero:
            if attempt == 3:
                raise ContourThroughZero(f"strip boundary passes through a zero of mode {n} after 3 jitters") from None
            e = cfg.jitter * (attempt + 1) * (1 + 0.37 * attempt)
            x0, x1, y0, y1 = rect
            box = (x0 - e, x1 + e, y0 - e, y1 + e)
    found = _locate(f, df, box, total, cfg)
    got = sum(m for _, m in found)
    records = []
    for p, m in found:
        records.append(RootRecord(n, complex(p), float(abs(f(p))), m, got == total))
    return records, box


def _mode_list(op, family, cfg: StripSearchConfig):
    """Retained modes, search height, bound used (if any), certification flag and notes."""
    notes: list[str] = []
    bound = None
    if op is not None and op.family is FamilyKind.SPHERE:
        try:
            bound = mode_truncation_bound(op, cfg.sigma, cfg.height)
        except NoBoundAvailable as exc:
            if cfg.modes is None:
                raise
            notes.append(f"no mode bound: {exc}")
    elif op is not None and op.family is FamilyKind.GENERIC:
        bound = generic_mode_bound(op)
    if op is not None and op.family is FamilyKind.HALFLINE and cfg.height is None:
        raise InputError("strip height is required for exponential sums with several terms")
    certified = bound is not None
    if not family.per_mode:
        modes: list = [None]
    elif cfg.modes is not None:
        modes = list(range(-cfg.modes, cfg.modes + 1))
        if bound is not None and cfg.modes < bound.N:
            notes.append(f"manual mode count {cfg.modes} is below the certified bound {bound.N}")
            certified = False
    elif bound is not None:
        modes = list(range(-bound.N, bound.N + 1))
    else:
        raise NoBoundAvailable("no mode bound for this family; give the mode count explicitly")
    if op is not None and op.family is FamilyKind.HALFLINE:
        certified = False
        notes.append("exponential sum: zeros above the search height are not excluded")
    if bound is not None and not bound.all_heights:
        certified = False
        notes.append(f"completeness certified only within {bound.certificate}")
    height = cfg.height
    rh = math.inf
    if op is not None and op.family is FamilyKind.SPHERE and family.per_mode:
        # |Im f_n| >= |Im p| - |n|(|a| + |b| Emax) - |c| - |d| Emax on the retained modes
        pr = op.params
        emax = math.exp(-pr["beta"] * cfg.sigma[0])
        rh = (len(modes) // 2) * (abs(pr["a"]) + abs(pr["b"]) * emax) + abs(pr["c"]) + abs(pr["d"]) * emax
    elif bound is not None:
        rh = bound.root_height
    if height is None:
        if not math.isfinite(rh):
            raise InputError("strip height is required without a height bound")
        height = rh + 1.0
    elif rh >= height:
        notes.append(f"zeros of retained modes may lie above |Im p| = {height:g}")
        certified = False
    return modes, height, bound, certified, notes


def strip_search(family: ConormalFamily, cfg: StripSearchConfig, modes=None, op=None) -> SearchResult:
    """All zeros of the retained modes with sigma1 <= Re p <= sigma2 and |Im p| <= H."""
    if modes is None:
        modes, height, bound, certified, notes = _mode_list(op, family, cfg)
    else:
        height, bound, certified, notes = cfg.height, None, False, ["modes supplied by caller"]
    if height is None:
        raise InputError("strip height is required")
    s1, s2 = cfg.sigma
    rect = (s1, s2, -height, height)

    def run(n):
        return _search_mode(family, n, rect, cfg)

    if cfg.workers > 1 and len(modes) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run, modes))
    else:
        results = [run(n) for n in modes]
    roots = []
    slack = 10 * cfg.newton_tol * max(1.0, abs(s1), abs(s2))
    for recs, box in results:
        for r in recs:
            if s1 - slack <= r.root.real <= s2 + slack and abs(r.root.imag) <= height + slack:
                roots.append(r)
            elif box != rect and r.root.real >= s1 - slack - (box[1] - s2):
                notes.append(f"zero {r.root} lies in the jitter margin and was dropped")
    roots.sort(key=lambda r: (r.mode if r.mode is not None else 0, r.root.real, r.root.imag))
    return SearchResult(roots, list(modes), float(height), bound, certified, notes)


def find_singular_weights(op: ConicalGOperator, config: StripSearchConfig) -> list[RootRecord]:
    """Zeros of the conormal family of ``op`` in the configured strip, sorted by (mode, Re, Im)."""
    return strip_search(conormal_family(op), config, op=op).roots


# -- weight lines ------------------------------------------------------------------

@dataclass
class LineVerdict:
    gamma: float
    verdict: bool | None
    min_modulus: float
    nearest_distance: float
    witness: RootRecord | None = None
    certified: bool = True
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "verdict": self.verdict, "min_modulus": self.min_modulus,
                "nearest_root_distance": self.nearest_distance,
                "witness": None if self.witness is None else self.witness.as_dict(),
                "certified": self.certified, "notes": list(self.notes)}


def line_min_modulus(family: ConormalFamily, gamma: float, modes, height: float, samples: int = 4001) -> float:
    y = np.linspace(-height, height, samples)
    p = gamma + 1j * y
    return float(min(np.abs(family.value(p, n if n is not None else 0)).min() for n in modes))


def check_conormal_on_line(op: ConicalGOperator, gamma: float, config: StripSearchConfig | None = None,
                           *, halfwidth: float = 1.0, root_tol: float = 1e-9) -> LineVerdict:
    """Invertibility of the conormal family on Re p = gamma.

    Sphere: zeros are searched in the strip |Re p - gamma| <= halfwidth, the
    verdict is the absence of zeros within ``root_tol`` of the line.  The
    nearest distance is inf when the search strip holds no zero.
    Half-line: the circle criterion on the single line.
    """
    if op.family is FamilyKind.HALFLINE:
        from .halfline import halfline_line_verdict
        return halfline_line_verdict(op, gamma, halfwidth)
    if op.family is not FamilyKind.SPHERE and config is None:
        raise FamilyMismatch("generic operators need an explicit search config with a mode count")
    cfg = config or StripSearchConfig()
    cfg = replace(cfg, sigma=(gamma - halfwidth, gamma + halfwidth))
    family = conormal_family(op)
    res = strip_search(family, cfg, op=op)
    dist = min((abs(r.root.real - gamma) for r in res.roots), default=math.inf)
    witness = min(res.roots, key=lambda r: abs(r.root.real - gamma), default=None)
    on_line = dist < root_tol
    mm = line_min_modulus(family, gamma, res.modes, res.height)
    if on_line:
        verdict = False
    else:
        verdict = True if res.certified else None
        witness = None
    return LineVerdict(gamma, verdict, mm, dist, witness, res.certified, res.notes)
