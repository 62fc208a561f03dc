"""Combine interior and conormal checks into an ellipticity report.

Ellipticity means an invertible interior symbol and an invertible conormal
symbol on the weight lines; it implies the Fredholm property.  The converse
is not claimed: a failed check is reported as "not elliptic", never as
"not Fredholm".
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .config import operator_to_dict
from .contour import LineVerdict, StripSearchConfig, line_min_modulus, strip_search
from .conormal import conormal_family
from .errors import InputError, NoBoundAvailable
from .halfline import classify_operator, halfline_line_verdict
from .interior import check_interior_elliptic_generic, check_interior_elliptic_sphere
from .operator_model import ConicalGOperator, FamilyKind

FREDHOLM = "Fredholm"
INCONCLUSIVE = "Inconclusive(numerical)"
IMPLICATION = "elliptic implies Fredholm; the converse is not claimed"
DEFAULT_HEIGHT = 20.0
NOT_COVERED = "not elliptic: the Fredholm property is not covered by the finiteness theorem"


def not_elliptic(which: str) -> str:
    return f"NotElliptic({which})"


def combine_verdicts(interior: bool | None, conormal: bool | None) -> str:
    """Overall verdict from the two sub-verdicts (None = numerically unresolved)."""
    if interior is False and conormal is False:
        return not_elliptic("both")
    if interior is False:
        return not_elliptic("interior")
    if conormal is False:
        return not_elliptic("conormal")
    if interior is None or conormal is None:
        return INCONCLUSIVE
    return FREDHOLM


@dataclass(frozen=True)
class EngineConfig:
    search: StripSearchConfig = field(default_factory=StripSearchConfig)
    line_halfwidth: float = 1.0
    root_tol: float = 1e-9
    fallback_modes: int = 10
    window_schedule: tuple[int, ...] | None = None  # rank-dependent default
    window_tol: float = 1e-3


@dataclass
class EllipticityReport:
    digest: str
    family: str
    weights: dict
    interior: dict
    conormal: dict
    overall: str
    certificates: list[str]
    notes: list[str] = field(default_factory=list)

    @property
    def fredholm(self) -> bool:
        return self.overall == FREDHOLM

    def to_dict(self) -> dict:
        return _clean({
            "digest": self.digest, "family": self.family, "weights": self.weights,
            "interior": self.interior, "conormal": self.conormal, "overall": self.overall,
            "certificates": self.certificates, "notes": self.notes,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _clean(x):
    """JSON-safe copy: complex -> [re, im], non-finite floats -> strings, tuples -> lists."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, complex):
        return [_clean(x.real), _clean(x.imag)]
    if isinstance(x, float):
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        return _clean(x.item())
    return x


def operator_digest(op: ConicalGOperator) -> str:
    text = json.dumps(operator_to_dict(op), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _lines(op) -> list[tuple[str, float]]:
    out = [("gamma_plus", op.gamma_plus)]
    if op.gamma_minus != op.gamma_plus:
        out.append(("gamma_minus", op.gamma_minus))
    return out


def _strip_roots(op, cfg: EngineConfig, lo: float, hi: float, notes: list[str]):
    """All zeros with lo <= Re p <= hi, falling back to a fixed mode count without a bound."""
    search = replace(cfg.search, sigma=(lo, hi))
    family = conormal_family(op)
    try:
        return family, strip_search(family, search, op=op)
    except (NoBoundAvailable, InputError) as exc:
        notes.append(f"{exc}; retrying with {cfg.fallback_modes} modes and height "
                     f"{search.height or DEFAULT_HEIGHT:g} (uncertified)")
        search = replace(search, modes=cfg.fallback_modes if family.per_mode else search.modes,
                         height=search.height or DEFAULT_HEIGHT)
        return family, strip_search(family, search, op=op)


def _line_rows(family, res, gammas, cfg: EngineConfig) -> list[dict]:
    rows = []
    for g in gammas:
        near = [r for r in res.roots if abs(r.root.real - g) <= cfg.line_halfwidth]
        wit = min(near, key=lambda r: abs(r.root.real - g), default=None)
        dist = abs(wit.root.real - g) if wit is not None else math.inf
        on = dist < cfg.root_tol
        rows.append({"gamma": g, "verdict": False if on else (True if res.certified else None),
                     "nearest_root_distance": dist,
                     "min_modulus": line_min_modulus(family, g, res.modes, res.height),
                     "certified": res.certified, "witness": wit.as_dict() if on else None})
    return rows


def _interior(op, cfg: EngineConfig):
    if op.family is FamilyKind.SPHERE:
        v = check_interior_elliptic_sphere(op)
        wit = [] if v.witness is None else [{"zeta": v.witness}]
        return {"verdict": v.verdict, "margin": v.margin, "witnesses": wit, "certificate": v.certificate}
    if op.family is FamilyKind.HALFLINE:
        return {"verdict": True, "margin": None, "witnesses": [],
                "certificate": "trivial: order 0 without differential part, content is conormal"}
    v = check_interior_elliptic_generic(op, W_schedule=cfg.window_schedule, tol=cfg.window_tol)
    wit = []
    if v.verdict is not True:
        worst = min(v.trace, key=lambda t: t["sigma_min"][-1])
        wit = [worst]
    return {"verdict": v.verdict, "margin": v.margin, "witnesses": wit, "certificate": v.certificate}


def _conormal(op, cfg: EngineConfig, notes: list[str]) -> dict:
    out: dict = {"lines": {}, "strip": None}
    if op.family is FamilyKind.HALFLINE:
        lo, hi = sorted((op.gamma_minus, op.gamma_plus))
        strip = classify_operator(op, lo, hi)
        for label, g in _lines(op):
            out["lines"][label] = halfline_line_verdict(op, g, cfg.line_halfwidth).as_dict()
        out["strip"] = {"range": [lo, hi], **strip.as_dict()}
        out["verdict"] = strip.verdict
        out["singular_weights"] = [list(iv) for iv in strip.failing]
        out["witnesses"] = [] if strip.verdict else [{"failing_interval": list(iv)} for iv in strip.failing]
        out["criterion"] = "strip: circle criterion on every line gamma_- <= Re p <= gamma_+"
        if op.commensurability_warning:
            notes.append("commensurate exponents: the circle criterion may report non-ellipticity conservatively")
        return out
    lines = _lines(op)
    gs = [g for _, g in lines]
    hw = cfg.line_halfwidth
    family, res = _strip_roots(op, cfg, min(gs) - hw, max(gs) + hw, notes)
    notes.extend(res.notes)
    rows = _line_rows(family, res, gs, cfg)
    wit = []
    for (label, _), row in zip(lines, rows):
        out["lines"][label] = row
        if row["witness"] is not None:
            wit.append({"line": label, "root": row["witness"]})
        elif row["verdict"] is None:
            wit.append({"line": label, "uncertified": "mode or height completeness not certified"})
    if len(gs) == 2:
        lo, hi = min(gs), max(gs)
        inside = [r for r in res.roots if lo - cfg.root_tol <= r.root.real <= hi + cfg.root_tol]
        out["strip"] = {"range": [lo, hi], "verdict": False if inside else (True if res.certified else None),
                        "roots": [r.as_dict() for r in inside], "certified": res.certified}
    verdicts = [row["verdict"] for row in rows]
    out["verdict"] = False if False in verdicts else (None if None in verdicts else True)
    out["witnesses"] = wit
    out["criterion"] = "lines: no zero of any mode on Re p = gamma_+ and Re p = gamma_-"
    out["singular_weights"] = sorted({r.root.real for r in res.roots})
    out["search"] = {"sigma": [min(gs) - hw, max(gs) + hw], "height": res.height, "modes": len(res.modes),
                     "bound": None if res.bound is None else res.bound.certificate}
    return out


def check_ellipticity(op: ConicalGOperator, config: EngineConfig | None = None) -> EllipticityReport:
    cfg = config or EngineConfig()
    notes: list[str] = []
    interior = _interior(op, cfg)
    conormal = _conormal(op, cfg, notes)
    overall = combine_verdicts(interior["verdict"], conormal["verdict"])
    certs = [f"interior: {interior['certificate']}", f"conormal: {conormal['criterion']}", IMPLICATION]
    if overall.startswith("NotElliptic"):
        notes.append(NOT_COVERED)
    return EllipticityReport(
        digest=operator_digest(op), family=op.family.value,
        weights={"gamma_plus": op.gamma_plus, "gamma_minus": op.gamma_minus},
        interior=interior, conormal=conormal, overall=overall, certificates=certs, notes=notes)


def weight_sweep(op: ConicalGOperator, gammas: Sequence[float], config: EngineConfig | None = None) -> list[dict]:
    """Conormal line verdict and distance to the nearest singular weight for each gamma.

    The distance is inf when no zero lies within ``line_halfwidth`` of the line.
    """
    cfg = config or EngineConfig()
    gammas = [float(g) for g in gammas]
    if not gammas:
        return []
    if not all(math.isfinite(g) for g in gammas):
        raise ValueError("weight grid must be finite")
    if op.family is FamilyKind.HALFLINE:
        return [_row(halfline_line_verdict(op, g, cfg.line_halfwidth)) for g in gammas]
    hw = cfg.line_halfwidth
    family, res = _strip_roots(op, cfg, min(gammas) - hw, max(gammas) + hw, [])
    return _line_rows(family, res, gammas, cfg)


def _row(lv: LineVerdict) -> dict:
    return {"gamma": lv.gamma, "verdict": lv.verdict, "nearest_root_distance": lv.nearest_distance,
            "min_modulus": lv.min_modulus, "certified": lv.certified, "witness": None}
