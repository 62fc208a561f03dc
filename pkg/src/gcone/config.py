"""Operator config documents (TOML).

Schema version 1::

    schema = 1
    family_kind = "SphereFirstOrder"      # or HalflineZeroOrder, GenericBanded

    [coefficients]                         # complex numbers as [re, im]
    a = [2.0, 0.0]
    b = [0.1, 0.0]
    c = [0.0, 0.0]
    d = [0.0, 0.0]

    [exponents]
    beta = 1.0
    phi0 = 0.0                             # HalflineZeroOrder: alpha, beta

    [weights]
    gamma_plus = 0.0                       # at r = 0
    gamma_minus = 0.0                      # at r = infinity

    [search]                               # optional, see StripSearchConfig
    sigma = [-2.0, 2.0]
    height = 20.0
    modes = 5

GenericBanded documents replace ``coefficients``/``exponents`` by::

    group = "Z"                            # or "Z2"
    base = "Circle"                        # or "Point"
    order = 1
    [[generators]]
    beta = 1.0
    angle = 0.0
    [[terms]]
    shift = [1]
    k0 = [[0.5, 0.0], [1.0, 0.0]]          # D_{h,0}(n) = 0.5 + 1.0 n
    k1 = [[1.0, 0.0]]
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from .errors import ConfigError, GConeError
from .operator_model import (
    ConicalGOperator, FamilyKind, Generator, make_generic_operator,
    make_halfline_operator, make_sphere_operator,
)

SCHEMA_VERSION = 1

SEARCH_KEYS = {"sigma", "height", "modes", "newton_tol", "max_newton_iter",
               "points_per_edge", "max_cell", "min_cell", "contour_tol", "jitter", "workers"}


def _complex(doc: dict, key: str, path: str) -> complex:
    if key not in doc:
        raise ConfigError("missing complex coefficient", key=f"{path}.{key}")
    v = doc[key]
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(float(v), 0.0)
    if (not isinstance(v, list) or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise ConfigError("complex numbers are written as [re, im]", key=f"{path}.{key}")
    return complex(float(v[0]), float(v[1]))


def _real(doc: dict, key: str, path: str, default=None) -> float:
    if key not in doc:
        if default is not None:
            return default
        raise ConfigError("missing real value", key=f"{path}.{key}" if path else key)
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a real number, got {v!r}", key=f"{path}.{key}" if path else key)
    return float(v)


def _table(doc: dict, key: str) -> dict:
    t = doc.get(key)
    if not isinstance(t, dict):
        raise ConfigError("missing table", key=key)
    return t


def operator_from_dict(doc: dict) -> ConicalGOperator:
    schema = doc.get("schema")
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema {schema!r}, expected {SCHEMA_VERSION}", key="schema")
    try:
        kind = FamilyKind(doc.get("family_kind"))
    except ValueError:
        raise ConfigError(f"unknown family_kind {doc.get('family_kind')!r}", key="family_kind") from None
    w = _table(doc, "weights")
    gp = _real(w, "gamma_plus", "weights")
    gm = _real(w, "gamma_minus", "weights")
    try:
        if kind is FamilyKind.SPHERE:
            co, ex = _table(doc, "coefficients"), _table(doc, "exponents")
            return make_sphere_operator(
                *(_complex(co, k, "coefficients") for k in "abcd"),
                beta=_real(ex, "beta", "exponents"), phi0=_real(ex, "phi0", "exponents", 0.0),
                gamma_plus=gp, gamma_minus=gm)
        if kind is FamilyKind.HALFLINE:
            co, ex = _table(doc, "coefficients"), _table(doc, "exponents")
            return make_halfline_operator(
                _complex(co, "a", "coefficients"), _complex(co, "b", "coefficients"),
                alpha=_real(ex, "alpha", "exponents"), beta=_real(ex, "beta", "exponents"),
                gamma_plus=gp, gamma_minus=gm)
        gens = doc.get("generators")
        if not isinstance(gens, list):
            raise ConfigError("missing generators array", key="generators")
        # point bases carry no base map, so their generators have no angle
        point = doc.get("base", "Circle") == "Point"
        generators = [Generator(_real(g, "beta", f"generators[{i}]"),
                                None if point else _real(g, "angle", f"generators[{i}]", 0.0))
                      for i, g in enumerate(gens)]
        terms = {}
        for i, t in enumerate(doc.get("terms", [])):
            shift = t.get("shift")
            if isinstance(shift, int):
                shift = [shift]
            if not isinstance(shift, list) or not all(isinstance(s, int) for s in shift):
                raise ConfigError("shift must be an integer or integer list", key=f"terms[{i}].shift")
            ks = sorted(int(k[1:]) for k in t if k.startswith("k") and k[1:].isdigit())
            polys = [[] for _ in range(max(ks) + 1)] if ks else []
            for k in ks:
                polys[k] = [_complex({"c": c}, "c", f"terms[{i}].k{k}") for c in t[f"k{k}"]]
            terms[tuple(shift)] = polys
        return make_generic_operator(doc.get("group", "Z"), doc.get("base", "Circle"),
                                     int(_real(doc, "order", "")), generators, terms, gp, gm)
    except ConfigError:
        raise
    except GConeError as exc:
        raise ConfigError(str(exc), key="family_kind") from exc


def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def operator_to_dict(op: ConicalGOperator) -> dict[str, Any]:
    doc: dict[str, Any] = {"schema": SCHEMA_VERSION, "family_kind": op.family.value}
    p = op.params
    if op.family is FamilyKind.SPHERE:
        doc["coefficients"] = {k: _pair(p[k]) for k in "abcd"}
        doc["exponents"] = {"beta": p["beta"], "phi0": p["phi0"]}
    elif op.family is FamilyKind.HALFLINE:
        doc["coefficients"] = {k: _pair(p[k]) for k in "ab"}
        doc["exponents"] = {"alpha": p["alpha"], "beta": p["beta"]}
    else:
        doc["group"] = op.action.group.value
        doc["base"] = op.geometry.base_kind.value
        doc["order"] = op.order
        doc["generators"] = [{"beta": g.beta} if g.base_angle is None else {"beta": g.beta, "angle": g.base_angle}
                             for g in op.action.generators]
        doc["terms"] = []
        for h in op.shifts:
            entry: dict[str, Any] = {"shift": list(h)}
            for k, poly in enumerate(op.terms[h].polys):
                entry[f"k{k}"] = [_pair(c) for c in poly]
            doc["terms"].append(entry)
    doc["weights"] = {"gamma_plus": op.gamma_plus, "gamma_minus": op.gamma_minus}
    return doc


def loads(text: str) -> tuple[ConicalGOperator, dict]:
    """Parse a config document; returns the operator and the raw ``search`` table."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}", line=getattr(exc, "lineno", None)) from exc
    search = doc.get("search", {})
    if not isinstance(search, dict):
        raise ConfigError("search must be a table", key="search")
    unknown = set(search) - SEARCH_KEYS
    if unknown:
        raise ConfigError(f"unknown search option(s) {sorted(unknown)}", key="search")
    return operator_from_dict(doc), search


def load(path: str | Path) -> tuple[ConicalGOperator, dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    return loads(text)


def dumps(op: ConicalGOperator, search: dict | None = None) -> str:
    doc = operator_to_dict(op)
    if search:
        doc["search"] = dict(search)
    for v in _walk_floats(doc):
        if not math.isfinite(v):
            raise ConfigError("non-finite values cannot be written")
    return tomli_w.dumps(doc)


def _walk_floats(x):
    if isinstance(x, float):
        yield x
    elif isinstance(x, dict):
        for v in x.values():
            yield from _walk_floats(v)
    elif isinstance(x, list):
        for v in x:
            yield from _walk_floats(v)
