import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcone import identity_operator, make_generic_operator, make_halfline_operator, make_sphere_operator
from gcone.contour import StripSearchConfig
from gcone.engine import (
    FREDHOLM, INCONCLUSIVE, NOT_COVERED, EngineConfig, check_ellipticity, combine_verdicts, weight_sweep,
)
from gcone.operator_model import Generator

from oracles import brute_force_roots, line_scan_min, sphere_mode

SQ2 = math.sqrt(2)


@pytest.mark.parametrize("interior", [True, False, None])
@pytest.mark.parametrize("conormal", [True, False, None])
def test_conjunction_law(interior, conormal):
    v = combine_verdicts(interior, conormal)
    assert (v == FREDHOLM) == (interior is True and conormal is True)
    if interior is False or conormal is False:
        assert v.startswith("NotElliptic")
        assert ("interior" in v or "both" in v) == (interior is False)
        assert ("conormal" in v or "both" in v) == (conormal is False)
    elif interior is None or conormal is None:
        assert v == INCONCLUSIVE


def _witness_rule(rep):
    for part in (rep.interior, rep.conormal):
        if part["verdict"] is not True:
            assert part["witnesses"], part


def test_dominant_mode_term_with_root_on_the_line():
    # the interior condition holds with margin 1.9; mode 0 reduces to f = p, which vanishes at p = 0
    rep = check_ellipticity(make_sphere_operator(2, 0.1, 0, 0, 1.0, 0.0))
    assert rep.interior["verdict"] is True
    assert rep.interior["margin"] == pytest.approx(1.9, abs=1e-12)
    assert rep.overall == "NotElliptic(conormal)"
    wit = rep.conormal["witnesses"][0]["root"]
    assert wit["mode"] == 0 and abs(wit["re"]) < 1e-12
    assert NOT_COVERED in rep.notes
    _witness_rule(rep)


def test_shifted_variant_is_fredholm():
    op = make_sphere_operator(2, 0.1, 0.25, 0, 1.0, 0.0)
    rep = check_ellipticity(op)
    assert rep.overall == FREDHOLM and rep.fredholm
    scan = min(line_scan_min(sphere_mode(2, 0.1, 0.25, 0, 1.0, 0.0, n)[0], 0.0, 20) for n in range(-3, 4))
    assert scan > 1e-6
    assert NOT_COVERED not in rep.notes


def test_pure_shift_coefficient_fails_interior():
    rep = check_ellipticity(make_sphere_operator(0, 1, 0, 0, 1.0, 0.0))
    assert rep.interior["verdict"] is False
    z = rep.interior["witnesses"][0]["zeta"]
    assert abs(abs(z) - 1) < 1e-12 and abs(z.real) < 1e-12
    # mode 0 is f = p again, so the conormal check fails as well
    assert rep.overall == "NotElliptic(both)"
    _witness_rule(rep)


def test_halfline_touching_circles():
    rep = check_ellipticity(make_halfline_operator(1, 1, 1.0, SQ2))
    assert rep.overall == "NotElliptic(conormal)"
    assert rep.interior["verdict"] is True
    _witness_rule(rep)


def test_halfline_small_coefficients():
    rep = check_ellipticity(make_halfline_operator(0.3, 0.2, 1.0, SQ2, 0.5, -0.5))
    assert rep.overall == FREDHOLM
    assert rep.conormal["strip"]["dominant"] == "Identity"
    assert set(rep.conormal["lines"]) == {"gamma_plus", "gamma_minus"}


def test_identity_is_fredholm():
    rep = check_ellipticity(identity_operator())
    assert rep.overall == FREDHOLM
    assert rep.conormal["verdict"] is True


def test_strip_and_lines_reported_separately():
    # zeros -(n + 0.25): the lines 0.5 and 0.9 miss them, the strip between holds 0.75 (n = -1)
    op = make_sphere_operator(1, 0, 0.25, 0, 1.0, 0.0, gamma_plus=0.9, gamma_minus=0.5)
    rep = check_ellipticity(op)
    assert rep.conormal["lines"]["gamma_plus"]["verdict"] is True
    assert rep.conormal["lines"]["gamma_minus"]["verdict"] is True
    assert rep.conormal["strip"]["verdict"] is False
    assert rep.conormal["strip"]["roots"][0]["re"] == pytest.approx(0.75)


def test_generic_window_check_is_reported():
    op = make_generic_operator("Z", "Point", 0, [Generator(1.0)], {(0,): [[1.0]], (1,): [[0.3]]})
    rep = check_ellipticity(op, EngineConfig(search=StripSearchConfig(modes=0, height=5)))
    assert rep.interior["verdict"] is True
    assert rep.overall in (FREDHOLM, INCONCLUSIVE)
    _witness_rule(rep)


def test_report_is_deterministic():
    op = make_sphere_operator(1, 0.2, 0, 0.1, 1.0, 0.0)
    cfg = EngineConfig(search=StripSearchConfig(modes=3, height=10))
    a, b = check_ellipticity(op, cfg).to_json(), check_ellipticity(op, cfg).to_json()
    assert a == b
    doc = json.loads(a)
    assert list(doc) == sorted(doc)
    assert doc["digest"] == check_ellipticity(op, cfg).digest


def test_certificates_state_one_direction():
    rep = check_ellipticity(make_sphere_operator(2, 0.1, 0.25, 0, 1.0, 0.0))
    assert any("converse is not claimed" in c for c in rep.certificates)


# -- weight sweep -----------------------------------------------------------------------

def test_sweep_closed_form():
    rows = weight_sweep(make_sphere_operator(1, 0, 0.25, 0, 1.0, 0.0), [-0.5, 0, 0.25, 0.5, 0.75])
    assert [r["verdict"] for r in rows] == [True, True, True, True, False]


def test_sweep_identity():
    rows = weight_sweep(identity_operator(), np.linspace(-1, 1, 5),
                        EngineConfig(search=StripSearchConfig(modes=2, height=5)))
    assert all(r["verdict"] is True for r in rows)


def test_sweep_matches_line_scans():
    op = make_sphere_operator(1, 0.2, 0, 0.1, 1.0, 0.0)
    gammas = np.linspace(-1, 1, 11)
    rows = weight_sweep(op, gammas, EngineConfig(search=StripSearchConfig(modes=5, height=20)))
    for g, row in zip(gammas, rows):
        scan = min(line_scan_min(sphere_mode(1, 0.2, 0, 0.1, 1.0, 0.0, n)[0], g, 20) for n in range(-5, 6))
        assert (scan > 1e-6) == (row["verdict"] is not False)


def test_sweep_distance_against_brute_force_roots():
    op = make_sphere_operator(1, 0.2, 0, 0.1, 1.0, 0.0)
    rows = weight_sweep(op, [0.3], EngineConfig(search=StripSearchConfig(modes=2, height=6)))
    roots = []
    for n in range(-2, 3):
        f, df = sphere_mode(1, 0.2, 0, 0.1, 1.0, 0.0, n)
        roots += brute_force_roots(f, df, (-0.7, 1.3), 6)
    assert rows[0]["nearest_root_distance"] == pytest.approx(min(abs(z.real - 0.3) for z in roots), abs=1e-10)


def test_sweep_rejects_nonfinite():
    with pytest.raises(ValueError):
        weight_sweep(identity_operator(), [0, math.nan])


def test_sweep_halfline():
    rows = weight_sweep(make_halfline_operator(1, 0, 1.0, SQ2), [-1, 0, 1])
    assert [r["verdict"] for r in rows] == [True, False, True]


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_monotone_margin(ar, ai, cr, ci, g):
    a, c = complex(ar, ai), complex(cr, ci)
    rows = weight_sweep(make_sphere_operator(a, 0, c, 0, 1.0, 0.0), [g],
                        EngineConfig(search=StripSearchConfig(modes=10)))
    # zeros of p + a n + c are -(a n + c); within the half-width 1 search strip
    dists = [abs(g + (a * n + c).real) for n in range(-10, 11)]
    near = [x for x in dists if x <= 1.0]
    want = min(near) if near else math.inf
    assert rows[0]["nearest_root_distance"] == pytest.approx(want, abs=1e-12)
