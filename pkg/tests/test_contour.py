import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from gcone import identity_operator, make_halfline_operator, make_sphere_operator
from gcone.contour import (
    StripSearchConfig, check_conormal_on_line, find_singular_weights, strip_search, winding_number,
)
from gcone.conormal import ConormalFamily, conormal_family
from gcone.errors import ContourThroughZero, FamilyMismatch, InputError, NoBoundAvailable

from oracles import brute_force_roots, match_distance, line_scan_min, sphere_mode, winding_count


def test_linear_modes_closed_form():
    op = make_sphere_operator(1, 0, 0.25, 0, 1.0, 0.0)
    roots = find_singular_weights(op, StripSearchConfig(sigma=(-3, 3), modes=2))
    assert [r.mode for r in roots] == [-2, -1, 0, 1, 2]
    got = sorted(r.root.real for r in roots)
    assert np.allclose(got, [-2.25, -1.25, -0.25, 0.75, 1.75], atol=1e-13)
    assert all(r.multiplicity == 1 and r.count_check for r in roots)


def test_bare_derivative_has_root_zero_in_every_mode():
    op = make_sphere_operator(0, 0, 0, 0, 1.0, 0.0)
    res = strip_search(conormal_family(op), StripSearchConfig(sigma=(-1, 1), modes=3), op=op)
    assert [r.mode for r in res.roots] == list(range(-3, 4))
    assert all(abs(r.root) < 1e-14 for r in res.roots)
    assert res.singular_weights == [0.0]


def test_config_validation():
    with pytest.raises(InputError):
        StripSearchConfig(sigma=(1, -1))
    with pytest.raises(InputError):
        StripSearchConfig(height=0)
    with pytest.raises(InputError):
        StripSearchConfig(modes=-1)
    cfg = StripSearchConfig.from_mapping({"sigma": [-2, 2], "modes": 3.0})
    assert cfg.sigma == (-2.0, 2.0) and cfg.modes == 3


@pytest.mark.parametrize("rect", [(-2, 2, -3, 3), (-0.7, 1.9, -0.4, 5.1), (0.1, 0.3, -1, 1)])
@pytest.mark.parametrize("n", [-2, 0, 3])
def test_winding_number_matches_dense_phase_count(rect, n):
    f, _ = sphere_mode(1, 0.2, 0, 0.1, 1.0, 0.0, n)
    assert winding_number(f, rect) == winding_count(f, *rect)


def test_contour_through_zero():
    zero = ConormalFamily.scalar(lambda p: np.zeros_like(p), lambda p: np.zeros_like(p),
                                 order=0)
    with pytest.raises(ContourThroughZero):
        strip_search(zero, StripSearchConfig(sigma=(-1, 1), height=1), modes=[None])


def test_no_bound_without_modes():
    op = make_sphere_operator(1, 0.2, 0, 0.1, 1.0, 0.0)
    with pytest.raises(NoBoundAvailable):
        find_singular_weights(op, StripSearchConfig(sigma=(-2, 2), height=20))


def test_exponential_sum_needs_height():
    with pytest.raises(InputError):
        find_singular_weights(make_halfline_operator(0.5, 0.2, 1.0, 2.0), StripSearchConfig())


def test_manual_modes_against_brute_force():
    op = make_sphere_operator(1, 0.2, 0, 0.1, 1.0, 0.0)
    res = strip_search(conormal_family(op), StripSearchConfig(sigma=(-2, 2), height=6, modes=2), op=op)
    assert not res.certified
    for n in range(-2, 3):
        f, df = sphere_mode(1, 0.2, 0, 0.1, 1.0, 0.0, n)
        want = brute_force_roots(f, df, (-2, 2), 6)
        got = [r.root for r in res.roots if r.mode == n]
        assert len(got) == len(want)
        assert match_distance(got, want) < 1e-8


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-0.5, 0.5), st.floats(-1, 1), st.floats(-0.5, 0.5),
       st.floats(0.3, 1.5), st.sampled_from([0.0, math.pi]), st.integers(-3, 3))
def test_real_data_gives_conjugate_symmetric_roots(a, b, c, d, beta, phi0, n):
    # with real coefficients and e^{-i n phi0} real the mode is real on the real axis
    op = make_sphere_operator(a, b, c, d, beta, phi0)
    try:
        res = strip_search(conormal_family(op), StripSearchConfig(sigma=(-1.5, 1.5), height=4), modes=[n])
        total = winding_count(sphere_mode(a, b, c, d, beta, phi0, n)[0], -1.5, 1.5, -4, 4)
    except (ContourThroughZero, ValueError):
        assume(False)
    roots = [r.root for r in res.roots]
    assert sum(r.multiplicity for r in res.roots) == total
    for z in roots:
        if abs(z.imag) > 1e-6:
            assert min(abs(w - z.conjugate()) for w in roots) < 1e-8


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-0.5, 0.5), st.floats(-1, 1), st.floats(-1, 1),
       st.floats(-0.5, 0.5), st.floats(0.3, 1.5), st.floats(0, 6.28), st.integers(-3, 3))
def test_root_count_equals_big_contour_count(ar, ai, b, cr, ci, d, beta, phi0, n):
    a, c = complex(ar, ai), complex(cr, ci)
    op = make_sphere_operator(a, b, c, d, beta, phi0)
    f, _ = sphere_mode(a, b, c, d, beta, phi0, n)
    try:
        total = winding_count(f, -1.5, 1.5, -5, 5)
        res = strip_search(conormal_family(op), StripSearchConfig(sigma=(-1.5, 1.5), height=5), modes=[n])
    except (ContourThroughZero, ValueError):
        assume(False)
    assert sum(r.multiplicity for r in res.roots) == total
    assert all(r.count_check for r in res.roots)
    assert all(r.residual < 1e-9 for r in res.roots)


# -- line checks ------------------------------------------------------------------------

def test_line_between_roots():
    op = make_sphere_operator(1, 0, 0.25, 0, 1.0, 0.0)
    v = check_conormal_on_line(op, 0.0)
    assert v.verdict is True and v.certified
    assert v.nearest_distance == pytest.approx(0.25, abs=1e-12)
    assert v.witness is None


def test_line_through_root_has_witness():
    op = make_sphere_operator(1, 0, 0.25, 0, 1.0, 0.0)
    v = check_conormal_on_line(op, 0.75)
    assert v.verdict is False
    assert v.witness.mode == -1 and abs(v.witness.root - 0.75) < 1e-12
    assert v.min_modulus < 1e-12


def test_line_verdict_against_scan():
    op = make_sphere_operator(1, 0.2, 0, 0.1, 1.0, 0.0)
    v = check_conormal_on_line(op, 0.0, StripSearchConfig(modes=5, height=50))
    scan = min(line_scan_min(sphere_mode(1, 0.2, 0, 0.1, 1.0, 0.0, n)[0], 0.0, 50) for n in range(-5, 6))
    assert scan > 1e-6
    assert v.verdict is True
    # nearest zero is the real root of mode 0
    f, df = sphere_mode(1, 0.2, 0, 0.1, 1.0, 0.0, 0)
    r0 = brute_force_roots(f, df, (-1, 1), 1)
    assert v.nearest_distance == pytest.approx(min(abs(z.real) for z in r0), abs=1e-10)


def test_line_halfline_delegates():
    v = check_conormal_on_line(make_halfline_operator(0.3, 0.2, 1.0, math.sqrt(2)), 0.0)
    assert v.verdict is True
    assert v.min_modulus == pytest.approx(1 - 0.3 - 0.2)


def test_line_generic_needs_config():
    with pytest.raises(FamilyMismatch):
        check_conormal_on_line(identity_operator(), 0.0)
