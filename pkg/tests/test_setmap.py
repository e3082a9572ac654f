import math

import numpy as np
import pytest

from gecert.circuit import diac_characteristic, practical_diode_characteristic, zener_characteristic
from gecert.errors import AtKink, DomainMiss, GraphInvariantError, IncompatibleDomain
from gecert.setmap import (
    Form,
    Piece,
    PiecewiseGraph,
    Rational,
    Span,
    ValueSet,
    VerticalSegment,
    affine,
    constant,
    derivative,
    evaluate,
    fold_points,
    function_graph,
    invert_at,
    min_abs_slope,
    preimage,
    preimage_many,
    sum_with_function,
)

from oracles import diac_derivative, diac_fold_b, diac_value


def test_diode_segment_and_branches():
    G = practical_diode_characteristic(0.7, 5.0)
    assert evaluate(G, 0.0) == ValueSet((), ((-5.0, 0.7),))
    assert evaluate(G, 0.3).points == (0.7,)
    assert evaluate(G, -2.0).points == (-5.0,)
    assert invert_at(G, 0.0) == [0.0]


def test_diode_flat_piece_preimage_is_an_interval():
    G = practical_diode_characteristic(0.7, 5.0)
    s = preimage(G, 0.7)
    assert s.intervals == ((0.0, math.inf),)
    assert s.points == ()


def test_span_validation():
    with pytest.raises(ValueError):
        Span(1.0, 0.0)
    with pytest.raises(ValueError):
        Span(-math.inf, 0.0, True, False)
    with pytest.raises(ValueError):
        Span(2.0, 2.0)
    assert Span.point(2.0).contains(2.0)
    assert not Span.open(0.0, 1.0).contains(1.0)


def test_valueset_canonical_form():
    v = ValueSet.build(points=[3.0, 0.5, 3.0 + 1e-13], intervals=[(0.0, 1.0), (0.9, 2.0)])
    assert v.intervals == ((0.0, 2.0),)
    assert v.points == (3.0,)
    assert v.contains(1.5) and not v.contains(2.5)
    assert v.distance(2.5) == pytest.approx(0.5)
    assert v.negated().intervals == ((-2.0, 0.0),)


def test_pole_inside_piece_rejected():
    with pytest.raises(GraphInvariantError):
        Piece(Span.open(-1.0, 1.0), Form(rational=Rational(0.0, 1.0, 1.0, 0.0)))


def test_gap_between_pieces_rejected():
    with pytest.raises(GraphInvariantError):
        PiecewiseGraph((Piece(Span.open(-math.inf, 0.0), constant(0.0)),
                        Piece(Span.open(1.0, math.inf), constant(1.0))))


def test_uncovered_abscissa_rejected():
    with pytest.raises(GraphInvariantError):
        function_graph([(Span.open(-math.inf, 0.0), affine(1.0)), (Span.open(0.0, math.inf), affine(1.0))])


def test_rational_plus_rational_is_refused():
    r = Form(rational=Rational(1.0, 1.0, 1.0, 2.0))
    with pytest.raises(IncompatibleDomain):
        _ = r + r


def test_diac_values_match_hand_formula():
    G = diac_characteristic(0.1)
    zs = np.concatenate([np.linspace(-0.2, -2e-4, 300), np.linspace(2e-4, 0.2, 300), [-5e-5, 5e-5]])
    got = np.array([G.value(float(z)) for z in zs])
    assert np.max(np.abs(got - diac_value(zs, 0.1))) < 1e-12
    assert evaluate(G, 0.0) == ValueSet((), ((-32.0, 32.0),))


def test_diac_derivative_matches_hand_formula():
    G = diac_characteristic(0.1)
    zs = np.linspace(3e-4, 0.3, 200)
    got = np.array([derivative(G, float(z)) for z in zs])
    np.testing.assert_allclose(got, diac_derivative(zs, 0.1), rtol=1e-12)


def test_derivative_at_kink_raises():
    G = diac_characteristic(0.1)
    with pytest.raises(AtKink):
        derivative(G, 1e-4)
    with pytest.raises(AtKink):
        derivative(G, 0.0)


def test_fold_points_of_the_loaded_diac():
    G = sum_with_function(affine(220.0), diac_characteristic(0.1))
    folds = fold_points(G)
    zb, yb = diac_fold_b(220.0, 0.1)
    mins = [f for f in folds if f.kind == "local-min"]
    maxs = [f for f in folds if f.kind == "local-max"]
    assert any(abs(f.z - zb) < 1e-12 and abs(f.y - yb) < 1e-9 for f in mins)
    assert any(abs(f.z - 1e-4) < 1e-15 and abs(f.y - 32.022) < 1e-9 for f in maxs)
    # the graph is odd, so the fold set is symmetric
    assert sorted((-f.z, -f.y) for f in folds) == pytest.approx(sorted((f.z, f.y) for f in folds))


def test_preimage_round_trip_on_all_characteristics():
    graphs = [
        sum_with_function(affine(220.0), diac_characteristic(0.1)),
        sum_with_function(affine(100.0), practical_diode_characteristic(0.7, 5.0)),
        sum_with_function(affine(1000.0), zener_characteristic(5.1, 0.7, 2.0)),
    ]
    zs = np.linspace(-0.2, 0.2, 1001)
    for G in graphs:
        for z in zs:
            ys = evaluate(G, float(z))
            for y in ys.points:
                s = preimage(G, y)
                assert s.distance(float(z)) <= 1e-12


def test_preimage_many_agrees_with_single_calls():
    G = sum_with_function(affine(220.0), diac_characteristic(0.1))
    ys = np.linspace(-40, 40, 97)
    many = preimage_many(G, ys)
    for y, s in zip(ys, many):
        assert s == preimage(G, float(y))


def test_min_abs_slope_against_dense_sampling():
    G = sum_with_function(affine(220.0), diac_characteristic(0.1))
    for lo, hi in [(5e-4, 3e-3), (0.02, 0.06), (-0.05, -0.03), (2e-4, 0.0136)]:
        dense = np.linspace(lo, hi, 200_001)
        ref = np.min(np.abs(220.0 + diac_derivative(dense, 0.1)))
        assert min_abs_slope(G, lo, hi) == pytest.approx(ref, rel=1e-6, abs=1e-9)
    # a window holding the fold abscissa has zero infimum exactly
    assert min_abs_slope(G, 2e-4, 0.02) == 0.0


def test_value_off_graph_raises():
    G = practical_diode_characteristic(0.7, 5.0)
    with pytest.raises(DomainMiss):
        G.value(0.0)


def test_negated_mirror_of_odd_map_is_itself():
    G = diac_characteristic(0.3)
    H = G.negated_mirror()
    for z in np.linspace(-0.1, 0.1, 101):
        assert evaluate(H, float(z)).isclose(evaluate(G, float(z)))


def test_segment_order_is_checked():
    with pytest.raises(GraphInvariantError):
        VerticalSegment(0.0, 1.0, -1.0)
