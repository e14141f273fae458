import numpy as np
import pytest

from errors import DimensionMismatch, SurfaceFormatError
from observables import (
    Observable, ObservablePiece, ObservableTable, bump_observable, combine, constant_observable, format_observable,
    parse_observable, zero_observable,
)


def test_bump_has_unit_mass_per_square(stair4):
    g = bump_observable(stair4)
    assert g.total_integral == pytest.approx(4.0)
    assert not g.is_zero


def test_zero_observable():
    g = zero_observable(2)
    assert g.is_zero and g.total_integral == 0.0


def test_duplicate_pieces_rejected():
    piece = ObservablePiece(square=0, index=(0,), coeffs=[[1.0]])
    with pytest.raises(ValueError):
        Observable(d=1, pieces=[piece, piece])


def test_piece_rank_checked():
    with pytest.raises(ValueError):
        Observable(d=2, pieces=[ObservablePiece(square=0, index=(0,), coeffs=[[1.0]])])


def test_combine_adds_coefficients(stair2):
    g = combine(2.0, constant_observable(stair2), -1.0, bump_observable(stair2))
    assert g.total_integral == pytest.approx(2.0 * 2 - 2.0)
    assert len(g.pieces) == 2


def test_combine_rank_checked(stair2, windtree):
    with pytest.raises(DimensionMismatch):
        combine(1.0, bump_observable(stair2), 1.0, bump_observable(windtree))


def test_text_format_round_trip(windtree):
    g = combine(1.0, bump_observable(windtree, (1, -2)), 0.5, constant_observable(windtree))
    back = parse_observable(format_observable(g))
    assert back.d == 2
    assert back.total_integral == pytest.approx(g.total_integral)


def test_parse_rejects_bad_monomial():
    with pytest.raises(SurfaceFormatError):
        parse_observable("square=0 index=0 poly=x00=1.0\n")


def test_parse_rank_mismatch():
    with pytest.raises(DimensionMismatch):
        parse_observable("square=0 index=0,0 poly=c00=1.0\n", d=1)


def test_table_lookup(windtree):
    g = bump_observable(windtree, (3, -1))
    table = ObservableTable(g, windtree.n_squares)
    square = np.array([0, 5, 5])
    index = np.array([[3, -1], [3, -1], [0, 0]])
    pid = table.lookup(square, index)
    assert pid[0] >= 0 and pid[1] >= 0 and pid[2] == -1
    assert g.pieces[pid[1]].square == 5


def test_segment_integral_is_exact():
    g = Observable(d=1, pieces=[ObservablePiece(square=0, index=(0,), coeffs=[[0.0, 0.0], [0.0, 1.0]])])
    table = ObservableTable(g, 1)
    # u * v along the diagonal u = v = s, s in [0, 1]: integral of s^2 ds times sqrt(2)
    d = 1 / np.sqrt(2)
    out = table.segment_integrals(np.array([0]), np.array([0.0]), np.array([0.0]),
                                  np.array([d]), np.array([d]), np.array([np.sqrt(2)]))
    assert out[0] == pytest.approx(np.sqrt(2) / 3)
