import math

import numpy as np
import pytest
from scipy import stats

from cover_flow import (
    HORIZONTAL_FLOW, VERTICAL_FLOW, CoverPoint, Direction, PointBatch, deck, ergodic_integral, ergodic_integral_batch,
    first_return, flow, flow_batch, return_statistics, uniform_points,
)
from errors import DimensionMismatch, DomainError, Singular
from observables import ObservablePiece, Observable, bump_observable, combine, constant_observable, zero_observable
from utils.rng import chunk_rng


def test_zero_time_is_identity(stair2):
    p = CoverPoint(square=1, u=0.3, v=0.7, index=(4,))
    q, crossings = flow(stair2, p, VERTICAL_FLOW, 0.0)
    assert q == p and crossings == 0


def test_single_upward_crossing(stair2):
    p = CoverPoint(square=0, u=0.5, v=0.5, index=(0,))
    q, crossings = flow(stair2, p, VERTICAL_FLOW, 1.0)
    assert q.square == stair2.up_perm[0]
    assert q.index == (stair2.w_up[0][0],)
    assert q.v == pytest.approx(0.5)
    assert crossings == 1


def test_vertical_loop_closes(stair2):
    p = CoverPoint(square=0, u=0.5, v=0.25, index=(0,))
    q, _ = flow(stair2, p, VERTICAL_FLOW, 2.0)
    assert (q.square, q.index) == (0, (0,))
    assert q.v == pytest.approx(0.25)


def test_corner_hit_is_singular(stair2):
    p = CoverPoint(square=0, u=0.5, v=0.5, index=(0,))
    diagonal = Direction.of(1.0, 1.0)
    with pytest.raises(Singular):
        flow(stair2, p, diagonal, 1.0)


def test_flow_is_reversible(windtree_hv):
    o = windtree_hv.origami
    starts = uniform_points(o, chunk_rng(3, 0), 500)
    end, _, bad = flow_batch(o, starts, windtree_hv.unstable_dir, 37.5)
    back, _, bad_back = flow_batch(o, end, windtree_hv.unstable_dir, -37.5)
    good = ~(bad | bad_back)
    assert good.sum() > 450
    assert np.array_equal(back.square[good], starts.square[good])
    assert np.array_equal(back.index[good], starts.index[good])
    assert np.max(np.abs(back.u[good] - starts.u[good])) < 1e-9
    assert np.max(np.abs(back.v[good] - starts.v[good])) < 1e-9


def test_flow_commutes_with_deck_shifts(windtree_hv):
    o = windtree_hv.origami
    p = uniform_points(o, chunk_rng(4, 0), 1).point(0)
    q, _ = flow(o, p, windtree_hv.stable_dir, 20.0)
    shifted, _ = flow(o, deck(p, (2, -5)), windtree_hv.stable_dir, 20.0)
    assert shifted == deck(q, (2, -5))


def test_deck_rank_checked():
    p = CoverPoint(square=0, u=0.1, v=0.1, index=(0,))
    with pytest.raises(DimensionMismatch):
        deck(p, (1, 1))


def test_zero_observable_integrates_to_zero(stair2, stair2_hv):
    p = CoverPoint(square=0, u=0.31, v=0.42, index=(0,))
    assert ergodic_integral(stair2, zero_observable(1), p, stair2_hv.stable_dir, 50.0) == 0.0


def test_constant_piece_inside_one_cell(stair2):
    g = Observable(d=1, pieces=[ObservablePiece(square=0, index=(0,), coeffs=[[1.0]])])
    p = CoverPoint(square=0, u=0.1, v=0.2, index=(0,))
    assert ergodic_integral(stair2, g, p, HORIZONTAL_FLOW, 0.5) == pytest.approx(0.5, abs=1e-14)


def test_integral_matches_riemann_sum(stair2, stair2_hv):
    g = constant_observable(stair2)
    direction = stair2_hv.stable_dir
    starts = uniform_points(stair2, chunk_rng(5, 0), 3)
    T, step = 50.0, 1e-4
    values, singular = ergodic_integral_batch(stair2, g, starts, direction, T)
    assert not singular.any()
    times = (np.arange(int(T / step)) + 0.5) * step
    n = len(times)
    for i in range(starts.size):
        p = starts.point(i)
        copies = PointBatch(np.full(n, p.square), np.full(n, p.u), np.full(n, p.v), np.zeros((n, 1), dtype=np.int64))
        ends, _, bad = flow_batch(stair2, copies, direction, times)
        # g is the indicator of index 0, so the midpoint rule counts sample times spent there
        riemann = step * np.count_nonzero(ends.index[~bad, 0] == 0)
        assert 0 < values[i] <= T
        assert values[i] == pytest.approx(riemann, abs=50 * step)


def test_integral_time_must_be_positive(stair2):
    with pytest.raises(DomainError):
        ergodic_integral_batch(stair2, zero_observable(1), uniform_points(stair2, chunk_rng(0, 0), 2),
                               VERTICAL_FLOW, 0.0)


def test_integral_rank_checked(stair2):
    with pytest.raises(DimensionMismatch):
        ergodic_integral_batch(stair2, zero_observable(2), uniform_points(stair2, chunk_rng(0, 0), 2),
                               VERTICAL_FLOW, 1.0)


def test_torus_first_return_is_rotation(flat_torus):
    slope = Direction.of(math.sqrt(2) - 1, 1.0)
    iet = first_return(flat_torus, 0, slope)
    assert len(iet.break_points) == 2
    assert iet.labels == [[0], [0]]
    assert iet.images_tile()
    assert iet.return_times == pytest.approx([math.hypot(slope.dx / slope.dy, 1.0)] * 2)


def test_staircase_first_return_labels(stair2, stair2_hv):
    iet = first_return(stair2, 0, stair2_hv.stable_dir)
    assert iet.images_tile()
    assert abs(iet.mean_label()[0]) <= 3 * iet.label_stderr()[0] + 1e-12


def test_first_return_needs_transverse_direction(stair2):
    with pytest.raises(DomainError):
        first_return(stair2, 0, HORIZONTAL_FLOW)


def test_return_statistics_law_is_normalized(stair2, stair2_hv):
    iet = first_return(stair2, 0, stair2_hv.stable_dir)
    stats = return_statistics(iet, 20, 5000, chunk_rng(0, 0))
    assert sum(stats["law"].values()) == pytest.approx(1.0)
    assert 0.0 < stats["zero_fraction"] < 1.0


def test_point_batch_is_a_plain_tuple(stair2):
    batch = uniform_points(stair2, chunk_rng(2, 0), 50)
    halved = batch._replace(u=batch.u / 2)
    assert len(batch) == 4
    assert halved.size == batch.size == 50
    assert np.array_equal(halved.square, batch.square)
    assert PointBatch._make(list(batch)).size == 50


def test_flow_is_additive_in_time(windtree_hv):
    o = windtree_hv.origami
    rng = chunk_rng(8, 0)
    starts = uniform_points(o, rng, 300)
    s, t = rng.uniform(0.0, 1e3, 300), rng.uniform(0.0, 1e3, 300)
    direction = windtree_hv.unstable_dir
    whole, _, bad = flow_batch(o, starts, direction, s + t)
    first, _, bad_s = flow_batch(o, starts, direction, s)
    second, _, bad_t = flow_batch(o, first, direction, t)
    good = ~(bad | bad_s | bad_t)
    assert good.sum() > 150
    assert np.array_equal(whole.square[good], second.square[good])
    assert np.array_equal(whole.index[good], second.index[good])
    assert np.max(np.abs(whole.u[good] - second.u[good])) < 1e-9
    assert np.max(np.abs(whole.v[good] - second.v[good])) < 1e-9


def test_flow_preserves_lebesgue_measure(stair2, stair2_hv):
    bins = 32
    end, _, bad = flow_batch(stair2, uniform_points(stair2, chunk_rng(9, 0), 100_000), stair2_hv.stable_dir, 7.3)
    end = end.take(~bad)
    cells = (end.square * bins + np.minimum((end.u * bins).astype(np.int64), bins - 1)) * bins
    cells += np.minimum((end.v * bins).astype(np.int64), bins - 1)
    observed = np.bincount(cells, minlength=stair2.n_squares * bins * bins)
    assert bad.sum() < 100
    assert stats.chisquare(observed).pvalue > 1e-3


def test_integral_is_linear_in_the_observable(stair2, stair2_hv):
    g1 = bump_observable(stair2)
    g2 = constant_observable(stair2, index=(1,))
    a, b, T = 2.5, -1.5, 200.0
    starts = uniform_points(stair2, chunk_rng(10, 0), 20)
    direction = stair2_hv.stable_dir
    both, bad = ergodic_integral_batch(stair2, combine(a, g1, b, g2), starts, direction, T)
    first, bad1 = ergodic_integral_batch(stair2, g1, starts, direction, T)
    second, bad2 = ergodic_integral_batch(stair2, g2, starts, direction, T)
    good = ~(bad | bad1 | bad2)
    assert good.sum() > 15
    assert np.max(np.abs(both[good] - a * first[good] - b * second[good])) < 1e-9 * (abs(a) + abs(b)) * T
