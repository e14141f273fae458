"""Translation flow on the Z^d-cover, ergodic integrals and the first-return skew product.

Orbits are stepped event by event: from the current point the exact time to
the next square edge is computed, the edge is crossed (square through the
gluing permutation, cover index through the edge weight) and the loop repeats
until the requested time is used up. Every kernel works on a batch of points
sharing one direction; singular orbits are flagged in a mask.
"""
import logging
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator, validator

from errors import DimensionMismatch, DomainError, NoReturn, Singular
from observables import Observable, ObservableTable
from surface import Origami, surface_arrays
from utils.summation import CompensatedSum

log = logging.getLogger(__name__)

CORNER_TOL = 1e-12
UNIT_TOL = 1e-14
RETURN_TIME_CAP = 1e4
RETURN_GRID = 4096
BREAK_TOL = 1e-12
_HASH_MULT = np.uint64(1000003)


class CoverPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    square: int
    u: float
    v: float
    index: Tuple[int, ...]

    @validator('square')
    def validate_square(cls, v):
        if v < 0:
            raise ValueError('Square id must be non-negative')
        return v

    @validator('u', 'v')
    def validate_coordinate(cls, v):
        if not 0.0 <= v < 1.0:
            raise ValueError('Local coordinates must lie in [0, 1)')
        return v


class Direction(BaseModel):
    model_config = ConfigDict(frozen=True)

    dx: float
    dy: float

    @model_validator(mode='after')
    def check_unit(self):
        if abs(self.dx * self.dx + self.dy * self.dy - 1.0) > UNIT_TOL:
            raise ValueError('Direction must be a unit vector')
        return self

    @classmethod
    def of(cls, x: float, y: float) -> "Direction":
        norm = float(np.hypot(x, y))
        if norm == 0.0:
            raise DomainError("Direction must be nonzero")
        return cls(dx=x / norm, dy=y / norm)

    def reversed(self) -> "Direction":
        return Direction(dx=-self.dx, dy=-self.dy)


HORIZONTAL_FLOW = Direction(dx=1.0, dy=0.0)
VERTICAL_FLOW = Direction(dx=0.0, dy=1.0)


class PointBatch(NamedTuple):
    square: np.ndarray
    u: np.ndarray
    v: np.ndarray
    index: np.ndarray  # shape (n, d)

    @property
    def size(self) -> int:
        return int(self.square.shape[0])

    def take(self, idx) -> "PointBatch":
        return PointBatch(self.square[idx], self.u[idx], self.v[idx], self.index[idx])

    def copy(self) -> "PointBatch":
        return PointBatch(self.square.copy(), self.u.copy(), self.v.copy(), self.index.copy())

    def point(self, i: int) -> CoverPoint:
        return CoverPoint(square=int(self.square[i]), u=float(self.u[i]), v=float(self.v[i]),
                          index=tuple(int(c) for c in self.index[i]))


def batch_of(points: Sequence[CoverPoint]) -> PointBatch:
    return PointBatch(np.asarray([p.square for p in points], dtype=np.int64),
                      np.asarray([p.u for p in points], dtype=np.float64),
                      np.asarray([p.v for p in points], dtype=np.float64),
                      np.asarray([p.index for p in points], dtype=np.int64).reshape(len(points), -1))


def uniform_points(o: Origami, rng: np.random.Generator, n: int) -> PointBatch:
    """n base points drawn from normalized Lebesgue measure, lifted to index 0"""
    return PointBatch(rng.integers(0, o.n_squares, size=n, dtype=np.int64),
                      rng.random(n), rng.random(n), np.zeros((n, o.d), dtype=np.int64))


def deck(p: CoverPoint, n: Sequence[int]) -> CoverPoint:
    """Deck transformation: shift the cover index by n"""
    if len(n) != len(p.index):
        raise DimensionMismatch(f"Shift {tuple(n)} does not match index rank {len(p.index)}")
    return p.model_copy(update={'index': tuple(a + int(b) for a, b in zip(p.index, n))})


def deck_batch(batch: PointBatch, n: Sequence[int]) -> PointBatch:
    return PointBatch(batch.square, batch.u, batch.v, batch.index + np.asarray(n, dtype=np.int64))


SegmentHook = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray,
                        np.ndarray, np.ndarray, np.ndarray], None]


def _advance(o: Origami, state: PointBatch, dx: np.ndarray, dy: np.ndarray, remaining: np.ndarray,
             on_segment: Optional[SegmentHook] = None,
             stop_square: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Step every sample along (dx, dy) for `remaining` time, mutating `state` in place.

    on_segment(idx, square, u0, v0, dx, dy, dt, index, exit_kind) sees each
    straight piece before it is left; exit_kind is 0 (time ran out),
    1 (vertical edge) or 2 (horizontal edge). With stop_square set, a sample
    stops as soon as it enters that square through its bottom edge.
    Returns (crossings, singular mask, returned mask).
    """
    arr = surface_arrays(o)
    n = state.size
    crossings = np.zeros(n, dtype=np.int64)
    singular = np.zeros(n, dtype=bool)
    returned = np.zeros(n, dtype=bool)
    active = np.nonzero(remaining > 0)[0]
    while active.size:
        sq = state.square[active]
        u0, v0 = state.u[active], state.v[active]
        ax, ay, rem = dx[active], dy[active], remaining[active]
        with np.errstate(divide='ignore', invalid='ignore'):
            tx = np.where(ax > 0, (1.0 - u0) / ax, np.where(ax < 0, u0 / -ax, np.inf))
            ty = np.where(ay > 0, (1.0 - v0) / ay, np.where(ay < 0, v0 / -ay, np.inf))
        hz = tx <= ty
        done = rem <= np.minimum(tx, ty)
        step = np.where(done, rem, np.minimum(tx, ty))
        if on_segment is not None:
            kind = np.where(done, 0, np.where(hz, 1, 2))
            on_segment(active, sq, u0, v0, ax, ay, step, state.index[active], kind)
        nu = u0 + ax * step
        nv = v0 + ay * step
        remaining[active] = rem - step

        fin = active[done]
        state.u[fin] = np.maximum(nu[done], 0.0)
        state.v[fin] = np.maximum(nv[done], 0.0)

        cross = ~done
        idx = active[cross]
        if not idx.size:
            break
        sq, hz, ax, ay = sq[cross], hz[cross], ax[cross], ay[cross]
        uc = np.where(hz, nu[cross], np.clip(nu[cross], 0.0, 1.0))
        vc = np.where(hz, np.clip(nv[cross], 0.0, 1.0), nv[cross])

        # Corner check: BL(x) = x, BR(x) = right(x), TL(x) = up(x), TR(x) = right(up(x)).
        right_side = np.where(hz, ax > 0, uc > 0.5)
        top_side = np.where(hz, vc > 0.5, ay > 0)
        other = np.where(hz, vc, uc)
        near = (other < CORNER_TOL) | (other > 1.0 - CORNER_TOL)
        base = np.where(top_side, arr.up[sq], sq)
        corner = np.where(right_side, arr.right[base], base)
        bad = near & arr.vertex_singular[arr.vertex_of[corner]]
        if bad.any():
            hit = idx[bad]
            singular[hit] = True
            remaining[hit] = 0.0
            state.square[hit], state.u[hit], state.v[hit] = sq[bad], np.clip(uc[bad], 0, 1), np.clip(vc[bad], 0, 1)

        ok = ~bad
        new_sq = sq.copy()
        delta = np.zeros((len(sq), o.d), dtype=np.int64)
        go = ok & hz & (ax > 0)
        new_sq[go] = arr.right[sq[go]]
        delta[go] = arr.w_right[sq[go]]
        uc[go] = 0.0
        go = ok & hz & (ax < 0)
        new_sq[go] = arr.right_inv[sq[go]]
        delta[go] = -arr.w_right[new_sq[go]]
        uc[go] = 1.0
        up_cross = ok & ~hz & (ay > 0)
        new_sq[up_cross] = arr.up[sq[up_cross]]
        delta[up_cross] = arr.w_up[sq[up_cross]]
        vc[up_cross] = 0.0
        go = ok & ~hz & (ay < 0)
        new_sq[go] = arr.up_inv[sq[go]]
        delta[go] = -arr.w_up[new_sq[go]]
        vc[go] = 1.0

        moved = idx[ok]
        state.square[moved] = new_sq[ok]
        state.u[moved] = uc[ok]
        state.v[moved] = vc[ok]
        state.index[moved] += delta[ok]
        crossings[moved] += 1
        keep = ok
        if stop_square is not None:
            back = up_cross & (new_sq == stop_square)
            returned[idx[back]] = True
            remaining[idx[back]] = 0.0
            keep = ok & ~back
        active = idx[keep]
    return crossings, singular, returned


def _normalize(o: Origami, state: PointBatch, crossings: np.ndarray) -> None:
    """Points that stopped exactly on a right or top edge move to the neighbouring square."""
    arr = surface_arrays(o)
    edge = state.u >= 1.0
    if edge.any():
        sq = state.square[edge]
        state.index[edge] += arr.w_right[sq]
        state.square[edge] = arr.right[sq]
        state.u[edge] = 0.0
        crossings[edge] += 1
    edge = state.v >= 1.0
    if edge.any():
        sq = state.square[edge]
        state.index[edge] += arr.w_up[sq]
        state.square[edge] = arr.up[sq]
        state.v[edge] = 0.0
        crossings[edge] += 1


def _signed_motion(direction: Direction, t, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (n,))
    sign = np.where(t < 0, -1.0, 1.0)
    return sign * direction.dx, sign * direction.dy, np.abs(t).copy()


def flow_batch(o: Origami, batch: PointBatch, direction: Direction,
               t: Union[float, np.ndarray]) -> Tuple[PointBatch, np.ndarray, np.ndarray]:
    """Flow every point for time t (scalar or per point; negative runs backwards).

    Returns (points, crossings, singular mask); singular rows hold the point
    where the orbit met the singularity.
    """
    state = batch.copy()
    dx, dy, remaining = _signed_motion(direction, t, state.size)
    crossings, singular, _ = _advance(o, state, dx, dy, remaining)
    _normalize(o, state, crossings)
    return state, crossings, singular


def flow(o: Origami, p: CoverPoint, direction: Direction, t: float) -> Tuple[CoverPoint, int]:
    state, crossings, singular = flow_batch(o, batch_of([p]), direction, t)
    if singular[0]:
        raise Singular(f"orbit of {p} in direction ({direction.dx}, {direction.dy}) meets a singularity")
    return state.point(0), int(crossings[0])


def ergodic_integral_batch(o: Origami, g: Observable, batch: PointBatch, direction: Direction,
                           T: Union[float, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Integral of g along each orbit segment of length T; returns (values, singular mask)."""
    if np.any(np.asarray(T) <= 0):
        raise DomainError("Integration time T must be positive")
    if g.d != o.d:
        raise DimensionMismatch(f"Observable rank {g.d} does not match cover rank {o.d}")
    table = ObservableTable(g, o.n_squares)
    acc = CompensatedSum(batch.size)

    def integrate(idx, sq, u0, v0, ax, ay, dt, index, kind):
        pid = table.lookup(sq, index)
        hit = pid >= 0
        if hit.any():
            acc.add_at(idx[hit], table.segment_integrals(pid[hit], u0[hit], v0[hit], ax[hit], ay[hit], dt[hit]))

    state = batch.copy()
    dx, dy, remaining = _signed_motion(direction, T, state.size)
    if g.pieces:
        _, singular, _ = _advance(o, state, dx, dy, remaining, on_segment=integrate)
    else:
        _, singular, _ = _advance(o, state, dx, dy, remaining)
    values = acc.value
    values[singular] = np.nan
    return values, singular


def ergodic_integral(o: Origami, g: Observable, p: CoverPoint, direction: Direction, T: float) -> float:
    values, singular = ergodic_integral_batch(o, g, batch_of([p]), direction, T)
    if singular[0]:
        raise Singular(f"orbit of {p} meets a singularity before time {T}")
    return float(values[0])


class SkewIET(BaseModel):
    """First-return map to a transversal, with its Z^d label.

    The skew product is (x, n) -> (apply(x), n + label(x)).
    """
    break_points: List[float]  # left endpoints, first is 0.0
    translations: List[float]
    labels: List[List[int]]
    return_times: List[float]

    @model_validator(mode='after')
    def check_intervals(self):
        m = len(self.break_points)
        if not m or self.break_points[0] != 0.0:
            raise ValueError('Break points must start at 0')
        if any(b <= a for a, b in zip(self.break_points, self.break_points[1:])) or self.break_points[-1] >= 1.0:
            raise ValueError('Break points must be strictly increasing in [0, 1)')
        if not len(self.translations) == len(self.labels) == len(self.return_times) == m:
            raise ValueError('Every subinterval needs a translation, a label and a return time')
        return self

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(np.append(self.break_points, 1.0))

    def locate(self, x) -> np.ndarray:
        return np.searchsorted(np.asarray(self.break_points), np.asarray(x, dtype=np.float64), side='right') - 1

    def apply(self, x):
        k = self.locate(x)
        return np.asarray(x, dtype=np.float64) + np.asarray(self.translations)[k]

    def step(self, x, n):
        """One step of the skew product"""
        k = self.locate(x)
        return (np.asarray(x, dtype=np.float64) + np.asarray(self.translations)[k],
                np.asarray(n) + np.asarray(self.labels)[k])

    def images_tile(self, tol: float = 1e-9) -> bool:
        """Subinterval images cover [0, 1) without overlaps or gaps (up to tol)"""
        starts = np.asarray(self.break_points) + np.asarray(self.translations)
        ends = starts + self.lengths
        order = np.argsort(starts)
        starts, ends = starts[order], ends[order]
        return (abs(starts[0]) < tol and abs(ends[-1] - 1.0) < tol
                and bool(np.all(np.abs(starts[1:] - ends[:-1]) < tol)))

    def mean_label(self) -> np.ndarray:
        """Lebesgue average of the label"""
        return self.lengths @ np.asarray(self.labels, dtype=np.float64)

    def label_stderr(self, n_points: int = RETURN_GRID) -> np.ndarray:
        """Sampling error of the label mean at n_points uniform points"""
        centered = np.asarray(self.labels, dtype=np.float64) - self.mean_label()
        return np.sqrt(self.lengths @ centered ** 2 / n_points)


def _trace_returns(o: Origami, square: int, direction: Direction, xs: np.ndarray, cap: float):
    n = len(xs)
    state = PointBatch(np.full(n, square, dtype=np.int64), xs.astype(np.float64).copy(),
                       np.zeros(n), np.zeros((n, o.d), dtype=np.int64))
    dx = np.full(n, direction.dx)
    dy = np.full(n, direction.dy)
    remaining = np.full(n, cap)
    signature = np.zeros(n, dtype=np.uint64)
    elapsed = np.zeros(n)

    def record(idx, sq, u0, v0, ax, ay, dt, index, kind):
        code = (sq * 3 + kind + 1).astype(np.uint64)
        signature[idx] = signature[idx] * _HASH_MULT + code
        elapsed[idx] += dt

    with np.errstate(over='ignore'):
        _, singular, returned = _advance(o, state, dx, dy, remaining, on_segment=record, stop_square=square)
    lost = ~returned & ~singular
    if lost.any():
        raise NoReturn(f"{int(lost.sum())} orbits from square {square} did not return within time {cap}")
    signature[singular] = np.iinfo(np.uint64).max
    return signature, state.u, state.index, elapsed, singular


def first_return(o: Origami, transversal_square: int, direction: Direction,
                 cap: float = RETURN_TIME_CAP, grid: int = RETURN_GRID) -> SkewIET:
    """Induced map on the bottom edge of `transversal_square`, found by sampling and bisection."""
    if not 0 <= transversal_square < o.n_squares:
        raise DomainError(f"Square {transversal_square} is not in the surface")
    if abs(direction.dy) < UNIT_TOL:
        raise DomainError("The first-return map needs a non-horizontal direction")
    if direction.dy < 0:
        direction = direction.reversed()

    def signature(xs):
        return _trace_returns(o, transversal_square, direction, xs, cap)[0]

    xs = np.linspace(1e-9, 1.0 - 1e-9, grid)
    sig = signature(xs)
    diff = np.nonzero(sig[1:] != sig[:-1])[0]
    lo, hi = xs[diff], xs[diff + 1]
    slo, shi = sig[diff], sig[diff + 1]
    breaks = []
    while lo.size:
        narrow = hi - lo <= BREAK_TOL
        breaks.extend(((lo[narrow] + hi[narrow]) / 2).tolist())
        lo, hi, slo, shi = lo[~narrow], hi[~narrow], slo[~narrow], shi[~narrow]
        if not lo.size:
            break
        mid = (lo + hi) / 2
        smid = signature(mid)
        left_same = smid == slo
        right_same = (smid == shi) & ~left_same
        both = ~left_same & ~right_same
        lo = np.concatenate([np.where(left_same, mid, lo)[left_same | right_same], lo[both], mid[both]])
        hi = np.concatenate([np.where(left_same, hi, mid)[left_same | right_same], mid[both], hi[both]])
        slo_new = np.concatenate([np.where(left_same, smid, slo)[left_same | right_same], slo[both], smid[both]])
        shi = np.concatenate([np.where(left_same, shi, smid)[left_same | right_same], smid[both], shi[both]])
        slo = slo_new

    points = [0.0]
    for b in sorted(breaks):
        if b - points[-1] > 10 * BREAK_TOL:
            points.append(b)
    starts = np.asarray(points)
    ends = np.append(starts[1:], 1.0)
    mids = (starts + ends) / 2
    _, ret_u, labels, times, singular = _trace_returns(o, transversal_square, direction, mids, cap)
    if singular.any():
        # a singular orbit at a midpoint means two breaks collapsed; try a quarter point instead
        quarter = (3 * starts + ends)[singular] / 4
        _, ru, lb, tm, sg = _trace_returns(o, transversal_square, direction, quarter, cap)
        if sg.any():
            raise Singular("could not find regular sample points inside every return subinterval")
        ret_u[singular], labels[singular], times[singular] = ru, lb, tm
        mids[singular] = quarter
    log.debug("first return to square %d: %d subintervals", transversal_square, len(starts))
    return SkewIET(break_points=starts.tolist(), translations=(ret_u - mids).tolist(),
                   labels=labels.tolist(), return_times=times.tolist())


def return_statistics(iet: SkewIET, K: int, n_samples: int, rng: np.random.Generator) -> dict:
    """Empirical law of the induced cocycle after K returns from uniform starts"""
    x = rng.random(n_samples)
    n = np.zeros((n_samples, len(iet.labels[0])), dtype=np.int64)
    for _ in range(K):
        x, n = iet.step(x, n)
        x = np.mod(x, 1.0)
    values, counts = np.unique(n, axis=0, return_counts=True)
    law = {tuple(int(c) for c in val): int(cnt) / n_samples for val, cnt in zip(values, counts)}
    return {'K': K, 'law': law, 'zero_fraction': law.get((0,) * n.shape[1], 0.0)}
