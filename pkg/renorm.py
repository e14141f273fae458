"""Affine automorphisms built from cylinder Dehn twists, and the Frobenius cocycle.

An automorphism is a list of twist stages applied left to right. A stage
shears every cylinder of one direction by the common constant c = k_i * mu_i:
inside a horizontal cylinder a point at height Y above the bottom moves c * Y
to the right, with the edge weights it passes over added to its cover index.
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator, validator

from cover_flow import CoverPoint, Direction, PointBatch, batch_of, uniform_points
from errors import DimensionMismatch, DomainError, NotHyperbolic, NotLiftable, Singular
from surface import DIRECTIONS, HORIZONTAL, VERTICAL, Origami, cylinders, surface_arrays, twist_multipliers
from utils.parallel import map_chunks
from utils.rng import chunk_rng

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-12
MAX_RESAMPLE_ROUNDS = 20
MIN_DRIFT_SAMPLES = 1000
WORD_LETTERS = {'h': (HORIZONTAL, 1), 'v': (VERTICAL, 1), 'H': (HORIZONTAL, -1), 'V': (VERTICAL, -1)}

Matrix = Tuple[Tuple[int, int], Tuple[int, int]]
IDENTITY: Matrix = ((1, 0), (0, 1))


class TwistSpec(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    direction: str
    k: Tuple[int, ...]
    moduli: Tuple[Fraction, ...]
    c: int
    sign: int = 1

    @validator('direction')
    def validate_direction(cls, v):
        if v not in DIRECTIONS:
            raise ValueError(f'Direction must be one of: {list(DIRECTIONS)}')
        return v

    @validator('sign')
    def validate_sign(cls, v):
        if v not in (1, -1):
            raise ValueError('Twist sign must be +1 or -1')
        return v

    @model_validator(mode='after')
    def check_common_shear(self):
        if len(self.k) != len(self.moduli) or any(k * mu != self.c for k, mu in zip(self.k, self.moduli)):
            raise ValueError('Twist powers must satisfy k_i * modulus_i = c for every cylinder')
        return self

    @property
    def shear(self) -> int:
        return self.sign * self.c

    @property
    def matrix(self) -> Matrix:
        if self.direction == HORIZONTAL:
            return ((1, self.shear), (0, 1))
        return ((1, 0), (self.shear, 1))

    def inverted(self) -> "TwistSpec":
        return self.model_copy(update={'sign': -self.sign})


class AffineAuto(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    origami: Origami
    stages: Tuple[TwistSpec, ...]
    derivative: Matrix
    lam: Optional[float] = None
    stable_dir: Optional[Direction] = None
    unstable_dir: Optional[Direction] = None

    @model_validator(mode='after')
    def check_derivative(self):
        (a, b), (c, d) = self.derivative
        if a * d - b * c != 1:
            raise ValueError('Derivative must have determinant 1')
        return self

    @property
    def trace(self) -> int:
        return self.derivative[0][0] + self.derivative[1][1]

    @property
    def is_hyperbolic(self) -> bool:
        return abs(self.trace) > 2


def _matmul(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2)) for i in range(2))


def eigen_of_matrix(m: Matrix) -> Tuple[float, Direction, Direction]:
    """Stable eigenvalue and unit stable/unstable eigendirections of a hyperbolic SL(2,Z) matrix"""
    (a, b), (c, d) = m
    tr = a + d
    if abs(tr) <= 2:
        raise NotHyperbolic(f"Matrix {m} has trace {tr}, |trace| must exceed 2")
    root = math.sqrt(tr * tr - 4)
    lam_u = (tr + math.copysign(root, tr)) / 2
    lam_s = 1.0 / lam_u

    def direction(lam: float) -> Direction:
        v1 = (float(b), lam - a)
        v2 = (lam - d, float(c))
        x, y = v1 if math.hypot(*v1) >= math.hypot(*v2) else v2
        if y < 0 or (y == 0 and x < 0):
            x, y = -x, -y
        return Direction.of(x, y)

    return lam_s, direction(lam_s), direction(lam_u)


def eigen(a: AffineAuto) -> Tuple[float, Direction, Direction]:
    return eigen_of_matrix(a.derivative)


def _assemble(o: Origami, stages: Sequence[TwistSpec]) -> AffineAuto:
    derivative = IDENTITY
    for stage in stages:
        derivative = _matmul(stage.matrix, derivative)
    fields = dict(origami=o, stages=tuple(stages), derivative=derivative)
    if abs(derivative[0][0] + derivative[1][1]) > 2:
        fields['lam'], fields['stable_dir'], fields['unstable_dir'] = eigen_of_matrix(derivative)
    return AffineAuto(**fields)


class StageTable(NamedTuple):
    row_id: np.ndarray  # per square
    row_pos: np.ndarray  # j: row number inside its cylinder
    col_pos: np.ndarray  # m: position along the row
    height: np.ndarray  # per square: height of its cylinder
    width: np.ndarray  # per square: width of its cylinder
    row_squares: np.ndarray  # (n_rows, max_width)
    prefix: np.ndarray  # (n_rows, max_width + 1, d) partial sums of along-weights


@lru_cache(maxsize=32)
def stage_table(o: Origami, direction: str) -> StageTable:
    arr = surface_arrays(o)
    along_w = arr.w_right if direction == HORIZONTAL else arr.w_up
    cyls = cylinders(o, direction)
    n_rows = sum(c.height for c in cyls)
    max_w = max(c.width for c in cyls)
    row_squares = np.zeros((n_rows, max_w), dtype=np.int64)
    prefix = np.zeros((n_rows, max_w + 1, o.d), dtype=np.int64)
    row_id = np.empty(o.n_squares, dtype=np.int64)
    row_pos = np.empty(o.n_squares, dtype=np.int64)
    col_pos = np.empty(o.n_squares, dtype=np.int64)
    height = np.empty(o.n_squares, dtype=np.int64)
    width = np.empty(o.n_squares, dtype=np.int64)
    r = 0
    for cyl in cyls:
        for j, row in enumerate(cyl.rows):
            sq = np.asarray(row, dtype=np.int64)
            row_squares[r, :cyl.width] = sq
            prefix[r, 1:cyl.width + 1] = np.cumsum(along_w[sq], axis=0)
            if np.any(prefix[r, cyl.width] != 0):
                raise NotLiftable(f"{direction} cylinder through square {row[0]} has core weight "
                                  f"{prefix[r, cyl.width].tolist()}; the twist does not lift to the cover")
            row_id[sq], row_pos[sq], col_pos[sq] = r, j, np.arange(cyl.width)
            height[sq], width[sq] = cyl.height, cyl.width
            r += 1
    return StageTable(row_id, row_pos, col_pos, height, width, row_squares, prefix)


def dehn_twist(o: Origami, direction: str) -> AffineAuto:
    """Multi-twist with minimal powers k_i along every cylinder of one direction"""
    cyls = cylinders(o, direction)
    stage_table(o, direction)
    c, ks = twist_multipliers(cyls)
    spec = TwistSpec(direction=direction, k=tuple(ks), moduli=tuple(cyl.modulus for cyl in cyls), c=c)
    return _assemble(o, [spec])


def identity(o: Origami) -> AffineAuto:
    return _assemble(o, [])


def compose(a: AffineAuto, b: AffineAuto) -> AffineAuto:
    """a after b"""
    if a.origami != b.origami:
        raise DomainError("Cannot compose automorphisms of different surfaces")
    return _assemble(a.origami, list(b.stages) + list(a.stages))


def inverse(a: AffineAuto) -> AffineAuto:
    return _assemble(a.origami, [s.inverted() for s in reversed(a.stages)])


def automorphism_from_word(o: Origami, word: str) -> AffineAuto:
    """Twist word read as a composition: "hv" is the horizontal twist after the vertical one"""
    if any(ch not in WORD_LETTERS for ch in word):
        raise DomainError(f"Twist word {word!r} may only use the letters {''.join(WORD_LETTERS)}")
    twists = {d: dehn_twist(o, d) for d in DIRECTIONS}
    stages: List[TwistSpec] = []
    for ch in reversed(word):
        direction, sign = WORD_LETTERS[ch]
        stage = twists[direction].stages[0]
        stages.append(stage if sign > 0 else stage.inverted())
    return _assemble(o, stages)


def _apply_stage(o: Origami, stage: TwistSpec, state: PointBatch, singular: np.ndarray) -> None:
    tab = stage_table(o, stage.direction)
    sq = state.square
    rid, j, m = tab.row_id[sq], tab.row_pos[sq], tab.col_pos[sq]
    h, w = tab.height[sq], tab.width[sq]
    if stage.direction == HORIZONTAL:
        along, across = state.u, state.v
    else:
        along, across = state.v, state.u
    singular |= ((j == 0) & (across < BOUNDARY_TOL)) | ((j == h - 1) & (across > 1.0 - BOUNDARY_TOL))

    shifted = np.mod(m + along + stage.shear * (j + across), w)
    m2 = np.floor(shifted).astype(np.int64)
    new_along = shifted - m2
    wrap = m2 >= w
    m2[wrap] = 0
    new_along[wrap] = 0.0
    state.index[:] += tab.prefix[rid, m2] - tab.prefix[rid, m]
    state.square[:] = tab.row_squares[rid, m2]
    along[:] = new_along


def apply_batch(a: AffineAuto, batch: PointBatch) -> Tuple[PointBatch, np.ndarray]:
    """Image of every point; the mask flags points within tolerance of a cylinder boundary."""
    state = batch.copy()
    singular = np.zeros(state.size, dtype=bool)
    for stage in a.stages:
        _apply_stage(a.origami, stage, state, singular)
    return state, singular


def apply(a: AffineAuto, p: CoverPoint) -> CoverPoint:
    state, singular = apply_batch(a, batch_of([p]))
    if singular[0]:
        raise Singular(f"{p} lies on a cylinder boundary of a twist stage")
    return state.point(0)


def frobenius_batch(a: AffineAuto, base: PointBatch) -> Tuple[np.ndarray, PointBatch, np.ndarray]:
    """F at each base point (lifted to index 0), the base image, and the singular mask"""
    lifted = PointBatch(base.square, base.u, base.v, np.zeros_like(base.index))
    image, singular = apply_batch(a, lifted)
    values = image.index.copy()
    image.index[:] = 0
    return values, image, singular


def frobenius(a: AffineAuto, x: CoverPoint) -> Tuple[int, ...]:
    values, _, singular = frobenius_batch(a, batch_of([x]))
    if singular[0]:
        raise Singular(f"{x} lies on a cylinder boundary of a twist stage")
    return tuple(int(c) for c in values[0])


class FrobeniusSample(BaseModel):
    x: Tuple[int, float, float]
    FK: Tuple[int, ...]
    K: int
    tail: Tuple[int, float, float]  # base point psi^K x


def frobenius_series(a: AffineAuto, base: PointBatch, K: int) -> Tuple[np.ndarray, PointBatch, np.ndarray]:
    """F(psi^j x) for j < K, shape (n, K, d), with the final base point and singular mask"""
    series = np.zeros((base.size, K, a.origami.d), dtype=np.int64)
    singular = np.zeros(base.size, dtype=bool)
    state = base
    for j in range(K):
        series[:, j], state, bad = frobenius_batch(a, state)
        singular |= bad
    return series, state, singular


def frobenius_sums(a: AffineAuto, x: CoverPoint, K: int) -> FrobeniusSample:
    if K < 0:
        raise DomainError("K must be non-negative")
    series, tail, singular = frobenius_series(a, batch_of([x]), K)
    if singular[0]:
        raise Singular(f"orbit of {x} meets a twist boundary within {K} iterations")
    return FrobeniusSample(x=(x.square, x.u, x.v), FK=tuple(int(c) for c in series[0].sum(axis=0)), K=K,
                           tail=(int(tail.square[0]), float(tail.u[0]), float(tail.v[0])))


class FrobeniusCocycle:
    """The cocycle F of an automorphism"""

    def __init__(self, a: AffineAuto):
        self.auto = a
        self.d = a.origami.d

    def series(self, base: PointBatch, K: int) -> Tuple[np.ndarray, np.ndarray]:
        values, _, singular = frobenius_series(self.auto, base, K)
        return values, singular


class CoboundaryCocycle:
    """Telescoping cocycle g - g o psi for an integer function g of the square id"""

    def __init__(self, a: AffineAuto, g: Optional[Sequence[int]] = None):
        self.auto = a
        self.d = a.origami.d
        n = a.origami.n_squares
        self.g = np.asarray(g if g is not None else [sq % 3 for sq in range(n)], dtype=np.int64)
        if self.g.shape != (n,):
            raise DimensionMismatch(f"g needs one integer per square ({n}), got shape {self.g.shape}")

    def series(self, base: PointBatch, K: int) -> Tuple[np.ndarray, np.ndarray]:
        values = np.zeros((base.size, K, self.d), dtype=np.int64)
        singular = np.zeros(base.size, dtype=bool)
        state = base
        for j in range(K):
            _, image, bad = frobenius_batch(self.auto, state)
            values[:, j] = (self.g[state.square] - self.g[image.square])[:, None]
            singular |= bad
            state = image
        return values, singular


def _cocycle_chunk(seed: int, chunk: int, size: int, cocycle, K: int) -> np.ndarray:
    rng = chunk_rng(seed, chunk)
    o = cocycle.auto.origami
    base = uniform_points(o, rng, size)
    values, singular = cocycle.series(base, K)
    for _ in range(MAX_RESAMPLE_ROUNDS):
        if not singular.any():
            break
        bad = np.nonzero(singular)[0]
        log.warning("chunk %d: resampling %d singular orbits", chunk, len(bad))
        values[bad], singular[bad] = cocycle.series(uniform_points(o, rng, len(bad)), K)
    else:
        if singular.any():
            raise Singular(f"chunk {chunk}: orbits kept hitting twist boundaries after resampling")
    return values


def _partial_sums_chunk(seed: int, chunk: int, size: int, cocycle, ks: Tuple[int, ...]) -> np.ndarray:
    # only (size, len(ks), d) leaves the worker
    partial = np.cumsum(_cocycle_chunk(seed, chunk, size, cocycle, ks[-1]), axis=1)
    return partial[:, np.asarray(ks) - 1]


def sample_cocycle(cocycle, K: int, n_samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """Cocycle values along K steps of n_samples uniform orbits, shape (n_samples, K, d)"""
    d = cocycle.d
    if K == 0 or n_samples == 0:
        return np.zeros((n_samples, K, d), dtype=np.int64)
    parts = map_chunks(_cocycle_chunk, n_samples, seed, workers, cocycle, K)
    return np.concatenate(parts, axis=0)


def sample_partial_sums(cocycle, ks: Sequence[int], n_samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """F_K for every K in ks (increasing) on one ensemble, shape (n_samples, len(ks), d).

    Same orbits as sample_cocycle with the same seed, without holding the full step series.
    """
    ks = tuple(int(k) for k in ks)
    if any(k < 1 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
        raise DomainError(f"partial-sum depths must be positive and increasing, got {list(ks)}")
    if n_samples == 0:
        return np.zeros((0, len(ks), cocycle.d), dtype=np.int64)
    parts = map_chunks(_partial_sums_chunk, n_samples, seed, workers, cocycle, ks)
    return np.concatenate(parts, axis=0)


def sample_sums(cocycle, K: int, n_samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """Ergodic sums F_K over n_samples uniform starts, shape (n_samples, d)"""
    if K == 0:
        return np.zeros((n_samples, cocycle.d), dtype=np.int64)
    return sample_partial_sums(cocycle, [K], n_samples, seed, workers)[:, 0]


def average_drift(a: AffineAuto, n_samples: int, seed: int, workers: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Monte Carlo mean of F over uniform base points, with its standard error"""
    if n_samples < MIN_DRIFT_SAMPLES:
        raise DomainError(f"average_drift needs at least {MIN_DRIFT_SAMPLES} samples")
    values = sample_sums(FrobeniusCocycle(a), 1, n_samples, seed, workers).astype(np.float64)
    estimate = np.array([math.fsum(values[:, c]) for c in range(values.shape[1])]) / n_samples
    stderr = values.std(axis=0, ddof=1) / math.sqrt(n_samples)
    log.info("drift estimate %s +- %s over %d samples", estimate, stderr, n_samples)
    return estimate, stderr
