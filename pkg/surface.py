"""Square-tiled surfaces (origamis) decorated with Z^d cover weights.

An origami with n unit squares is encoded by two permutations: right_perm[i]
is the square glued to the right edge of square i, up_perm[i] the square
glued to its top edge. The Z^d-cover is carried by edge weights: crossing the
right edge of square i left-to-right adds w_right[i] to the cover index,
crossing its top edge bottom-to-top adds w_up[i]; crossing backwards
subtracts them.
"""
import logging
from collections import deque
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm
from typing import List, Mapping, NamedTuple, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator, validator

from errors import Disconnected, DimensionMismatch, DomainError, NonPermutation, SurfaceFormatError

log = logging.getLogger(__name__)

HORIZONTAL = "horizontal"
VERTICAL = "vertical"
DIRECTIONS = (HORIZONTAL, VERTICAL)

WeightTable = Union[Mapping[int, Sequence[int]], Sequence[Sequence[int]]]


class Origami(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_squares: int
    right_perm: Tuple[int, ...]
    up_perm: Tuple[int, ...]
    w_right: Tuple[Tuple[int, ...], ...]
    w_up: Tuple[Tuple[int, ...], ...]
    d: int

    @validator('n_squares')
    def validate_n_squares(cls, v):
        if v < 1:
            raise ValueError('An origami needs at least one square')
        return v

    @validator('d')
    def validate_rank(cls, v):
        if v < 1:
            raise ValueError('Cover rank must be at least 1')
        return v


class Cylinder(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    direction: str
    rows: List[List[int]]  # bottom-to-top (horizontal) or left-to-right (vertical) cycles
    width: int
    height: int
    modulus: Fraction

    @validator('direction')
    def validate_direction(cls, v):
        if v not in DIRECTIONS:
            raise ValueError(f'Direction must be one of: {list(DIRECTIONS)}')
        return v

    @model_validator(mode='after')
    def check_shape(self):
        if len(self.rows) != self.height or any(len(r) != self.width for r in self.rows):
            raise ValueError('Cylinder rows do not match width and height')
        return self

    @property
    def squares(self) -> List[int]:
        return [sq for row in self.rows for sq in row]


class StratumData(BaseModel):
    cone_angles: List[int]  # per vertex, in multiples of 2*pi
    genus: int
    marked_points: List[int]  # vertices of angle 2*pi around which the cover index jumps
    holonomy: List[List[int]]

    @model_validator(mode='after')
    def check_gauss_bonnet(self):
        if sum(a - 1 for a in self.cone_angles) != 2 * self.genus - 2:
            raise ValueError('Cone angles violate Gauss-Bonnet')
        return self

    @property
    def singularities(self) -> List[int]:
        return [i for i, a in enumerate(self.cone_angles) if a > 1]

    @property
    def kappa(self) -> int:
        return len(self.singularities) + len(self.marked_points)


class SurfaceArrays(NamedTuple):
    right: np.ndarray
    up: np.ndarray
    right_inv: np.ndarray
    up_inv: np.ndarray
    w_right: np.ndarray
    w_up: np.ndarray
    vertex_of: np.ndarray  # vertex at the bottom-left corner of each square
    vertex_angle: np.ndarray
    vertex_holonomy: np.ndarray
    vertex_singular: np.ndarray


def _inverse(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return inv


@lru_cache(maxsize=64)
def surface_arrays(o: Origami) -> SurfaceArrays:
    right = np.asarray(o.right_perm, dtype=np.int64)
    up = np.asarray(o.up_perm, dtype=np.int64)
    right_inv, up_inv = _inverse(right), _inverse(up)
    w_right = np.asarray(o.w_right, dtype=np.int64).reshape(o.n_squares, o.d)
    w_up = np.asarray(o.w_up, dtype=np.int64).reshape(o.n_squares, o.d)

    # Corners around the vertex at the bottom-left of y, taken counterclockwise,
    # return to a bottom-left corner at up(right(up^-1(right^-1(y)))).
    left = right_inv
    below_left = up_inv[left]
    kappa = up[right[below_left]]
    step = -w_right[left] - w_up[below_left] + w_right[below_left] + w_up[right[below_left]]

    vertex_of = np.full(o.n_squares, -1, dtype=np.int64)
    angles, holonomy = [], []
    for start in range(o.n_squares):
        if vertex_of[start] >= 0:
            continue
        vid, y, size = len(angles), start, 0
        total = np.zeros(o.d, dtype=np.int64)
        while vertex_of[y] < 0:
            vertex_of[y] = vid
            total += step[y]
            size += 1
            y = kappa[y]
        angles.append(size)
        holonomy.append(total)
    vertex_angle = np.asarray(angles, dtype=np.int64)
    vertex_holonomy = np.asarray(holonomy, dtype=np.int64).reshape(len(angles), o.d)
    vertex_singular = (vertex_angle > 1) | np.any(vertex_holonomy != 0, axis=1)
    return SurfaceArrays(right, up, right_inv, up_inv, w_right, w_up,
                         vertex_of, vertex_angle, vertex_holonomy, vertex_singular)


def _as_weight_rows(table: WeightTable, n: int, name: str) -> List[Tuple[int, ...]]:
    if isinstance(table, Mapping):
        missing = [i for i in range(n) if i not in table]
        if missing:
            raise DimensionMismatch(f"{name} has no weight for squares {missing}")
        rows = [table[i] for i in range(n)]
    else:
        rows = list(table)
        if len(rows) != n:
            raise DimensionMismatch(f"{name} has {len(rows)} entries for {n} squares")
    return [tuple(int(c) for c in row) for row in rows]


def _check_permutation(perm: Sequence[int], n: int, name: str) -> Tuple[int, ...]:
    values = tuple(int(p) for p in perm)
    if len(values) != n or sorted(values) != list(range(n)):
        raise NonPermutation(f"{name} is not a permutation of 0..{n - 1}")
    return values


def new_origami(n: int, right_perm: Sequence[int], up_perm: Sequence[int],
                w_right: WeightTable, w_up: WeightTable) -> Origami:
    """Validate gluing data and weights and build an Origami."""
    if n < 1:
        raise DomainError("An origami needs at least one square")
    right = _check_permutation(right_perm, n, "right_perm")
    up = _check_permutation(up_perm, n, "up_perm")
    wr = _as_weight_rows(w_right, n, "w_right")
    wu = _as_weight_rows(w_up, n, "w_up")
    lengths = {len(row) for row in wr + wu}
    if len(lengths) != 1 or 0 in lengths:
        raise DimensionMismatch(f"Weight vectors have lengths {sorted(lengths)}, expected one common rank")
    d = lengths.pop()

    seen = {0}
    queue = deque([0])
    while queue:
        sq = queue.popleft()
        for nxt in (right[sq], up[sq]):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    if len(seen) != n:
        raise Disconnected(f"Squares {sorted(set(range(n)) - seen)} are not reachable from square 0")

    return Origami(n_squares=n, right_perm=right, up_perm=up, w_right=tuple(wr), w_up=tuple(wu), d=d)


def torus() -> Origami:
    return new_origami(1, [0], [0], [[0]], [[0]])


def staircase(s: int) -> Origami:
    """The (s,1)-staircase: an s x 1 rectangle, vertical sides glued, top of [0,1] to bottom of [s-1,s]."""
    if s < 2:
        raise DomainError(f"Staircase needs s >= 2, got {s}")
    right = [(i + 1) % s for i in range(s)]
    up = list(range(s))
    up[0], up[s - 1] = s - 1, 0
    w_right = [[0] for _ in range(s)]
    w_up = [[0] for _ in range(s)]
    w_up[0] = [1]
    w_up[s - 1] = [-1]
    return new_origami(s, right, up, w_right, w_up)


# Plus-shaped obstacles on the 6 x 4 periodicity box, as (column, row) unit cells.
WINDTREE_BOX = (6, 4)
WINDTREE_OBSTACLES = frozenset({
    (2, 2), (3, 2), (4, 2), (3, 1), (3, 3),
    (5, 0), (0, 0), (1, 0), (0, 3), (0, 1),
})
WINDTREE_COPIES = ((1, 1), (-1, 1), (1, -1), (-1, -1))


def windtree_plus() -> Origami:
    """Fold-out of the plus-shaped wind-tree table into four mirrored copies.

    A square is (ex, ey, column, row): copy (ex, ey) is the table reflected so
    that its +x/+y directions run along ex/ey. Leaving the box adds the box
    displacement to the cover index: e1 horizontally, e2 vertically. Hitting
    an obstacle wall moves to the mirrored copy in the same cell.
    """
    width, height = WINDTREE_BOX
    cells = [(i, j) for j in range(height) for i in range(width) if (i, j) not in WINDTREE_OBSTACLES]
    labels = [(ex, ey, i, j) for ex, ey in WINDTREE_COPIES for i, j in cells]
    index = {label: k for k, label in enumerate(labels)}

    right, up, w_right, w_up = [], [], [], []
    for ex, ey, i, j in labels:
        ni = i + ex
        if (ni % width, j) in WINDTREE_OBSTACLES:
            right.append(index[(-ex, ey, i, j)])
            w_right.append([0, 0])
        else:
            right.append(index[(ex, ey, ni % width, j)])
            w_right.append([ni // width, 0])
        nj = j + ey
        if (i, nj % height) in WINDTREE_OBSTACLES:
            up.append(index[(ex, -ey, i, j)])
            w_up.append([0, 0])
        else:
            up.append(index[(ex, ey, i, nj % height)])
            w_up.append([0, nj // height])
    return new_origami(len(labels), right, up, w_right, w_up)


def _cycles(perm: np.ndarray) -> List[List[int]]:
    seen = np.zeros(len(perm), dtype=bool)
    cycles = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycle, x = [], start
        while not seen[x]:
            seen[x] = True
            cycle.append(x)
            x = int(perm[x])
        cycles.append(cycle)
    return cycles


def cylinders(o: Origami, direction: str) -> List[Cylinder]:
    """Cylinder decomposition in the horizontal or vertical direction.

    Cycles of the along-permutation are stacked into one cylinder while the
    across-permutation maps a cycle onto the next one square by square and the
    shared boundary carries no cone point or marked point.
    """
    if direction not in DIRECTIONS:
        raise DomainError(f"Unknown direction {direction!r}")
    arr = surface_arrays(o)
    along, across = (arr.right, arr.up) if direction == HORIZONTAL else (arr.up, arr.right)

    cycles = _cycles(along)
    cycle_of = np.empty(o.n_squares, dtype=np.int64)
    pos_of = np.empty(o.n_squares, dtype=np.int64)
    for ci, cycle in enumerate(cycles):
        cycle_of[cycle] = ci
        pos_of[cycle] = np.arange(len(cycle))

    succ = {}
    for ci, cycle in enumerate(cycles):
        first = int(across[cycle[0]])
        target = cycles[cycle_of[first]]
        if len(target) != len(cycle):
            continue
        offset = int(pos_of[first])
        if any(int(across[x]) != target[(offset + m) % len(target)] for m, x in enumerate(cycle)):
            continue
        if any(arr.vertex_singular[arr.vertex_of[across[x]]] for x in cycle):
            continue
        succ[ci] = int(cycle_of[first])
    has_pred = set(succ.values())

    starts = [ci for ci in range(len(cycles)) if ci not in has_pred]
    starts += [ci for ci in range(len(cycles)) if ci in has_pred]
    used = set()
    result = []
    for start in starts:
        if start in used:
            continue
        rows = [cycles[start]]
        used.add(start)
        ci = start
        while ci in succ and succ[ci] not in used:
            ci = succ[ci]
            used.add(ci)
            rows.append([int(across[x]) for x in rows[-1]])
        width, height = len(rows[0]), len(rows)
        result.append(Cylinder(direction=direction, rows=rows, width=width, height=height,
                               modulus=Fraction(width, height)))
    log.debug("%s decomposition: %d cylinders", direction, len(result))
    return result


def twist_multipliers(cyls: Sequence[Cylinder]) -> Tuple[int, List[int]]:
    """Least positive integer c with c / modulus_i integral for every cylinder, and the k_i = c / modulus_i."""
    c = 1
    for cyl in cyls:
        c = lcm(c, cyl.width // gcd(cyl.width, cyl.height))
    ks = [c * cyl.height // cyl.width for cyl in cyls]
    return c, ks


def stratum(o: Origami) -> StratumData:
    arr = surface_arrays(o)
    n_vertices = len(arr.vertex_angle)
    # Euler characteristic of the square complex: V - 2n + n = 2 - 2g
    genus = (o.n_squares - n_vertices + 2) // 2
    marked = [v for v in range(n_vertices)
              if arr.vertex_angle[v] == 1 and np.any(arr.vertex_holonomy[v] != 0)]
    return StratumData(cone_angles=[int(a) for a in arr.vertex_angle], genus=genus,
                       marked_points=marked, holonomy=arr.vertex_holonomy.tolist())


def _format_vector(values: Sequence[int]) -> str:
    return ",".join(str(int(v)) for v in values)


def format_surface(o: Origami) -> str:
    lines = [f"origami d={o.d} n={o.n_squares}"]
    for sq in range(o.n_squares):
        lines.append(f"{sq} r={o.right_perm[sq]} u={o.up_perm[sq]} "
                     f"wr={_format_vector(o.w_right[sq])} wu={_format_vector(o.w_up[sq])}")
    return "\n".join(lines) + "\n"


def _parse_fields(tokens: Sequence[str], line_no: int) -> dict:
    fields = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep:
            raise SurfaceFormatError(f"line {line_no}: expected key=value, got {token!r}")
        fields[key] = value
    return fields


def parse_surface(text: str) -> Origami:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines or not lines[0].startswith("origami"):
        raise SurfaceFormatError("missing 'origami d=<d> n=<n>' header")
    try:
        header = _parse_fields(lines[0].split()[1:], 1)
        d, n = int(header["d"]), int(header["n"])
        right, up = [0] * n, [0] * n
        w_right, w_up = {}, {}
        for line_no, line in enumerate(lines[1:], start=2):
            tokens = line.split()
            sq = int(tokens[0])
            fields = _parse_fields(tokens[1:], line_no)
            right[sq] = int(fields["r"])
            up[sq] = int(fields["u"])
            w_right[sq] = [int(c) for c in fields["wr"].split(",")]
            w_up[sq] = [int(c) for c in fields["wu"].split(",")]
    except (KeyError, ValueError, IndexError) as exc:
        raise SurfaceFormatError(f"malformed surface description: {exc}") from exc
    o = new_origami(n, right, up, w_right, w_up)
    if o.d != d:
        raise DimensionMismatch(f"header declares d={d} but weights have rank {o.d}")
    return o
