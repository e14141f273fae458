"""Compactly supported observables on the cover: one polynomial per (square, cover index) cell."""
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, model_validator, validator

from errors import DimensionMismatch, SurfaceFormatError
from surface import Origami

MAX_DEGREE = 9


class ObservablePiece(BaseModel):
    square: int
    index: Tuple[int, ...]
    coeffs: List[List[float]]  # coeffs[j][k] multiplies u**j * v**k

    @validator('square')
    def validate_square(cls, v):
        if v < 0:
            raise ValueError('Square id must be non-negative')
        return v

    @validator('coeffs')
    def validate_coeffs(cls, v):
        if not v or not v[0]:
            raise ValueError('A piece needs at least one coefficient')
        if any(len(row) != len(v[0]) for row in v):
            raise ValueError('Coefficient matrix must be rectangular')
        if len(v) > MAX_DEGREE + 1 or len(v[0]) > MAX_DEGREE + 1:
            raise ValueError(f'Polynomial degree is capped at {MAX_DEGREE} in each variable')
        return v

    @property
    def integral(self) -> float:
        return math.fsum(c / ((j + 1) * (k + 1))
                         for j, row in enumerate(self.coeffs) for k, c in enumerate(row))


class Observable(BaseModel):
    d: int
    pieces: List[ObservablePiece]
    total_integral: float = 0.0

    @model_validator(mode='after')
    def check_pieces(self):
        keys = set()
        for piece in self.pieces:
            if len(piece.index) != self.d:
                raise ValueError(f'Piece index {piece.index} does not have rank {self.d}')
            key = (piece.square, piece.index)
            if key in keys:
                raise ValueError(f'Duplicate piece for square {piece.square} at index {piece.index}')
            keys.add(key)
        self.total_integral = math.fsum(
            c / ((j + 1) * (k + 1))
            for piece in self.pieces for j, row in enumerate(piece.coeffs) for k, c in enumerate(row))
        return self

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for p in self.pieces for row in p.coeffs for c in row)


def zero_observable(d: int) -> Observable:
    return Observable(d=d, pieces=[])


def constant_observable(o: Origami, value: float = 1.0, index: Optional[Sequence[int]] = None) -> Observable:
    """`value` on every square of one cover cell (index 0 by default)"""
    cell = tuple(index) if index is not None else (0,) * o.d
    pieces = [ObservablePiece(square=sq, index=cell, coeffs=[[value]]) for sq in range(o.n_squares)]
    return Observable(d=o.d, pieces=pieces)


def bump_observable(o: Origami, index: Optional[Sequence[int]] = None) -> Observable:
    """Nonnegative bump 36 u(1-u) v(1-v) on every square of one cell; unit mass per square"""
    cell = tuple(index) if index is not None else (0,) * o.d
    coeffs = [[0.0, 0.0, 0.0], [0.0, 36.0, -36.0], [0.0, -36.0, 36.0]]
    pieces = [ObservablePiece(square=sq, index=cell, coeffs=coeffs) for sq in range(o.n_squares)]
    return Observable(d=o.d, pieces=pieces)


def combine(a: float, g1: Observable, b: float, g2: Observable) -> Observable:
    """The observable a*g1 + b*g2"""
    if g1.d != g2.d:
        raise DimensionMismatch(f"Cannot combine observables of rank {g1.d} and {g2.d}")
    merged: Dict[Tuple[int, Tuple[int, ...]], np.ndarray] = {}
    for scale, g in ((a, g1), (b, g2)):
        for piece in g.pieces:
            c = scale * np.asarray(piece.coeffs, dtype=np.float64)
            key = (piece.square, piece.index)
            if key in merged:
                old = merged[key]
                shape = (max(old.shape[0], c.shape[0]), max(old.shape[1], c.shape[1]))
                acc = np.zeros(shape)
                acc[:old.shape[0], :old.shape[1]] += old
                acc[:c.shape[0], :c.shape[1]] += c
                merged[key] = acc
            else:
                merged[key] = c
    pieces = [ObservablePiece(square=sq, index=idx, coeffs=c.tolist()) for (sq, idx), c in merged.items()]
    return Observable(d=g1.d, pieces=pieces)


class ObservableTable:
    """Array form of an Observable for vectorized piece lookup and segment integration."""

    def __init__(self, g: Observable, n_squares: int):
        self.n_squares = n_squares
        self.d = g.d
        self.n_pieces = len(g.pieces)
        deg_u = max((len(p.coeffs) for p in g.pieces), default=1)
        deg_v = max((len(p.coeffs[0]) for p in g.pieces), default=1)
        self.coeffs = np.zeros((max(self.n_pieces, 1), deg_u, deg_v))
        for pid, piece in enumerate(g.pieces):
            c = np.asarray(piece.coeffs, dtype=np.float64)
            self.coeffs[pid, :c.shape[0], :c.shape[1]] = c
        # Gauss-Legendre with m nodes is exact up to degree 2m - 1
        nodes, weights = np.polynomial.legendre.leggauss((deg_u + deg_v - 2) // 2 + 1)
        self.nodes = (nodes + 1.0) / 2.0
        self.weights = weights / 2.0

        if self.n_pieces:
            idx = np.asarray([p.index for p in g.pieces], dtype=np.int64).reshape(self.n_pieces, self.d)
            self.lo = idx.min(axis=0)
            self.span = idx.max(axis=0) - self.lo + 1
            keys = self._encode(np.asarray([p.square for p in g.pieces], dtype=np.int64), idx)
            self.order = np.argsort(keys)
            self.sorted_keys = keys[self.order]

    def _encode(self, square: np.ndarray, index: np.ndarray) -> np.ndarray:
        key = np.zeros(len(square), dtype=np.int64)
        for c in range(self.d):
            key = key * self.span[c] + (index[:, c] - self.lo[c])
        return key * self.n_squares + square

    def lookup(self, square: np.ndarray, index: np.ndarray) -> np.ndarray:
        """Piece id for each (square, index) pair, -1 where the observable vanishes"""
        pid = np.full(len(square), -1, dtype=np.int64)
        if not self.n_pieces or not len(square):
            return pid
        inside = np.all((index >= self.lo) & (index < self.lo + self.span), axis=1)
        if not inside.any():
            return pid
        keys = self._encode(square[inside], index[inside])
        pos = np.clip(np.searchsorted(self.sorted_keys, keys), 0, len(self.sorted_keys) - 1)
        hit = self.sorted_keys[pos] == keys
        found = np.where(hit, self.order[pos], -1)
        pid[np.nonzero(inside)[0]] = found
        return pid

    def segment_integrals(self, pid, u0, v0, dx, dy, dt) -> np.ndarray:
        """Exact integral of each piece along the segment (u0, v0) + s (dx, dy), 0 <= s <= dt."""
        s = dt[:, None] * self.nodes[None, :]
        u = u0[:, None] + dx[:, None] * s
        v = v0[:, None] + dy[:, None] * s
        upow = u[..., None] ** np.arange(self.coeffs.shape[1])
        vpow = v[..., None] ** np.arange(self.coeffs.shape[2])
        vals = np.einsum('mjk,mqj,mqk->mq', self.coeffs[pid], upow, vpow)
        return dt * (vals @ self.weights)


def format_observable(g: Observable) -> str:
    lines = []
    for piece in g.pieces:
        terms = ",".join(f"c{j}{k}={c!r}" for j, row in enumerate(piece.coeffs)
                         for k, c in enumerate(row) if c != 0)
        index = ",".join(str(i) for i in piece.index)
        lines.append(f"square={piece.square} index={index} poly={terms or 'c00=0.0'}")
    return "\n".join(lines) + "\n"


def parse_observable(text: str, d: Optional[int] = None) -> Observable:
    pieces = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            fields = dict(token.split("=", 1) for token in line.split())
            terms = {}
            for term in fields["poly"].split(","):
                name, value = term.split("=")
                if len(name) != 3 or name[0] != "c":
                    raise ValueError(f"bad monomial {name!r}")
                terms[(int(name[1]), int(name[2]))] = float(value)
            size_u = max(j for j, _ in terms) + 1
            size_v = max(k for _, k in terms) + 1
            coeffs = [[terms.get((j, k), 0.0) for k in range(size_v)] for j in range(size_u)]
            index = tuple(int(c) for c in fields["index"].split(","))
            pieces.append(ObservablePiece(square=int(fields["square"]), index=index, coeffs=coeffs))
        except (KeyError, ValueError) as exc:
            raise SurfaceFormatError(f"observable line {line_no}: {exc}") from exc
    if d is None:
        d = len(pieces[0].index) if pieces else 1
    try:
        return Observable(d=d, pieces=pieces)
    except ValueError as exc:
        raise DimensionMismatch(f"observable does not fit a rank-{d} cover: {exc}") from exc
