from pydantic import BaseModel, validator
from typing import Dict, List


class CylinderSummary(BaseModel):
    rows: List[List[int]]
    width: int
    height: int
    modulus: str  # exact fraction, e.g. "4/3"


class TwistSummary(BaseModel):
    c: int
    k: List[int]
    matrix: List[List[int]]


class StratumSummary(BaseModel):
    cone_angles: List[int]
    genus: int
    marked_points: List[int]
    holonomy: List[List[int]]


class WeightRow(BaseModel):
    square: int
    right: int
    up: int
    w_right: List[int]
    w_up: List[int]


class SurfaceSummary(BaseModel):
    model: str
    n_squares: int
    d: int
    cylinders: Dict[str, List[CylinderSummary]]
    twists: Dict[str, TwistSummary]
    stratum: StratumSummary
    weights: List[WeightRow]

    @validator('cylinders')
    def validate_directions(cls, v):
        if set(v) != {'horizontal', 'vertical'}:
            raise ValueError('Cylinder data must cover the horizontal and vertical directions')
        return v
