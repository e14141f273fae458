"""Oscillatory Gaussian moments

    I_j(sigma, L)      = int_R   exp(-sigma^2 u^2 / 2) exp(i L u) u^j du
    vecI_j(Sigma, L)_i = int_R^2 exp(-<Sigma u, Sigma u> / 2) exp(i <L, u>) u_i^j du

by recursion, with an adaptive-quadrature oracle for checking.
"""
import logging
import math
from fractions import Fraction
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, model_validator
from scipy import integrate

from errors import DomainError, NonConvergence

log = logging.getLogger(__name__)

EXACT_RECURSION_FROM = 9
QUAD_RADIUS = 12.0
QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-11
QUAD_LIMIT = 400
QUAD_2D_EPSREL = 1e-9
MAX_VECTOR_J = 2


def _check(j: int, sigma: float) -> None:
    if j < 0 or int(j) != j:
        raise DomainError(f"j must be a non-negative integer, got {j}")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")


def _real_factor(j: int, sigma: float, L: float) -> float:
    """R_j with I_j = i^j R_j; R_j = (L R_{j-1} - (j-1) R_{j-2}) / sigma^2"""
    r0 = math.sqrt(2 * math.pi) / sigma * math.exp(-L * L / (2 * sigma * sigma))
    if j < EXACT_RECURSION_FROM:
        prev, cur = 0.0, r0
        for k in range(1, j + 1):
            prev, cur = cur, (L * cur - (k - 1) * prev) / (sigma * sigma)
        return cur
    # polynomial factor in exact rationals so cancellations at large L cost nothing
    s2, lq = Fraction(sigma) ** 2, Fraction(L)
    prev, cur = Fraction(0), Fraction(1)
    for k in range(1, j + 1):
        prev, cur = cur, (lq * cur - (k - 1) * prev) / s2
    return float(cur) * r0


def I(j: int, sigma: float, L: float) -> complex:
    _check(j, sigma)
    r = _real_factor(j, sigma, L)
    sign = 1.0 if j % 4 < 2 else -1.0
    return complex(sign * r, 0.0) if j % 2 == 0 else complex(0.0, sign * r)


def absolute_moment(j: int, sigma: float) -> float:
    """int |u|^j exp(-sigma^2 u^2 / 2) du, the natural scale of I_j"""
    return 2 ** ((j + 1) / 2) * math.gamma((j + 1) / 2) / sigma ** (j + 1)


def quad_oracle(j: int, sigma: float, L: float) -> complex:
    _check(j, sigma)
    radius = QUAD_RADIUS / sigma
    scale = absolute_moment(j, sigma)
    tolerance = max(QUAD_EPSABS, QUAD_EPSREL * scale)

    def envelope(u):
        return u ** j * math.exp(-0.5 * sigma * sigma * u * u)

    parts = []
    for weight in ('cos', 'sin'):
        if L == 0 and weight == 'sin':
            parts.append(0.0)
            continue
        if L == 0:
            value, abserr = integrate.quad(envelope, -radius, radius, epsabs=tolerance / 10,
                                           epsrel=1e-13, limit=QUAD_LIMIT)
        else:
            value, abserr = integrate.quad(envelope, -radius, radius, weight=weight, wvar=L,
                                           epsabs=tolerance / 10, epsrel=1e-13, limit=QUAD_LIMIT)
        if abserr > tolerance:
            raise NonConvergence(f"quadrature of I_{j}({sigma}, {L}) ({weight} part) "
                                 f"stopped at error {abserr:.3g}")
        parts.append(value)
    return complex(parts[0], parts[1])


class Cov2(BaseModel):
    """Symmetric positive-definite 2x2 matrix Sigma = A diag(sigma1, sigma2) A^T"""
    s11: float
    s12: float
    s22: float

    @model_validator(mode='after')
    def check_positive(self):
        if self.s11 <= 0 or self.s11 * self.s22 - self.s12 * self.s12 <= 0:
            raise ValueError('Sigma must be positive definite')
        return self

    @classmethod
    def from_matrix(cls, m) -> "Cov2":
        m = np.asarray(m, dtype=np.float64)
        return cls(s11=m[0, 0], s12=(m[0, 1] + m[1, 0]) / 2, s22=m[1, 1])

    @classmethod
    def from_covariance(cls, sigma2) -> "Cov2":
        """Sigma from the covariance Sigma^2 (symmetric square root)"""
        w, vecs = np.linalg.eigh(np.asarray(sigma2, dtype=np.float64))
        if np.any(w <= 0):
            raise DomainError(f"covariance {np.asarray(sigma2).tolist()} is not positive definite")
        return cls.from_matrix(vecs @ np.diag(np.sqrt(w)) @ vecs.T)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])

    @property
    def det(self) -> float:
        return self.s11 * self.s22 - self.s12 * self.s12

    def diagonalize(self) -> Tuple[np.ndarray, float, float]:
        """(A, sigma1, sigma2) with A orthogonal"""
        w, a = np.linalg.eigh(self.matrix)
        return a, float(w[0]), float(w[1])

    def exponent(self, L: Sequence[float]) -> float:
        """(A^T L)_1^2 / sigma1^2 + (A^T L)_2^2 / sigma2^2, which is |Sigma^-1 L|^2"""
        a, s1, s2 = self.diagonalize()
        ell = a.T @ np.asarray(L, dtype=np.float64)
        return float(ell[0] ** 2 / s1 ** 2 + ell[1] ** 2 / s2 ** 2)


def _tensor_terms(j: int, a: np.ndarray):
    """(coefficient per component, power in w1, power in w2) for u_i^j with u = A w"""
    if j == 0:
        return [(np.ones(2), 0, 0)]
    if j == 1:
        return [(a[:, 0], 1, 0), (a[:, 1], 0, 1)]
    # b_{i,0} = A_i1^2, b_{i,1} = 2 A_i1 A_i2, b_{i,2} = A_i2^2
    return [(a[:, 0] ** 2, 2, 0), (2 * a[:, 0] * a[:, 1], 1, 1), (a[:, 1] ** 2, 0, 2)]


def vecI(j: int, cov: Cov2, L: Sequence[float]) -> np.ndarray:
    """Closed form through the rotation u = A w, which splits the integrand into 1-D moments"""
    if j < 0 or j > MAX_VECTOR_J:
        raise DomainError(f"vector integrals are available for j <= {MAX_VECTOR_J}, got {j}")
    a, s1, s2 = cov.diagonalize()
    ell = a.T @ np.asarray(L, dtype=np.float64)
    out = np.zeros(2, dtype=np.complex128)
    for coeff, p1, p2 in _tensor_terms(j, a):
        out += coeff * I(p1, s1, ell[0]) * I(p2, s2, ell[1])
    return out


def vector_scale(j: int, cov: Cov2) -> float:
    """Scale of vecI_j: the product moment int |x|^j exp(-s^2 (x^2 + y^2) / 2) with s the smallest eigenvalue"""
    _, s1, s2 = cov.diagonalize()
    smin = min(s1, s2)
    return absolute_moment(j, smin) * absolute_moment(0, smin)


def quad_oracle_2d(j: int, cov: Cov2, L: Sequence[float]) -> np.ndarray:
    """Adaptive cubature of vecI_j straight over R^2, with no change of variables.

    u2 runs over QUAD_RADIUS marginal deviations and u1 over QUAD_RADIUS
    conditional deviations around its conditional mean. Only the parity-surviving
    part is integrated: cos for even j, sin for odd j.
    """
    if j < 0 or j > MAX_VECTOR_J:
        raise DomainError(f"vector integrals are available for j <= {MAX_VECTOR_J}, got {j}")
    s = cov.matrix @ cov.matrix
    s11, s12, s22 = float(s[0, 0]), float(s[0, 1]), float(s[1, 1])
    l1, l2 = (float(x) for x in L)
    outer = QUAD_RADIUS * math.sqrt(s11 / (s11 * s22 - s12 * s12))
    half = QUAD_RADIUS / math.sqrt(s11)
    scale = vector_scale(j, cov)
    tolerance = max(QUAD_EPSABS, QUAD_2D_EPSREL * scale)
    opts = {'epsabs': tolerance / 100, 'epsrel': 1e-12, 'limit': QUAD_LIMIT}
    phase = math.cos if j % 2 == 0 else math.sin

    def inner(u2):
        centre = -s12 * u2 / s11
        return centre - half, centre + half

    out = np.zeros(2, dtype=np.complex128)
    for i in range(1 if j == 0 else 2):
        def integrand(u1, u2, i=i):
            q = s11 * u1 * u1 + 2 * s12 * u1 * u2 + s22 * u2 * u2
            return (u1, u2)[i] ** j * math.exp(-0.5 * q) * phase(l1 * u1 + l2 * u2)

        value, abserr = integrate.nquad(integrand, [inner, (-outer, outer)], opts=opts)
        if abserr > tolerance:
            raise NonConvergence(f"cubature of vecI_{j} component {i} stopped at error {abserr:.3g}")
        out[i] = value if j % 2 == 0 else 1j * value
    if j == 0:
        out[1] = out[0]
    return out
