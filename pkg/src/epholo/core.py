"""Closed-form eigensolvers and discriminants for 2x2 and 3x3 complex matrices.

The 3x3 path is Cardano's formula on the characteristic cubic

    lambda^3 + a lambda^2 + b lambda + c = 0,

shifted by ``beta = a/3`` to the depressed form ``t^3 + 3 p t - 2 q = 0`` with

    p = b/3 - a^2/9,    q = -c/2 + a b/6 - a^3/27.

The roots are ``alpha_+ + alpha_- - beta`` and the two rotations by the
primitive cube root of unity ``omega``, where ``alpha_+^3, alpha_-^3`` are
``q +- sqrt(q^2 + p^3)`` and the pair is tied by ``alpha_+ alpha_- = -p``.
``q^2 + p^3`` vanishes exactly when two roots coincide; it equals
``-1/108`` of the classical discriminant ``prod (l_i - l_j)^2``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .errors import NearDefective

OMEGA = complex(-0.5, math.sqrt(3.0) / 2.0)
OMEGA_BAR = OMEGA.conjugate()

# eigvec_pair thresholds, relative to scale()
EIGEN_RESIDUAL_TOL = 1e-8
SIMPLE_GAP_TOL = 1e-6
SELF_OVERLAP_TOL = 1e-6


class CubicCoefficients(NamedTuple):
    """Coefficients of the monic cubic ``l^3 + a l^2 + b l + c``."""

    a: complex
    b: complex
    c: complex


@dataclass(frozen=True)
class EigenSet:
    """Eigenvalues at one parameter point, optionally with eigenvectors.

    ``right_vectors[k]`` and ``left_vectors[k]`` belong to ``values[k]``.
    Left vectors satisfy ``l^H H = lambda l^H`` and ``l^H r = 1``.
    ``defective`` is set instead of vectors when they were requested at
    (or numerically at) an exceptional point.
    """

    values: tuple
    right_vectors: tuple | None = None
    left_vectors: tuple | None = None
    defective: bool = False

    @property
    def n(self) -> int:
        return len(self.values)

    def min_gap(self) -> float:
        return min_gap(self.values)

    def __eq__(self, other):
        if not isinstance(other, EigenSet):
            return NotImplemented
        if self.values != other.values or self.defective != other.defective:
            return False
        return _vec_eq(self.right_vectors, other.right_vectors) and _vec_eq(
            self.left_vectors, other.left_vectors
        )

    __hash__ = None


def _vec_eq(a, b):
    if a is None or b is None:
        return a is None and b is None
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def as_matrix(m) -> np.ndarray:
    """Validate and convert ``m`` to an n x n complex array with n in {2, 3}."""
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] not in (2, 3):
        raise ValueError(f"expected a 2x2 or 3x3 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def scale(m) -> float:
    """Tolerance scale ``max(1, max |m_ij|)``."""
    return max(1.0, float(np.max(np.abs(m))))


def min_gap(values) -> float:
    return min(abs(x - y) for x, y in combinations(values, 2))


def det3(m) -> complex:
    return complex(
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


def char_poly(m) -> CubicCoefficients:
    """Characteristic cubic of a 3x3 matrix: ``a = -tr``, ``b = sum of
    principal 2x2 minors``, ``c = -det``."""
    m = as_matrix(m)
    if m.shape[0] != 3:
        raise ValueError("char_poly expects a 3x3 matrix")
    a = -complex(m[0, 0] + m[1, 1] + m[2, 2])
    b = complex(
        m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
        + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
    )
    c = -det3(m)
    return CubicCoefficients(a, b, c)


def depressed(coeffs: CubicCoefficients) -> tuple[complex, complex, complex]:
    """Return ``(p, q, beta)`` of the shifted cubic."""
    a, b, c = coeffs
    beta = a / 3.0
    p = b / 3.0 - a * a / 9.0
    q = -c / 2.0 + a * b / 6.0 - a * a * a / 27.0
    return p, q, beta


def _cbrt(z: complex) -> complex:
    if z == 0:
        return 0j
    r = abs(z) ** (1.0 / 3.0)
    return cmath.rect(r, cmath.phase(z) / 3.0)


def cardano_terms(coeffs: CubicCoefficients) -> tuple[complex, complex, complex]:
    """Return ``(alpha_plus, alpha_minus, beta)`` with ``alpha_plus * alpha_minus = -p``.

    Only the larger of ``q +- sqrt(q^2 + p^3)`` goes through a cube root;
    the partner comes from the product identity, which avoids cancellation
    when the two radicands differ greatly in size.
    """
    p, q, beta = depressed(coeffs)
    s = cmath.sqrt(q * q + p * p * p)
    w_plus, w_minus = q + s, q - s
    if abs(w_plus) >= abs(w_minus):
        if w_plus == 0:
            # p = q = 0: triple root
            return 0j, 0j, beta
        ap = _cbrt(w_plus)
        am = -p / ap  # p == 0 gives am == 0, the explicit degenerate branch
    else:
        am = _cbrt(w_minus)
        ap = -p / am
    return ap, am, beta


def cubic_roots(coeffs: CubicCoefficients) -> tuple[complex, complex, complex]:
    ap, am, beta = cardano_terms(coeffs)
    return (
        ap + am - beta,
        OMEGA * ap + OMEGA_BAR * am - beta,
        OMEGA_BAR * ap + OMEGA * am - beta,
    )


def discriminant2(m) -> complex:
    """``Delta = (E1 - E2)^2 / 4 + V W``; zero exactly at a 2x2 EP."""
    m = as_matrix(m)
    if m.shape[0] != 2:
        raise ValueError("discriminant2 expects a 2x2 matrix")
    d = (m[0, 0] - m[1, 1]) / 2.0
    return complex(d * d + m[0, 1] * m[1, 0])


def discriminant3(m) -> complex:
    """``D = q^2 + p^3`` of the characteristic cubic."""
    p, q, _ = depressed(char_poly(m))
    return q * q + p * p * p


def discriminant(m) -> complex:
    m = as_matrix(m)
    return discriminant2(m) if m.shape[0] == 2 else discriminant3(m)


def eigvals(m) -> tuple:
    m = as_matrix(m)
    if m.shape[0] == 2:
        e0 = (m[0, 0] + m[1, 1]) / 2.0
        root = cmath.sqrt(discriminant2(m))
        return (complex(e0 + root), complex(e0 - root))
    return cubic_roots(char_poly(m))


def _with_vectors(m, values) -> EigenSet:
    try:
        pairs = [eigvec_pair(m, v, values=values) for v in values]
    except NearDefective:
        return EigenSet(values, defective=True)
    return EigenSet(
        values,
        right_vectors=tuple(r for r, _ in pairs),
        left_vectors=tuple(l for _, l in pairs),
    )


def eigs2(m, vectors: bool = False) -> EigenSet:
    """Eigenvalues ``E0 +- sqrt(Delta)`` of a 2x2 matrix (principal root)."""
    m = as_matrix(m)
    if m.shape[0] != 2:
        raise ValueError("eigs2 expects a 2x2 matrix")
    values = eigvals(m)
    return _with_vectors(m, values) if vectors else EigenSet(values)


def eigs3(m, vectors: bool = False) -> EigenSet:
    """Cardano eigenvalues of a 3x3 matrix, in the order
    ``(a+ + a- - beta, w a+ + w' a- - beta, w' a+ + w a- - beta)``."""
    m = as_matrix(m)
    if m.shape[0] != 3:
        raise ValueError("eigs3 expects a 3x3 matrix")
    values = eigvals(m)
    return _with_vectors(m, values) if vectors else EigenSet(values)


def eigs(m, vectors: bool = False) -> EigenSet:
    m = as_matrix(m)
    return eigs2(m, vectors) if m.shape[0] == 2 else eigs3(m, vectors)


def adjugate(m) -> np.ndarray:
    n = m.shape[0]
    if n == 2:
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex)
    adj = np.empty((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != j]
            c = [k for k in range(3) if k != i]
            minor = m[r[0], c[0]] * m[r[1], c[1]] - m[r[0], c[1]] * m[r[1], c[0]]
            adj[i, j] = minor if (i + j) % 2 == 0 else -minor
    return adj


def eigvec_pair(m, value: complex, values=None) -> tuple[np.ndarray, np.ndarray]:
    """Right and left eigenvectors for a simple eigenvalue ``value``.

    Both come from the rank-one adjugate of ``m - value I``: its columns are
    right eigenvectors, its rows transposed left ones. The right vector has
    unit norm and its largest component real-positive; the left vector is
    scaled so that ``l^H r = 1``.

    ``values`` may pass the full spectrum of ``m`` to skip recomputing it.
    """
    m = as_matrix(m)
    n = m.shape[0]
    sc = scale(m)
    value = complex(value)
    if values is None:
        values = eigvals(m)
    others = sorted(abs(value - v) for v in values)[1:]
    gap = others[0]
    if gap <= SIMPLE_GAP_TOL * sc:
        raise NearDefective(f"eigenvalue gap {gap:.3e} below {SIMPLE_GAP_TOL * sc:.1e}")

    adj = adjugate(m - value * np.eye(n))
    col = int(np.argmax(np.linalg.norm(adj, axis=0)))
    row = int(np.argmax(np.linalg.norm(adj, axis=1)))
    r = adj[:, col].copy()
    y = adj[row, :].copy()
    rnorm = np.linalg.norm(r)
    ynorm = np.linalg.norm(y)
    if rnorm == 0.0 or ynorm == 0.0:
        raise NearDefective("adjugate vanishes: eigenvalue is not simple")
    r /= rnorm
    resid = np.linalg.norm(m @ r - value * r)
    if resid > EIGEN_RESIDUAL_TOL * sc:
        raise ValueError(f"{value!r} is not an eigenvalue (residual {resid:.3e})")

    overlap = complex(y @ r)
    if abs(overlap) / ynorm < SELF_OVERLAP_TOL:
        raise NearDefective(f"left/right overlap {abs(overlap) / ynorm:.3e} (self-orthogonal)")

    k = int(np.argmax(np.abs(r)))
    r *= abs(r[k]) / r[k]
    r[k] = abs(r[k])
    left = np.conj(y / (y @ r))
    return r, left
