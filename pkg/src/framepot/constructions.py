"""Explicit minimizers.

* :func:`tight_frame` -- unit-norm tight frames, optimal for ``p = 2``;
  built by row-balancing ``sqrt(m/n) [I; 0]`` with plane rotations.
* :func:`hadamard4`, :func:`cosine_curve` -- zero-sum point sets on S^2 with
  orthogonal, equal-norm columns (spherical 2-designs); lifted to CP^1 they
  are optimal for ``p = 4, n = 2``.
* :func:`antipodal_double` -- ``[W; -W]``, whose lift is optimal for
  ``p = 6, n = 2``.
* :func:`complete_simplex` -- the complementary equiangular frame with
  parameters ``(m, m - n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import NORM_TOL, Configuration, FieldTag, S2Point, s2_to_cp1

BALANCE_EPS = 1e-13


@dataclass(frozen=True, eq=False)
class RealS2Config:
    points: np.ndarray  # (m, 3)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError(f"points must have shape (m, 3), got {pts.shape}")
        r = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(r - 1) > NORM_TOL):
            raise ValueError("every point must lie on S^2")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    def __iter__(self):
        for row in self.points:
            yield S2Point.from_array(row)


@dataclass(frozen=True, eq=False)
class BalanceResult:
    matrix: np.ndarray
    rotations: int


def balance_rows(W, return_count: bool = False):
    """Left-multiply ``W`` by plane rotations until all rows have equal norm.

    The target squared norm is ``t = tr(W W*) / m``.  Each step pairs a row
    above ``t`` with a row below it and picks the angle that puts the first
    exactly on ``t``, so at most ``m - 1`` rotations are needed.  The column
    Gram ``W* W`` is unchanged.
    """
    A = np.array(W, dtype=np.complex128 if np.iscomplexobj(W) else np.float64)
    if A.ndim != 2:
        raise ValueError("W must be a matrix")
    m = A.shape[0]
    sq = np.sum(np.abs(A) ** 2, axis=1)
    t = sq.sum() / m
    if t == 0:
        raise ValueError("W must be nonzero")
    count = 0
    while True:
        sq = np.sum(np.abs(A) ** 2, axis=1)
        over = np.flatnonzero(sq > t + BALANCE_EPS * max(t, 1.0))
        under = np.flatnonzero(sq < t - BALANCE_EPS * max(t, 1.0))
        if over.size == 0 or under.size == 0:
            break
        i, j = int(over[0]), int(under[0])
        a, b = sq[i], sq[j]
        c = float(np.real(np.vdot(A[j], A[i])))
        # after the rotation, |row_i|^2 = (a+b)/2 + (a-b)/2 cos 2phi + c sin 2phi
        half = 0.5 * (a - b)
        amp = math.hypot(half, c)
        ratio = (t - 0.5 * (a + b)) / amp
        theta = math.atan2(c, half)
        two_phi = theta + math.acos(max(-1.0, min(1.0, ratio)))
        phi = 0.5 * two_phi
        cs, sn = math.cos(phi), math.sin(phi)
        ri, rj = A[i].copy(), A[j].copy()
        A[i] = cs * ri + sn * rj
        A[j] = -sn * ri + cs * rj
        count += 1
        if count > m:
            raise RuntimeError("row balancing failed to terminate")
    if return_count:
        return BalanceResult(A, count)
    return A


def tight_frame(m: int, n: int, field="C") -> Configuration:
    field = FieldTag.parse(field)
    if n < 1 or m < n:
        raise ValueError("tight_frame needs m >= n >= 1")
    V0 = np.zeros((m, n), dtype=field.dtype)
    V0[:n, :n] = math.sqrt(m / n) * np.eye(n)
    V = balance_rows(V0)
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    return Configuration(field, V)


def hadamard4() -> RealS2Config:
    """Regular tetrahedron: the last three columns of the Sylvester Hadamard matrix."""
    H2 = np.array([[1.0, 1.0], [1.0, -1.0]])
    H4 = np.kron(H2, H2)
    return RealS2Config(H4[:, 1:] / math.sqrt(3.0))


def double_angle_curve(m: int) -> RealS2Config:
    """``v_k = (cos 2a, sin 2a cos a, sin 2a sin a)`` with ``a = 2 pi k / m``.

    Zero sum and mutually orthogonal columns for ``m >= 6``, but the column
    norms are ``m/2, m/4, m/4``, so this set is not tight and its lift does
    not reach ``m(m-3)/6``.  Use :func:`cosine_curve` for the minimizer.
    """
    if m < 6:
        raise ValueError("double_angle_curve needs m >= 6")
    a = 2.0 * np.pi * np.arange(m) / m
    pts = np.stack([np.cos(2 * a), np.sin(2 * a) * np.cos(a), np.sin(2 * a) * np.sin(a)], axis=1)
    return RealS2Config(pts)


def antiprism(m: int) -> RealS2Config:
    """``m`` (even) points alternating between heights ``+-1/sqrt(3)``."""
    if m < 4 or m % 2:
        raise ValueError("antiprism needs an even m >= 4")
    a = 2.0 * np.pi * np.arange(m) / m
    r = math.sqrt(2.0 / 3.0)
    h = np.where(np.arange(m) % 2 == 0, 1.0, -1.0) / math.sqrt(3.0)
    return RealS2Config(np.stack([r * np.cos(a), r * np.sin(a), h], axis=1))


SEAM_A = 0.5 * (1.0 + 1.0 / math.sqrt(3.0))
SEAM_B = 1.0 - SEAM_A


def cosine_curve(m: int) -> RealS2Config:
    """Zero-sum tight sample of a trigonometric curve on S^2, ``m >= 6``.

    For ``m >= 7`` the points are ``a = 2 pi k / m`` on the seam curve
    ``(A cos a + B cos 3a, A sin a - B sin 3a, 2 sqrt(AB) sin 2a)`` with
    ``A + B = 1`` and ``AB = 1/6``: unit length for every ``a``, and all the
    sums involved have frequencies ``1 <= |j| <= 6`` with ``m`` not dividing
    ``j``, so they vanish.  ``m = 6`` hits frequency 6; there the octahedron
    (:func:`antiprism`) is used.  The result has ``sum v_k = 0`` and
    ``V^T V = (m/3) I``.
    """
    if m < 6:
        raise ValueError("cosine_curve needs m >= 6")
    if m == 6:
        return antiprism(6)
    a = 2.0 * np.pi * np.arange(m) / m
    pts = np.stack(
        [
            SEAM_A * np.cos(a) + SEAM_B * np.cos(3 * a),
            SEAM_A * np.sin(a) - SEAM_B * np.sin(3 * a),
            2.0 * math.sqrt(SEAM_A * SEAM_B) * np.sin(2 * a),
        ],
        axis=1,
    )
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    return RealS2Config(pts)


def _check_column_orthogonal(W, tol=1e-9):
    W = np.asarray(W, dtype=np.float64)
    r = W.shape[0]
    if W.ndim != 2 or W.shape[1] != 3:
        raise ValueError("W must be an r x 3 matrix")
    if r < 3:
        raise ValueError("antipodal_double needs r >= 3")
    if np.any(np.abs(np.linalg.norm(W, axis=1) - 1) > tol):
        raise ValueError("rows of W must be unit vectors")
    if np.max(np.abs(W.T @ W - (r / 3) * np.eye(3))) > tol:
        raise ValueError("columns of W must be orthogonal with squared norm r/3")
    return W


def antipodal_double(W) -> RealS2Config:
    if isinstance(W, RealS2Config):
        W = W.points
    elif isinstance(W, Configuration):
        if W.field is not FieldTag.REAL:
            raise ValueError("antipodal_double needs a real matrix")
        W = W.vectors
    W = _check_column_orthogonal(W)
    return RealS2Config(np.vstack([W, -W]))


def doubling_input(r: int) -> np.ndarray:
    """A row-normalized ``r x 3`` matrix with orthogonal columns.

    ``cosine_curve`` for ``r >= 6``, otherwise a real tight frame.
    """
    if r >= 6:
        return np.array(cosine_curve(r).points)
    return np.array(tight_frame(r, 3, FieldTag.REAL).vectors)


def lift_to_cp1(config: RealS2Config) -> Configuration:
    rows = [s2_to_cp1(s) for s in config]
    return Configuration(FieldTag.COMPLEX, np.array(rows))


def _is_equiangular_tight(V: np.ndarray, tol: float) -> bool:
    m, n = V.shape
    moduli = np.abs(V @ V.conj().T)[np.triu_indices(m, 1)]
    frame = V.conj().T @ V
    return bool(moduli.max() - moduli.min() <= tol and np.max(np.abs(frame - (m / n) * np.eye(n))) <= tol)


def complete_simplex(config: Configuration, tol: float = 1e-8) -> Configuration:
    """The complementary simplex with parameters ``(m, m - n)``.

    ``sqrt(n/m) V`` has orthonormal columns; completing them to a unitary
    ``[sqrt(n/m) V, X]`` and rescaling the rows of ``X`` gives unit vectors
    in ``F^(m-n)`` with Gram ``(m/(m-n)) (I - (n/m) V V*)``.
    """
    V = np.asarray(config.vectors)
    m, n = V.shape
    if n >= m:
        raise ValueError("complement needs m > n")
    if not _is_equiangular_tight(V, tol):
        raise ValueError("input is not an equiangular tight frame within tolerance")
    Q = math.sqrt(n / m) * V
    # eigenvalues of the complementary projector are n zeros then m - n ones
    _, vecs = np.linalg.eigh(np.eye(m) - Q @ Q.conj().T)
    X = vecs[:, n:]
    out = math.sqrt(m / (m - n)) * X
    out = out / np.linalg.norm(out, axis=1, keepdims=True)
    return Configuration(config.field, out)

