"""Vector and Gram algebra over R^n and C^n.

Configurations are stored as ``(m, n)`` numpy arrays with one unit vector per
row.  The inner product is linear in the first argument and conjugate-linear
in the second, ``<u, v> = sum_i u_i * conj(v_i)``.

The quaternionic map between CP^1 and S^2 identifies ``(a + bi, c + di)``
with ``q = a + bi + cj + dk`` and sends it to the imaginary part of
``q^-1 i q``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

NORM_TOL = 1e-12


class FieldTag(enum.Enum):
    REAL = "R"
    COMPLEX = "C"

    @classmethod
    def parse(cls, value) -> "FieldTag":
        if isinstance(value, cls):
            return value
        text = str(value).strip().upper()
        aliases = {"R": cls.REAL, "REAL": cls.REAL, "C": cls.COMPLEX, "COMPLEX": cls.COMPLEX}
        try:
            return aliases[text]
        except KeyError:
            raise ValueError(f"unknown field {value!r}; expected R or C") from None

    @property
    def dtype(self):
        return np.float64 if self is FieldTag.REAL else np.complex128


@dataclass(frozen=True, eq=False)
class Configuration:
    """``m`` unit vectors in ``F^n`` stored as the rows of an array.

    The array is copied on construction and marked read-only.  Every row must
    have norm 1 within ``NORM_TOL``.
    """

    field: FieldTag
    vectors: np.ndarray

    def __post_init__(self):
        tag = FieldTag.parse(self.field)
        arr = np.asarray(self.vectors)
        if tag is FieldTag.REAL:
            if np.iscomplexobj(arr):
                if np.any(arr.imag != 0):
                    raise ValueError("real configuration has complex entries")
                arr = arr.real
            arr = np.array(arr, dtype=np.float64)
        else:
            arr = np.array(arr, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"vectors must be a non-empty (m, n) array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("vectors contain non-finite entries")
        norms = np.sqrt(np.sum(np.abs(arr) ** 2, axis=1))
        bad = np.abs(norms - 1.0) > NORM_TOL
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(f"row {i} has norm {norms[i]!r}, expected 1")
        arr.setflags(write=False)
        object.__setattr__(self, "field", tag)
        object.__setattr__(self, "vectors", arr)

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def from_rows(cls, rows, field=None, normalize_rows: bool = False) -> "Configuration":
        arr = np.asarray(rows)
        if field is None:
            field = FieldTag.COMPLEX if np.iscomplexobj(arr) else FieldTag.REAL
        field = FieldTag.parse(field)
        arr = np.array(arr, dtype=field.dtype)
        if normalize_rows:
            arr = np.stack([normalize(r) for r in arr])
        return cls(field, arr)

    def replace_row(self, k: int, w) -> "Configuration":
        arr = np.array(self.vectors)
        arr[k] = w
        return Configuration(self.field, arr)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.field is other.field
            and self.vectors.shape == other.vectors.shape
            and bool(np.array_equal(self.vectors, other.vectors))
        )

    def __repr__(self):
        return f"Configuration(field={self.field.value}, m={self.m}, n={self.n})"

    # serialization

    def to_dict(self) -> dict:
        if self.field is FieldTag.REAL:
            rows = [[float(x) for x in row] for row in self.vectors]
        else:
            rows = [[[float(z.real), float(z.imag)] for z in row] for row in self.vectors]
        return {"field": self.field.value, "m": self.m, "n": self.n, "vectors": rows}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Configuration":
        tag = FieldTag.parse(data["field"])
        rows = data["vectors"]
        if tag is FieldTag.REAL:
            arr = np.array(rows, dtype=np.float64)
        else:
            pairs = np.array(rows, dtype=np.float64)
            if pairs.ndim != 3 or pairs.shape[2] != 2:
                raise ValueError("complex rows must be lists of [re, im] pairs")
            arr = pairs[..., 0] + 1j * pairs[..., 1]
        cfg = cls(tag, arr)
        if ("m" in data and data["m"] != cfg.m) or ("n" in data and data["n"] != cfg.n):
            raise ValueError("declared m/n do not match the vectors")
        return cfg

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "Configuration":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class S2Point:
    """A point ``y i + z j + w k`` on the unit sphere of imaginary quaternions."""

    y: float
    z: float
    w: float

    def __post_init__(self):
        r2 = self.y**2 + self.z**2 + self.w**2
        if abs(r2 - 1.0) > NORM_TOL:
            raise ValueError(f"point ({self.y}, {self.z}, {self.w}) is not on S^2")

    @classmethod
    def from_array(cls, xyz, renormalize: bool = False) -> "S2Point":
        v = np.asarray(xyz, dtype=np.float64)
        if renormalize:
            v = v / np.linalg.norm(v)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.y, self.z, self.w])


@dataclass(frozen=True)
class GramSummary:
    entries: np.ndarray
    offdiag_moduli: np.ndarray
    coherence_min: float
    coherence_max: float
    potential_by_p: dict = field(default_factory=dict)


def inner_product(u, v):
    """Return ``sum_i u_i * conj(v_i)``."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return np.sum(u * np.conj(v))


def normalize(v) -> np.ndarray:
    v = np.asarray(v)
    nrm = np.sqrt(np.sum(np.abs(v) ** 2))
    if not nrm > 1e-300:
        raise ValueError("cannot normalize a zero vector")
    return v / nrm


def _sequential_sum(values: np.ndarray) -> float:
    # cumsum adds strictly left to right, unlike np.sum's pairwise reduction
    if values.size == 0:
        return 0.0
    return float(np.cumsum(values)[-1])


def _moduli_upper(G: np.ndarray) -> np.ndarray:
    iu, ju = np.triu_indices(G.shape[0], k=1)
    return np.abs(G[iu, ju])


def _power(moduli: np.ndarray, p: float) -> np.ndarray:
    if p == 2:
        return moduli * moduli
    return moduli**p


def gram_matrix(config: Configuration) -> np.ndarray:
    V = config.vectors
    return V @ V.conj().T


def gram(config: Configuration, exponents: Iterable[float] = (2, 4, 6)) -> GramSummary:
    G = gram_matrix(config)
    moduli = _moduli_upper(G)
    if moduli.size:
        cmin, cmax = float(moduli.min()), float(moduli.max())
    else:
        cmin = cmax = 0.0
    pots = {p: _sequential_sum(_power(moduli, p)) for p in exponents}
    G.setflags(write=False)
    return GramSummary(G, moduli, cmin, cmax, pots)


def potential(config: Configuration, p: float) -> float:
    """Sum of ``|<v_i, v_j>|**p`` over pairs ``i < j``, in lexicographic order."""
    if not p > 0:
        raise ValueError("exponent p must be positive")
    return _sequential_sum(_power(_moduli_upper(gram_matrix(config)), p))


def potential_delta(config: Configuration, p: float, k: int, w) -> float:
    """Change in potential when row ``k`` (0-based) is replaced by ``w``.

    Only the ``m - 1`` pairs involving row ``k`` are evaluated.
    """
    m = config.m
    if not 0 <= k < m:
        raise IndexError(f"row index {k} out of range for m={m}")
    w = np.asarray(w)
    V = config.vectors
    if w.shape != (config.n,):
        raise ValueError(f"replacement has shape {w.shape}, expected ({config.n},)")
    others = np.delete(np.arange(m), k)
    if others.size == 0:
        return 0.0
    new = np.abs(V[others].conj() @ w)
    old = np.abs(V[others].conj() @ V[k])
    return _sequential_sum(_power(new, p) - _power(old, p))


# quaternions as arrays (a, b, c, d) = a + bi + cj + dk


def quat_mul(p, q) -> np.ndarray:
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return np.array(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ]
    )


def quat_conj(q) -> np.ndarray:
    a, b, c, d = q
    return np.array([a, -b, -c, -d])


def c2_to_quat(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    return np.array([u[0].real, u[0].imag, u[1].real, u[1].imag])


def quat_to_c2(q) -> np.ndarray:
    return np.array([q[0] + 1j * q[1], q[2] + 1j * q[3]])


_QUAT_I = np.array([0.0, 1.0, 0.0, 0.0])


def cp1_to_s2(u) -> S2Point:
    """Map a unit vector of C^2 to S^2 via ``q -> q^-1 i q``.

    Constant on phase orbits ``u -> exp(i t) u`` and satisfies
    ``|<u, v>|^2 = (1 + <S u, S v>) / 2``.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2,):
        raise ValueError("cp1_to_s2 expects a vector of length 2")
    if abs(np.linalg.norm(u) - 1.0) > NORM_TOL:
        raise ValueError("cp1_to_s2 expects a unit vector")
    q = c2_to_quat(u)
    s = quat_mul(quat_mul(quat_conj(q), _QUAT_I), q)
    return S2Point.from_array(s[1:], renormalize=True)


def s2_to_cp1(s) -> np.ndarray:
    """A unit vector ``u`` with ``cp1_to_s2(u) == s``.

    On the hemisphere ``y >= 0`` this is the half-turn about the bisector of
    ``i`` and ``s``.  For ``y < 0`` that quaternion is rephased so the second
    coordinate is real and positive, which stays accurate up to the antipode
    ``-i -> (0, 1)``.  The phase is a fixed, non-canonical choice.
    """
    if not isinstance(s, S2Point):
        s = S2Point.from_array(s)
    y, z, w = s.y, s.z, s.w
    if y >= 0:
        q = np.array([0.0, 1.0 + y, z, w])
        return quat_to_c2(q / np.linalg.norm(q))
    u = np.array([(w + 1j * z) / np.sqrt(2.0 * (1.0 - y)), np.sqrt((1.0 - y) / 2.0) + 0j])
    return u / np.linalg.norm(u)
