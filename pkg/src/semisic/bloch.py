"""Qubit algebra in Bloch form.

States are ``(1 + m.sigma) / 2`` with ``|m| <= 1``; effects are
``weight * (1 + n.sigma)`` with ``weight >= 0`` and ``|n| <= 1``. Everything
here works on real 3-vectors; 2x2 matrices appear only in the debug helpers
``state_matrix`` and ``effect_matrix``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateInputError, InvalidEffectError, InvalidStateError, WrongArityError

ALGEBRAIC_TOL = 1e-12
OPTIMIZATION_TOL = 1e-8

_PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def as_vector(v, *, unit: bool = False, tol: float = ALGEBRAIC_TOL) -> np.ndarray:
    """Return ``v`` as a finite float array of shape (3,).

    With ``unit=True`` the norm must equal one within ``tol``.
    """
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise WrongArityError(f"expected a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Bloch vector has non-finite entries")
    if unit and abs(np.linalg.norm(arr) - 1.0) > tol:
        raise ValueError(f"expected a unit vector, got norm {np.linalg.norm(arr)!r}")
    return arr


def as_vectors(vs, count: int | None = None) -> np.ndarray:
    arr = np.asarray(vs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise WrongArityError(f"expected an (n, 3) array of Bloch vectors, got shape {arr.shape}")
    if count is not None and arr.shape[0] != count:
        raise WrongArityError(f"expected {count} Bloch vectors, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Bloch vectors have non-finite entries")
    return arr


@dataclass(frozen=True)
class QubitState:
    """Density operator ``(1 + bloch.sigma) / 2``."""

    bloch: np.ndarray

    def __post_init__(self):
        m = as_vector(self.bloch)
        if np.linalg.norm(m) > 1.0 + ALGEBRAIC_TOL:
            raise InvalidStateError(f"|m| = {np.linalg.norm(m)!r} exceeds 1")
        m.setflags(write=False)
        object.__setattr__(self, "bloch", m)

    @property
    def is_pure(self) -> bool:
        return abs(np.linalg.norm(self.bloch) - 1.0) <= ALGEBRAIC_TOL

    def matrix(self) -> np.ndarray:
        return state_matrix(self.bloch)


def _state_vector(state) -> np.ndarray:
    if isinstance(state, QubitState):
        return state.bloch
    m = as_vector(state)
    if np.linalg.norm(m) > 1.0 + ALGEBRAIC_TOL:
        raise InvalidStateError(f"|m| = {np.linalg.norm(m)!r} exceeds 1")
    return m


def born_probability(state, weight: float, direction) -> float:
    """Probability of the effect ``weight * (1 + n.sigma)`` on state ``m``.

    Equals ``weight * (1 + m.n)``, which lies in ``[0, 2 * weight]``.
    """
    m = _state_vector(state)
    n = as_vector(direction)
    if weight < 0:
        raise InvalidEffectError(f"negative effect weight {weight!r}")
    if np.linalg.norm(n) > 1.0 + ALGEBRAIC_TOL:
        raise InvalidEffectError(f"|n| = {np.linalg.norm(n)!r} exceeds 1")
    return float(weight * (1.0 + m @ n))


@dataclass(frozen=True)
class TwoOutcomeMeasurement:
    """Two-outcome qubit POVM ``M_b = (1 + (-1)^b mu) (1 + (-1)^b v_b.sigma) / 2``.

    Positivity and completeness require ``(1 + mu) v0 == (1 - mu) v1``. With
    ``mu == 0`` both Bloch vectors coincide and the measurement is projective.
    """

    mu: float
    v0: np.ndarray
    v1: np.ndarray

    def __post_init__(self):
        mu = float(self.mu)
        if not -1.0 <= mu <= 1.0:
            raise InvalidEffectError(f"mu = {mu!r} outside [-1, 1]")
        v0, v1 = as_vector(self.v0), as_vector(self.v1)
        for v in (v0, v1):
            if np.linalg.norm(v) > 1.0 + ALGEBRAIC_TOL:
                raise InvalidEffectError(f"|v| = {np.linalg.norm(v)!r} exceeds 1")
        if not np.allclose((1 + mu) * v0, (1 - mu) * v1, rtol=0, atol=ALGEBRAIC_TOL):
            raise InvalidEffectError("(1 + mu) v0 != (1 - mu) v1")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "v0", v0)
        object.__setattr__(self, "v1", v1)

    @classmethod
    def from_direction(cls, direction, mu: float = 0.0) -> "TwoOutcomeMeasurement":
        """Build from the direction of the correlator ``M_0 - M_1 = mu + (1 - |mu|) v.sigma``.

        ``direction`` is ``v0`` for ``mu <= 0`` and ``v1`` for ``mu >= 0``; the
        other vector is fixed by the consistency constraint.
        """
        v = as_vector(direction)
        if mu >= 0:
            v0 = v * (1 - mu) / (1 + mu)
            return cls(mu, v0, v)
        return cls(mu, v, v * (1 + mu) / (1 - mu))

    @property
    def direction(self) -> np.ndarray:
        return self.v1 if self.mu >= 0 else self.v0

    def effects(self) -> list[tuple[float, np.ndarray]]:
        """(weight, direction) of each effect in ``weight * (1 + n.sigma)`` form."""
        return [((1 + self.mu) / 2, self.v0), ((1 - self.mu) / 2, -self.v1)]

    def probabilities(self, state) -> tuple[float, float]:
        p0, p1 = (born_probability(state, w, n) for w, n in self.effects())
        return p0, p1

    def correlator(self, state) -> float:
        p0, p1 = self.probabilities(state)
        return p0 - p1


def gram(vectors: Sequence) -> np.ndarray:
    """Matrix of pairwise dot products of four Bloch vectors."""
    v = as_vectors(vectors, count=4)
    return v @ v.T


class Alignment(NamedTuple):
    rotation: np.ndarray
    sign: int
    residual: float

    @property
    def matrix(self) -> np.ndarray:
        """The full orthogonal map ``sign * rotation``."""
        return self.sign * self.rotation

    def apply(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.matrix.T


def _procrustes_rotation(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    # Kabsch: rotation R (det +1) minimizing sum |R a_i - b_i|^2
    h = source.T @ target
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0:
        d = 1.0
    return vt.T @ np.diag([1.0, 1.0, d]) @ u.T


def align_isometry(source, target) -> Alignment:
    """Best ``s * R`` (R a proper rotation, s = +1 or -1) carrying source onto target.

    Both global signs are tried; the residual is the minimized sum of squared
    distances and equal residuals (within 1e-12) resolve to ``s = +1``.
    """
    a = as_vectors(source)
    b = as_vectors(target, count=a.shape[0])
    if np.allclose(a, 0.0, rtol=0, atol=0):
        raise DegenerateInputError("all source vectors are zero")
    best = None
    for s in (1, -1):
        r = _procrustes_rotation(s * a, b)
        res = float(np.sum((s * a @ r.T - b) ** 2))
        if best is None or res < best.residual - ALGEBRAIC_TOL:
            best = Alignment(r, s, res)
    return best


def random_unit_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` directions uniform on the sphere (normalized standard normals)."""
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def state_matrix(m) -> np.ndarray:
    """Debug helper: the 2x2 density matrix of Bloch vector ``m``."""
    m = as_vector(m)
    return 0.5 * (np.eye(2) + np.tensordot(m, _PAULI, axes=1))


def effect_matrix(weight: float, n) -> np.ndarray:
    """Debug helper: the 2x2 operator ``weight * (1 + n.sigma)``."""
    n = as_vector(n)
    return weight * (np.eye(2) + np.tensordot(n, _PAULI, axes=1))
