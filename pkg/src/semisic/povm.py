"""Qubit POVMs and the one-parameter semi-SIC family.

A POVM element is stored as ``weight * (1 + direction.sigma)``, so ``weight``
is half the trace of the element and the Born probability on a state with
Bloch vector ``m`` is ``weight * (1 + m.direction)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from ._jsonio import dumps
from .bloch import ALGEBRAIC_TOL, as_vectors
from .errors import InvalidPovmError, OutOfRangeError, WrongArityError

B_MIN = 1 / 16
B_MAX = 1 / 12
# keeps E1 and E2 numerically distinct in build_semi_sic
B_MARGIN = 1e-12
COPLANAR_TOL = 1e-9


def check_B(B: float, *, margin: float = 0.0) -> float:
    """Validate ``1/16 + margin < B <= 1/12`` and return ``B`` as float."""
    B = float(B)
    if not (B > B_MIN + margin and B <= B_MAX + 1e-15):
        raise OutOfRangeError(f"B = {B!r} outside the allowed range (1/16, 1/12]")
    return min(B, B_MAX)


class PovmElement(NamedTuple):
    weight: float
    direction: np.ndarray


@dataclass(frozen=True)
class Povm:
    """Qubit POVM ``{w_i (1 + h_i.sigma)}`` with 2 to 4 elements.

    Validation enforces ``w_i > 0``, ``|h_i| <= 1``, ``sum w_i = 1`` and
    ``sum w_i h_i = 0`` within ``tol``.
    """

    weights: np.ndarray
    directions: np.ndarray
    tol: float = ALGEBRAIC_TOL

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        h = as_vectors(self.directions)
        if not 2 <= len(w) <= 4 or h.shape[0] != len(w):
            raise WrongArityError(f"POVM needs 2 to 4 elements with one direction each, got {len(w)} and {h.shape[0]}")
        if np.any(w <= 0):
            raise InvalidPovmError(f"weights must be positive, got {w}")
        norms = np.sqrt(np.einsum("ij,ij->i", h, h))
        if np.any(norms > 1 + self.tol):
            raise InvalidPovmError(f"direction norms {norms} exceed 1")
        if abs(w.sum() - 1) > self.tol:
            raise InvalidPovmError(f"weights sum to {w.sum()!r}, not 1")
        if math.sqrt(float((w @ h) @ (w @ h))) > self.tol:
            raise InvalidPovmError(f"sum of weighted directions is {w @ h}, not 0")
        w.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "directions", h)

    def __len__(self):
        return len(self.weights)

    @property
    def elements(self) -> list[PovmElement]:
        return [PovmElement(float(w), h) for w, h in zip(self.weights, self.directions)]

    @property
    def traces(self) -> np.ndarray:
        return 2 * self.weights

    def is_rank_one(self, tol: float = ALGEBRAIC_TOL) -> np.ndarray:
        h = self.directions
        return np.abs(np.sqrt(np.einsum("ij,ij->i", h, h)) - 1) <= tol

    def transformed(self, orthogonal: np.ndarray) -> "Povm":
        """Apply the same orthogonal map to every direction."""
        return Povm(self.weights, self.directions @ np.asarray(orthogonal).T, self.tol)

    def negated(self) -> "Povm":
        return Povm(self.weights, -self.directions, self.tol)

    def probabilities(self, state) -> np.ndarray:
        m = np.asarray(state, dtype=float)
        return self.weights * (1 + self.directions @ m)

    def to_dict(self) -> dict:
        return {"elements": [{"weight": float(w), "direction": h.tolist()} for w, h in zip(self.weights, self.directions)]}

    @classmethod
    def from_dict(cls, data: dict, tol: float = ALGEBRAIC_TOL) -> "Povm":
        elements = data["elements"]
        return cls([e["weight"] for e in elements], [e["direction"] for e in elements], tol)

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Povm":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SemiSicParams:
    B: float
    a_minus: float
    a_plus: float
    q_minus: float
    q_plus: float
    r_minus: float
    r_plus: float

    @classmethod
    def from_B(cls, B: float) -> "SemiSicParams":
        B = check_B(B, margin=B_MARGIN)
        s = math.sqrt(max(0.0, 1 - 12 * B))
        a_minus, a_plus = (1 - s) / 2, (1 + s) / 2
        q_minus, q_plus = math.sqrt(B) / a_minus, math.sqrt(B) / a_plus
        # q_minus can round to a hair above 1 when B -> 1/16
        r_minus = math.sqrt(max(0.0, (1 - q_minus**2) / 2))
        r_plus = math.sqrt(max(0.0, (1 - q_plus**2) / 2))
        return cls(B, a_minus, a_plus, q_minus, q_plus, r_minus, r_plus)

    def directions(self) -> np.ndarray:
        rm, rp, qm, qp = self.r_minus, self.r_plus, self.q_minus, self.q_plus
        return np.array(
            [
                [rm, rm, qm],
                [-rm, -rm, qm],
                [-rp, rp, -qp],
                [rp, -rp, -qp],
            ]
        )

    def weights(self) -> np.ndarray:
        return np.array([self.a_minus, self.a_minus, self.a_plus, self.a_plus]) / 2

    def as_dict(self) -> dict:
        return {
            "B": self.B,
            "a_minus": self.a_minus,
            "a_plus": self.a_plus,
            "q_minus": self.q_minus,
            "q_plus": self.q_plus,
            "r_minus": self.r_minus,
            "r_plus": self.r_plus,
        }


def build_semi_sic(B: float) -> Povm:
    """The semi-SIC POVM with pairwise overlaps ``Tr(E_i E_j) = B``.

    Elements 1, 2 carry trace ``a_-`` and elements 3, 4 trace ``a_+``; the
    directions form a digonal disphenoid which is the regular tetrahedron at
    ``B = 1/12``.

    Raises
    ------
    OutOfRangeError
        Unless ``1/16 < B <= 1/12``. At ``B = 1/16`` the first two elements
        coincide and the POVM is no longer informationally complete.
    """
    p = SemiSicParams.from_B(B)
    return Povm(p.weights(), p.directions())


def semi_sic_gram(B: float) -> np.ndarray:
    """Closed-form Gram matrix of the semi-SIC directions."""
    B = check_B(B)
    s = math.sqrt(max(0.0, 1 - 12 * B))
    g = np.full((4, 4), -1 / 3)
    np.fill_diagonal(g, 1.0)
    g[0, 1] = g[1, 0] = (1 - 15 * B + s) / (9 * B)
    g[2, 3] = g[3, 2] = (1 - 15 * B - s) / (9 * B)
    return g


def pairwise_trace_products(povm: Povm) -> np.ndarray:
    """``Tr(E_i E_j) = 2 w_i w_j (1 + h_i.h_j)``; the diagonal holds ``Tr(E_i^2)``."""
    w, h = povm.weights, povm.directions
    return 2 * np.outer(w, w) * (1 + h @ h.T)


class ExtremalityCheck(NamedTuple):
    is_extremal: bool
    min_abs_det: float
    # first coplanar triple, or None
    triple: tuple[int, int, int] | None
    # first element that is not rank-one, or None
    non_rank_one: int | None

    def __bool__(self):
        return self.is_extremal


_TRIPLES = list(combinations(range(4), 3))
_TRIPLE_INDEX = np.array(_TRIPLES)


def is_extremal_four_outcome(povm: Povm, coplanar_tol: float = COPLANAR_TOL) -> ExtremalityCheck:
    """Four-outcome extremality: rank-one elements, no three directions coplanar."""
    if len(povm) != 4:
        raise WrongArityError(f"expected a four-outcome POVM, got {len(povm)} elements")
    rank_one = povm.is_rank_one()
    bad_index = None if rank_one.all() else int(np.argmin(rank_one))
    dets = np.abs(np.linalg.det(povm.directions[_TRIPLE_INDEX]))
    min_det = float(dets.min())
    coplanar = np.flatnonzero(dets <= coplanar_tol)
    triple = _TRIPLES[coplanar[0]] if coplanar.size else None
    return ExtremalityCheck(bad_index is None and triple is None, min_det, triple, bad_index)


class DisphenoidEdges(NamedTuple):
    edges: dict[tuple[int, int], np.ndarray]
    lengths: dict[tuple[int, int], float]
    # h_12 . h_34 (0-based pair keys (0, 1) and (2, 3))
    opposite_dot: float
    opposite_orthogonal: bool


def disphenoid_edges(povm: Povm) -> DisphenoidEdges:
    if len(povm) != 4:
        raise WrongArityError(f"expected four directions, got {len(povm)}")
    h = povm.directions
    edges = {(i, j): h[i] - h[j] for i, j in combinations(range(4), 2)}
    lengths = {k: float(np.linalg.norm(e)) for k, e in edges.items()}
    dot = float(edges[0, 1] @ edges[2, 3])
    return DisphenoidEdges(edges, lengths, dot, abs(dot) <= ALGEBRAIC_TOL)
