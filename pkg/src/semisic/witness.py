"""The prepare-and-measure witness and its closed-form maxima.

Four preparations ``x`` and three two-outcome settings ``y`` are scored with
the coefficient matrix::

    [[ c1,  1,  1],
     [ c1, -1, -1],
     [-c2,  1, -1],
     [-c2, -1,  1]]

as ``W = sum_xy w_xy (P(0|x,y) - P(1|x,y))``. A fourth, four-outcome setting
adds the penalty ``-k sum_x P(b=x|x,4)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._jsonio import dumps
from .bloch import TwoOutcomeMeasurement, as_vectors, born_probability
from .errors import MissingEntriesError, WrongArityError
from .povm import Povm, check_B

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class WitnessSpec:
    c1: float
    c2: float
    penalty_k: float = 1.0

    def __post_init__(self):
        if not self.penalty_k >= 0:
            raise ValueError(f"penalty_k must be non-negative, got {self.penalty_k!r}")

    @classmethod
    def from_B(cls, B: float, penalty_k: float = 1.0, negative: bool = False) -> "WitnessSpec":
        c1, c2 = c_params_from_B(B, negative=negative)
        return cls(c1, c2, penalty_k)

    @property
    def matrix(self) -> np.ndarray:
        c1, c2 = self.c1, self.c2
        return np.array(
            [
                [c1, 1.0, 1.0],
                [c1, -1.0, -1.0],
                [-c2, 1.0, -1.0],
                [-c2, -1.0, 1.0],
            ]
        )

    @property
    def column_sums(self) -> np.ndarray:
        return np.array([2 * self.c1 - 2 * self.c2, 0.0, 0.0])

    @property
    def cos_two_theta(self) -> float:
        return (self.c2**2 - self.c1**2) / 4

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "penalty_k": self.penalty_k}

    @classmethod
    def from_dict(cls, data: dict) -> "WitnessSpec":
        return cls(float(data["c1"]), float(data["c2"]), float(data.get("penalty_k", 1.0)))


def c_params_from_B(B: float, negative: bool = False) -> tuple[float, float]:
    """Witness coefficients whose optimal states reproduce the semi-SIC Gram matrix.

    Both coefficients share a sign; the positive pair is returned unless
    ``negative`` is set. For the positive pair ``c1 >= c2 > 0``.
    """
    B = check_B(B)
    s = math.sqrt(max(0.0, 1 - 12 * B))
    d = 24 * B - 1
    c1 = math.sqrt(2 * (1 - 6 * B + s) / d)
    c2 = math.sqrt(2 * (1 - 6 * B - s) / d)
    return (-c1, -c2) if negative else (c1, c2)


def q_of_c(c1: float, c2: float) -> float:
    """Stationary-point value ``2 sqrt(2 (c1^2 + c2^2 + 4))`` of the projective branch."""
    return 2 * math.sqrt(2 * (c1**2 + c2**2 + 4))


def q_of_b(B: float) -> float:
    B = check_B(B)
    return 24 * math.sqrt(B / (24 * B - 1))


def q_prime(c1: float, c2: float) -> float:
    """Best value with the first measurement degenerate (``|mu_1| = 1``)."""
    return 2 * abs(c1 - c2) + 4 * SQRT2


@dataclass
class BehaviorTable:
    """Probabilities ``P(b|x,y)``.

    ``two_outcome[x, y, b]`` holds settings ``y = 1..3`` (0-based here) with
    outcomes ``b in {0, 1}``; ``fourth[x, b]`` holds the four-outcome setting
    with outcomes ``b = 1..4`` stored at index ``b - 1``.
    """

    two_outcome: np.ndarray
    fourth: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.two_outcome, dtype=float)
        if p.shape != (4, 3, 2) or not np.all(np.isfinite(p)):
            raise MissingEntriesError(f"two-outcome table must be a finite (4, 3, 2) array, got shape {p.shape}")
        _check_distribution(p, "two-outcome")
        self.two_outcome = p
        if self.fourth is not None:
            f = np.asarray(self.fourth, dtype=float)
            if f.shape != (4, 4) or not np.all(np.isfinite(f)):
                raise MissingEntriesError(f"fourth-setting table must be a finite (4, 4) array, got shape {f.shape}")
            _check_distribution(f, "fourth-setting")
            self.fourth = f

    @classmethod
    def uniform(cls) -> "BehaviorTable":
        return cls(np.full((4, 3, 2), 0.5), np.full((4, 4), 0.25))

    @property
    def correlators(self) -> np.ndarray:
        return self.two_outcome[..., 0] - self.two_outcome[..., 1]

    def to_dict(self) -> dict:
        out = {}
        for x in range(4):
            row = {str(y + 1): self.two_outcome[x, y].tolist() for y in range(3)}
            if self.fourth is not None:
                row["4"] = self.fourth[x].tolist()
            out[str(x + 1)] = row
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BehaviorTable":
        try:
            two = [[data[str(x + 1)][str(y + 1)] for y in range(3)] for x in range(4)]
        except KeyError as exc:
            raise MissingEntriesError(f"behavior is missing entry {exc}") from None
        has_fourth = all("4" in data[str(x + 1)] for x in range(4))
        fourth = [data[str(x + 1)]["4"] for x in range(4)] if has_fourth else None
        return cls(np.array(two, dtype=float), None if fourth is None else np.array(fourth, dtype=float))

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "BehaviorTable":
        return cls.from_dict(json.loads(text))


def _check_distribution(p: np.ndarray, label: str) -> None:
    if np.any(p < -1e-12):
        raise ValueError(f"{label} table has negative probabilities")
    if np.any(np.abs(p.sum(axis=-1) - 1) > 1e-10):
        raise ValueError(f"{label} table rows do not sum to 1")


def behavior_from(states, measurements: Sequence[TwoOutcomeMeasurement], fourth: Povm | None = None) -> BehaviorTable:
    """Born-rule behavior of four states against three two-outcome measurements
    and an optional four-outcome POVM."""
    m = as_vectors(states, count=4)
    if len(measurements) != 3:
        raise WrongArityError(f"expected 3 two-outcome measurements, got {len(measurements)}")
    two = np.array([[meas.probabilities(mx) for meas in measurements] for mx in m])
    four = None
    if fourth is not None:
        if len(fourth) != 4:
            raise WrongArityError("fourth measurement must have four outcomes")
        four = np.array([[born_probability(mx, w, n) for w, n in fourth.elements] for mx in m])
    return BehaviorTable(two, four)


def evaluate_witness(behavior: BehaviorTable, spec: WitnessSpec) -> float:
    return float(np.sum(spec.matrix * behavior.correlators))


def penalized_probabilities(behavior: BehaviorTable) -> np.ndarray:
    """``P(b=x | x, y=4)`` for ``x = 1..4``."""
    if behavior.fourth is None:
        raise MissingEntriesError("behavior has no fourth-setting probabilities")
    return np.diag(behavior.fourth).copy()


def evaluate_extended_witness(behavior: BehaviorTable, spec: WitnessSpec) -> float:
    return evaluate_witness(behavior, spec) - spec.penalty_k * float(penalized_probabilities(behavior).sum())
