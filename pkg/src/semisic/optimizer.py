"""Maximizing the witness over qubit strategies.

With the measurements fixed the best states are ``m_x = u_x / |u_x|`` where
``u_x = sum_y w_xy v_y``, and with the states fixed the best directions are
``v_y = z_y / |z_y|`` where ``z_y = sum_x w_xy m_x``. Alternating these exact
half-steps (see-saw) never decreases the witness. The first measurement may
also be degenerate (``|mu_1| = 1``); that choice is made per round by comparing
``|z_1|`` with the column sum ``|W_1|``.

The module also carries the stationarity/concavity machinery over the
pairwise direction overlaps ``gamma = (v1.v2, v1.v3, v2.v3)``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bloch import ALGEBRAIC_TOL, TwoOutcomeMeasurement, as_vectors, random_unit_vectors
from .errors import InfeasibleThetaError, NoZeroTermError, OutsideDomainError, ZeroLengthError
from .povm import Povm
from .witness import BehaviorTable, WitnessSpec, behavior_from, evaluate_extended_witness, evaluate_witness, q_of_c

log = logging.getLogger(__name__)

# below this a u_x or z_y is treated as zero and its unit vector is unspecified
ZERO_NORM = 1e-12
_GAMMA_PAIRS = ((0, 1), (0, 2), (1, 2))


@dataclass
class Strategy:
    """Four preparations, three two-outcome measurements and an optional POVM.

    ``directions[y]`` and ``mus[y]`` define measurement ``y`` through
    ``TwoOutcomeMeasurement.from_direction``.
    """

    states: np.ndarray
    directions: np.ndarray
    mus: np.ndarray = field(default_factory=lambda: np.zeros(3))
    fourth: Povm | None = None

    def __post_init__(self):
        self.states = as_vectors(self.states, count=4).copy()
        self.directions = as_vectors(self.directions, count=3).copy()
        self.mus = np.asarray(self.mus, dtype=float).reshape(3).copy()
        if np.any(np.linalg.norm(self.states, axis=1) > 1 + ALGEBRAIC_TOL):
            raise ValueError("state Bloch vectors must have norm <= 1")
        if np.any(np.linalg.norm(self.directions, axis=1) > 1 + ALGEBRAIC_TOL):
            raise ValueError("measurement directions must have norm <= 1")
        if np.any(np.abs(self.mus) > 1):
            raise ValueError("mu must lie in [-1, 1]")

    def measurements(self) -> list[TwoOutcomeMeasurement]:
        return [TwoOutcomeMeasurement.from_direction(v, mu) for v, mu in zip(self.directions, self.mus)]

    def behavior(self) -> BehaviorTable:
        return behavior_from(self.states, self.measurements(), self.fourth)

    def witness(self, spec: WitnessSpec) -> float:
        return evaluate_witness(self.behavior(), spec)

    def extended_witness(self, spec: WitnessSpec) -> float:
        return evaluate_extended_witness(self.behavior(), spec)

    def with_fourth(self, povm: Povm | None) -> "Strategy":
        return Strategy(self.states, self.directions, self.mus, povm)

    def to_dict(self) -> dict:
        return {
            "states": self.states.tolist(),
            "directions": self.directions.tolist(),
            "mus": self.mus.tolist(),
            "fourth": None if self.fourth is None else self.fourth.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Strategy":
        fourth = data.get("fourth")
        return cls(data["states"], data["directions"], data["mus"], None if fourth is None else Povm.from_dict(fourth))


class StatesStep(NamedTuple):
    states: np.ndarray
    value: float
    # True where u_x vanished and m_x is arbitrary
    unspecified: np.ndarray
    u: np.ndarray


class DirectionsStep(NamedTuple):
    directions: np.ndarray
    value: float
    z: np.ndarray


def _effective_u(w: np.ndarray, dirs: np.ndarray, mus: np.ndarray) -> np.ndarray:
    return w @ ((1 - np.abs(mus))[:, None] * dirs)


def optimal_states(spec: WitnessSpec, dirs, mus=None, previous=None) -> StatesStep:
    """Best states for fixed measurements.

    ``value`` is ``sum_x |u_x|`` plus the constant ``sum_y mu_y W_y`` when
    nonzero ``mus`` are given. Where ``|u_x|`` vanishes the state is taken from
    ``previous`` (zero vector when absent) and flagged as unspecified.
    """
    v = as_vectors(dirs, count=3)
    mus = np.zeros(3) if mus is None else np.asarray(mus, dtype=float)
    u = _effective_u(spec.matrix, v, mus)
    norms = np.linalg.norm(u, axis=1)
    unspecified = norms <= ZERO_NORM
    fallback = np.zeros((4, 3)) if previous is None else np.asarray(previous, dtype=float)
    safe = np.where(unspecified, 1.0, norms)
    m = np.where(unspecified[:, None], fallback, u / safe[:, None])
    value = float(mus @ spec.column_sums + np.sum(np.einsum("xi,xi->x", m, u)))
    return StatesStep(m, value, unspecified, u)


def optimal_directions(spec: WitnessSpec, states, previous=None) -> DirectionsStep:
    """Best projective directions for fixed states; ``value = sum_y |z_y|``.

    A vanishing ``z_y`` leaves ``v_y`` arbitrary: ``previous[y]`` if given,
    else the z axis.
    """
    m = as_vectors(states, count=4)
    z = spec.matrix.T @ m
    norms = np.linalg.norm(z, axis=1)
    if previous is None:
        fallback = np.tile([0.0, 0.0, 1.0], (3, 1))
    else:
        fallback = np.asarray(previous, dtype=float)
    zero = norms <= ZERO_NORM
    safe = np.where(zero, 1.0, norms)
    v = np.where(zero[:, None], fallback, z / safe[:, None])
    return DirectionsStep(v, float(norms.sum()), z)


class MuBranch(NamedTuple):
    branch: str  # "projective", "degenerate" or "tie"
    mu: float
    z_norm: float
    column_sum: float


def _branch_mus(z_norms: np.ndarray, column_sums: np.ndarray) -> np.ndarray:
    # degenerate only when strictly better; sign(W) is the maximizing endpoint
    degenerate = np.abs(column_sums) > z_norms
    return np.where(degenerate, np.sign(column_sums), 0.0)


def mu_branch_select(spec: WitnessSpec, states, tie_tol: float = ALGEBRAIC_TOL) -> list[MuBranch]:
    """Projective (``mu = 0``) vs degenerate (``|mu| = 1``) choice per setting.

    For fixed states the witness contribution of setting ``y`` is
    ``mu W_y + (1 - |mu|) |z_y|``, maximized at ``mu = 0`` if ``|z_y| > |W_y|``
    and at ``mu = sign(W_y)`` otherwise. Near-equal cases are reported as
    ``"tie"`` with ``mu = 0`` (for ``W_y = 0`` the degenerate sign is +1).
    """
    z = spec.matrix.T @ as_vectors(states, count=4)
    out = []
    for zn, wy in zip(np.linalg.norm(z, axis=1), spec.column_sums):
        if abs(zn - abs(wy)) <= tie_tol:
            out.append(MuBranch("tie", 0.0, float(zn), float(wy)))
        elif zn > abs(wy):
            out.append(MuBranch("projective", 0.0, float(zn), float(wy)))
        else:
            out.append(MuBranch("degenerate", float(np.sign(wy)) or 1.0, float(zn), float(wy)))
    return out


class ClosedFormOptimum(NamedTuple):
    strategy: Strategy
    value: float
    theta: float


def closed_form_optimum(spec: WitnessSpec) -> ClosedFormOptimum:
    """Projective optimum: ``v1 = x``, ``v2, v3 = (0, cos t, +-sin t)`` with
    ``cos 2t = (c2^2 - c1^2) / 4``, and states along the resulting ``u_x``.

    Raises
    ------
    InfeasibleThetaError
        If ``|cos 2t| > 1``; the stationary point then lies outside the set of
        realizable overlaps.
    """
    cos2t = spec.cos_two_theta
    if abs(cos2t) > 1 + ALGEBRAIC_TOL:
        raise InfeasibleThetaError(f"cos(2 theta) = {cos2t!r} is outside [-1, 1]")
    theta = 0.5 * math.acos(min(1.0, max(-1.0, cos2t)))
    dirs = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, math.cos(theta), math.sin(theta)],
            [0.0, math.cos(theta), -math.sin(theta)],
        ]
    )
    step = optimal_states(spec, dirs)
    return ClosedFormOptimum(Strategy(step.states, dirs), q_of_c(spec.c1, spec.c2), theta)


def q_v(spec: WitnessSpec, dirs) -> float:
    """``sum_x |u_x|``, the witness maximized over states for fixed directions."""
    return float(np.linalg.norm(spec.matrix @ as_vectors(dirs, count=3), axis=1).sum())


def mean_bound(spec: WitnessSpec, dirs) -> float:
    """Upper bound on ``q_v`` from the arithmetic/quadratic mean inequality.

    The witness columns are mutually orthogonal, so ``sum_x |u_x|^2`` only
    involves the lengths of the directions.
    """
    sq = np.sum(as_vectors(dirs, count=3) ** 2, axis=1)
    return 2 * math.sqrt(2 * ((spec.c1**2 + spec.c2**2) * sq[0] + 2 * (sq[1] + sq[2])))


@dataclass
class SeesawResult:
    value: float
    strategy: Strategy
    iterations: int
    restarts_used: int
    trace: list[float]
    converged: bool
    best_restart: int = 0
    restart_values: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "iterations": self.iterations,
            "restarts_used": self.restarts_used,
            "best_restart": self.best_restart,
            "converged": self.converged,
            "restart_values": list(self.restart_values),
            "strategy": self.strategy.to_dict(),
            "trace": list(self.trace),
        }


def _seesaw_run(
    spec: WitnessSpec,
    rng: np.random.Generator,
    tol: float,
    step_tol: float,
    max_iters: int,
    allow_degenerate: bool,
) -> SeesawResult:
    w = spec.matrix
    col = spec.column_sums
    v = random_unit_vectors(rng, 3)
    mus = np.zeros(3)
    m = np.zeros((4, 3))
    trace: list[float] = []
    prev = -math.inf
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        st = optimal_states(spec, v, mus, previous=m)
        m = st.states
        trace.append(st.value)

        z = w.T @ m
        zn = np.linalg.norm(z, axis=1)
        new_mus = _branch_mus(zn, col) if allow_degenerate else np.zeros(3)
        zero = zn <= ZERO_NORM
        new_v = np.where(zero[:, None], v, z / np.where(zero, 1.0, zn)[:, None])
        value = float(new_mus @ col + (1 - np.abs(new_mus)) @ zn)
        trace.append(value)

        step = float(np.max(np.abs(new_v - v)))
        v, mus = new_v, new_mus
        if value - prev < tol and step < step_tol:
            converged = True
            break
        prev = value
    return SeesawResult(trace[-1], Strategy(m, v, mus), it, 1, trace, converged)


def seesaw(
    spec: WitnessSpec,
    seed: int = 0,
    restarts: int = 20,
    tol: float = 1e-12,
    max_iters: int = 10_000,
    step_tol: float = 1e-12,
    workers: int = 1,
    allow_degenerate: bool = True,
) -> SeesawResult:
    """Best see-saw run over ``restarts`` random starting directions.

    Each run stops once a full round gains less than ``tol`` and moves no
    direction component by more than ``step_tol``, or after ``max_iters``
    rounds. Restart ``i`` draws from the ``i``-th child of
    ``SeedSequence(seed)``, so the outcome does not depend on ``workers``.
    Ties between restarts go to the lowest index.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    children = np.random.SeedSequence(seed).spawn(restarts)

    def run(child):
        return _seesaw_run(spec, np.random.default_rng(child), tol, step_tol, max_iters, allow_degenerate)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, children))
    else:
        results = [run(c) for c in children]

    best_index = 0
    for i, r in enumerate(results):
        if r.value > results[best_index].value:
            best_index = i
    best = results[best_index]
    if not best.converged:
        log.warning("best see-saw restart hit max_iters=%d without converging", max_iters)
    log.debug("see-saw restart values: %s", [r.value for r in results])
    best.restarts_used = restarts
    best.best_restart = best_index
    best.restart_values = [r.value for r in results]
    return best


@dataclass(frozen=True)
class GammaPoint:
    """Pairwise overlaps ``(v1.v2, v1.v3, v2.v3)`` of the three directions."""

    gamma12: float
    gamma13: float
    gamma23: float

    @classmethod
    def from_directions(cls, dirs) -> "GammaPoint":
        v = as_vectors(dirs, count=3)
        g = v @ v.T
        return cls(float(g[0, 1]), float(g[0, 2]), float(g[1, 2]))

    @property
    def values(self) -> np.ndarray:
        return np.array([self.gamma12, self.gamma13, self.gamma23])

    def matrix(self) -> np.ndarray:
        g12, g13, g23 = self.values
        return np.array([[1.0, g12, g13], [g12, 1.0, g23], [g13, g23, 1.0]])

    def is_feasible(self, tol: float = 1e-10) -> bool:
        """True when some unit vectors realize these overlaps (PSD Gram matrix)."""
        return bool(np.linalg.eigvalsh(self.matrix()).min() >= -tol)


def gamma_coefficients(spec: WitnessSpec) -> tuple[np.ndarray, np.ndarray]:
    """``s_x = sum_y w_xy^2`` and ``t[x, a] = w_xy w_xy'`` for pairs (12, 13, 23)."""
    w = spec.matrix
    s = np.sum(w**2, axis=1)
    t = np.stack([w[:, i] * w[:, j] for i, j in _GAMMA_PAIRS], axis=1)
    return s, t


def _l_squared(spec: WitnessSpec, gamma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s, t = gamma_coefficients(spec)
    return s + 2 * t @ gamma, t


def q_gamma(spec: WitnessSpec, point: GammaPoint | np.ndarray) -> float:
    """``sum_x sqrt(s_x + 2 sum_a t_xa gamma_a)`` on its natural domain."""
    gamma = point.values if isinstance(point, GammaPoint) else np.asarray(point, dtype=float)
    l2, _ = _l_squared(spec, gamma)
    if np.any(l2 < 0):
        raise OutsideDomainError(f"squared lengths {l2} leave the domain")
    return float(np.sqrt(l2).sum())


def gamma_stationarity_residual(spec: WitnessSpec, point: GammaPoint) -> np.ndarray:
    """Partial derivatives of ``q_gamma`` in ``(gamma12, gamma13, gamma23)``.

    Componentwise these are ``c1/|u1| - c1/|u2| - c2/|u3| + c2/|u4|``,
    ``c1/|u1| - c1/|u2| + c2/|u3| - c2/|u4|`` and
    ``1/|u1| + 1/|u2| - 1/|u3| - 1/|u4|``; all vanish at the optimum.
    """
    l2, t = _l_squared(spec, point.values)
    if np.any(l2 <= ZERO_NORM**2):
        raise ZeroLengthError(f"some |u_x| vanishes: squared lengths {l2}")
    return t.T @ (1 / np.sqrt(l2))


class HessianProbe(NamedTuple):
    hessian: np.ndarray
    max_eigenvalue: float
    fd_hessian: np.ndarray
    fd_relative_error: float
    fd_agrees: bool
    rank: int
    # unique maximizer condition: rank(t) equals the number of overlaps
    negative_definite: bool


def hessian_probe(spec: WitnessSpec, point: GammaPoint, step: float = 1e-5, rtol: float = 1e-4) -> HessianProbe:
    """Analytic Hessian ``-R^T R`` with ``R[x, a] = t_xa / l_x^(3/2)``.

    The central-difference check differentiates the analytic gradient with
    ``step``; agreement is measured as max-entry error over max-entry size.
    """
    gamma = point.values
    l2, t = _l_squared(spec, gamma)
    if np.any(l2 <= 0):
        raise OutsideDomainError(f"squared lengths {l2} leave the domain")
    r = t / l2[:, None] ** 0.75
    h = -r.T @ r
    fd = np.empty((3, 3))
    for a in range(3):
        e = np.zeros(3)
        e[a] = step
        hi, lo = GammaPoint(*(gamma + e)), GammaPoint(*(gamma - e))
        fd[:, a] = (gamma_stationarity_residual(spec, hi) - gamma_stationarity_residual(spec, lo)) / (2 * step)
    fd = 0.5 * (fd + fd.T)
    scale = max(float(np.abs(h).max()), np.finfo(float).tiny)
    err = float(np.abs(fd - h).max()) / scale
    rank = int(np.linalg.matrix_rank(t))
    n_overlaps = len(_GAMMA_PAIRS)
    unique = rank == n_overlaps and t.shape[0] >= n_overlaps + 1
    return HessianProbe(h, float(np.linalg.eigvalsh(h).max()), fd, err, err <= rtol, rank, unique)


class PerturbationResult(NamedTuple):
    improved: bool
    gain: float
    term: int | None
    direction_index: int | None

    def __bool__(self):
        return self.improved


def zero_term_perturbation_check(spec: WitnessSpec, dirs, delta: float = 1e-4) -> PerturbationResult:
    """Look for a small move of one direction that raises ``q_v``.

    Requires some ``|u_x'| < 1e-10``. For each such term and each ``y'`` with
    ``w_x'y' != 0``, ``v_y'`` is moved by ``+-delta`` along two tangent
    directions (renormalized when ``v_y'`` is a unit vector). Returns the
    first improving move found.
    """
    v = as_vectors(dirs, count=3)
    w = spec.matrix
    norms = np.linalg.norm(w @ v, axis=1)
    zero_terms = np.flatnonzero(norms < 1e-10)
    if zero_terms.size == 0:
        raise NoZeroTermError("every |u_x| is nonzero")
    base = float(norms.sum())
    for x in zero_terms:
        for y in np.flatnonzero(w[x] != 0):
            vy = v[y]
            unit = abs(np.linalg.norm(vy) - 1) <= ALGEBRAIC_TOL
            # tangent basis: the two right-singular vectors orthogonal to vy
            basis = np.linalg.svd(vy[None, :] if np.any(vy) else np.eye(3)[:1])[2][1:]
            for tangent in basis:
                for sign in (1.0, -1.0):
                    moved = vy + sign * delta * tangent
                    if unit:
                        moved = moved / np.linalg.norm(moved)
                    elif np.linalg.norm(moved) > 1:
                        continue
                    trial = v.copy()
                    trial[y] = moved
                    gain = q_v(spec, trial) - base
                    if gain > 1e-14:
                        return PerturbationResult(True, gain, int(x), int(y))
    return PerturbationResult(False, 0.0, None, None)
