"""Certification of the semi-SIC target from witness values.

Stage one checks that a strategy reaches the maximal witness value and that
its states have the semi-SIC Gram matrix, then fits the global isometry
``s * R``. Stage two rebuilds the four-outcome POVM from the states (each
element antiparallel to its state) and compares it with the target through
the same isometry.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._jsonio import dumps
from .bloch import Alignment, align_isometry, as_vectors, gram
from .errors import (
    CoplanarDirectionsError,
    InvalidStateError,
    MissingFourthMeasurementError,
    NegativeWeightError,
)
from .optimizer import SeesawResult, Strategy, seesaw
from .povm import Povm, build_semi_sic, check_B, semi_sic_gram
from .witness import WitnessSpec, evaluate_extended_witness, penalized_probabilities, q_of_b

log = logging.getLogger(__name__)

SCHEMA = "certification/1"
DEFAULT_TOL = 1e-6
PURITY_TOL = 1e-9


@dataclass
class StateStage:
    passed: bool
    achieved_W: float
    target_Q: float
    gram: np.ndarray
    gram_residual: float
    alignment: Alignment

    @property
    def alignment_residual(self) -> float:
        return self.alignment.residual


@dataclass
class PovmStage:
    passed: bool
    achieved_W_prime: float
    target_Q: float
    penalized: np.ndarray
    povm: Povm
    weight_residual: float
    direction_residual: float

    @property
    def povm_residual(self) -> float:
        return max(self.weight_residual, self.direction_residual)


def certify_states(strategy: Strategy, B: float, tol: float = DEFAULT_TOL) -> StateStage:
    """Pass iff the witness reaches ``q_of_b(B) - tol``, the state Gram matrix
    matches the semi-SIC one entrywise within ``tol`` and the fitted isometry
    leaves a residual of at most ``tol``."""
    B = check_B(B)
    spec = WitnessSpec.from_B(B)
    target_q = q_of_b(B)
    achieved = strategy.witness(spec)
    g = gram(strategy.states)
    gram_res = float(np.abs(g - semi_sic_gram(B)).max())
    alignment = align_isometry(strategy.states, build_semi_sic(B).directions)
    passed = achieved >= target_q - tol and gram_res <= tol and alignment.residual <= tol
    return StateStage(passed, achieved, target_q, g, gram_res, alignment)


def reconstruct_fourth_povm(states) -> Povm:
    """POVM whose ``x``-th element never fires on state ``x``.

    Directions are ``n_x = -m_x``; the weights solve ``sum lambda = 1`` and
    ``sum lambda n = 0``.

    Raises
    ------
    CoplanarDirectionsError
        If the four directions lie in one plane, so the weights are not fixed.
    NegativeWeightError
        If the solution has a non-positive weight.
    """
    m = as_vectors(states, count=4)
    norms = np.linalg.norm(m, axis=1)
    if np.any(np.abs(norms - 1) > PURITY_TOL):
        raise InvalidStateError(f"states must be pure, got norms {norms}")
    n = -m
    a = np.vstack([np.ones(4), n.T])
    if abs(np.linalg.det(a)) < 1e-9:
        raise CoplanarDirectionsError("the four directions are coplanar; the weights are not determined")
    lam = np.linalg.solve(a, np.array([1.0, 0.0, 0.0, 0.0]))
    if np.any(lam <= 0):
        raise NegativeWeightError(f"reconstructed weights {lam} are not all positive")
    return Povm(lam, n)


def certify_povm(
    strategy: Strategy,
    B: float,
    k: float = 1.0,
    tol: float = DEFAULT_TOL,
    alignment: Alignment | None = None,
) -> PovmStage:
    """Pass iff ``W' >= q_of_b(B) - tol`` and the fourth POVM matches the
    semi-SIC POVM with negated directions under ``alignment``.

    ``alignment`` is the isometry fitted on the states; it is refitted from
    ``strategy.states`` when omitted.
    """
    if strategy.fourth is None:
        raise MissingFourthMeasurementError("strategy has no fourth measurement")
    B = check_B(B)
    spec = WitnessSpec.from_B(B, penalty_k=k)
    target = build_semi_sic(B)
    if alignment is None:
        alignment = align_isometry(strategy.states, target.directions)
    behavior = strategy.behavior()
    w_prime = evaluate_extended_witness(behavior, spec)
    povm = strategy.fourth
    if len(povm) != 4:
        weight_res = dir_res = float("inf")
    else:
        weight_res = float(np.abs(povm.weights - target.weights).max())
        mapped = alignment.apply(povm.directions)
        dir_res = float(np.linalg.norm(mapped + target.directions, axis=1).max())
    target_q = q_of_b(B)
    passed = w_prime >= target_q - tol and weight_res <= tol and dir_res <= tol
    return PovmStage(passed, w_prime, target_q, penalized_probabilities(behavior), povm, weight_res, dir_res)


@dataclass
class CertificationReport:
    B: float
    achieved_W: float
    achieved_W_prime: float
    target_Q: float
    gram_residual: float
    alignment_residual: float
    isometry: np.ndarray
    isometry_sign: int
    povm_weight_residual: float
    povm_direction_residual: float
    states_passed: bool
    povm_passed: bool
    tolerances: dict
    strategy: Strategy
    povm_weights: np.ndarray
    penalized: np.ndarray
    optimizer: dict = field(default_factory=dict)

    @property
    def povm_residual(self) -> float:
        return max(self.povm_weight_residual, self.povm_direction_residual)

    @property
    def passed(self) -> bool:
        return self.states_passed and self.povm_passed

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "B": self.B,
            "target_Q": self.target_Q,
            "achieved_W": self.achieved_W,
            "achieved_W_prime": self.achieved_W_prime,
            "gram_residual": self.gram_residual,
            "alignment_residual": self.alignment_residual,
            "isometry": {"rotation": self.isometry.tolist(), "sign": self.isometry_sign},
            "povm_residual": self.povm_residual,
            "povm_weight_residual": self.povm_weight_residual,
            "povm_direction_residual": self.povm_direction_residual,
            "povm_weights": self.povm_weights.tolist(),
            "penalized_probabilities": self.penalized.tolist(),
            "verdict": {"states": _verdict(self.states_passed), "povm": _verdict(self.povm_passed), "overall": _verdict(self.passed)},
            "tolerances": dict(self.tolerances),
            "optimizer": dict(self.optimizer),
            "strategy": self.strategy.to_dict(),
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def summary(self) -> str:
        tol = self.tolerances.get("certification")
        lines = [
            f"semi-SIC certification at B = {self.B:.12g}",
            f"  target Q          {self.target_Q:.12f}",
            f"  achieved W        {self.achieved_W:.12f}",
            f"  achieved W'       {self.achieved_W_prime:.12f}",
            f"  Gram residual     {self.gram_residual:.3e}",
            f"  isometry residual {self.alignment_residual:.3e} (sign {self.isometry_sign:+d})",
            f"  POVM residual     {self.povm_residual:.3e}",
            f"  states: {_verdict(self.states_passed)}   povm: {_verdict(self.povm_passed)}   tol = {tol:g}",
            f"  overall: {_verdict(self.passed)}",
        ]
        return "\n".join(lines) + "\n"


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def run_full_certification(
    B: float,
    seed: int = 42,
    restarts: int = 20,
    k: float = 1.0,
    tol: float = DEFAULT_TOL,
    optimizer_tol: float = 1e-12,
    max_iters: int = 10_000,
    workers: int = 1,
) -> CertificationReport:
    """Optimize, certify the states, rebuild the fourth POVM and certify it."""
    B = check_B(B)
    spec = WitnessSpec.from_B(B, penalty_k=k)
    result: SeesawResult = seesaw(spec, seed=seed, restarts=restarts, tol=optimizer_tol, max_iters=max_iters, workers=workers)
    log.info("see-saw best value %.15g after %d rounds", result.value, result.iterations)
    states = certify_states(result.strategy, B, tol)
    povm = reconstruct_fourth_povm(result.strategy.states)
    full = result.strategy.with_fourth(povm)
    povm_stage = certify_povm(full, B, k, tol, alignment=states.alignment)
    return CertificationReport(
        B=B,
        achieved_W=states.achieved_W,
        achieved_W_prime=povm_stage.achieved_W_prime,
        target_Q=states.target_Q,
        gram_residual=states.gram_residual,
        alignment_residual=states.alignment_residual,
        isometry=states.alignment.rotation,
        isometry_sign=states.alignment.sign,
        povm_weight_residual=povm_stage.weight_residual,
        povm_direction_residual=povm_stage.direction_residual,
        states_passed=states.passed,
        povm_passed=povm_stage.passed,
        tolerances={"certification": tol, "optimizer": optimizer_tol, "penalty_k": k},
        strategy=full,
        povm_weights=povm.weights,
        penalized=povm_stage.penalized,
        optimizer={
            "seed": seed,
            "restarts": restarts,
            "iterations": result.iterations,
            "converged": result.converged,
            "best_restart": result.best_restart,
            "value": result.value,
        },
    )
