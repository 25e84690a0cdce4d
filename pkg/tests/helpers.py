"""Constructions shared by several test modules."""

import numpy as np

from semisic.bloch import random_unit_vectors
from semisic.optimizer import Strategy
from semisic.witness import WitnessSpec


def zero_term_configuration(rng: np.random.Generator):
    """Random spec and unit directions with one vanishing ``u_x``.

    Row ``x`` of the witness reads ``(a, s2, s3)`` with ``|s| = 1``; pick
    ``|a| < 2`` so that ``a v1 + s2 v2 + s3 v3 = 0`` has unit solutions.
    """
    c1, c2 = rng.uniform(0.1, 1.9, 2) * rng.choice([-1, 1])
    spec = WitnessSpec(float(c1), float(c2))
    x = int(rng.integers(4))
    a, s2, s3 = spec.matrix[x]
    v1 = random_unit_vectors(rng, 1)[0]
    p = np.cross(v1, random_unit_vectors(rng, 1)[0])
    p /= np.linalg.norm(p)
    h = np.sqrt(1 - a * a / 4)
    # s2 v2 and s3 v3 split -a v1 symmetrically around the orthogonal p
    w2 = -a / 2 * v1 + h * p
    w3 = -a / 2 * v1 - h * p
    dirs = np.array([v1, s2 * w2, s3 * w3])
    return spec, dirs, x


def tangent_perturbation(strategy: Strategy, rng: np.random.Generator, magnitude: float) -> Strategy:
    """Move one random state by ``magnitude`` along a random tangent and renormalize."""
    m = strategy.states.copy()
    x = int(rng.integers(4))
    t = np.cross(m[x], rng.standard_normal(3))
    t /= np.linalg.norm(t)
    m[x] = m[x] + magnitude * t
    m[x] /= np.linalg.norm(m[x])
    return Strategy(m, strategy.directions, strategy.mus, strategy.fourth)
