"""Brute-force checks that do not rely on the closed forms.

Everything here is vectorized over many random strategies. Values are scored
from raw Born-rule probabilities, never from the ``|u_x|`` shortcuts used by
the optimizer, so agreement between the two is a genuine cross-check.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ._jsonio import csv_text
from .bloch import born_probability
from .witness import WitnessSpec

CHUNK = 2048


def _coefficients(spec: WitnessSpec) -> np.ndarray:
    c1, c2 = spec.c1, spec.c2
    return np.array([[c1, 1, 1], [c1, -1, -1], [-c2, 1, -1], [-c2, -1, 1]], dtype=float)


def _unit(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    v = rng.standard_normal(shape + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _normalize(vec: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    n = np.sqrt(np.sum(vec * vec, axis=-1, keepdims=True))
    small = n <= 1e-12
    if small.any():
        return np.where(small, fallback, vec / np.where(small, 1.0, n))
    return vec / n


def _probabilities(m: np.ndarray, v: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """P(b|x,y), shape (..., 4, 3, 2), for correlator directions ``v`` and ``mu``.

    ``v`` is the outcome-1 vector for ``mu >= 0`` and the outcome-0 vector
    otherwise; the partner vector follows from ``(1+mu) v0 = (1-mu) v1``.
    """
    ratio = ((1 - np.abs(mu)) / (1 + np.abs(mu)))[..., None]
    nonneg = (mu >= 0)[..., None]
    v0 = np.where(nonneg, v * ratio, v)
    v1 = np.where(nonneg, v, v * ratio)
    dots0 = m @ np.swapaxes(v0, -1, -2)
    dots1 = m @ np.swapaxes(v1, -1, -2)
    mu = mu[..., None, :]
    p0 = (1 + mu) / 2 * (1 + dots0)
    p1 = (1 - mu) / 2 * (1 - dots1)
    return np.stack([p0, p1], axis=-1)


def _witness_from_probabilities(w: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.sum(w * (p[..., 0] - p[..., 1]), axis=(-2, -1))


def _improve(w: np.ndarray, m: np.ndarray, v: np.ndarray, mu: np.ndarray, half_steps: int):
    """Alternate exact half-steps with ``mu`` frozen, starting from the directions."""
    keep = (1 - np.abs(mu))[..., :, None]
    wt = w.T
    for step in range(half_steps):
        if step % 2 == 0:
            v = _normalize(wt @ m, v)
        else:
            m = _normalize(w @ (keep * v), m)
    return m, v


def _scalar_witness(w: np.ndarray, m: np.ndarray, v: np.ndarray, mu: np.ndarray) -> float:
    """Witness of one strategy through the scalar Born rule."""
    total = 0.0
    for y in range(3):
        mu_y = float(mu[y])
        if mu_y >= 0:
            v1 = v[y]
            v0 = v1 * (1 - mu_y) / (1 + mu_y)
        else:
            v0 = v[y]
            v1 = v0 * (1 + mu_y) / (1 - mu_y)
        for x in range(4):
            p0 = born_probability(m[x], (1 + mu_y) / 2, v0)
            p1 = born_probability(m[x], (1 - mu_y) / 2, -v1)
            total += w[x, y] * (p0 - p1)
    return total


class OracleResult(NamedTuple):
    value: float
    states: np.ndarray
    directions: np.ndarray
    mus: np.ndarray


def random_search_max(
    spec: WitnessSpec,
    samples: int = 10_000,
    seed: int = 0,
    half_steps: int = 200,
    top: int = 8,
) -> OracleResult:
    """Best witness value over random strategies, each polished by see-saw.

    Every sample draws uniform unit states and directions and is tried with
    ``mu_1 in {-1, 0, 1}`` (``mu_2 = mu_3 = 0``). The ``top`` best candidates
    are rescored with the scalar Born rule and the best one is returned.
    Samples are processed in chunks, each with its own child stream of
    ``SeedSequence(seed)``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    w = _coefficients(spec)
    mu_options = np.array([[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    n_chunks = -(-samples // CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    pool_m, pool_v, pool_mu, pool_val = [], [], [], []
    for i, child in enumerate(children):
        size = min(CHUNK, samples - i * CHUNK)
        rng = np.random.default_rng(child)
        m0, v0 = _unit(rng, (size, 4)), _unit(rng, (size, 3))
        m = np.repeat(m0, 3, axis=0)
        v = np.repeat(v0, 3, axis=0)
        mu = np.tile(mu_options, (size, 1))
        m, v = _improve(w, m, v, mu, half_steps)
        vals = _witness_from_probabilities(w, _probabilities(m, v, mu))
        best = np.argsort(vals)[::-1][:top]
        pool_m.append(m[best])
        pool_v.append(v[best])
        pool_mu.append(mu[best])
        pool_val.append(vals[best])
    vals = np.concatenate(pool_val)
    m, v, mu = np.concatenate(pool_m), np.concatenate(pool_v), np.concatenate(pool_mu)
    order = np.argsort(vals, kind="stable")[::-1][:top]
    best = None
    for i in order:
        val = _scalar_witness(w, m[i], v[i], mu[i])
        if best is None or val > best.value:
            best = OracleResult(val, m[i].copy(), v[i].copy(), mu[i].copy())
    return best


class MuScan(NamedTuple):
    mu1: np.ndarray
    max_W: np.ndarray

    @property
    def argmax(self) -> float:
        return float(self.mu1[int(np.argmax(self.max_W))])

    def value_at(self, mu1: float) -> float:
        return float(self.max_W[int(np.argmin(np.abs(self.mu1 - mu1)))])

    def to_csv(self) -> str:
        return csv_text(["mu1", "max_W"], [[a, b] for a, b in zip(self.mu1, self.max_W)])


def mu_grid_scan(
    spec: WitnessSpec,
    grid_n: int = 21,
    samples: int = 256,
    seed: int = 0,
    half_steps: int = 2000,
) -> MuScan:
    """Maximal witness with ``mu_1`` frozen on a uniform grid over [-1, 1].

    For fixed strategies the witness is affine in ``mu_1`` on each side of
    zero, so the maximum over the grid sits at -1, 0 or 1.
    """
    if grid_n < 3:
        raise ValueError("grid_n must be >= 3")
    w = _coefficients(spec)
    grid = np.linspace(-1.0, 1.0, grid_n)
    # keep 0 exactly on the grid for odd grid_n
    grid[np.abs(grid) < 1e-15] = 0.0
    ms, vs = [], []
    for child in np.random.SeedSequence(seed).spawn(grid_n):
        rng = np.random.default_rng(child)
        ms.append(_unit(rng, (samples, 4)))
        vs.append(_unit(rng, (samples, 3)))
    m, v = np.concatenate(ms), np.concatenate(vs)
    mu = np.zeros((grid_n * samples, 3))
    mu[:, 0] = np.repeat(grid, samples)
    m, v = _improve(w, m, v, mu, half_steps)
    vals = _witness_from_probabilities(w, _probabilities(m, v, mu)).reshape(grid_n, samples)
    return MuScan(grid, vals.max(axis=1))


class MeanBoundCheck(NamedTuple):
    worst_slack: float
    holds: bool
    trials: int


def mean_bound_slack(spec: WitnessSpec, dirs) -> np.ndarray:
    """``bound - sum_x |u_x|`` for one or many direction triples of shape (..., 3, 3)."""
    w = _coefficients(spec)
    v = np.asarray(dirs, dtype=float)
    q = np.linalg.norm(w @ v, axis=-1).sum(axis=-1)
    sq = np.sum(v**2, axis=-1)
    bound = 2 * np.sqrt(2 * ((spec.c1**2 + spec.c2**2) * sq[..., 0] + 2 * (sq[..., 1] + sq[..., 2])))
    return bound - q


def verify_mean_bound(spec: WitnessSpec, trials: int = 10_000, seed: int = 0) -> MeanBoundCheck:
    """Smallest slack of the mean-inequality bound over random sub-unit directions."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    v = _unit(rng, (trials, 3)) * rng.uniform(0, 1, (trials, 3, 1))
    slack = mean_bound_slack(spec, v)
    worst = float(slack.min())
    return MeanBoundCheck(worst, worst >= -1e-12, trials)
