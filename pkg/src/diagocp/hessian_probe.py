"""Hutchinson diagonal-Hessian estimation and two-sided diagonal clipping.

The estimator is H = (1/N) sum_m v_m * hvp(v_m), elementwise, with probe
vectors v satisfying E[v v^T] = I. Rademacher probes make the estimate exact
for diagonal Hessians (v_i^2 = 1); standard-normal probes are the default.
Clipping clamps every entry into [clip_lo, clip_hi] so the estimate is a
positive-definite, bounded diagonal regardless of local curvature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import BatchSeed

_DISTRIBUTIONS = ("rademacher", "standard_normal")


@dataclass(frozen=True)
class ProbeConfig:
    n_probes: int = 1
    distribution: str = "standard_normal"
    clip_lo: float = 1e-4
    clip_hi: float = 1e4

    def __post_init__(self):
        if self.n_probes < 1:
            raise ValueError("n_probes must be >= 1")
        if self.distribution not in _DISTRIBUTIONS:
            raise ValueError(f"unknown probe distribution {self.distribution!r}")
        if not self.clip_lo > 0.0:
            raise ValueError("clip_lo must be > 0")
        if self.clip_hi < self.clip_lo:
            raise ValueError("clip_hi must be >= clip_lo")


def _draw(distribution: str, dim: int, rng: np.random.Generator) -> np.ndarray:
    if distribution == "rademacher":
        return (rng.integers(0, 2, size=dim) * 2 - 1).astype(np.float64)
    return rng.standard_normal(dim)


def sample_probe(distribution: str, dim: int, seed: BatchSeed) -> np.ndarray:
    """One probe vector; same seed always returns the same vector."""
    if distribution not in _DISTRIBUTIONS:
        raise ValueError(f"unknown probe distribution {distribution!r}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return _draw(distribution, dim, seed.rng())


def hutchinson_diag(hvp_fn, dim: int, cfg: ProbeConfig, seed: BatchSeed) -> np.ndarray:
    """Pre-clipping diagonal estimate: average of v * hvp_fn(v) over probes.

    All n_probes draws come from the one stream addressed by `seed`, so the
    whole estimate is a deterministic function of (seed, cfg).
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = seed.rng()
    acc = np.zeros(dim)
    for _ in range(cfg.n_probes):
        v = _draw(cfg.distribution, dim, rng)
        hv = np.asarray(hvp_fn(v), dtype=np.float64)
        if hv.shape != (dim,):
            raise ValueError(f"hvp_fn returned shape {hv.shape}, expected ({dim},)")
        acc += v * hv
    return acc / cfg.n_probes


def clip_diag(h, cfg: ProbeConfig) -> np.ndarray:
    """Clamp each entry into [clip_lo, clip_hi]; NaN means a broken oracle."""
    h = np.asarray(h, dtype=np.float64)
    if np.isnan(h).any():
        raise ValueError("NaN entry in Hessian diagonal estimate")
    return np.clip(h, cfg.clip_lo, cfg.clip_hi)
