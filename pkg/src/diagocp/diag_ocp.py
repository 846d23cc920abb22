"""Diag-OCP: a diagonally preconditioned optimizer with a geometric-series
closed-form step.

Per step, with 1-based step count t' and elementwise arithmetic throughout:

    m_t = beta1 m_{t-1} + (1 - beta1) g_t          first-moment EMA
    D_t = beta2 D_{t-1} + (1 - beta2) H_t          Hessian-diagonal EMA
    m_hat = m_t / (1 - beta1^t')                   bias correction
    D_hat = D_t / (1 - beta2^t')
    s = 1 - alpha D_hat                            per-coordinate base
    phi = (1 - s^t') / D_hat * m_hat               closed-form update
    x_t+1 = x_t (1 - alpha lambda) - phi           decoupled weight decay

The closed form sums the inner recursion phi_l = alpha m_hat + s phi_{l-1},
phi_0 = alpha m_hat, run t'-1 times; `step_recursive_reference` keeps that
literal loop as a test oracle. H_t must already be clipped into [mu, G_d],
which bounds D_hat into the same interval and keeps |s| <= max(1 - alpha mu,
alpha G_d - 1). Bases outside (-rho_max, rho_max) are clamped before
exponentiation (a divergent geometric series has no meaningful partial-sum
limit); the clamp is surfaced in StepDiagnostics rather than silently
applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OptimizerConfig:
    alpha: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    mu: float = 1e-4
    g_d: float = 1e4
    weight_decay: float = 0.008
    n_probes: int = 1
    probe_distribution: str = "standard_normal"
    safeguard_rho_max: float = 0.999

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError("alpha must be > 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1, beta2 must be in [0, 1)")
        if not 0.0 < self.mu <= self.g_d:
            raise ValueError("need 0 < mu <= g_d")
        if self.weight_decay < 0.0 or self.alpha * self.weight_decay >= 1.0:
            raise ValueError("need weight_decay >= 0 and alpha*weight_decay < 1")
        if self.n_probes < 1:
            raise ValueError("n_probes must be >= 1")
        if not 0.0 < self.safeguard_rho_max < 1.0:
            raise ValueError("safeguard_rho_max must be in (0, 1)")


@dataclass
class OptimizerState:
    """t completed steps plus the raw (uncorrected) EMA moments."""

    t: int
    m: np.ndarray
    D: np.ndarray

    @property
    def dim(self) -> int:
        return self.m.size


@dataclass(frozen=True)
class StepDiagnostics:
    rho: float                # max_i |s_i| after the safeguard (< 1 always)
    safeguard_triggered: bool
    n_clamped: int
    step_norm: float
    corrected_m_norm: float


def init_state(dim: int, cfg: OptimizerConfig) -> OptimizerState:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return OptimizerState(t=0, m=np.zeros(dim), D=np.zeros(dim))


def update_moments(state: OptimizerState, g, H, cfg: OptimizerConfig):
    """Advance both EMAs one step and return (state', m_hat, D_hat).

    H must already be clipped into [mu, g_d]; rejecting unclipped input here
    enforces the clamp-before-EMA ordering. The bias-corrected D_hat is a
    convex combination of clipped entries, so it lies in [mu, g_d]; the final
    clip only removes float rounding dust at the interval endpoints.
    """
    g = np.asarray(g, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    if g.shape != state.m.shape or H.shape != state.m.shape:
        raise ValueError("g/H dimension mismatch with optimizer state")
    if np.any(H < cfg.mu) or np.any(H > cfg.g_d):
        raise ValueError("H must be clipped into [mu, g_d] before the EMA update")
    t_next = state.t + 1
    m_next = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    d_next = cfg.beta2 * state.D + (1.0 - cfg.beta2) * H
    m_hat = m_next / (1.0 - cfg.beta1 ** t_next)
    d_hat = d_next / (1.0 - cfg.beta2 ** t_next)
    d_hat = np.clip(d_hat, cfg.mu, cfg.g_d)
    return OptimizerState(t=t_next, m=m_next, D=d_next), m_hat, d_hat


def step_closed_form(state: OptimizerState, x, m_hat, D_hat, cfg: OptimizerConfig):
    """Production update: x (1 - alpha lambda) - (1 - s^t')/D_hat * m_hat.

    `state` is the post-update_moments state, so state.t is the 1-based step
    count t'. Returns (x_next, StepDiagnostics); step_norm is ||x_next - x||.
    """
    x, m_hat, D_hat = _check_step_inputs(state, x, m_hat, D_hat)
    s = 1.0 - cfg.alpha * D_hat
    s_safe = np.clip(s, -cfg.safeguard_rho_max, cfg.safeguard_rho_max)
    n_clamped = int(np.count_nonzero(s_safe != s))
    phi = (1.0 - s_safe ** state.t) / D_hat * m_hat
    x_next = x * (1.0 - cfg.alpha * cfg.weight_decay) - phi
    diagnostics = StepDiagnostics(
        rho=float(np.max(np.abs(s_safe))),
        safeguard_triggered=n_clamped > 0,
        n_clamped=n_clamped,
        step_norm=float(np.linalg.norm(x_next - x)),
        corrected_m_norm=float(np.linalg.norm(m_hat)),
    )
    return x_next, diagnostics


def step_recursive_reference(state: OptimizerState, x, m_hat, D_hat,
                             cfg: OptimizerConfig) -> np.ndarray:
    """Literal inner loop, kept as a test oracle (cost grows with t').

    Runs phi_l = alpha m_hat + (1 - alpha D_hat) phi_{l-1} for t'-1
    applications from phi_0 = alpha m_hat, with no base safeguard, then
    applies the same weight decay and subtraction as the closed form.
    Matches step_closed_form whenever every |1 - alpha D_hat[i]| < 1.
    """
    x, m_hat, D_hat = _check_step_inputs(state, x, m_hat, D_hat)
    b = cfg.alpha * m_hat
    a = 1.0 - cfg.alpha * D_hat
    phi = b.copy()
    for _ in range(state.t - 1):
        phi = b + a * phi
    return x * (1.0 - cfg.alpha * cfg.weight_decay) - phi


def stability_margin(D_hat, cfg: OptimizerConfig) -> float:
    """max_i |1 - alpha D_hat[i]| before any safeguarding."""
    D_hat = np.asarray(D_hat, dtype=np.float64)
    if D_hat.size == 0:
        raise ValueError("D_hat must be nonempty")
    return float(np.max(np.abs(1.0 - cfg.alpha * D_hat)))


def _check_step_inputs(state, x, m_hat, D_hat):
    if state.t < 1:
        raise ValueError("no moments yet: update_moments must run before stepping")
    x = np.asarray(x, dtype=np.float64)
    m_hat = np.asarray(m_hat, dtype=np.float64)
    D_hat = np.asarray(D_hat, dtype=np.float64)
    if not (x.shape == m_hat.shape == D_hat.shape == state.m.shape):
        raise ValueError("x/m_hat/D_hat dimension mismatch with optimizer state")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(m_hat))
            and np.all(np.isfinite(D_hat))):
        raise ValueError("non-finite input to step")
    return x, m_hat, D_hat
