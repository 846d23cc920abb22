"""Reference optimizers for head-to-head comparison: SGD (optional heavy-ball
momentum), Adam, RAdam, and a diagonal AdaHessian.

All four use 1-based bias correction where applicable and the same decoupled
multiplicative weight decay as the main optimizer, x <- x (1 - lr * wd),
applied before the gradient-based step, so comparisons differ only in the
preconditioner. RAdam follows the published variance-rectification schedule:
rectified Adam once rho_t > 4, plain momentum SGD during the warmup.
AdaHessianDiag scales by sqrt of the EMA of squared clipped Hessian-diagonal
estimates: x <- x - lr * m_hat / (sqrt(v_hat_H) + eps).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BASELINE_KINDS = ("sgd", "adam", "radam", "adahessian")


@dataclass(frozen=True)
class BaselineConfig:
    kind: str
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    momentum: float = 0.0   # sgd only

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if not self.lr > 0.0:
            raise ValueError("lr must be > 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1, beta2 must be in [0, 1)")
        if not self.eps > 0.0:
            raise ValueError("eps must be > 0")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")


@dataclass
class BaselineState:
    """t completed steps; m doubles as the SGD momentum buffer; v is the
    second-moment EMA (squared gradients, or squared Hessian diagonal for
    adahessian; unused by sgd)."""

    t: int
    m: np.ndarray
    v: np.ndarray


def init_baseline_state(dim: int) -> BaselineState:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return BaselineState(t=0, m=np.zeros(dim), v=np.zeros(dim))


def baseline_step(state: BaselineState, x, g, cfg: BaselineConfig,
                  h_diag=None):
    """One update of cfg.kind; returns (x_next, state')."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if x.shape != state.m.shape or g.shape != state.m.shape:
        raise ValueError("x/g dimension mismatch with optimizer state")
    t = state.t + 1
    decayed = x * (1.0 - cfg.lr * cfg.weight_decay)

    if cfg.kind == "sgd":
        buf = cfg.momentum * state.m + g
        return decayed - cfg.lr * buf, BaselineState(t, buf, state.v)

    if cfg.kind == "adahessian":
        if h_diag is None:
            raise ValueError("adahessian requires a clipped Hessian diagonal estimate")
        h_diag = np.asarray(h_diag, dtype=np.float64)
        if h_diag.shape != state.m.shape:
            raise ValueError("h_diag dimension mismatch with optimizer state")
        m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * h_diag * h_diag
        m_hat = m / (1.0 - cfg.beta1 ** t)
        v_hat = v / (1.0 - cfg.beta2 ** t)
        return decayed - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps), BaselineState(t, m, v)

    # adam / radam
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g * g
    m_hat = m / (1.0 - cfg.beta1 ** t)
    v_hat = v / (1.0 - cfg.beta2 ** t)
    state_next = BaselineState(t, m, v)

    if cfg.kind == "adam":
        return decayed - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps), state_next

    rho_inf = 2.0 / (1.0 - cfg.beta2) - 1.0
    rho_t = rho_inf - 2.0 * t * cfg.beta2 ** t / (1.0 - cfg.beta2 ** t)
    if rho_t > 4.0:
        rect = np.sqrt(
            (rho_t - 4.0) * (rho_t - 2.0) * rho_inf
            / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t)
        )
        return decayed - cfg.lr * rect * m_hat / (np.sqrt(v_hat) + cfg.eps), state_next
    return decayed - cfg.lr * m_hat, state_next
