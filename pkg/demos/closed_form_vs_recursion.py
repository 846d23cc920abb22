"""The geometric-series step computed two ways.

The update coefficient (1 - s^t)/d_hat with s = 1 - alpha*d_hat can also be
built by literally unrolling phi <- alpha*m_hat + s*phi for t-1 rounds. The
closed form is O(d) per step regardless of t; the recursion is O(d*t). This
script checks they coincide and times both at a few horizon lengths.
"""

import time

import numpy as np

from diagocp.diag_ocp import (OptimizerConfig, OptimizerState,
                              step_closed_form, step_recursive_reference)

rng = np.random.default_rng(7)
dim = 1000
cfg = OptimizerConfig(alpha=0.2, mu=1e-6, g_d=1e6, weight_decay=0.0)
d_hat = rng.uniform(0.05, 1.9, dim) / cfg.alpha  # all bases inside the unit disc
m_hat = rng.standard_normal(dim)
x = rng.standard_normal(dim)

print(f"{'t':>6}  {'max |closed - recursive|':>25}  {'closed':>9}  {'recursive':>10}")
for t in (1, 10, 100, 1000, 10000):
    state = OptimizerState(t=t, m=m_hat.copy(), D=d_hat.copy())

    t0 = time.perf_counter()
    x_closed, _ = step_closed_form(state, x, m_hat, d_hat, cfg)
    t_closed = time.perf_counter() - t0

    t0 = time.perf_counter()
    x_rec = step_recursive_reference(state, x, m_hat, d_hat, cfg)
    t_rec = time.perf_counter() - t0

    dev = np.max(np.abs(x_closed - x_rec))
    print(f"{t:>6}  {dev:>25.3e}  {t_closed * 1e3:>8.2f}ms  {t_rec * 1e3:>9.2f}ms")

print()
print("agreement holds to floating-point accumulation error at every t,")
print("while the recursion's cost grows linearly with the step index")
