"""Synthetic optimization problems with loss, gradient, and Hessian-vector
oracles, plus the seeded noise channels that drive them.

Every source of randomness flows through a :class:`BatchSeed`, a
(base_seed, step_index, channel) triple that maps to one deterministic draw.
Gradient noise, Hessian-probe noise, and probe vectors live on separate
channels so they are mutually independent at every step.

Problem kinds
-------------
quadratic            f(x) = 0.5 * sum_i h_i x_i^2, h_i > 0, minimum at 0
rosenbrock           f(x, y) = (1 - x)^2 + 100 (y - x^2)^2, minimum at (1, 1)
noisy_least_squares  f(x) = (1/n) ||A x - y||^2 over a fixed noisy dataset
mlp_regression       small ReLU network regressed onto a frozen teacher

The first two are deterministic; the last two are sample-based and support a
train/validation split and optional mini-batching. All kinds additionally
support an additive i.i.d. Gaussian gradient-noise channel (noise_std_grad),
which realizes mini-batch-style noise without literal subsampling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

_SEED_MASK = (1 << 64) - 1
_TINY = 1e-300


class Channel(enum.IntEnum):
    """Independent per-step noise channels."""

    GRADIENT = 0
    HESSIAN_NOISE = 1
    PROBE = 2


@dataclass(frozen=True)
class BatchSeed:
    """Address of one deterministic noise draw.

    Identical (base_seed, step_index, channel) triples always yield identical
    draws. This is what makes runs replayable, and it lets the
    central-difference HVP reuse one batch for both of its gradient calls so
    the sampling noise cancels in the difference.
    """

    base_seed: int
    step_index: int
    channel: Channel

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.base_seed & _SEED_MASK,
            spawn_key=(int(self.step_index), int(self.channel)),
        )
        return np.random.default_rng(ss)


def as_params(x) -> np.ndarray:
    """Validate and return a parameter vector as a 1-d float64 array.

    Raises ValueError for empty, non-1-d, or non-finite input.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("parameter vector must be 1-d and nonempty")
    if not np.all(np.isfinite(x)):
        raise ValueError("parameter vector has non-finite entries")
    return x


class ProblemOracle:
    """Common interface: eval_loss / eval_grad / hvp plus split evaluation.

    Subclasses fill in the clean full-data `_loss`, `_grad`, and (where an
    analytic form exists) `_hvp_exact`, all taking an optional row-index
    array; deterministic kinds ignore it. Passing seed=None to the public
    methods gives the noise-free full-batch value.
    """

    kind = "?"
    sample_based = False
    dim = 0
    hvp_mode = "exact"
    hvp_step_scale = 1e-5
    noise_std_grad = 0.0

    # -- public oracle surface -------------------------------------------

    def eval_loss(self, x, seed: BatchSeed | None = None) -> float:
        x = self._check(x)
        rows = self._batch_rows(seed.rng() if seed is not None else None)
        return float(self._loss(x, rows))

    def eval_grad(self, x, seed: BatchSeed | None = None) -> np.ndarray:
        x = self._check(x)
        rng = seed.rng() if seed is not None else None
        g = self._grad(x, self._batch_rows(rng))
        if self.noise_std_grad > 0.0 and rng is not None:
            g = g + self.noise_std_grad * rng.standard_normal(self.dim)
        return g

    def hvp(self, x, v, seed: BatchSeed | None = None) -> np.ndarray:
        """Hessian-vector product at x.

        Exact mode is analytic. CentralDifference mode returns
        (g(x + h v) - g(x - h v)) / (2 h) with h = step_scale (1 + ||x||) /
        (||v|| + tiny), calling eval_grad with the SAME seed on both sides.
        An all-zero v returns the zero vector.
        """
        x = self._check(x)
        v = as_params(v)
        if v.size != self.dim:
            raise ValueError(f"hvp direction has dim {v.size}, oracle dim {self.dim}")
        if self.hvp_mode == "exact":
            return self._hvp_exact(x, v)
        v_norm = float(np.linalg.norm(v))
        if v_norm == 0.0:
            return np.zeros_like(x)
        h = self.hvp_step_scale * (1.0 + float(np.linalg.norm(x))) / (v_norm + _TINY)
        g_plus = self.eval_grad(x + h * v, seed)
        g_minus = self.eval_grad(x - h * v, seed)
        return (g_plus - g_minus) / (2.0 * h)

    # -- split evaluation for recording ----------------------------------

    def train_loss(self, x) -> float:
        return float(self._loss(self._check(x), self._train_rows()))

    def val_loss(self, x) -> float:
        """Held-out loss; deterministic kinds report the train loss."""
        return float(self._loss(self._check(x), self._val_rows()))

    def default_init(self, rng: np.random.Generator | None = None) -> np.ndarray:
        raise NotImplementedError

    # -- subclass hooks ---------------------------------------------------

    def _loss(self, x, rows):
        raise NotImplementedError

    def _grad(self, x, rows):
        raise NotImplementedError

    def _hvp_exact(self, x, v):
        raise ValueError(f"exact HVP not available for kind {self.kind!r}")

    def _batch_rows(self, rng):
        return None

    def _train_rows(self):
        return None

    def _val_rows(self):
        return None

    def _check(self, x) -> np.ndarray:
        x = as_params(x)
        if x.size != self.dim:
            raise ValueError(f"x has dim {x.size}, oracle dim {self.dim}")
        return x


class Quadratic(ProblemOracle):
    """f(x) = 0.5 * sum_i h_i x_i^2 with explicit curvatures h_i > 0."""

    kind = "quadratic"

    def __init__(self, h, noise_std_grad=0.0, hvp_mode="exact", hvp_step_scale=1e-5):
        h = np.asarray(h, dtype=np.float64)
        if h.ndim != 1 or h.size == 0:
            raise ValueError("h must be a nonempty 1-d array")
        if not np.all(h > 0.0):
            raise ValueError("quadratic requires all h_i > 0")
        self.h = h
        self.dim = int(h.size)
        self.noise_std_grad = float(noise_std_grad)
        self.hvp_mode = _check_hvp_mode(hvp_mode)
        self.hvp_step_scale = float(hvp_step_scale)

    def _loss(self, x, rows):
        return 0.5 * np.sum(self.h * x * x)

    def _grad(self, x, rows):
        return self.h * x

    def _hvp_exact(self, x, v):
        return self.h * v

    def default_init(self, rng=None):
        return np.ones(self.dim)


class Rosenbrock2D(ProblemOracle):
    """f(x, y) = (1 - x)^2 + 100 (y - x^2)^2; global minimum at (1, 1)."""

    kind = "rosenbrock"
    dim = 2

    def __init__(self, noise_std_grad=0.0, hvp_mode="exact", hvp_step_scale=1e-5):
        self.noise_std_grad = float(noise_std_grad)
        self.hvp_mode = _check_hvp_mode(hvp_mode)
        self.hvp_step_scale = float(hvp_step_scale)

    def _loss(self, x, rows):
        a, b = x
        return (1.0 - a) ** 2 + 100.0 * (b - a * a) ** 2

    def _grad(self, x, rows):
        a, b = x
        return np.array(
            [-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]
        )

    def _hvp_exact(self, x, v):
        a, b = x
        h11 = 2.0 + 1200.0 * a * a - 400.0 * b
        h12 = -400.0 * a
        return np.array([h11 * v[0] + h12 * v[1], h12 * v[0] + 200.0 * v[1]])

    def default_init(self, rng=None):
        return np.array([-1.2, 1.0])


class _SampleBased(ProblemOracle):
    """Shared dataset plumbing: split, mini-batch selection, row losses."""

    sample_based = True

    def _setup_split(self, rng, n_samples, val_fraction, batch_size):
        if not 0.0 <= val_fraction < 1.0:
            raise ValueError("val_fraction must be in [0, 1)")
        perm = rng.permutation(n_samples)
        n_val = int(round(val_fraction * n_samples))
        if n_samples - n_val < 1:
            raise ValueError("split leaves no training samples")
        self._val_idx = np.sort(perm[:n_val])
        self._train_idx = np.sort(perm[n_val:])
        if batch_size is not None:
            batch_size = int(batch_size)
            if not 1 <= batch_size <= self._train_idx.size:
                raise ValueError("batch_size must be in [1, n_train]")
        self.batch_size = batch_size

    def _batch_rows(self, rng):
        if self.batch_size is None or rng is None:
            return self._train_idx
        return rng.choice(self._train_idx, size=self.batch_size, replace=False)

    def _train_rows(self):
        return self._train_idx

    def _val_rows(self):
        return self._val_idx if self._val_idx.size else self._train_idx


class NoisyLeastSquares(_SampleBased):
    """f(x) = (1/n) ||A x - y||^2 with y = A x_true + noise_std * eps.

    Design matrix, ground truth, and observation noise are all drawn once
    from design_seed, so the dataset is a fixed property of the problem.
    """

    kind = "noisy_least_squares"

    def __init__(self, design_seed=0, n_samples=64, noise_std=0.1, dim=10,
                 val_fraction=0.2, batch_size=None, noise_std_grad=0.0,
                 hvp_mode="exact", hvp_step_scale=1e-5):
        if dim < 1 or n_samples < 2:
            raise ValueError("need dim >= 1 and n_samples >= 2")
        self.dim = int(dim)
        rng = np.random.default_rng(np.random.SeedSequence(int(design_seed) & _SEED_MASK))
        self.A = rng.standard_normal((int(n_samples), self.dim))
        self.x_true = rng.standard_normal(self.dim)
        self.y = self.A @ self.x_true + float(noise_std) * rng.standard_normal(int(n_samples))
        self._setup_split(rng, int(n_samples), float(val_fraction), batch_size)
        self.noise_std_grad = float(noise_std_grad)
        self.hvp_mode = _check_hvp_mode(hvp_mode)
        self.hvp_step_scale = float(hvp_step_scale)

    def _loss(self, x, rows):
        r = self.A[rows] @ x - self.y[rows]
        return np.mean(r * r)

    def _grad(self, x, rows):
        r = self.A[rows] @ x - self.y[rows]
        return (2.0 / r.size) * (self.A[rows].T @ r)

    def _hvp_exact(self, x, v):
        rows = self._train_idx
        return (2.0 / rows.size) * (self.A[rows].T @ (self.A[rows] @ v))

    def default_init(self, rng=None):
        return np.zeros(self.dim)


class MlpRegression(_SampleBased):
    """ReLU network (at most two hidden layers) fit to a frozen teacher.

    layer_sizes = [d_in, hidden..., d_out]; the flat parameter vector packs
    (W_1, b_1, ..., W_L, b_L) so dim = sum_l (fan_in_l * fan_out_l +
    fan_out_l). Inputs are standard normal, targets are the teacher's
    outputs plus label noise, all drawn once from teacher_seed. The loss is
    the mean over samples of the summed squared output error, and the
    gradient is manual backprop with the ReLU subgradient at 0 taken as 0.

    No analytic HVP; the default mode is central differencing of the
    gradient oracle.
    """

    kind = "mlp_regression"
    hvp_mode = "central_difference"

    def __init__(self, layer_sizes=(8, 16, 2), teacher_seed=0, n_samples=256,
                 label_noise_std=0.05, val_fraction=0.2, batch_size=None,
                 noise_std_grad=0.0, hvp_mode="central_difference",
                 hvp_step_scale=1e-5):
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 3 or len(sizes) > 4:
            raise ValueError("layer_sizes must describe 1 or 2 hidden layers")
        if any(s < 1 for s in sizes):
            raise ValueError("layer sizes must be positive")
        if n_samples < 2:
            raise ValueError("need n_samples >= 2")
        self.sizes = sizes
        self.dim = sum(a * b + b for a, b in zip(sizes, sizes[1:]))
        mode = _check_hvp_mode(hvp_mode)
        if mode == "exact":
            raise ValueError("exact HVP not available for mlp_regression")
        self.hvp_mode = mode
        self.hvp_step_scale = float(hvp_step_scale)
        self.noise_std_grad = float(noise_std_grad)

        rng = np.random.default_rng(np.random.SeedSequence(int(teacher_seed) & _SEED_MASK))
        self.X = rng.standard_normal((int(n_samples), sizes[0]))
        teacher = self._kaiming(rng)
        self.Y = self._forward(teacher, self.X)[-1]
        self.Y = self.Y + float(label_noise_std) * rng.standard_normal(self.Y.shape)
        self._setup_split(rng, int(n_samples), float(val_fraction), batch_size)

    # -- parameter packing ------------------------------------------------

    def _unpack(self, theta):
        layers, off = [], 0
        for a, b in zip(self.sizes, self.sizes[1:]):
            w = theta[off:off + a * b].reshape(b, a)
            off += a * b
            layers.append((w, theta[off:off + b]))
            off += b
        return layers

    def _kaiming(self, rng):
        """Kaiming-uniform weights, zero biases, flattened."""
        parts = []
        for a, b in zip(self.sizes, self.sizes[1:]):
            bound = np.sqrt(6.0 / a)
            parts.append(rng.uniform(-bound, bound, size=b * a))
            parts.append(np.zeros(b))
        return np.concatenate(parts)

    # -- network ----------------------------------------------------------

    def _forward(self, theta, X):
        """Return the list of layer outputs, ending with the predictions."""
        layers = self._unpack(theta)
        outs = [X]
        z = X
        for i, (w, b) in enumerate(layers):
            a = z @ w.T + b
            z = np.maximum(a, 0.0) if i < len(layers) - 1 else a
            outs.append(z)
        return outs

    def _loss(self, theta, rows):
        pred = self._forward(theta, self.X[rows])[-1]
        diff = pred - self.Y[rows]
        return np.mean(np.sum(diff * diff, axis=1))

    def _grad(self, theta, rows):
        layers = self._unpack(theta)
        outs = self._forward(theta, self.X[rows])
        n = outs[0].shape[0]
        delta = (2.0 / n) * (outs[-1] - self.Y[rows])
        grads = [None] * len(layers)
        for i in range(len(layers) - 1, -1, -1):
            w, _ = layers[i]
            grads[i] = (delta.T @ outs[i], delta.sum(axis=0))
            if i > 0:
                delta = (delta @ w) * (outs[i] > 0.0)
        return np.concatenate([np.concatenate((gw.ravel(), gb)) for gw, gb in grads])

    def default_init(self, rng=None):
        if rng is None:
            rng = np.random.default_rng(0)
        return self._kaiming(rng)


def _check_hvp_mode(mode: str) -> str:
    if mode not in ("exact", "central_difference"):
        raise ValueError(f"unknown hvp mode {mode!r}")
    return mode


_PROBLEM_KINDS = {
    "quadratic": Quadratic,
    "rosenbrock": Rosenbrock2D,
    "noisy_least_squares": NoisyLeastSquares,
    "mlp_regression": MlpRegression,
}


def make_problem(kind: str, **params) -> ProblemOracle:
    """Construct a problem oracle by kind string (see _PROBLEM_KINDS)."""
    try:
        cls = _PROBLEM_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown problem kind {kind!r}") from None
    return cls(**params)
