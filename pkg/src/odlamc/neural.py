"""Small fully connected network trained online with Adam.

The same class serves both learners; they differ only in activations and
loss:

==========  ======  ========  =======
profile     hidden  output    loss
==========  ======  ========  =======
odl         relu    sigmoid   logloss
qlearning   tanh    identity  mse
==========  ======  ========  =======

Weights are stored as ``(fan_in, fan_out)`` matrices and inputs as row
vectors, so a batch ``X`` of shape ``(n, F)`` flows as ``X @ W + b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PROB_CLAMP = 1e-7
STD_FLOOR = 1e-6

HIDDEN = {"relu", "tanh"}
OUTPUT = {"sigmoid", "identity"}
LOSS_FOR_OUTPUT = {"sigmoid": "logloss", "identity": "mse"}


class ModelDivergence(FloatingPointError):
    """Raised when the network produces non-finite values."""


def sigmoid(t):
    # tanh form is overflow-free for any finite input
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(t, dtype=float)))


@dataclass
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def identity(cls, n_features: int) -> Scaler:
        return cls(np.zeros(n_features), np.ones(n_features))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


def scaler_fit(X: np.ndarray) -> Scaler:
    """Per-feature mean and population std; near-constant columns get std 1."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("scaler needs at least 2 samples")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std < STD_FLOOR] = 1.0
    return Scaler(mean, std)


class MLP:
    """Two-hidden-layer perceptron with its own Adam state and feature scaler."""

    def __init__(self, sizes=(8, 32, 16, 1), hidden="relu", output="sigmoid",
                 rng: np.random.Generator | None = None):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) != 4 or sizes[-1] != 1 or min(sizes) < 1:
            raise ValueError(f"expected layer sizes [F, H1, H2, 1], got {list(sizes)}")
        if hidden not in HIDDEN or output not in OUTPUT:
            raise ValueError(f"unsupported activations {hidden!r}/{output!r}")
        self.sizes = sizes
        self.hidden = hidden
        self.output = output
        self.scaler = Scaler.identity(sizes[0])
        self.flops = 0
        self.train_flops = 0
        self.divergences = 0
        self.reset(rng if rng is not None else np.random.default_rng(0))

    # -- structure ---------------------------------------------------------

    @property
    def loss_kind(self) -> str:
        return LOSS_FOR_OUTPUT[self.output]

    @property
    def n_nodes(self) -> int:
        return sum(self.sizes)

    @property
    def n_connections(self) -> int:
        return sum(a * b for a, b in zip(self.sizes[:-1], self.sizes[1:]))

    @property
    def n_params(self) -> int:
        return self.n_connections + sum(self.sizes[1:])

    def memory_floats(self) -> int:
        """Floats held by the model: parameters, two Adam moments, scaler."""
        return 3 * self.n_params + 2 * self.sizes[0]

    def params(self) -> list[np.ndarray]:
        """Views into the flat parameter vector: W1, b1, W2, b2, W3, b3."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend((W, b))
        return out

    def _views(self, flat: np.ndarray):
        weights, biases = [], []
        pos = 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            weights.append(flat[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out))
            pos += fan_in * fan_out
            biases.append(flat[pos:pos + fan_out])
            pos += fan_out
        return weights, biases

    def reset(self, rng: np.random.Generator) -> None:
        """Glorot-uniform weights, zero biases, fresh Adam state."""
        self.flat = np.zeros(self.n_params)
        self.weights, self.biases = self._views(self.flat)
        for W, (fan_in, fan_out) in zip(self.weights, zip(self.sizes[:-1], self.sizes[1:])):
            a = math.sqrt(6.0 / (fan_in + fan_out))
            W[...] = rng.uniform(-a, a, size=(fan_in, fan_out))
        self.adam_m = np.zeros(self.n_params)
        self.adam_v = np.zeros(self.n_params)
        self.adam_t = 0

    # -- inference ---------------------------------------------------------

    def _act(self, z):
        return np.maximum(z, 0.0) if self.hidden == "relu" else np.tanh(z)

    def forward(self, X: np.ndarray) -> np.ndarray:
        """Network output for already-scaled inputs of shape ``(n, F)``."""
        W1, W2, W3 = self.weights
        b1, b2, b3 = self.biases
        h = self._act(X @ W1 + b1)
        h = self._act(h @ W2 + b2)
        z = (h @ W3 + b3)[:, 0]
        self.flops += self._forward_flops(X.shape[0])
        out = sigmoid(z) if self.output == "sigmoid" else z
        if not math.isfinite(out.sum()) and not np.all(np.isfinite(out)):
            raise ModelDivergence("non-finite network output")
        return out

    def predict(self, X_raw: np.ndarray) -> np.ndarray:
        return self.forward(self.scaler.transform(X_raw))

    def _forward_flops(self, n: int) -> int:
        # multiply-add per connection, bias add and activation per node
        return n * (2 * self.n_connections + 2 * sum(self.sizes[1:]))

    # -- training ----------------------------------------------------------

    def loss_and_grad(self, X: np.ndarray, target: np.ndarray, kind: str | None = None):
        """Mean loss over the batch and its gradient for every parameter.

        ``target`` holds ACK labels in {0, 1} for ``logloss`` and rewards for
        ``mse``.  Gradients are returned in the order of :meth:`params`.
        """
        kind = kind or self.loss_kind
        if kind != self.loss_kind:
            raise ValueError(f"{kind} loss does not match a {self.output} output")
        n = X.shape[0]
        if n == 0:
            raise ValueError("empty batch")
        W1, W2, W3 = self.weights
        b1, b2, b3 = self.biases
        z1 = X @ W1 + b1
        h1 = self._act(z1)
        z2 = h1 @ W2 + b2
        h2 = self._act(z2)
        z3 = (h2 @ W3 + b3)[:, 0]

        if kind == "logloss":
            p = np.clip(sigmoid(z3), PROB_CLAMP, 1.0 - PROB_CLAMP)
            loss = -np.mean(target * np.log(p) + (1.0 - target) * np.log(1.0 - p))
            # d/dz of the clamped loss: zero where the clamp is active
            active = (p > PROB_CLAMP) & (p < 1.0 - PROB_CLAMP)
            dz3 = np.where(active, p - target, 0.0) / n
        else:
            err = z3 - target
            loss = np.mean(err * err)
            dz3 = 2.0 * err / n

        dz3 = dz3[:, None]
        gW3 = h2.T @ dz3
        gb3 = dz3.sum(axis=0)
        dh2 = dz3 @ W3.T
        dz2 = dh2 * self._act_grad(z2, h2)
        gW2 = h1.T @ dz2
        gb2 = dz2.sum(axis=0)
        dh1 = dz2 @ W2.T
        dz1 = dh1 * self._act_grad(z1, h1)
        gW1 = X.T @ dz1
        gb1 = dz1.sum(axis=0)

        F = self.sizes[0]
        # forward pass plus backward: two matmuls per layer except the input one
        self.flops += self._forward_flops(n) + n * (
            4 * self.n_connections - 2 * F * self.sizes[1] + 2 * sum(self.sizes[1:])
        )
        return float(loss), [gW1, gb1, gW2, gb2, gW3, gb3]

    def _act_grad(self, z, h):
        if self.hidden == "relu":
            return (z > 0).astype(float)
        return 1.0 - h * h

    def adam_step(self, grads, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8) -> None:
        """One bias-corrected Adam update; ``grads`` is a list like :meth:`params`."""
        params = self.params()
        if len(grads) != len(params) or any(np.shape(g) != p.shape for g, p in zip(grads, params)):
            raise ValueError("gradient shapes do not match parameters")
        g = np.concatenate([np.ravel(x) for x in grads])
        self.adam_t += 1
        t = self.adam_t
        m, v = self.adam_m, self.adam_v
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        self.flat -= lr * (m / (1.0 - beta1 ** t)) / (np.sqrt(v / (1.0 - beta2 ** t)) + eps)
        self.flops += 10 * self.n_params

    def fit(self, X_raw: np.ndarray, target: np.ndarray, steps: int = 10, batch_size: int = 64,
            lr: float = 1e-3, rng: np.random.Generator | None = None) -> list[float]:
        """Refit the scaler, then take ``steps`` Adam steps from the current weights.

        Mini-batches are drawn uniformly with replacement.  A non-finite loss
        resets the weights (and Adam state) and counts a divergence; training
        then continues from the fresh weights.  Returns the per-step losses.
        """
        X_raw = np.asarray(X_raw, dtype=float)
        target = np.asarray(target, dtype=float)
        n = X_raw.shape[0]
        if n == 0:
            raise ValueError("cannot fit on an empty buffer")
        rng = rng if rng is not None else np.random.default_rng(0)
        if n >= 2:
            self.scaler = scaler_fit(X_raw)
        X = self.scaler.transform(X_raw)
        bs = min(batch_size, n)
        trace = []
        start = self.flops
        for _ in range(steps):
            idx = rng.integers(0, n, size=bs)
            with np.errstate(invalid="ignore", over="ignore"):
                loss, grads = self.loss_and_grad(X[idx], target[idx])
            if not (math.isfinite(loss) and all(np.all(np.isfinite(g)) for g in grads)):
                self.divergences += 1
                self.reset(rng)
                continue
            trace.append(loss)
            self.adam_step(grads, lr=lr)
        self.train_flops += self.flops - start
        return trace

    # -- persistence -------------------------------------------------------

    def dumps(self) -> str:
        """Flat text snapshot: header line, scaler, then row-major weights."""
        def row(a):
            return " ".join(repr(float(v)) for v in np.ravel(a))

        lines = [
            "mlp " + " ".join(str(s) for s in self.sizes) + f" {self.hidden} {self.output}",
            "scaler_mean " + row(self.scaler.mean),
            "scaler_std " + row(self.scaler.std),
        ]
        for i, (W, b) in enumerate(zip(self.weights, self.biases), start=1):
            lines.append(f"W{i} " + row(W))
            lines.append(f"b{i} " + row(b))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> MLP:
        rows = {}
        header = None
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, rest = line.partition(" ")
            if key == "mlp":
                header = rest.split()
            else:
                rows[key] = np.array([float(v) for v in rest.split()])
        if header is None or len(header) != 6:
            raise ValueError("missing or malformed 'mlp' header line")
        sizes = tuple(int(s) for s in header[:4])
        model = cls(sizes, hidden=header[4], output=header[5])
        model.scaler = Scaler(rows["scaler_mean"], rows["scaler_std"])
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            model.weights[i][...] = rows[f"W{i + 1}"].reshape(fan_in, fan_out)
            model.biases[i][...] = rows[f"b{i + 1}"]
        return model
