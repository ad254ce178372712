"""Three-layer perceptron used as a per-action Q-value approximator.

Hidden units are logistic, the single output unit is linear so the network
can represent the negative values both reward schemes produce.
"""

from __future__ import annotations

import numpy as np


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class Perceptron:
    def __init__(
        self,
        weights_ih: np.ndarray,
        weights_ho: np.ndarray,
        learning_rate: float = 0.01,
        bias_h: np.ndarray | None = None,
        bias_o: float | None = None,
    ):
        self.weights_ih = np.asarray(weights_ih, dtype=np.float64)
        self.weights_ho = np.asarray(weights_ho, dtype=np.float64).reshape(-1)
        if self.weights_ih.ndim != 2 or self.weights_ih.shape[0] != self.weights_ho.shape[0]:
            raise ValueError(f"inconsistent weight shapes {self.weights_ih.shape} and {self.weights_ho.shape}")
        if learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        self.learning_rate = float(learning_rate)
        if (bias_h is None) != (bias_o is None):
            raise ValueError("give both biases or neither")
        self.bias_h = None if bias_h is None else np.asarray(bias_h, dtype=np.float64).reshape(-1)
        self.bias_o = None if bias_o is None else float(bias_o)

    @classmethod
    def init(cls, n_in: int, n_hidden: int, seed: int = 0, learning_rate: float = 0.01, bias: bool = False) -> Perceptron:
        """Weights drawn uniformly from [-0.5, 0.5] with a seeded generator."""
        if n_in < 1 or n_hidden < 1:
            raise ValueError(f"perceptron sizes must be >= 1, got {n_in}x{n_hidden}")
        rng = np.random.default_rng(seed)
        w_ih = rng.uniform(-0.5, 0.5, size=(n_hidden, n_in))
        w_ho = rng.uniform(-0.5, 0.5, size=n_hidden)
        if bias:
            return cls(w_ih, w_ho, learning_rate, rng.uniform(-0.5, 0.5, size=n_hidden), float(rng.uniform(-0.5, 0.5)))
        return cls(w_ih, w_ho, learning_rate)

    @property
    def n_in(self) -> int:
        return self.weights_ih.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.weights_ih.shape[0]

    @property
    def has_bias(self) -> bool:
        return self.bias_h is not None

    def copy(self) -> Perceptron:
        return Perceptron(
            self.weights_ih.copy(),
            self.weights_ho.copy(),
            self.learning_rate,
            None if self.bias_h is None else self.bias_h.copy(),
            self.bias_o,
        )

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.n_in:
            raise ValueError(f"input has {x.shape[0]} values, perceptron expects {self.n_in}")
        return x

    def hidden(self, x) -> np.ndarray:
        z = self.weights_ih @ self._check(x)
        if self.bias_h is not None:
            z = z + self.bias_h
        return sigmoid(z)

    def forward(self, x) -> float:
        h = self.hidden(x)
        out = float(self.weights_ho @ h)
        if self.bias_o is not None:
            out += self.bias_o
        return out

    __call__ = forward

    def gradients(self, x, target: float) -> dict[str, np.ndarray]:
        """Gradient of 0.5 * (target - forward(x))**2 with respect to each parameter."""
        x = self._check(x)
        h = self.hidden(x)
        err = target - self.forward(x)
        delta = err * self.weights_ho * h * (1.0 - h)
        grads = {"weights_ih": -np.outer(delta, x), "weights_ho": -err * h}
        if self.has_bias:
            grads["bias_h"] = -delta
            grads["bias_o"] = np.array(-err)
        return grads

    def train_to_target(self, x, q: float, nn: float | None = None) -> None:
        """One backpropagation step moving the output for ``x`` toward ``q``.

        ``nn`` is the output already computed for ``x``; the error is ``q - nn``.
        """
        x = self._check(x)
        h = self.hidden(x)
        if nn is None:
            nn = self.forward(x)
        err = q - nn
        if err == 0.0:
            return
        lr = self.learning_rate
        delta = err * self.weights_ho * h * (1.0 - h)
        self.weights_ho += lr * err * h
        # rank-one update, in place to avoid a second n_hidden x n_in array
        self.weights_ih += lr * np.outer(delta, x)
        if self.bias_h is not None:
            self.bias_h += lr * delta
            self.bias_o += lr * err

    def __repr__(self):
        return f"Perceptron({self.n_in}-{self.n_hidden}-1, lr={self.learning_rate})"
