"""Small trainable building blocks shared across model components."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, dropout, matmul, relu


def init_uniform(rng: np.random.Generator, shape, fan_in: int, dtype=np.float32) -> Tensor:
    """Trainable tensor initialized uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(fan_in)
    data = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return Tensor(data, requires_grad=True)


@dataclass
class Mlp2:
    """Two-layer perceptron: linear, ReLU, linear.

    Dropout, when active, is applied to the hidden activation.
    """

    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    @classmethod
    def create(cls, rng, d_in: int, d_hidden: int, d_out: int, dtype=np.float32) -> "Mlp2":
        return cls(
            w1=init_uniform(rng, (d_in, d_hidden), d_in, dtype),
            b1=init_uniform(rng, (1, d_hidden), d_in, dtype),
            w2=init_uniform(rng, (d_hidden, d_out), d_hidden, dtype),
            b2=init_uniform(rng, (1, d_out), d_hidden, dtype),
        )

    def __call__(self, x: Tensor, drop_p: float = 0.0, train: bool = False, rng=None) -> Tensor:
        hidden = relu(matmul(x, self.w1) + self.b1)
        hidden = dropout(hidden, drop_p, train, rng)
        return matmul(hidden, self.w2) + self.b2

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {
            f"{prefix}.w1": self.w1,
            f"{prefix}.b1": self.b1,
            f"{prefix}.w2": self.w2,
            f"{prefix}.b2": self.b2,
        }
