"""
Optimizer
SGD with momentum and weight decay, plus the step-decay learning rate schedule
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from app.errors import ArgumentError
from app.net.network import Network
from app.tensor import assert_finite


@dataclass(frozen=True)
class StepSchedule:
    """lr = base_lr * gamma ** (epoch // step_epochs)"""

    base_lr: float
    gamma: float = 0.1
    step_epochs: int = 0

    def lr_at(self, epoch: int) -> float:
        if self.step_epochs <= 0:
            return self.base_lr
        return self.base_lr * self.gamma ** (epoch // self.step_epochs)


def sgd_step(
    network: Network,
    grads: Dict[str, np.ndarray],
    lr: float,
    momentum: float = 0.9,
    weight_decay: float = 5e-4,
    lr_mult: Optional[Dict[str, float]] = None,
) -> None:
    """
    Update parameters in place

        v <- momentum * v - lr * mult * (g + weight_decay * w)
        w <- w + v

    Args:
        network: Network to update
        grads: Gradients keyed like network.params
        lr: Learning rate
        momentum: Momentum coefficient in [0, 1)
        weight_decay: L2 coefficient
        lr_mult: Optional per-layer multipliers keyed by layer name ("conv1", "fc2", ...)
    """
    if lr <= 0:
        raise ArgumentError(f"lr must be > 0, got {lr}")
    if not 0.0 <= momentum < 1.0:
        raise ArgumentError(f"momentum must lie in [0, 1), got {momentum}")
    if weight_decay < 0:
        raise ArgumentError(f"weight_decay must be >= 0, got {weight_decay}")

    for name, grad in grads.items():
        assert_finite(grad, "gradient", param=name)

    lr_mult = lr_mult or {}
    for name, weight in network.params.items():
        layer = name.split(".", 1)[0]
        step = lr * lr_mult.get(layer, 1.0)
        velocity = network.momentum[name]
        velocity *= momentum
        velocity -= step * (grads[name] + weight_decay * weight)
        weight += velocity
    network.mark_updated()
