import math
from dataclasses import dataclass, replace

from oocpll.model.mlp import MlpParams


def cosine_lr(base_lr: float, epoch: int, total_epochs: int) -> float:
    """Single-cycle cosine decay from base_lr at epoch 0 to zero at total_epochs."""
    if total_epochs <= 0:
        return base_lr
    epoch = min(max(epoch, 0), total_epochs)
    return max(0.0, base_lr * 0.5 * (1.0 + math.cos(math.pi * epoch / total_epochs)))


@dataclass(eq=False)
class OptimizerState:
    """SGD with momentum and coupled weight decay."""

    velocities: MlpParams
    base_lr: float
    momentum: float = 0.9
    weight_decay: float = 0.001
    epoch: int = 0
    total_epochs: int = 1

    def __post_init__(self):
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")

    @classmethod
    def for_params(cls, params: MlpParams, base_lr: float, momentum: float, weight_decay: float, total_epochs: int) -> "OptimizerState":
        return cls(params.zeros_like(), base_lr, momentum, weight_decay, 0, total_epochs)

    @property
    def lr(self) -> float:
        return cosine_lr(self.base_lr, self.epoch, self.total_epochs)

    def at_epoch(self, epoch: int) -> "OptimizerState":
        return replace(self, epoch=epoch)


def sgd_step(params: MlpParams, grads: MlpParams, state: OptimizerState) -> tuple[MlpParams, OptimizerState]:
    """v <- momentum * v + (grad + weight_decay * param); param <- param - lr * v."""
    if not (params.same_shapes(grads) and params.same_shapes(state.velocities)):
        raise ValueError("parameter, gradient and velocity shapes do not match")
    lr = state.lr
    new_params, new_velocities = [], []
    for param, grad, velocity in zip(params.tensors(), grads.tensors(), state.velocities.tensors()):
        velocity = state.momentum * velocity + (grad + state.weight_decay * param)
        new_velocities.append(velocity)
        new_params.append(param - lr * velocity)
    return _unflatten(new_params), replace(state, velocities=_unflatten(new_velocities))


def _unflatten(tensors: list) -> MlpParams:
    return MlpParams(tensors[0::2], tensors[1::2])
