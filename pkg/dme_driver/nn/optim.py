from __future__ import annotations

from typing import Sequence

import numpy as np

from ..exceptions import ContractError, ShapeError
from .tape import Matrix, check_finite


def sgd_step(
    params: Sequence[Matrix],
    grads: Sequence[np.ndarray],
    lr: float,
    momentum: float = 0.0,
    velocity: list[np.ndarray] | None = None,
) -> Sequence[Matrix]:
    """params <- params - lr * (grads [+ momentum * velocity]).

    Values are rebound rather than written in place, so arrays cached on a
    finished GradTape keep the values they were recorded with.
    """
    if lr <= 0:
        raise ContractError(f"learning rate must be positive, got {lr}")
    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} parameters but {len(grads)} gradients")
    if momentum and velocity is None:
        raise ContractError("momentum needs a velocity buffer")
    for index, (param, grad) in enumerate(zip(params, grads)):
        if param.shape != grad.shape:
            raise ShapeError(f"parameter {param.name or index} is {param.shape} but its gradient is {grad.shape}")
        step = grad
        if momentum:
            velocity[index] = momentum * velocity[index] + grad
            step = velocity[index]
        updated = param.value - lr * step
        check_finite(updated, f"sgd_step on {param.name or index}")
        param.value = updated
    return params


def clip_by_global_norm(grads: list[np.ndarray], max_norm: float) -> tuple[list[np.ndarray], float]:
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads)))
    if max_norm > 0 and norm > max_norm:
        factor = max_norm / norm
        grads = [g * factor for g in grads]
    return grads, norm
