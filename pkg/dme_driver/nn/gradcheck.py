from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np

from ..exceptions import ContractError
from .tape import GradTape, Matrix

logger = logging.getLogger(__name__)


def grad_check(
    f: Callable[..., Matrix],
    inputs: Sequence[Matrix],
    eps: float = 1e-5,
    sample: int | None = None,
    seed: int = 0,
) -> float:
    """Compare tape gradients with central finite differences.

    Returns max |analytic - numeric| / max(1, |numeric|) over the checked
    coordinates. With ``sample`` set, at most that many coordinates per input
    are checked, picked by a seeded generator.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ContractError(f"eps must lie in [1e-7, 1e-3], got {eps}")
    with GradTape() as tape:
        out = f(*inputs)
    if out.shape != (1, 1):
        raise ContractError(f"grad_check needs a scalar-valued function, got output {out.shape}")
    analytic = tape.gradient(out, inputs)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for position, (matrix, grad) in enumerate(zip(inputs, analytic)):
        coords = list(np.ndindex(*matrix.shape))
        if sample is not None and len(coords) > sample:
            picked = rng.choice(len(coords), size=sample, replace=False)
            coords = [coords[i] for i in sorted(picked)]
        original = matrix.value
        for idx in coords:
            plus = original.copy()
            plus[idx] += eps
            matrix.value = plus
            f_plus = f(*inputs).item()
            minus = original.copy()
            minus[idx] -= eps
            matrix.value = minus
            f_minus = f(*inputs).item()
            matrix.value = original
            numeric = (f_plus - f_minus) / (2.0 * eps)
            error = abs(grad[idx] - numeric) / max(1.0, abs(numeric))
            if error > worst:
                worst = error
                logger.debug(f"input {position} at {idx}: analytic {grad[idx]:.6g} numeric {numeric:.6g}")
    return worst
