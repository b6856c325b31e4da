"""Finite-difference gradient verification.

The reference gradient is a central difference evaluated on float64
copies of the parameters, which keeps the truncation + roundoff noise
orders of magnitude below the comparison tolerance.  The loss callable
is re-evaluated under ``no_grad`` for every probe, so the check stays
independent of the backward pass it validates.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor, no_grad


def finite_difference_grad(
    loss_fn: Callable[[], Tensor], param: Tensor, h: float = 1e-3
) -> np.ndarray:
    """Central-difference gradient of ``loss_fn`` w.r.t. every element of ``param``.

    ``loss_fn`` must be deterministic and must read ``param.data`` afresh on
    each call; the parameter is perturbed in place and restored.
    """
    flat = param.data.reshape(-1)
    grad = np.zeros_like(flat)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_fn().item()
            flat[i] = orig - h
            down = loss_fn().item()
            flat[i] = orig
            grad[i] = (up - down) / (2.0 * h)
    return grad.reshape(param.data.shape)


def relative_errors(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: dict[str, Tensor],
    h: float = 1e-3,
    rtol: float = 1e-3,
) -> dict[str, float]:
    """Compare autodiff gradients against central differences for every parameter.

    Returns the worst relative error per parameter; raises AssertionError on
    the first parameter exceeding ``rtol``.
    """
    for p in params.values():
        p.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = {name: (np.array(p.grad) if p.grad is not None else np.zeros_like(p.data))
                for name, p in params.items()}
    worst: dict[str, float] = {}
    for name, p in params.items():
        numeric = finite_difference_grad(loss_fn, p, h=h)
        err = relative_errors(analytic[name], numeric)
        worst[name] = float(err.max()) if err.size else 0.0
        if worst[name] > rtol:
            bad = np.unravel_index(int(err.argmax()), err.shape)
            raise AssertionError(
                f"gradient mismatch for '{name}' at {bad}: "
                f"autodiff {analytic[name][bad]:.6g}, finite-diff {numeric[bad]:.6g}, "
                f"relative error {worst[name]:.3g} > {rtol:g}"
            )
    return worst
