"""Mean squared error loss."""

import numpy as np


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean over all elements of (pred - target)^2.

    Mean rather than sum keeps the loss magnitude independent of batch size.
    """
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_loss_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Gradient of mse_loss with respect to pred."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return (2.0 / pred.size) * (pred - target)
