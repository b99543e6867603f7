"""From-scratch neural toolkit: layers, loss, Adam, and checkpointable networks."""

from .layers import (
    ACTIVATIONS,
    Dense,
    Dropout,
    LstmCellParams,
    LstmLayer,
    LstmState,
    dropout_forward,
    glorot_uniform,
    lstm_cell_step,
    sigmoid,
)
from .loss import mse_loss, mse_loss_grad
from .network import Network
from .optim import Adam

__all__ = [
    "ACTIVATIONS",
    "Adam",
    "Dense",
    "Dropout",
    "LstmCellParams",
    "LstmLayer",
    "LstmState",
    "Network",
    "dropout_forward",
    "glorot_uniform",
    "lstm_cell_step",
    "mse_loss",
    "mse_loss_grad",
    "sigmoid",
]
