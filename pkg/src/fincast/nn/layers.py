"""Dense, LSTM and dropout layers with hand-written backward passes.

All arithmetic is float64. Every layer caches what its backward pass needs
during forward; backward accumulates parameter gradients in place and
returns the gradient with respect to its input.
"""

from typing import NamedTuple, Optional

import numpy as np

ACTIVATIONS = ("relu", "tanh", "linear")


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function: exp(-log(1 + exp(-z)))."""
    return np.exp(-np.logaddexp(0.0, -z))


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Dense:
    """Fully connected layer: activation(x @ W + b)."""

    kind = "dense"

    def __init__(self, n_in: int, n_out: int, activation: str = "linear",
                 rng: Optional[np.random.Generator] = None):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.n_in = n_in
        self.n_out = n_out
        self.activation = activation
        if rng is None:
            self.W = np.zeros((n_in, n_out))
        else:
            self.W = glorot_uniform(rng, (n_in, n_out), n_in, n_out)
        self.b = np.zeros(n_out)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._x = None
        self._pre = None

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.dW, self.db]

    def zero_grad(self):
        self.dW[:] = 0.0
        self.db[:] = 0.0

    def forward(self, x: np.ndarray, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
        if x.shape[-1] != self.n_in:
            raise ValueError(f"dense expects {self.n_in} inputs, got shape {x.shape}")
        pre = x @ self.W + self.b
        self._x = x
        self._pre = pre
        if self.activation == "relu":
            return np.maximum(pre, 0.0)
        if self.activation == "tanh":
            return np.tanh(pre)
        return pre

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError("backward called before forward")
        if self.activation == "relu":
            dpre = dy * (self._pre > 0.0)
        elif self.activation == "tanh":
            t = np.tanh(self._pre)
            dpre = dy * (1.0 - t * t)
        else:
            dpre = dy
        self.dW += self._x.T @ dpre
        self.db += dpre.sum(axis=0)
        return dpre @ self.W.T


class LstmState(NamedTuple):
    h: np.ndarray
    c: np.ndarray


class LstmCellParams:
    """Gate parameters of one LSTM cell.

    Stored fused as W: (hidden+input, 4*hidden) and b: (4*hidden,) so a
    timestep costs a single matmul; the per-gate tensors W_i, W_f, W_o, W_c
    and b_i, b_f, b_o, b_c are exposed as views into the fused storage,
    column blocks ordered [input, forget, output, candidate].
    """

    def __init__(self, n_in: int, hidden: int,
                 rng: Optional[np.random.Generator] = None):
        self.n_in = n_in
        self.hidden = hidden
        if rng is None:
            self.W = np.zeros((hidden + n_in, 4 * hidden))
        else:
            # every gate matrix is (hidden+n_in, hidden): same fan for all four
            self.W = glorot_uniform(rng, (hidden + n_in, 4 * hidden),
                                    hidden + n_in, hidden)
        self.b = np.zeros(4 * hidden)
        # forget-gate bias starts at 1 so early training does not wipe the cell state
        self.b[hidden:2 * hidden] = 1.0

    def _wview(self, k):
        h = self.hidden
        return self.W[:, k * h:(k + 1) * h]

    def _bview(self, k):
        h = self.hidden
        return self.b[k * h:(k + 1) * h]

    W_i = property(lambda self: self._wview(0))
    W_f = property(lambda self: self._wview(1))
    W_o = property(lambda self: self._wview(2))
    W_c = property(lambda self: self._wview(3))
    b_i = property(lambda self: self._bview(0))
    b_f = property(lambda self: self._bview(1))
    b_o = property(lambda self: self._bview(2))
    b_c = property(lambda self: self._bview(3))


def lstm_cell_step(params: LstmCellParams, prev: LstmState, x_t: np.ndarray) -> LstmState:
    """One LSTM cell update.

    Gates read the concatenation [h_prev, x_t]; the new cell state is
    f*c_prev + i*c_candidate and the new hidden state is o*tanh(c).
    Accepts single vectors (hidden,) or batches (B, hidden).
    """
    h_prev, c_prev = prev
    if x_t.shape[-1] != params.n_in or h_prev.shape[-1] != params.hidden:
        raise ValueError("lstm_cell_step: shape mismatch")
    hsz = params.hidden
    z = np.concatenate([h_prev, x_t], axis=-1)
    a = z @ params.W + params.b
    gates = sigmoid(a[..., :3 * hsz])
    i = gates[..., :hsz]
    f = gates[..., hsz:2 * hsz]
    o = gates[..., 2 * hsz:]
    chat = np.tanh(a[..., 3 * hsz:])
    c = f * c_prev + i * chat
    h = o * np.tanh(c)
    return LstmState(h, c)


class LstmLayer:
    """LSTM over a full sequence, with backpropagation through time.

    Input is (B, T, n_in). Output is the stacked hidden states (B, T, hidden)
    when return_sequences is set, else the final hidden state (B, hidden).
    Initial state is zeros.
    """

    kind = "lstm"

    def __init__(self, n_in: int, hidden: int, return_sequences: bool = False,
                 rng: Optional[np.random.Generator] = None):
        self.cell = LstmCellParams(n_in, hidden, rng=rng)
        self.return_sequences = return_sequences
        self.dW = np.zeros_like(self.cell.W)
        self.db = np.zeros_like(self.cell.b)
        self._cache = None

    @property
    def n_in(self):
        return self.cell.n_in

    @property
    def hidden(self):
        return self.cell.hidden

    def params(self):
        return [self.cell.W, self.cell.b]

    def grads(self):
        return [self.dW, self.db]

    def zero_grad(self):
        self.dW[:] = 0.0
        self.db[:] = 0.0

    def forward(self, x: np.ndarray, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
        if x.ndim != 3 or x.shape[2] != self.n_in:
            raise ValueError(f"lstm expects (B, T, {self.n_in}), got shape {x.shape}")
        B, T, _ = x.shape
        hsz = self.hidden
        h = np.zeros((B, hsz))
        c = np.zeros((B, hsz))
        Z = np.empty((T, B, hsz + self.n_in))
        I = np.empty((T, B, hsz))
        F = np.empty((T, B, hsz))
        O = np.empty((T, B, hsz))
        Chat = np.empty((T, B, hsz))
        Cprev = np.empty((T, B, hsz))
        TanhC = np.empty((T, B, hsz))
        hs = np.empty((B, T, hsz)) if self.return_sequences else None
        W, b = self.cell.W, self.cell.b
        for t in range(T):
            z = np.concatenate([h, x[:, t, :]], axis=1)
            a = z @ W + b
            gates = sigmoid(a[:, :3 * hsz])
            i = gates[:, :hsz]
            f = gates[:, hsz:2 * hsz]
            o = gates[:, 2 * hsz:]
            chat = np.tanh(a[:, 3 * hsz:])
            Z[t], I[t], F[t], O[t], Chat[t], Cprev[t] = z, i, f, o, chat, c
            c = f * c + i * chat
            tanh_c = np.tanh(c)
            TanhC[t] = tanh_c
            h = o * tanh_c
            if self.return_sequences:
                hs[:, t, :] = h
        self._cache = (Z, I, F, O, Chat, Cprev, TanhC, B, T)
        return hs if self.return_sequences else h

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        Z, I, F, O, Chat, Cprev, TanhC, B, T = self._cache
        hsz = self.hidden
        W = self.cell.W
        dx = np.empty((B, T, self.n_in))
        dh_next = np.zeros((B, hsz))
        dc_next = np.zeros((B, hsz))
        da = np.empty((B, 4 * hsz))
        for t in range(T - 1, -1, -1):
            if self.return_sequences:
                dh = dh_next + dy[:, t, :]
            else:
                dh = dh_next + dy if t == T - 1 else dh_next
            i, f, o, chat, tanh_c = I[t], F[t], O[t], Chat[t], TanhC[t]
            dc = dc_next + dh * o * (1.0 - tanh_c * tanh_c)
            da[:, :hsz] = dc * chat * i * (1.0 - i)
            da[:, hsz:2 * hsz] = dc * Cprev[t] * f * (1.0 - f)
            da[:, 2 * hsz:3 * hsz] = dh * tanh_c * o * (1.0 - o)
            da[:, 3 * hsz:] = dc * i * (1.0 - chat * chat)
            self.dW += Z[t].T @ da
            self.db += da.sum(axis=0)
            dz = da @ W.T
            dh_next = dz[:, :hsz]
            dx[:, t, :] = dz[:, hsz:]
            dc_next = dc * f
        return dx


class Dropout:
    """Inverted dropout: zero with probability `rate`, scale survivors by 1/(1-rate).

    Identity at inference, so trained networks need no rescaling. The mask is
    drawn from the generator passed to forward; a reseeded generator
    reproduces the mask exactly.
    """

    kind = "dropout"

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self._mask = None

    def params(self):
        return []

    def grads(self):
        return []

    def zero_grad(self):
        pass

    def forward(self, x: np.ndarray, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("dropout in training mode needs an rng")
        self._mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * self._mask

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return dy
        return dy * self._mask


def dropout_forward(rate: float, x: np.ndarray, training: bool,
                    rng_seed: int) -> np.ndarray:
    """Functional dropout with a fixed seed; see Dropout for semantics."""
    layer = Dropout(rate)
    return layer.forward(x, training=training,
                         rng=np.random.default_rng(rng_seed))
