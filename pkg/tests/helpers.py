"""Shared test oracles: scalar LSTM reference, finite differences, data builders.

These stay deliberately independent of the library's vectorized code paths:
the LSTM reference is pure-Python loops over math.exp/math.tanh, and the
gradient checker only ever calls the network through its public forward.
"""

import datetime as dt
import math

import numpy as np

from fincast.ingest import PriceBar, PriceSeries
from fincast.models import assemble
from fincast.nn import mse_loss, mse_loss_grad


def lstm_cell_reference(params, h_prev, c_prev, x):
    """Scalar-loop LSTM cell: gates over [h_prev, x], no numpy arithmetic."""
    H, F = params.hidden, params.n_in
    z = [float(v) for v in h_prev] + [float(v) for v in x]

    def gate(W, b, squash):
        out = []
        for col in range(H):
            s = float(b[col])
            for row in range(H + F):
                s += z[row] * float(W[row, col])
            out.append(squash(s))
        return out

    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    i = gate(params.W_i, params.b_i, sig)
    f = gate(params.W_f, params.b_f, sig)
    o = gate(params.W_o, params.b_o, sig)
    chat = gate(params.W_c, params.b_c, math.tanh)
    c = [f[j] * float(c_prev[j]) + i[j] * chat[j] for j in range(H)]
    h = [o[j] * math.tanh(c[j]) for j in range(H)]
    return np.array(h), np.array(c)


def numeric_gradients(loss_fn, params, eps=1e-5):
    """Central finite differences of loss_fn with respect to each live array."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat, gflat = p.ravel(), g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            lp = loss_fn()
            flat[i] = orig - eps
            lm = loss_fn()
            flat[i] = orig
            gflat[i] = (lp - lm) / (2.0 * eps)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric, floor=1e-6):
    """Worst |a - n| / max(|a|, |n|, floor) over all parameter entries.

    The floor keeps near-zero gradients (where finite differences see only
    roundoff) from blowing up the ratio.
    """
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def check_network_gradients(net, X, y, drop_seed=0, training=True, eps=1e-5):
    """Analytic vs numeric gradients of batch MSE; returns the worst rel error.

    Dropout masks are pinned by reseeding the generator before every forward,
    so the numeric and analytic passes see the same network function.
    """

    def loss_fn():
        rng = np.random.default_rng(drop_seed)
        return mse_loss(net.forward(X, training=training, rng=rng), y)

    rng = np.random.default_rng(drop_seed)
    pred = net.forward(X, training=training, rng=rng)
    net.zero_grad()
    net.backward(mse_loss_grad(pred, y))
    analytic = [g.copy() for g in net.grads()]
    numeric = numeric_gradients(loss_fn, net.params(), eps=eps)
    return max_rel_error(analytic, numeric)


def relu_margin(net, X=None, drop_seed=0, training=True):
    """Smallest |preactivation| over the network's relu layers.

    Finite differences break when a relu input sits within the perturbation
    reach of its kink, so kink-adjacent random instances get resampled. When
    X is given, runs the same pinned-mask forward the checker will use;
    otherwise inspects the layers' last cached forward.
    """
    if X is not None:
        net.forward(X, training=training, rng=np.random.default_rng(drop_seed))
    margins = []
    for layer in net.layers:
        if getattr(layer, "activation", None) == "relu" and layer._pre is not None:
            margins.append(float(np.min(np.abs(layer._pre))))
    return min(margins) if margins else math.inf


def small_network(kind, seed, input_features=5):
    """Reduced-width variant of an architecture: hidden sizes 4/3/2."""
    rates = (0.1, 0.05, 0.01) if kind in ("mlp", "lstm") else ()
    return assemble(kind, (4, 3, 2, 1), rates, input_features,
                    np.random.default_rng(seed))


def synthetic_series(n, seed=0, start=dt.date(2021, 1, 4), level=1000.0,
                     amplitude=100.0, period=50.0, noise=2.0):
    """Noisy sine around a positive level, on consecutive weekdays."""
    rng = np.random.default_rng(seed)
    bars = []
    day = start
    t = 0
    while len(bars) < n:
        if day.weekday() < 5:
            close = level + amplitude * math.sin(2.0 * math.pi * t / period)
            close += noise * rng.standard_normal()
            bars.append(PriceBar(day, float(close)))
            t += 1
        day += dt.timedelta(days=1)
    return PriceSeries(bars)


def planted_sentiment_series(n, seed=0, start=dt.date(2021, 1, 4),
                             level=10000.0, jump_scale=50.0, noise=3.0):
    """Random walk whose daily jump is driven by a planted sentiment signal.

    Returns (PriceSeries, [DailySentiment]); close[t] - close[t-1] is
    jump_scale * sentiment[t] + noise.
    """
    from fincast.sentiment import DailySentiment

    rng = np.random.default_rng(seed)
    bars = []
    sentiments = []
    day = start
    close = level
    while len(bars) < n:
        if day.weekday() < 5:
            s = float(rng.uniform(-1.0, 1.0))
            if bars:
                close = close + jump_scale * s + noise * rng.standard_normal()
            bars.append(PriceBar(day, float(close)))
            sentiments.append(DailySentiment(day, s))
        day += dt.timedelta(days=1)
    return PriceSeries(bars), sentiments
