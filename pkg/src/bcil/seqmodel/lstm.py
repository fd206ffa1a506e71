"""Stacked LSTM with an identity-activated linear read-out, and exact BPTT.

Weights live in a plain dict whose insertion order is the declaration order
used by checkpoints::

    lstm{l}.W  (n_in_l, 4H)   input weights, gate blocks ordered i, f, g, o
    lstm{l}.U  (H, 4H)        recurrent weights
    lstm{l}.b  (4H,)
    fc.W       (H, n_out)
    fc.b       (n_out,)

Gates use the logistic sigmoid; the candidate and the cell read-out use tanh.
Everything operates on a batch axis first: inputs are ``(B, T, n_in)``.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, NonFiniteGradient


def init_weights(n_in: int, n_out: int, layers: int, units: int, rng) -> dict:
    k = 1.0 / np.sqrt(units)
    w = {}
    for layer in range(layers):
        fan_in = n_in if layer == 0 else units
        w[f"lstm{layer}.W"] = rng.uniform(-k, k, (fan_in, 4 * units))
        w[f"lstm{layer}.U"] = rng.uniform(-k, k, (units, 4 * units))
        w[f"lstm{layer}.b"] = rng.uniform(-k, k, 4 * units)
    w["fc.W"] = rng.uniform(-k, k, (units, n_out))
    w["fc.b"] = rng.uniform(-k, k, n_out)
    return w


def expected_shapes(n_in: int, n_out: int, layers: int, units: int) -> dict:
    shapes = {}
    for layer in range(layers):
        shapes[f"lstm{layer}.W"] = (n_in if layer == 0 else units, 4 * units)
        shapes[f"lstm{layer}.U"] = (units, 4 * units)
        shapes[f"lstm{layer}.b"] = (4 * units,)
    shapes["fc.W"] = (units, n_out)
    shapes["fc.b"] = (n_out,)
    return shapes


def n_layers(weights: dict) -> int:
    return sum(1 for k in weights if k.endswith(".U"))


def zero_state(weights: dict, batch: int | None = None) -> list:
    units = weights["fc.W"].shape[0]
    shape = (units,) if batch is None else (batch, units)
    return [(np.zeros(shape), np.zeros(shape)) for _ in range(n_layers(weights))]


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _cell(x, h, c, W, U, b):
    z = x @ W + h @ U + b
    H = h.shape[-1]
    i = _sigmoid(z[..., :H])
    f = _sigmoid(z[..., H:2 * H])
    g = np.tanh(z[..., 2 * H:3 * H])
    o = _sigmoid(z[..., 3 * H:])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    return o * tc, c_new, (i, f, g, o, tc)


def model_step(weights: dict, x, state: list) -> tuple[np.ndarray, list]:
    """One time step through every layer; works with or without a batch axis."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != weights["lstm0.W"].shape[0]:
        raise DimensionMismatch(f"input has {x.shape[-1]} dims, model expects "
                                f"{weights['lstm0.W'].shape[0]}")
    new_state = []
    inp = x
    for layer, (h, c) in enumerate(state):
        h, c, _ = _cell(inp, h, c, weights[f"lstm{layer}.W"], weights[f"lstm{layer}.U"],
                        weights[f"lstm{layer}.b"])
        new_state.append((h, c))
        inp = h
    return inp @ weights["fc.W"] + weights["fc.b"], new_state


def _anchored(t: int, ar_period: int | None) -> bool:
    return ar_period is None or t % ar_period == 0


def forward(weights: dict, inputs, ar_period: int | None = None, keep: bool = False):
    """Run a window of ``T`` steps from a zero state.

    ``inputs`` holds the ground-truth inputs ``(B, T, n_in)``. With
    ``ar_period=None`` every step is fed ground truth (teacher forcing);
    otherwise ground truth enters at steps ``0, P, 2P, ...`` and the previous
    prediction is fed everywhere else. Returns predictions ``(B, T, n_out)``
    and, if ``keep``, the per-step cache needed by :func:`backward`.
    """
    inputs = np.asarray(inputs, dtype=float)
    B, T, n_in = inputs.shape
    if n_in != weights["lstm0.W"].shape[0]:
        raise DimensionMismatch(f"window has {n_in} input dims, model expects "
                                f"{weights['lstm0.W'].shape[0]}")
    n_out = weights["fc.W"].shape[1]
    if ar_period is not None and n_out != n_in:
        raise DimensionMismatch("free running needs matching input and output dims")
    L = n_layers(weights)
    layer_w = [(weights[f"lstm{l}.W"], weights[f"lstm{l}.U"], weights[f"lstm{l}.b"]) for l in range(L)]
    state = zero_state(weights, B)
    preds = np.empty((B, T, n_out))
    cache = []
    y = None
    for t in range(T):
        x = inputs[:, t] if _anchored(t, ar_period) else y
        inp = x
        step = []
        for layer in range(L):
            h, c = state[layer]
            h_new, c_new, gates = _cell(inp, h, c, *layer_w[layer])
            if keep:
                step.append((inp, h, c, gates))
            state[layer] = (h_new, c_new)
            inp = h_new
        y = inp @ weights["fc.W"] + weights["fc.b"]
        preds[:, t] = y
        if keep:
            cache.append((step, inp))
    return preds, cache


def backward(weights: dict, cache: list, dpreds, ar_period: int | None = None) -> dict:
    """Gradients of ``sum(dpreds * preds)`` w.r.t. every weight.

    In the free-running regime the gradient of a fed-back input is routed into
    the prediction that produced it, so the whole feedback chain is
    differentiated.
    """
    T = len(cache)
    L = n_layers(weights)
    grads = {k: np.zeros_like(v) for k, v in weights.items()}
    B = dpreds.shape[0]
    units = weights["fc.W"].shape[0]
    dh_rec = [np.zeros((B, units)) for _ in range(L)]
    dc_rec = [np.zeros((B, units)) for _ in range(L)]
    feedback = None
    for t in range(T - 1, -1, -1):
        step, h_top = cache[t]
        dy = dpreds[:, t]
        if feedback is not None:
            dy = dy + feedback
        grads["fc.W"] += h_top.T @ dy
        grads["fc.b"] += dy.sum(axis=0)
        dh_above = dy @ weights["fc.W"].T
        for layer in range(L - 1, -1, -1):
            x, h_prev, c_prev, (i, f, g, o, tc) = step[layer]
            dh = dh_above + dh_rec[layer]
            dc = dc_rec[layer] + dh * o * (1.0 - tc * tc)
            dz = np.concatenate([dc * g * i * (1.0 - i),
                                 dc * c_prev * f * (1.0 - f),
                                 dc * i * (1.0 - g * g),
                                 dh * tc * o * (1.0 - o)], axis=1)
            W = weights[f"lstm{layer}.W"]
            U = weights[f"lstm{layer}.U"]
            grads[f"lstm{layer}.W"] += x.T @ dz
            grads[f"lstm{layer}.U"] += h_prev.T @ dz
            grads[f"lstm{layer}.b"] += dz.sum(axis=0)
            dh_rec[layer] = dz @ U.T
            dc_rec[layer] = dc * f
            dh_above = dz @ W.T
        feedback = None if _anchored(t, ar_period) else dh_above
    return grads


def loss_mse(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape:
        raise DimensionMismatch(f"shape {predictions.shape} vs {targets.shape}")
    return float(np.mean((predictions - targets) ** 2))


def bptt_gradients(weights: dict, inputs, targets, ar_period: int | None = None):
    """Window MSE and its exact gradient; ``ar_period=None`` is teacher forcing."""
    targets = np.asarray(targets, dtype=float)
    preds, cache = forward(weights, inputs, ar_period, keep=True)
    if preds.shape != targets.shape:
        raise DimensionMismatch(f"predictions {preds.shape} vs targets {targets.shape}")
    loss = float(np.mean((preds - targets) ** 2))
    dpreds = 2.0 * (preds - targets) / preds.size
    grads = backward(weights, cache, dpreds, ar_period)
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient in {name}")
    return loss, grads
