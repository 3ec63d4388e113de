"""The 6-layer acoustic network: three clipped-ReLU dense layers, one
unidirectional LSTM, another clipped-ReLU dense layer, and a log-softmax
output layer over the alphabet plus blank.

forward() runs one utterance (T x F feature matrix) and, in train mode,
returns a cache from which backward() computes exact parameter gradients by
backpropagation through time. Inference mode applies no dropout and returns
no cache.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    DEFAULT_RELU_CAP,
    DimensionMismatch,
    Rng,
    log_softmax_rows,
    matmul,
    relu_clip,
    softmax_rows,
)

# Packed LSTM gate order along the 4H axis.
GATE_ORDER = ("i", "g", "f", "o")
FORGET_BIAS_INIT = 1.0

# Canonical tensor names, in checkpoint/serialization order.
TENSOR_NAMES = (
    "layer1.W", "layer1.b",
    "layer2.W", "layer2.b",
    "layer3.W", "layer3.b",
    "layer4.W_gates", "layer4.b_gates",
    "layer5.W", "layer5.b",
    "layer6.W", "layer6.b",
)


class StaleCache(RuntimeError):
    """backward() was handed a cache from a different forward call."""


@dataclass(frozen=True)
class ModelDims:
    input_width: int
    hidden: int
    n_labels: int  # alphabet size + 1 (blank last)

    def __post_init__(self):
        if min(self.input_width, self.hidden) < 1 or self.n_labels < 2:
            raise ValueError(f"bad dims {self}")

    def tensor_shapes(self) -> dict[str, tuple[int, ...]]:
        f, h, c = self.input_width, self.hidden, self.n_labels
        return {
            "layer1.W": (f, h), "layer1.b": (h,),
            "layer2.W": (h, h), "layer2.b": (h,),
            "layer3.W": (h, h), "layer3.b": (h,),
            "layer4.W_gates": (2 * h, 4 * h), "layer4.b_gates": (4 * h,),
            "layer5.W": (h, h), "layer5.b": (h,),
            "layer6.W": (h, c), "layer6.b": (c,),
        }


@dataclass
class ModelParams:
    """All weight tensors, addressable by canonical name or by layer index."""

    dims: ModelDims
    tensors: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def names(self):
        return TENSOR_NAMES

    def layer_tensors(self, layer: int) -> dict[str, np.ndarray]:
        prefix = f"layer{layer}."
        return {k: v for k, v in self.tensors.items() if k.startswith(prefix)}

    def copy(self) -> "ModelParams":
        return ModelParams(self.dims, {k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> "ModelParams":
        return ModelParams(self.dims, {k: np.zeros_like(v) for k, v in self.tensors.items()})


def layer_of(tensor_name: str) -> int:
    return int(tensor_name.split(".")[0].removeprefix("layer"))


@dataclass(frozen=True)
class DropoutSpec:
    """Inverted dropout on the outputs of layers 1, 2, 3 and 5 only."""

    rate: float = 0.4

    def __post_init__(self):
        if not (0.0 <= self.rate < 1.0):
            raise ValueError(f"dropout rate must be in [0, 1), got {self.rate}")


def glorot_uniform(rng: Rng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


def init_params(dims: ModelDims, rng: Rng) -> ModelParams:
    """Glorot-uniform weights, zero biases, LSTM forget-gate bias 1."""
    h = dims.hidden
    tensors: dict[str, np.ndarray] = {}
    for name, shape in dims.tensor_shapes().items():
        if name.endswith(".b") or name.endswith(".b_gates"):
            tensors[name] = np.zeros(shape)
        else:
            tensors[name] = glorot_uniform(rng, shape[0], shape[1], shape)
    tensors["layer4.b_gates"][2 * h:3 * h] = FORGET_BIAS_INIT  # forget slice of (i,g,f,o)
    return ModelParams(dims, tensors)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def lstm_step(z: np.ndarray, w_gates: np.ndarray, b_gates: np.ndarray,
              c_prev: np.ndarray):
    """One LSTM step. z is the concatenated (h_prev, x_t) row.

    Returns (h, c, gates) where gates = (i, g, f, o) post-activation.
    """
    h = c_prev.shape[-1]
    pre = z @ w_gates + b_gates
    i = _sigmoid(pre[..., 0 * h:1 * h])
    g = np.tanh(pre[..., 1 * h:2 * h])
    f = _sigmoid(pre[..., 2 * h:3 * h])
    o = _sigmoid(pre[..., 3 * h:4 * h])
    c = f * c_prev + i * g
    return o * np.tanh(c), c, (i, g, f, o)


@dataclass
class ForwardCache:
    """Everything backward() needs to replay the forward pass exactly."""

    params_ref: ModelParams
    feats: np.ndarray
    pre: dict = field(default_factory=dict)        # pre-activations per dense layer
    dropped: dict = field(default_factory=dict)    # post-dropout outputs per dense layer
    drop_scale: dict = field(default_factory=dict) # mask/(1-rate), or None in eval
    lstm_z: np.ndarray | None = None               # T x 2H concatenated inputs
    lstm_gates: tuple | None = None                # (i, g, f, o), each T x H
    lstm_c: np.ndarray | None = None               # T x H cell states
    lstm_h: np.ndarray | None = None               # T x H hidden states
    probs: np.ndarray | None = None                # softmax of output logits
    relu_cap: float = DEFAULT_RELU_CAP


def _dropout_scale(rng: Rng, shape, rate: float) -> np.ndarray | None:
    if rate == 0.0:
        return None
    keep = rng.uniform(0.0, 1.0, shape) >= rate
    return keep.astype(np.float64) / (1.0 - rate)


def forward(params: ModelParams, feats: np.ndarray, dropout: DropoutSpec,
            mode: str = "infer", rng: Rng | None = None,
            relu_cap: float = DEFAULT_RELU_CAP):
    """Run the network over one utterance.

    Returns (logprobs, cache); cache is None in infer mode. Dropout masks
    are drawn from rng in layer order 1, 2, 3, 5.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    feats = np.asarray(feats, dtype=np.float64)
    dims = params.dims
    if feats.ndim != 2 or feats.shape[1] != dims.input_width:
        raise DimensionMismatch(
            f"features are {feats.shape}, model wants T x {dims.input_width}")
    train = mode == "train"
    if train and dropout.rate > 0.0 and rng is None:
        raise ValueError("train-mode dropout needs an rng")

    cache = ForwardCache(params_ref=params, feats=feats, relu_cap=relu_cap) if train else None
    rate = dropout.rate if train else 0.0

    x = feats
    for layer in (1, 2, 3):
        pre = matmul(x, params[f"layer{layer}.W"]) + params[f"layer{layer}.b"]
        act = relu_clip(pre, relu_cap)
        scale = _dropout_scale(rng, act.shape, rate) if train else None
        x = act * scale if scale is not None else act
        if cache is not None:
            cache.pre[layer] = pre
            cache.drop_scale[layer] = scale
            cache.dropped[layer] = x

    t_len = feats.shape[0]
    h_dim = dims.hidden
    w4, b4 = params["layer4.W_gates"], params["layer4.b_gates"]
    h_prev = np.zeros(h_dim)
    c_prev = np.zeros(h_dim)
    zs = np.empty((t_len, 2 * h_dim))
    hs = np.empty((t_len, h_dim))
    cs = np.empty((t_len, h_dim))
    gates_i = np.empty((t_len, h_dim))
    gates_g = np.empty((t_len, h_dim))
    gates_f = np.empty((t_len, h_dim))
    gates_o = np.empty((t_len, h_dim))
    for t in range(t_len):
        z = np.concatenate([h_prev, x[t]])
        h_t, c_t, (gi, gg, gf, go) = lstm_step(z, w4, b4, c_prev)
        zs[t], hs[t], cs[t] = z, h_t, c_t
        gates_i[t], gates_g[t], gates_f[t], gates_o[t] = gi, gg, gf, go
        h_prev, c_prev = h_t, c_t
    if cache is not None:
        cache.lstm_z, cache.lstm_h, cache.lstm_c = zs, hs, cs
        cache.lstm_gates = (gates_i, gates_g, gates_f, gates_o)

    pre5 = matmul(hs, params["layer5.W"]) + params["layer5.b"]
    act5 = relu_clip(pre5, relu_cap)
    scale5 = _dropout_scale(rng, act5.shape, rate) if train else None
    x5 = act5 * scale5 if scale5 is not None else act5
    if cache is not None:
        cache.pre[5] = pre5
        cache.drop_scale[5] = scale5
        cache.dropped[5] = x5

    logits = matmul(x5, params["layer6.W"]) + params["layer6.b"]
    logprobs = log_softmax_rows(logits)
    if cache is not None:
        cache.probs = softmax_rows(logits)
    return logprobs, cache


def backward(cache: ForwardCache, params: ModelParams,
             dlogprobs: np.ndarray) -> ModelParams:
    """Exact gradients for a scalar loss with per-logprob derivative dlogprobs.

    Freezing does not happen here; the optimizer masks updates instead.
    """
    if cache is None or cache.params_ref is not params:
        raise StaleCache("cache does not belong to these parameters")
    dlogprobs = np.asarray(dlogprobs, dtype=np.float64)
    dims = params.dims
    grads = params.zeros_like()
    cap = cache.relu_cap

    # log-softmax backward into the layer-6 logits
    dlogits = dlogprobs - cache.probs * dlogprobs.sum(axis=1, keepdims=True)
    grads.tensors["layer6.W"][:] = cache.dropped[5].T @ dlogits
    grads.tensors["layer6.b"][:] = dlogits.sum(axis=0)
    dx5 = dlogits @ params["layer6.W"].T

    if cache.drop_scale[5] is not None:
        dx5 = dx5 * cache.drop_scale[5]
    da5 = dx5 * _relu_clip_grad(cache.pre[5], cap)
    grads.tensors["layer5.W"][:] = cache.lstm_h.T @ da5
    grads.tensors["layer5.b"][:] = da5.sum(axis=0)
    dh_lstm = da5 @ params["layer5.W"].T

    dx_lstm = _lstm_backward(cache, params, grads, dh_lstm, dims.hidden)

    dx = dx_lstm
    for layer in (3, 2, 1):
        if cache.drop_scale[layer] is not None:
            dx = dx * cache.drop_scale[layer]
        da = dx * _relu_clip_grad(cache.pre[layer], cap)
        below = cache.feats if layer == 1 else cache.dropped[layer - 1]
        grads.tensors[f"layer{layer}.W"][:] = below.T @ da
        grads.tensors[f"layer{layer}.b"][:] = da.sum(axis=0)
        dx = da @ params[f"layer{layer}.W"].T
    return grads


def _relu_clip_grad(pre: np.ndarray, cap: float) -> np.ndarray:
    return ((pre > 0.0) & (pre < cap)).astype(np.float64)


def _lstm_backward(cache: ForwardCache, params: ModelParams, grads: ModelParams,
                   dh_out: np.ndarray, h_dim: int) -> np.ndarray:
    """BPTT over the LSTM; returns the gradient w.r.t. its input sequence."""
    gi, gg, gf, go = cache.lstm_gates
    cs, zs = cache.lstm_c, cache.lstm_z
    w4 = params["layer4.W_gates"]
    t_len = dh_out.shape[0]
    dW = grads.tensors["layer4.W_gates"]
    db = grads.tensors["layer4.b_gates"]
    dx = np.empty((t_len, h_dim))
    dh_rec = np.zeros(h_dim)
    dc_rec = np.zeros(h_dim)
    for t in range(t_len - 1, -1, -1):
        dh = dh_out[t] + dh_rec
        tc = np.tanh(cs[t])
        do = dh * tc
        dc = dh * go[t] * (1.0 - tc * tc) + dc_rec
        c_prev = cs[t - 1] if t > 0 else np.zeros(h_dim)
        df = dc * c_prev
        di = dc * gg[t]
        dg = dc * gi[t]
        da = np.concatenate([
            di * gi[t] * (1.0 - gi[t]),
            dg * (1.0 - gg[t] * gg[t]),
            df * gf[t] * (1.0 - gf[t]),
            do * go[t] * (1.0 - go[t]),
        ])
        dW += np.outer(zs[t], da)
        db += da
        dz = w4 @ da
        dh_rec = dz[:h_dim]
        dx[t] = dz[h_dim:]
        dc_rec = dc * gf[t]
    return dx
