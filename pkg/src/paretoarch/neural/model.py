"""Composite forecasting network: embedding, block stack, projection head.

Parameters live in a flat ordered dict of named tensors
(``"blocks.2.ssm.a"``, ``"head.w"``...), which keeps checkpointing and
the optimizer trivial.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..arch_space import ATTENTION, GRU, LSTM, SSM, ArchitectureSpec, BlockKind
from .autograd import ShapeMismatch, Tensor, layer_norm, parameter, softmax
from .recurrent import gru_sequence, linear_recurrence, lstm_sequence


# -- parameter layout ------------------------------------------------------

def _ffn_shapes(h: int, e: int) -> dict[str, tuple[int, ...]]:
    return {"ffn.w1": (h, e * h), "ffn.b1": (e * h,), "ffn.w2": (e * h, h), "ffn.b2": (h,)}


def block_shapes(kind: BlockKind, h: int, ffn_expansion: int = 4) -> dict[str, tuple[int, ...]]:
    if kind == GRU:
        return {"w_ih": (3 * h, h), "w_hh": (3 * h, h), "b_ih": (3 * h,), "b_hh": (3 * h,)}
    if kind == LSTM:
        return {"w_ih": (4 * h, h), "w_hh": (4 * h, h), "b_ih": (4 * h,), "b_hh": (4 * h,)}
    norms = {"ln1.scale": (h,), "ln1.shift": (h,), "ln2.scale": (h,), "ln2.shift": (h,)}
    if kind == ATTENTION:
        proj = {}
        for p in "qkvo":
            proj[f"w{p}"] = (h, h)
            proj[f"b{p}"] = (h,)
        return {**norms, **proj, **_ffn_shapes(h, ffn_expansion)}
    if kind == SSM:
        diag = {name: (h,) for name in ("a", "log_dt", "b", "c", "d")}
        return {**norms, **diag, **_ffn_shapes(h, ffn_expansion)}
    raise ValueError(f"unknown block kind {kind!r}")


def param_shapes(spec: ArchitectureSpec) -> dict[str, tuple[int, ...]]:
    h = spec.hidden_dim
    shapes = {"embed.w": (spec.input_dim, h), "embed.b": (h,)}
    for i, kind in enumerate(spec.blocks):
        for name, shape in block_shapes(kind, h, spec.ffn_expansion).items():
            shapes[f"blocks.{i}.{kind.name.lower()}.{name}"] = shape
    shapes["head.w"] = (h, spec.horizon)
    shapes["head.b"] = (spec.horizon,)
    return shapes


def block_param_count(kind: BlockKind, h: int, ffn_expansion: int = 4) -> int:
    e = ffn_expansion
    ffn = 2 * e * h * h + e * h + h
    if kind == GRU:
        return 6 * h * h + 6 * h
    if kind == LSTM:
        return 8 * h * h + 8 * h
    if kind == ATTENTION:
        return 4 * h + 4 * (h * h + h) + ffn
    if kind == SSM:
        return 4 * h + 5 * h + ffn
    raise ValueError(f"unknown block kind {kind!r}")


def parameter_count(spec: ArchitectureSpec) -> int:
    """Closed-form trainable parameter count of ``spec``.

    The positional table and the final (affine-free) layer norm carry no
    parameters.
    """
    h = spec.hidden_dim
    embed = spec.input_dim * h + h
    head = h * spec.horizon + spec.horizon
    return embed + sum(block_param_count(k, h, spec.ffn_expansion) for k in spec.blocks) + head


def positional_table(steps: int, h: int) -> np.ndarray:
    pos = np.arange(steps)[:, None]
    freq = np.exp(-math.log(10000.0) * (np.arange(0, h, 2) / h))
    table = np.zeros((steps, h))
    table[:, 0::2] = np.sin(pos * freq)
    table[:, 1::2] = np.cos(pos * freq[: h // 2])
    return table


def init_params(spec: ArchitectureSpec, rng: np.random.Generator) -> dict[str, Tensor]:
    h = spec.hidden_dim
    bound = 1.0 / math.sqrt(h)
    params = {}
    for name, shape in param_shapes(spec).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "scale":
            value = np.ones(shape)
        elif ".ssm." in name and leaf in ("a", "log_dt", "b"):
            value = {
                # continuous pole -exp(a) in [-1, -0.1]; step size exp(log_dt) in [0.01, 0.1]
                "a": np.log(rng.uniform(0.1, 1.0, size=shape)),
                "log_dt": np.log(rng.uniform(0.01, 0.1, size=shape)),
                "b": np.ones(shape),
            }[leaf]
        elif len(shape) == 2 or leaf in ("c", "d"):
            value = rng.uniform(-bound, bound, size=shape)
        else:
            value = np.zeros(shape)
        params[name] = parameter(value)
    return params


# -- forward pass ------------------------------------------------------------

def _linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return x @ w + b


def _ffn(x: Tensor, p: dict[str, Tensor]) -> Tensor:
    return _linear(_linear(x, p["ffn.w1"], p["ffn.b1"]).gelu(), p["ffn.w2"], p["ffn.b2"])


def attention_weights(x: Tensor, p: dict[str, Tensor], heads: int) -> tuple[Tensor, Tensor]:
    """Multi-head self-attention over the full window (no causal mask).

    Returns (output, attention probabilities of shape (batch, heads, T, T)).
    """
    batch, steps, h = x.shape
    dh = h // heads

    def split(t: Tensor) -> Tensor:
        return t.reshape(batch, steps, heads, dh).transpose(0, 2, 1, 3)

    q = split(_linear(x, p["wq"], p["bq"]))
    k = split(_linear(x, p["wk"], p["bk"]))
    v = split(_linear(x, p["wv"], p["bv"]))
    probs = softmax((q @ k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(dh)), axis=-1)
    ctx = (probs @ v).transpose(0, 2, 1, 3).reshape(batch, steps, h)
    return _linear(ctx, p["wo"], p["bo"]), probs


def attention_block(x: Tensor, p: dict[str, Tensor], heads: int) -> Tensor:
    if x.shape[-1] % heads:
        raise ShapeMismatch(f"hidden size {x.shape[-1]} not divisible by {heads} heads")
    attn, _ = attention_weights(layer_norm(x, p["ln1.scale"], p["ln1.shift"]), p, heads)
    y = x + attn
    return y + _ffn(layer_norm(y, p["ln2.scale"], p["ln2.shift"]), p)


def ssm_discretize(p: dict[str, Tensor]) -> tuple[Tensor, Tensor]:
    """Zero-order-hold decay and input gain per channel."""
    a_cont = -(p["a"].exp())
    decay = (p["log_dt"].exp() * a_cont).exp()
    gain = (decay - 1.0) / a_cont * p["b"]
    return decay, gain


def ssm_scan(x: Tensor, p: dict[str, Tensor]) -> Tensor:
    """y_t = C s_t + D x_t with s_t = decay * s_{t-1} + gain * x_t, s_0 = 0."""
    decay, gain = ssm_discretize(p)
    states = linear_recurrence(decay, x * gain)
    return states * p["c"] + x * p["d"]


def ssm_block(x: Tensor, p: dict[str, Tensor]) -> Tensor:
    y = x + ssm_scan(layer_norm(x, p["ln1.scale"], p["ln1.shift"]), p)
    return y + _ffn(layer_norm(y, p["ln2.scale"], p["ln2.shift"]), p)


def downsample(window: np.ndarray, stride: int) -> np.ndarray:
    """Temporal stride on the input window, keeping the most recent step."""
    lookback = window.shape[1]
    return window[:, (lookback - 1) % stride :: stride]


class CompositeModel:
    def __init__(self, spec: ArchitectureSpec, params: dict[str, Tensor] | None = None, seed: int = 0):
        self.spec = spec
        self.params = params if params is not None else init_params(spec, np.random.default_rng(seed))
        self._pos = positional_table(spec.steps, spec.hidden_dim)

    def block_params(self, i: int) -> dict[str, Tensor]:
        prefix = f"blocks.{i}.{self.spec.blocks[i].name.lower()}."
        return {k[len(prefix):]: v for k, v in self.params.items() if k.startswith(prefix)}

    def parameter_count(self) -> int:
        """Runtime walk over the instantiated tensors."""
        return sum(t.data.size for t in self.params.values())

    def forward(self, window) -> Tensor:
        spec = self.spec
        window = np.asarray(window, dtype=np.float64)
        if window.ndim != 3 or window.shape[1] != spec.lookback or window.shape[2] != spec.input_dim:
            raise ShapeMismatch(
                f"expected window (batch, {spec.lookback}, {spec.input_dim}), got {window.shape}"
            )
        x = downsample(window, spec.downsample_stride)
        p = self.params
        z = _linear(Tensor(x), p["embed.w"], p["embed.b"]) + self._pos
        for i, kind in enumerate(spec.blocks):
            bp = self.block_params(i)
            if kind == GRU:
                z = gru_sequence(z, bp["w_ih"], bp["w_hh"], bp["b_ih"], bp["b_hh"])
            elif kind == LSTM:
                z = lstm_sequence(z, bp["w_ih"], bp["w_hh"], bp["b_ih"], bp["b_hh"])
            elif kind == ATTENTION:
                z = attention_block(z, bp, spec.heads)
            else:
                z = ssm_block(z, bp)
        last = layer_norm(z[:, -1, :])
        out = _linear(last, p["head.w"], p["head.b"])
        return out.reshape(window.shape[0], spec.horizon, 1)

    __call__ = forward

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for k, v in self.params.items():
            if state[k].shape != v.data.shape:
                raise ShapeMismatch(f"checkpoint tensor {k} has shape {state[k].shape}, expected {v.data.shape}")
            v.data = np.array(state[k], dtype=np.float64)


# -- checkpoints ---------------------------------------------------------

def save_checkpoint(model: CompositeModel, path: str | Path) -> None:
    """Write an ``.npz`` with every parameter plus a ``__key__`` entry."""
    arrays = model.state()
    arrays["__key__"] = np.array(json.dumps(model.spec.key))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path: str | Path, spec: ArchitectureSpec | None = None) -> CompositeModel:
    from ..arch_space import parse_key

    with np.load(path, allow_pickle=False) as data:
        key = json.loads(str(data["__key__"]))
        if spec is None:
            spec = parse_key(key)
        elif spec.key != key:
            raise ValueError(f"checkpoint belongs to {key!r}, not {spec.key!r}")
        model = CompositeModel(spec)
        model.load_state({k: data[k] for k in data.files if k != "__key__"})
    return model
