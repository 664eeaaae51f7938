"""Feasibility classifier inference: per-customer multi-head attention over
items, a GRU over the full visit sequence, and a sigmoid head.

All math runs in float32 to match training. Weight bundles travel as JSON;
see WEIGHT_FORMAT_VERSION and tensor_specs() for the on-disk contract.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .packing import PackingQuery

WEIGHT_FORMAT_VERSION = 1
GRU_CONVENTION = "zrh-v1"
DEFAULT_LN_EPS = 1e-5


class WeightsError(ValueError):
    pass


@dataclass(frozen=True)
class ModelMeta:
    d_h: int = 16
    heads: int = 4
    layers: int = 2
    d_ff: int = 64
    ln_eps: float = DEFAULT_LN_EPS

    @property
    def d_k(self) -> int:
        return self.d_h // self.heads


def tensor_specs(meta: ModelMeta) -> dict[str, tuple[int, ...]]:
    d_h, d_ff = meta.d_h, meta.d_ff
    specs: dict[str, tuple[int, ...]] = {
        "embed.W0": (d_h, 2),
        "embed.b0": (d_h,),
    }
    for l in range(meta.layers):
        p = f"mha.{l}."
        specs.update(
            {
                p + "Wq": (d_h, d_h),
                p + "Wk": (d_h, d_h),
                p + "Wv": (d_h, d_h),
                p + "Wo": (d_h, d_h),
                p + "ln1.gamma": (d_h,),
                p + "ln1.beta": (d_h,),
                p + "ln2.gamma": (d_h,),
                p + "ln2.beta": (d_h,),
                p + "ff.W1": (d_ff, d_h),
                p + "ff.b1": (d_ff,),
                p + "ff.W2": (d_h, d_ff),
                p + "ff.b2": (d_h,),
            }
        )
    specs.update(
        {
            "gru.Wz": (d_h, d_h),
            "gru.Wr": (d_h, d_h),
            "gru.Wh": (d_h, d_h),
            "gru.Uz": (d_h, d_h),
            "gru.Ur": (d_h, d_h),
            "gru.Uh": (d_h, d_h),
            "gru.bz": (d_h,),
            "gru.br": (d_h,),
            "gru.bh": (d_h,),
            "head.W1": (d_ff, d_h),
            "head.b1": (d_ff,),
            "head.W2": (1, d_ff),
            "head.b2": (1,),
        }
    )
    return specs


@dataclass(frozen=True)
class ModelWeights:
    meta: ModelMeta
    tensors: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]


@dataclass(frozen=True)
class Prediction:
    probability: float
    feasible: bool


def zero_weights(meta: ModelMeta = ModelMeta()) -> ModelWeights:
    tensors = {
        name: np.zeros(shape, dtype=np.float32)
        for name, shape in tensor_specs(meta).items()
    }
    return ModelWeights(meta=meta, tensors=tensors)


def load_weights(document: str) -> ModelWeights:
    try:
        obj = json.loads(document)
    except json.JSONDecodeError as exc:
        raise WeightsError(f"malformed weight document: {exc}") from None
    if obj.get("version") != WEIGHT_FORMAT_VERSION:
        raise WeightsError(f"unknown weight format version {obj.get('version')!r}")
    raw_meta = obj.get("meta", {})
    if raw_meta.get("gru") != GRU_CONVENTION:
        raise WeightsError(f"unknown GRU convention tag {raw_meta.get('gru')!r}")
    meta = ModelMeta(
        d_h=int(raw_meta["d_h"]),
        heads=int(raw_meta["heads"]),
        layers=int(raw_meta["layers"]),
        d_ff=int(raw_meta["d_ff"]),
        ln_eps=float(raw_meta.get("ln_eps", DEFAULT_LN_EPS)),
    )
    if meta.d_h % meta.heads != 0:
        raise WeightsError("embed dim must be divisible by head count")
    specs = tensor_specs(meta)
    raw_tensors = obj.get("tensors", {})
    tensors = {}
    for name, shape in specs.items():
        if name not in raw_tensors:
            raise WeightsError(f"missing tensor {name!r}")
        entry = raw_tensors[name]
        got_shape = tuple(entry["shape"])
        if got_shape != shape:
            raise WeightsError(f"tensor {name!r}: shape {got_shape}, expected {shape}")
        arr = np.asarray(entry["data"], dtype=np.float32).reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise WeightsError(f"tensor {name!r} contains non-finite values")
        tensors[name] = arr
    return ModelWeights(meta=meta, tensors=tensors)


def dump_weights(w: ModelWeights) -> str:
    obj = {
        "version": WEIGHT_FORMAT_VERSION,
        "meta": {
            "d_h": w.meta.d_h,
            "heads": w.meta.heads,
            "layers": w.meta.layers,
            "d_ff": w.meta.d_ff,
            "ln_eps": w.meta.ln_eps,
            "gru": GRU_CONVENTION,
        },
        "tensors": {
            name: {"shape": list(t.shape), "data": [float(v) for v in t.reshape(-1)]}
            for name, t in w.tensors.items()
        },
    }
    return json.dumps(obj)


def random_weights(meta: ModelMeta = ModelMeta(), seed: int = 0) -> ModelWeights:
    """Uniform fan-in initialization, the same scheme the trainer uses."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in tensor_specs(meta).items():
        fan_in = shape[1] if len(shape) == 2 else shape[0]
        bound = 1.0 / math.sqrt(max(fan_in, 1))
        tensors[name] = rng.uniform(-bound, bound, size=shape).astype(np.float32)
    return ModelWeights(meta=meta, tensors=tensors)


# ---------------------------------------------------------------------------
# Forward pass


def _layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True, dtype=np.float32)
    var = np.mean((x - mean) ** 2, axis=-1, keepdims=True, dtype=np.float32)
    return ((x - mean) / np.sqrt(var + np.float32(eps))) * gamma + beta


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted, dtype=np.float32)
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x, dtype=np.float32))


def _mha(h: np.ndarray, w: ModelWeights, layer: int) -> np.ndarray:
    """Multi-head self-attention over one customer's items. h: (m, d_h)."""
    meta = w.meta
    p = f"mha.{layer}."
    q = h @ w[p + "Wq"].T
    k = h @ w[p + "Wk"].T
    v = h @ w[p + "Wv"].T
    m = h.shape[0]
    d_k = meta.d_k
    outs = []
    for j in range(meta.heads):
        sl = slice(j * d_k, (j + 1) * d_k)
        scores = (q[:, sl] @ k[:, sl].T) / np.float32(math.sqrt(d_k))
        outs.append(_softmax(scores) @ v[:, sl])
    concat = np.concatenate(outs, axis=1)
    return concat @ w[p + "Wo"].T


def _attention_block(h: np.ndarray, w: ModelWeights, layer: int) -> np.ndarray:
    meta = w.meta
    p = f"mha.{layer}."
    eps = meta.ln_eps
    hat = _layer_norm(h + _mha(h, w, layer), w[p + "ln1.gamma"], w[p + "ln1.beta"], eps)
    ff = np.maximum(hat @ w[p + "ff.W1"].T + w[p + "ff.b1"], np.float32(0.0))
    ff = ff @ w[p + "ff.W2"].T + w[p + "ff.b2"]
    return _layer_norm(hat + ff, w[p + "ln2.gamma"], w[p + "ln2.beta"], eps)


def gru_step(x: np.ndarray, h: np.ndarray, w: ModelWeights) -> np.ndarray:
    """z = sig(Wz x + Uz h + bz); r likewise; cand = tanh(Wh x + Uh (r*h) + bh);
    h' = (1 - z) * h + z * cand."""
    z = _sigmoid(w["gru.Wz"] @ x + w["gru.Uz"] @ h + w["gru.bz"])
    r = _sigmoid(w["gru.Wr"] @ x + w["gru.Ur"] @ h + w["gru.br"])
    cand = np.tanh(w["gru.Wh"] @ x + w["gru.Uh"] @ (r * h) + w["gru.bh"], dtype=np.float32)
    return (np.float32(1.0) - z) * h + z * cand


def encode_items(query: PackingQuery, w: ModelWeights) -> list[np.ndarray]:
    """Per-customer embeddings after the attention stack; one (m, d_h) array per group."""
    H, W = query.surface
    out = []
    for group in query.groups:
        x = np.array(
            [[iw / W, ih / H] for iw, ih in group], dtype=np.float32
        )
        h = x @ w["embed.W0"].T + w["embed.b0"]
        for layer in range(w.meta.layers):
            h = _attention_block(h, w, layer)
        out.append(h)
    return out


def forward(query: PackingQuery, w: ModelWeights) -> float:
    """Feasibility probability for a loading query."""
    groups = encode_items(query, w)
    state = np.zeros(w.meta.d_h, dtype=np.float32)
    for h in groups:
        for t in range(h.shape[0]):
            state = gru_step(h[t], state, w)
    hidden = np.maximum(w["head.W1"] @ state + w["head.b1"], np.float32(0.0))
    logit = w["head.W2"] @ hidden + w["head.b2"]
    return float(_sigmoid(logit)[0])


def predict(query: PackingQuery, w: ModelWeights, tau: float = 0.5) -> Prediction:
    p = forward(query, w)
    return Prediction(probability=p, feasible=p >= tau)


def predict_batch(queries, w: ModelWeights, tau: float = 0.5) -> list[Prediction]:
    return [predict(q, w, tau) for q in queries]
