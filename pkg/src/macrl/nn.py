"""Minimal recurrent network core with hand-written gradients.

One architecture serves every learner head: two fully connected layers with
Leaky-ReLU, a GRU, one more fully connected layer, and a linear output.  All
math is float64 numpy.  Sequences are [T, B, width]; a {0,1} mask marks valid
steps — masked steps propagate the hidden state unchanged and contribute no
gradient.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import NumericError

LEAKY_SLOPE = 0.01

PARAM_NAMES = (
    "fc1_w", "fc1_b",
    "fc2_w", "fc2_b",
    "gru_wx", "gru_wh", "gru_bx", "gru_bh",
    "fc3_w", "fc3_b",
    "out_w", "out_b",
)


@dataclass(frozen=True)
class NetworkSpec:
    input_width: int
    fc1: int
    fc2: int
    gru: int
    fc3: int
    output_width: int

    def __post_init__(self) -> None:
        for name in ("input_width", "fc1", "fc2", "gru", "fc3", "output_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def _uniform(rng: np.random.Generator, fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Uniform +-1/sqrt(fan_in) weights, zero biases (GRU biases included)."""
    p = {
        "fc1_w": _uniform(rng, spec.input_width, (spec.input_width, spec.fc1)),
        "fc1_b": np.zeros(spec.fc1),
        "fc2_w": _uniform(rng, spec.fc1, (spec.fc1, spec.fc2)),
        "fc2_b": np.zeros(spec.fc2),
        "gru_wx": _uniform(rng, spec.fc2, (spec.fc2, 3 * spec.gru)),
        "gru_wh": _uniform(rng, spec.gru, (spec.gru, 3 * spec.gru)),
        "gru_bx": np.zeros(3 * spec.gru),
        "gru_bh": np.zeros(3 * spec.gru),
        "fc3_w": _uniform(rng, spec.gru, (spec.gru, spec.fc3)),
        "fc3_b": np.zeros(spec.fc3),
        "out_w": _uniform(rng, spec.fc3, (spec.fc3, spec.output_width)),
        "out_b": np.zeros(spec.output_width),
    }
    return {k: np.asarray(v, dtype=np.float64) for k, v in p.items()}


def _lrelu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, LEAKY_SLOPE * x)


def _lrelu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, LEAKY_SLOPE)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def forward_sequence(
    params: dict[str, np.ndarray],
    inputs: np.ndarray,
    mask: Optional[np.ndarray] = None,
    h0: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Run the net over a [T, B, in] sequence.

    Returns (outputs [T, B, out], final hidden [B, gru], cache for backward).
    The hidden state starts at zeros unless h0 is given.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 3:
        raise ValueError(f"inputs must be [T, B, width], got shape {inputs.shape}")
    T, B, width = inputs.shape
    if width != params["fc1_w"].shape[0]:
        raise ValueError(
            f"input width {width} != spec width {params['fc1_w'].shape[0]}"
        )
    G = params["gru_wh"].shape[0]
    if mask is None:
        mask = np.ones((T, B), dtype=np.float64)
    else:
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != (T, B):
            raise ValueError(f"mask shape {mask.shape} != {(T, B)}")
    h = np.zeros((B, G)) if h0 is None else np.asarray(h0, dtype=np.float64).copy()

    cache: dict = {"steps": [], "mask": mask, "h0": h.copy(), "inputs": inputs}
    outputs = np.empty((T, B, params["out_w"].shape[1]))
    for t in range(T):
        x = inputs[t]
        a1p = x @ params["fc1_w"] + params["fc1_b"]
        a1 = _lrelu(a1p)
        a2p = a1 @ params["fc2_w"] + params["fc2_b"]
        a2 = _lrelu(a2p)

        px = a2 @ params["gru_wx"] + params["gru_bx"]
        ph = h @ params["gru_wh"] + params["gru_bh"]
        r = _sigmoid(px[:, :G] + ph[:, :G])
        z = _sigmoid(px[:, G:2 * G] + ph[:, G:2 * G])
        pn_h = ph[:, 2 * G:]
        n = np.tanh(px[:, 2 * G:] + r * pn_h)
        h_cand = (1.0 - z) * n + z * h

        m = mask[t][:, None]
        h_new = m * h_cand + (1.0 - m) * h

        a3p = h_new @ params["fc3_w"] + params["fc3_b"]
        a3 = _lrelu(a3p)
        outputs[t] = a3 @ params["out_w"] + params["out_b"]

        cache["steps"].append(
            {"a1p": a1p, "a1": a1, "a2p": a2p, "a2": a2, "r": r, "z": z,
             "n": n, "pn_h": pn_h, "h_prev": h, "h_new": h_new, "a3p": a3p,
             "a3": a3}
        )
        h = h_new
    return outputs, h, cache


def backward(
    params: dict[str, np.ndarray],
    cache: dict,
    grad_outputs: np.ndarray,
) -> dict[str, np.ndarray]:
    """Reverse-mode gradients of sum(grad_outputs * outputs) w.r.t. every
    parameter.  Gradients at masked steps are dropped."""
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    mask = cache["mask"]
    inputs = cache["inputs"]
    T = len(cache["steps"])
    G = params["gru_wh"].shape[0]
    B = inputs.shape[1]
    dh = np.zeros((B, G))
    for t in range(T - 1, -1, -1):
        s = cache["steps"][t]
        m = mask[t][:, None]
        dy = np.asarray(grad_outputs[t], dtype=np.float64) * m

        grads["out_w"] += s["a3"].T @ dy
        grads["out_b"] += dy.sum(axis=0)
        da3 = dy @ params["out_w"].T
        da3p = da3 * _lrelu_grad(s["a3p"])
        grads["fc3_w"] += s["h_new"].T @ da3p
        grads["fc3_b"] += da3p.sum(axis=0)
        dh = dh + da3p @ params["fc3_w"].T

        # through the mask gate: h_new = m*h_cand + (1-m)*h_prev
        dh_cand = dh * m
        dh_prev = dh * (1.0 - m)

        r, z, n = s["r"], s["z"], s["n"]
        h_prev, pn_h = s["h_prev"], s["pn_h"]
        dz = dh_cand * (h_prev - n)
        dn = dh_cand * (1.0 - z)
        dh_prev = dh_prev + dh_cand * z

        dpn = dn * (1.0 - n * n)
        dr = dpn * pn_h
        dpr = dr * r * (1.0 - r)
        dpz = dz * z * (1.0 - z)

        dpx = np.concatenate([dpr, dpz, dpn], axis=1)
        dph = np.concatenate([dpr, dpz, dpn * r], axis=1)

        grads["gru_wx"] += s["a2"].T @ dpx
        grads["gru_bx"] += dpx.sum(axis=0)
        grads["gru_wh"] += h_prev.T @ dph
        grads["gru_bh"] += dph.sum(axis=0)
        dh_prev = dh_prev + dph @ params["gru_wh"].T

        da2 = dpx @ params["gru_wx"].T
        da2p = da2 * _lrelu_grad(s["a2p"])
        grads["fc2_w"] += s["a1"].T @ da2p
        grads["fc2_b"] += da2p.sum(axis=0)
        da1 = da2p @ params["fc2_w"].T
        da1p = da1 * _lrelu_grad(s["a1p"])
        grads["fc1_w"] += inputs[t].T @ da1p
        grads["fc1_b"] += da1p.sum(axis=0)

        dh = dh_prev
    return grads


# -- optimizer ------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """In-place bias-corrected Adam update."""
    state.t += 1
    t = state.t
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in parameter {name!r}")
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        mhat = m / (1.0 - beta1 ** t)
        vhat = v / (1.0 - beta2 ** t)
        params[name] -= lr * mhat / (np.sqrt(vhat) + eps)


# -- network with target copy -----------------------------------------------------


@dataclass
class NetworkParams:
    """Online parameters plus a twin target copy sharing the same names."""

    spec: NetworkSpec
    online: dict[str, np.ndarray]
    target: dict[str, np.ndarray]
    adam: AdamState = field(default_factory=AdamState)

    def sync_target(self) -> None:
        for k, v in self.online.items():
            self.target[k] = v.copy()

    def clone(self) -> "NetworkParams":
        return NetworkParams(
            spec=self.spec,
            online={k: v.copy() for k, v in self.online.items()},
            target={k: v.copy() for k, v in self.target.items()},
        )


def make_network(spec: NetworkSpec, rng: np.random.Generator) -> NetworkParams:
    online = init_params(spec, rng)
    target = {k: v.copy() for k, v in online.items()}
    return NetworkParams(spec=spec, online=online, target=target)


def sync_target(net: NetworkParams) -> None:
    net.sync_target()


# -- checkpoint container -----------------------------------------------------------

_MAGIC = b"MACRLNET1\n"


def save_checkpoint(path: str, arrays: dict[str, np.ndarray], meta: Optional[dict] = None) -> None:
    """Portable binary container of (name, shape, little-endian float64
    payload) entries plus a JSON header.  Round-trips bit-exactly."""
    names = sorted(arrays)
    header = {
        "entries": [{"name": n, "shape": list(arrays[n].shape)} for n in names],
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for n in names:
            f.write(np.ascontiguousarray(arrays[n], dtype="<f8").tobytes())


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as f:
        magic = f.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        arrays = {}
        for entry in header["entries"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = f.read(count * 8)
            arrays[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return arrays, header["meta"]
