"""Tiny feed-forward models built from an ArchSpec.

Parameters are plain numpy float64 arrays held in per-block dicts; forward
and backward passes are hand-rolled so gradients are exact and checkable
against finite differences. A width-1 linear head is always appended.
"""

from __future__ import annotations

import numpy as np

from evoloop.configspace import ArchSpec, ConfigError, PARAM_CAP, arch_param_count

_LN_EPS = 1e-5
_GELU_C = 0.7978845608028654  # sqrt(2/pi)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activation(name, z):
    if name == "linear":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return _sigmoid(z)
    if name == "tanh":
        return np.tanh(z)
    if name == "swish":
        return z * _sigmoid(z)
    if name == "gelu":
        inner = _GELU_C * (z + 0.044715 * z**3)
        return 0.5 * z * (1.0 + np.tanh(inner))
    raise ValueError(f"unknown activation: {name}")


def _activation_grad(name, z):
    if name == "linear":
        return np.ones_like(z)
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "sigmoid":
        s = _sigmoid(z)
        return s * (1.0 - s)
    if name == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    if name == "swish":
        s = _sigmoid(z)
        return s + z * s * (1.0 - s)
    if name == "gelu":
        inner = _GELU_C * (z + 0.044715 * z**3)
        t = np.tanh(inner)
        d_inner = _GELU_C * (1.0 + 3 * 0.044715 * z * z)
        return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * d_inner
    raise ValueError(f"unknown activation: {name}")


def build_model(arch: ArchSpec, input_dim: int, seed: int) -> list[dict]:
    """Initialize parameters: weights uniform in +-sqrt(6/(fan_in+fan_out)),
    biases zero. Deterministic for (arch, input_dim, seed)."""
    if arch_param_count(arch, input_dim) > PARAM_CAP:
        raise ConfigError("parameter budget exceeded")
    rng = np.random.default_rng(seed)

    def init(fan_in, fan_out):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    params: list[dict] = []
    width = input_dim
    for b in arch.blocks:
        if b.kind == "dense":
            params.append({
                "kind": "dense",
                "activation": b.activation,
                "W": init(width, b.units),
                "b": np.zeros(b.units),
            })
            width = b.units
        elif b.kind == "glu_gate":
            params.append({
                "kind": "glu_gate",
                "Wv": init(width, b.units),
                "bv": np.zeros(b.units),
                "Wg": init(width, b.units),
                "bg": np.zeros(b.units),
            })
            width = b.units
        else:
            params.append({
                "kind": "layer_norm",
                "gain": np.ones(width),
                "shift": np.zeros(width),
            })
    params.append({"kind": "head", "W": init(width, 1), "b": np.zeros(1)})
    return params


def _forward_with_cache(params, x):
    h = np.asarray(x, dtype=np.float64)
    caches = []
    for layer in params:
        kind = layer["kind"]
        if kind == "dense":
            z = h @ layer["W"] + layer["b"]
            out = _activation(layer["activation"], z)
            caches.append({"x": h, "z": z})
        elif kind == "glu_gate":
            zv = h @ layer["Wv"] + layer["bv"]
            zg = h @ layer["Wg"] + layer["bg"]
            sg = _sigmoid(zg)
            out = zv * sg
            caches.append({"x": h, "zv": zv, "sg": sg})
        elif kind == "layer_norm":
            mu = h.mean(axis=1, keepdims=True)
            xc = h - mu
            var = (xc * xc).mean(axis=1, keepdims=True)
            inv = 1.0 / np.sqrt(var + _LN_EPS)
            xhat = xc * inv
            out = xhat * layer["gain"] + layer["shift"]
            caches.append({"xhat": xhat, "inv": inv})
        else:  # head
            out = (h @ layer["W"] + layer["b"]).reshape(-1)
            caches.append({"x": h})
        h = out
    return h, caches


def forward(params: list[dict], x: np.ndarray) -> np.ndarray:
    """One scalar prediction per row of ``x``. Pure function."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be a 2-d feature matrix")
    expected = params[0]["W"].shape[0] if "W" in params[0] else (
        params[0]["Wv"].shape[0] if "Wv" in params[0] else len(params[0]["gain"])
    )
    if x.shape[1] != expected:
        raise ValueError(
            f"shape mismatch: got {x.shape[1]} features, model expects {expected}"
        )
    preds, _ = _forward_with_cache(params, x)
    return preds


def gradients(params: list[dict], x: np.ndarray, y: np.ndarray):
    """Exact gradients of mean squared error w.r.t. every parameter.

    Returns (grads, loss) where grads mirrors the params structure.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(y) == 0:
        raise ValueError("batch must be non-empty")
    preds, caches = _forward_with_cache(params, x)
    n = len(y)
    residual = preds - y
    loss = float(np.mean(residual * residual))
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite loss")

    grads: list[dict] = [None] * len(params)
    delta = (2.0 / n) * residual  # dL/dpred, shape (n,)

    for i in range(len(params) - 1, -1, -1):
        layer, cache = params[i], caches[i]
        kind = layer["kind"]
        if kind == "head":
            d = delta.reshape(-1, 1)
            grads[i] = {"W": cache["x"].T @ d, "b": d.sum(axis=0)}
            delta = d @ layer["W"].T
        elif kind == "dense":
            dz = delta * _activation_grad(layer["activation"], cache["z"])
            grads[i] = {"W": cache["x"].T @ dz, "b": dz.sum(axis=0)}
            delta = dz @ layer["W"].T
        elif kind == "glu_gate":
            zv, sg = cache["zv"], cache["sg"]
            dzv = delta * sg
            dzg = delta * zv * sg * (1.0 - sg)
            grads[i] = {
                "Wv": cache["x"].T @ dzv,
                "bv": dzv.sum(axis=0),
                "Wg": cache["x"].T @ dzg,
                "bg": dzg.sum(axis=0),
            }
            delta = dzv @ layer["Wv"].T + dzg @ layer["Wg"].T
        else:  # layer_norm
            xhat, inv = cache["xhat"], cache["inv"]
            dxhat = delta * layer["gain"]
            grads[i] = {
                "gain": (delta * xhat).sum(axis=0),
                "shift": delta.sum(axis=0),
            }
            d = xhat.shape[1]
            delta = (inv / d) * (
                d * dxhat
                - dxhat.sum(axis=1, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=1, keepdims=True)
            )
    return grads, loss


def param_arrays(params: list[dict]):
    """Deterministic iteration over (layer_index, key, array)."""
    for i, layer in enumerate(params):
        for key in sorted(layer):
            if isinstance(layer[key], np.ndarray):
                yield i, key, layer[key]


def clone_params(params: list[dict]) -> list[dict]:
    out = []
    for layer in params:
        copy = dict(layer)
        for key, val in layer.items():
            if isinstance(val, np.ndarray):
                copy[key] = val.copy()
        out.append(copy)
    return out
