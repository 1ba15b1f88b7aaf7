"""Feed-forward ReLU networks: representation, JSON model files, evaluation.

Model JSON schema:
  {"name": str?, "task": "classification"|"regression"|"autoencoder",
   "layers": [{"weights": [[number]], "bias": [number]}, ...]}
Weights are row-major out x in; NaN/Infinity literals are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

TASKS = ("classification", "regression", "autoencoder")


class ModelLoadError(ValueError):
    """Model file could not be parsed or validated."""


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray
    bias: np.ndarray

    def __init__(self, weights, bias):
        W = np.asarray(weights, dtype=float)
        b = np.asarray(bias, dtype=float).reshape(-1)
        if W.ndim != 2:
            raise ValueError("weights must be a matrix")
        if b.shape[0] != W.shape[0]:
            raise ValueError("bias length must match weight rows")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ValueError("layer entries must be finite")
        W = W.copy()
        b = b.copy()
        W.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class Network:
    """Dense layers with ReLU between them and none after the last."""

    layers: tuple
    task: str = "classification"
    name: str | None = None

    def __init__(self, layers, task="classification", name=None):
        layers = tuple(
            layer if isinstance(layer, Layer) else Layer(*layer) for layer in layers
        )
        if not layers:
            raise ValueError("network needs at least one layer")
        if task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        for k in range(1, len(layers)):
            if layers[k].in_dim != layers[k - 1].out_dim:
                raise ValueError(
                    f"layer {k} expects {layers[k].in_dim} inputs but layer "
                    f"{k - 1} outputs {layers[k - 1].out_dim}"
                )
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "task", task)
        object.__setattr__(self, "name", name)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim


def forward(net: Network, x) -> np.ndarray:
    """Exact network output for a single input vector."""
    h = np.asarray(x, dtype=float).reshape(-1)
    if h.shape[0] != net.input_dim:
        raise ValueError(
            f"input length {h.shape[0]} does not match network width {net.input_dim}"
        )
    last = len(net.layers) - 1
    for k, layer in enumerate(net.layers):
        h = layer.weights @ h + layer.bias
        if k != last:
            h = np.maximum(h, 0.0)
    return h


def forward_batch(net: Network, X) -> np.ndarray:
    """Exact outputs for an (N, in_dim) batch of inputs."""
    H = np.asarray(X, dtype=float)
    if H.ndim != 2 or H.shape[1] != net.input_dim:
        raise ValueError("batch must be (N, input_dim)")
    last = len(net.layers) - 1
    for k, layer in enumerate(net.layers):
        H = H @ layer.weights.T + layer.bias
        if k != last:
            H = np.maximum(H, 0.0)
    return H


def _reject_constant(token: str):
    raise ModelLoadError(f"non-finite literal {token!r} is not permitted")


def load_model(source) -> Network:
    """Load and validate a network from a path, file object, or JSON string.

    Raises ModelLoadError with a parse diagnostic (line/column) or the
    offending layer index on validation failure.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        source = str(source)
        if source.lstrip().startswith("{"):
            text = source
        else:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ModelLoadError(
            f"invalid model JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc

    if not isinstance(doc, dict):
        raise ModelLoadError("model document must be a JSON object")
    if "layers" not in doc or not isinstance(doc["layers"], list) or not doc["layers"]:
        raise ModelLoadError("model must contain a nonempty 'layers' array")
    task = doc.get("task", "classification")
    if task not in TASKS:
        raise ModelLoadError(f"unknown task {task!r}; expected one of {TASKS}")

    layers = []
    for k, entry in enumerate(doc["layers"]):
        if not isinstance(entry, dict) or "weights" not in entry or "bias" not in entry:
            raise ModelLoadError(f"layer {k} must have 'weights' and 'bias' fields")
        try:
            layers.append(Layer(entry["weights"], entry["bias"]))
        except ValueError as exc:
            raise ModelLoadError(f"layer {k}: {exc}") from exc
    try:
        return Network(layers, task=task, name=doc.get("name"))
    except ValueError as exc:
        raise ModelLoadError(str(exc)) from exc


def save_model(net: Network, path) -> None:
    """Write the model JSON; floats round-trip bit-exactly via repr."""
    doc = {
        "task": net.task,
        "layers": [
            {"weights": layer.weights.tolist(), "bias": layer.bias.tolist()}
            for layer in net.layers
        ],
    }
    if net.name is not None:
        doc = {"name": net.name, **doc}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
