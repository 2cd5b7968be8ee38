"""Iterative polygon refinement.

Two refiners share the ring-graph view of a polygon (a cycle over its
vertices):

* :func:`gcn_refine` runs a graph network with given weights for a few
  steps, each step sampling features at the current vertices and moving every
  vertex by a clamped predicted offset.
* :func:`energy_refine` needs no trained weights. It descends
  ``mean_i |field(v_i)|^2 + lambda * ortho(V)`` where ``field`` is an
  attraction field sampled bilinearly at the vertices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .afm import as_field
from .errors import DimensionError, FormatError
from .losses import _ring_ortho
from .raster import as_features, sample_at

ACTIVATIONS = ("relu", "identity")
WEIGHTS_FORMAT = "polyfield-gcn"


@dataclass(frozen=True)
class RefineConfig:
    steps: int = 3
    offset_clamp: float = 8.0
    lr: float = 0.5
    iters: int = 200
    lambda_ortho: float = 1.0
    share_weights: bool = True
    max_halvings: int = 20

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if not self.offset_clamp > 0:
            raise ValueError("offset_clamp must be positive")
        if not self.lr > 0 or self.iters < 1:
            raise ValueError("lr must be positive and iters at least 1")
        if self.lambda_ortho < 0:
            raise ValueError("lambda_ortho must be non-negative")


@dataclass(frozen=True)
class RingGraph:
    vertices: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        if self.features.ndim != 2 or len(self.features) != len(self.vertices):
            raise DimensionError("one feature vector per vertex is required")


@dataclass(frozen=True)
class GcnLayer:
    w_self: np.ndarray
    w_nbr: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.w_self.ndim != 2 or self.w_self.shape != self.w_nbr.shape:
            raise DimensionError("w_self and w_nbr must be matrices of equal shape")
        if self.bias.shape != (self.w_self.shape[0],):
            raise DimensionError("bias length must match the layer output width")

    @property
    def dims(self):
        return self.w_self.shape[1], self.w_self.shape[0]


@dataclass(frozen=True)
class GcnWeights:
    layers: tuple
    head_w: np.ndarray
    head_b: np.ndarray

    def __post_init__(self):
        width = None
        for k, layer in enumerate(self.layers):
            d_in, d_out = layer.dims
            if width is not None and d_in != width:
                raise DimensionError(f"layer {k}: expects {d_in} inputs, previous layer gives {width}")
            width = d_out
        if self.head_w.ndim != 2 or self.head_w.shape[0] != 2 or self.head_b.shape != (2,):
            raise DimensionError("head must map to 2 outputs")
        if width is not None and self.head_w.shape[1] != width:
            raise DimensionError(f"head: expects {self.head_w.shape[1]} inputs, last layer gives {width}")

    @property
    def input_dim(self) -> int:
        return self.layers[0].dims[0] if self.layers else self.head_w.shape[1]


def build_graph(ring, fmap) -> RingGraph:
    """Per-vertex features: the feature grid sampled at the vertex, then ``(x/W, y/H)``."""
    grid = as_features(fmap)
    v = np.asarray(ring, dtype=np.float64)
    h, w, _ = grid.shape
    vals, _, _ = sample_at(grid, v)
    coords = v / np.array([w, h], dtype=np.float64)
    return RingGraph(v, np.concatenate([vals, coords], axis=1))


def gcn_layer(g: RingGraph, layer: GcnLayer) -> RingGraph:
    """``act(W_self h_i + W_nbr mean(h_{i-1}, h_{i+1}) + b)`` over the vertex cycle."""
    h = g.features
    if h.shape[1] != layer.dims[0]:
        raise DimensionError(f"layer expects {layer.dims[0]} features, graph has {h.shape[1]}")
    nbr = 0.5 * (np.roll(h, 1, axis=0) + np.roll(h, -1, axis=0))
    out = h @ layer.w_self.T + nbr @ layer.w_nbr.T + layer.bias
    if layer.activation == "relu":
        out = np.maximum(out, 0.0)
    return RingGraph(g.vertices, out)


def predict_offsets(g: RingGraph, weights: GcnWeights, clamp: float) -> np.ndarray:
    for layer in weights.layers:
        g = gcn_layer(g, layer)
    if g.features.shape[1] != weights.head_w.shape[1]:
        raise DimensionError(f"head expects {weights.head_w.shape[1]} features, got {g.features.shape[1]}")
    off = g.features @ weights.head_w.T + weights.head_b
    return np.clip(off, -clamp, clamp)


def gcn_refine(ring, fmap, weights, cfg: RefineConfig = RefineConfig()) -> np.ndarray:
    """Run ``cfg.steps`` feature-sample / predict / move steps.

    ``weights`` is one :class:`GcnWeights` shared by every step, or (with
    ``cfg.share_weights=False``) a sequence with one entry per step.
    """
    if cfg.share_weights:
        per_step = [weights] * cfg.steps
    else:
        per_step = list(weights)
        if len(per_step) != cfg.steps:
            raise DimensionError(f"need {cfg.steps} weight sets, got {len(per_step)}")
    v = np.array(ring, dtype=np.float64)
    for w in per_step:
        v = v + predict_offsets(build_graph(v, fmap), w, cfg.offset_clamp)
    return v


def attraction_energy(ring, field) -> tuple[float, np.ndarray]:
    """``mean_i |field(v_i)|^2`` and its gradient with respect to the vertices."""
    v = np.asarray(ring, dtype=np.float64)
    f, fx, fy = sample_at(field, v)
    n = len(v)
    energy = float(np.sum(f * f) / n)
    grad = (2.0 / n) * np.stack([(f * fx).sum(axis=1), (f * fy).sum(axis=1)], axis=1)
    return energy, grad


def refine_energy(ring, field, lambda_ortho: float) -> tuple[float, np.ndarray]:
    e, g = attraction_energy(ring, field)
    if lambda_ortho:
        eo, go = _ring_ortho(ring)
        e += lambda_ortho * eo
        g = g + lambda_ortho * go
    return e, g


def energy_refine(ring, field, cfg: RefineConfig = RefineConfig(), history: list | None = None) -> np.ndarray:
    """Gradient descent on the attraction + orthogonality energy.

    Each iteration starts from ``cfg.lr`` and halves the step (at most
    ``cfg.max_halvings`` times) until the energy does not increase; if no
    step is acceptable the descent stops. The lowest-energy ring seen is
    returned, so its energy never exceeds the input's. When ``history`` is a
    list, the accepted energies are appended to it.
    """
    field = as_field(field)
    v = np.array(ring, dtype=np.float64)
    e, g = refine_energy(v, field, cfg.lambda_ortho)
    best_e, best_v = e, v
    if history is not None:
        history.append(e)
    for _ in range(cfg.iters):
        if not np.any(g):
            break
        lr = cfg.lr
        for _ in range(cfg.max_halvings + 1):
            cand = v - lr * g
            ec, gc = refine_energy(cand, field, cfg.lambda_ortho)
            if ec <= e:
                break
            lr *= 0.5
        else:
            break
        v, e, g = cand, ec, gc
        if history is not None:
            history.append(e)
        if e < best_e:
            best_e, best_v = e, v
    return best_v


# -- weights files -----------------------------------------------------------

def _num(x) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise ValueError("weights must be finite")
    return format(x, ".17g")


def _vec(v) -> str:
    return "[" + ", ".join(_num(x) for x in v) + "]"


def _mat(m, indent) -> str:
    pad = " " * indent
    return "[\n" + ",\n".join(pad + "  " + _vec(row) for row in m) + "\n" + pad + "]"


def dumps_weights(weights: GcnWeights) -> str:
    """Weights as a JSON document; every number carries 17 significant digits."""
    parts = []
    for layer in weights.layers:
        parts.append(
            "    {\n"
            f'      "w_self": {_mat(layer.w_self, 6)},\n'
            f'      "w_nbr": {_mat(layer.w_nbr, 6)},\n'
            f'      "bias": {_vec(layer.bias)},\n'
            f'      "activation": "{layer.activation}"\n'
            "    }"
        )
    layers = "[\n" + ",\n".join(parts) + "\n  ]" if parts else "[]"
    return (
        "{\n"
        f'  "format": "{WEIGHTS_FORMAT}",\n'
        '  "version": 1,\n'
        f'  "layers": {layers},\n'
        '  "head": {\n'
        f'    "w": {_mat(weights.head_w, 4)},\n'
        f'    "bias": {_vec(weights.head_b)}\n'
        "  }\n"
        "}\n"
    )


def save_weights(weights: GcnWeights, path) -> None:
    Path(path).write_text(dumps_weights(weights), encoding="utf-8")


def _matrix(obj, what, where):
    try:
        m = np.array(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{what} is not numeric ({exc})", where) from None
    return m


def loads_weights(text: str, where: str = "<weights>") -> GcnWeights:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", where) from None
    if not isinstance(doc, dict) or doc.get("format") != WEIGHTS_FORMAT:
        raise FormatError(f"not a {WEIGHTS_FORMAT} document", where)
    try:
        layers_doc, head = doc["layers"], doc["head"]
    except KeyError as exc:
        raise FormatError(f"missing field {exc}", where) from None
    layers = []
    for k, ld in enumerate(layers_doc):
        try:
            layer = GcnLayer(
                _matrix(ld["w_self"], f"layer {k} w_self", where),
                _matrix(ld["w_nbr"], f"layer {k} w_nbr", where),
                _matrix(ld["bias"], f"layer {k} bias", where),
                ld.get("activation", "relu"),
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"layer {k}: missing field {exc}", where) from None
        except ValueError as exc:
            raise FormatError(f"layer {k}: {exc}", where) from None
        layers.append(layer)
    try:
        return GcnWeights(tuple(layers), _matrix(head["w"], "head w", where), _matrix(head["bias"], "head bias", where))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"head: missing field {exc}", where) from None
    except ValueError as exc:
        raise FormatError(str(exc), where) from None


def load_weights(path) -> GcnWeights:
    return loads_weights(Path(path).read_text(encoding="utf-8"), str(path))


def random_weights(rng, input_dim: int, widths=(16,), scale: float = 0.1, activation="relu") -> GcnWeights:
    """Random weights for a chain of layer widths (for tests and demos)."""
    layers = []
    d = input_dim
    for out in widths:
        layers.append(GcnLayer(
            rng.normal(0, scale, (out, d)),
            rng.normal(0, scale, (out, d)),
            rng.normal(0, scale, out),
            activation,
        ))
        d = out
    return GcnWeights(tuple(layers), rng.normal(0, scale, (2, d)), rng.normal(0, scale, 2))


def zero_head(weights: GcnWeights) -> GcnWeights:
    return GcnWeights(weights.layers, np.zeros_like(weights.head_w), np.zeros_like(weights.head_b))
