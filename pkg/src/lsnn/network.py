"""Fully connected ReLU networks with hand-written reverse mode.

A network of depth ``L`` maps ``x`` through ``L - 1`` hidden layers
``a -> relu(W a - b)`` followed by an affine output layer ``a -> W a - b``.
Note the bias is *subtracted*, so ``W x = b`` is the breaking hyperplane of
a first-layer neuron.

All parameters live in one flat float64 vector; per-layer weights and biases
are views into it.  This keeps the optimizer and the serializer trivial.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when parameters, inputs, or shapes do not agree."""


@dataclass(frozen=True)
class NetworkShape:
    """Layer widths ``n_0 .. n_L`` with ``n_0 = d`` and ``n_L = 1``."""

    widths: tuple[int, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        if len(widths) < 3:
            raise ShapeError(f"need at least one hidden layer, got {widths}")
        if any(w < 1 for w in widths):
            raise ShapeError(f"all widths must be >= 1, got {widths}")
        if widths[-1] != 1:
            raise ShapeError(f"output width must be 1, got {widths[-1]}")

    @classmethod
    def parse(cls, text: str) -> "NetworkShape":
        """Parse the ``2-5-5-1`` notation."""
        try:
            return cls(tuple(int(tok) for tok in text.strip().split("-")))
        except ValueError as exc:
            raise ShapeError(f"cannot parse network shape {text!r}") from exc

    @property
    def depth(self) -> int:
        return len(self.widths) - 1

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    def label(self) -> str:
        return "-".join(str(w) for w in self.widths)

    def layer_sizes(self) -> list[tuple[int, int]]:
        """``(n_out, n_in)`` for every layer."""
        return list(zip(self.widths[1:], self.widths[:-1]))

    def __str__(self):
        return self.label()


def param_count(shape: NetworkShape) -> int:
    """Total number of weights and biases."""
    return sum(n_out * n_in + n_out for n_out, n_in in shape.layer_sizes())


class NetworkParams:
    """Weights and biases of a ReLU network stored as one flat vector.

    Parameters
    ----------
    shape : NetworkShape
    flat : ndarray of shape (param_count(shape),)
        Layer-major layout: ``W1`` (row-major), ``b1``, ``W2``, ``b2``, ...
    """

    __slots__ = ("shape", "flat", "weights", "biases")

    def __init__(self, shape: NetworkShape, flat: np.ndarray):
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        if flat.ndim != 1 or flat.size != param_count(shape):
            raise ShapeError(
                f"flat vector of size {flat.size} does not match shape "
                f"{shape} ({param_count(shape)} parameters)"
            )
        self.shape = shape
        self.flat = flat
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        pos = 0
        for n_out, n_in in shape.layer_sizes():
            self.weights.append(flat[pos:pos + n_out * n_in].reshape(n_out, n_in))
            pos += n_out * n_in
            self.biases.append(flat[pos:pos + n_out])
            pos += n_out

    @classmethod
    def from_layers(cls, weights: Sequence[np.ndarray],
                    biases: Sequence[np.ndarray]) -> "NetworkParams":
        weights = [np.atleast_2d(np.asarray(w, dtype=np.float64)) for w in weights]
        biases = [np.atleast_1d(np.asarray(b, dtype=np.float64)) for b in biases]
        if len(weights) != len(biases):
            raise ShapeError("need one bias vector per weight matrix")
        widths = [weights[0].shape[1]]
        for w, b in zip(weights, biases):
            if w.shape[1] != widths[-1] or b.shape != (w.shape[0],):
                raise ShapeError(
                    f"layer mismatch: weight {w.shape}, bias {b.shape}, "
                    f"expected input width {widths[-1]}"
                )
            widths.append(w.shape[0])
        shape = NetworkShape(tuple(widths))
        flat = np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(weights, biases)])
        return cls(shape, flat)

    @classmethod
    def zeros(cls, shape: NetworkShape) -> "NetworkParams":
        return cls(shape, np.zeros(param_count(shape)))

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.shape, self.flat.copy())

    def with_flat(self, flat: np.ndarray) -> "NetworkParams":
        return NetworkParams(self.shape, flat)

    def __eq__(self, other):
        if not isinstance(other, NetworkParams):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.flat, other.flat)

    def __repr__(self):
        return f"NetworkParams(shape={self.shape.label()}, n={self.flat.size})"


def init_random(shape: NetworkShape, seed: int) -> NetworkParams:
    """Glorot-uniform weights and U(0, 1) biases, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_out, n_in in shape.layer_sizes():
        limit = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-limit, limit, size=(n_out, n_in)))
        biases.append(rng.uniform(0.0, 1.0, size=n_out))
    return NetworkParams.from_layers(weights, biases)


def _as_batch(params: NetworkParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != params.shape.input_dim:
        raise ShapeError(
            f"input of shape {x.shape} does not match network input dimension "
            f"{params.shape.input_dim}"
        )
    return X, single


def _forward_cache(params: NetworkParams, X: np.ndarray):
    """Pre-activations ``zs`` and layer inputs ``acts`` for a batch."""
    acts = [X]
    zs = []
    a = X
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T - b
        zs.append(z)
        if l < last:
            a = np.maximum(z, 0.0)
            acts.append(a)
    return zs, acts


def forward(params: NetworkParams, x) -> np.ndarray | float:
    """Evaluate the network at one point ``(d,)`` or a batch ``(n, d)``."""
    X, single = _as_batch(params, x)
    zs, _ = _forward_cache(params, X)
    out = zs[-1][:, 0]
    return float(out[0]) if single else out


def preactivations(params: NetworkParams, x) -> list[np.ndarray]:
    """Per-layer vectors ``W a - b`` (before the ReLU), hidden and output.

    For a batch input each entry has shape ``(n, n_l)``; for a single point
    ``(n_l,)``.  The last entry reproduces :func:`forward`.
    """
    X, single = _as_batch(params, x)
    zs, _ = _forward_cache(params, X)
    return [z[0] for z in zs] if single else zs


def grad_params(params: NetworkParams, x, upstream) -> np.ndarray:
    """Flat gradient of ``sum_k upstream[k] * forward(x[k])`` w.r.t. parameters.

    Uses the subgradient ``relu'(0) = 0``.  ``upstream`` is a scalar for a
    single point or an array of shape ``(n,)`` for a batch.
    """
    X, single = _as_batch(params, x)
    up = np.atleast_1d(np.asarray(upstream, dtype=np.float64))
    if up.shape != (X.shape[0],):
        raise ShapeError(f"upstream of shape {up.shape} for {X.shape[0]} inputs")
    zs, acts = _forward_cache(params, X)
    return _backward(params, zs, acts, up)


def _backward(params: NetworkParams, zs, acts, up: np.ndarray) -> np.ndarray:
    grad = np.empty_like(params.flat)
    gw = NetworkParams(params.shape, grad)
    delta = up[:, None]
    for l in range(len(params.weights) - 1, -1, -1):
        gw.weights[l][...] = delta.T @ acts[l]
        gw.biases[l][...] = -delta.sum(axis=0)
        if l > 0:
            delta = (delta @ params.weights[l]) * (zs[l - 1] > 0.0)
    return grad


def value_and_grad(params: NetworkParams, X: np.ndarray, upstream_fn):
    """Forward a batch, then backpropagate ``upstream_fn(values)``.

    ``upstream_fn`` receives the network values and returns
    ``(aux, upstream)``; ``aux`` is passed through untouched.  Shares one
    forward pass between loss evaluation and the gradient.
    """
    X, _ = _as_batch(params, X)
    zs, acts = _forward_cache(params, X)
    aux, up = upstream_fn(zs[-1][:, 0])
    return aux, _backward(params, zs, acts, np.asarray(up, dtype=np.float64))


# --- serialization -------------------------------------------------------

_MAGIC = b"LSNNPRM1"


def _header(params: NetworkParams, payload: str) -> dict:
    return {
        "format": "lsnn-params",
        "version": 1,
        "widths": list(params.shape.widths),
        "count": int(params.flat.size),
        "dtype": "float64",
        "byteorder": "little",
        "payload": payload,
    }


def save_params(params: NetworkParams, path, payload: str = "binary") -> None:
    """Write parameters as a JSON header followed by a binary or CSV payload.

    Binary: ``magic | u32 header length | header json | little-endian f64``.
    CSV: the JSON header on the first line after ``#``, then one value per
    line in ``repr`` form (shortest round-trip decimal), so both are bit-exact.
    """
    path = Path(path)
    if payload == "binary":
        head = json.dumps(_header(params, "binary")).encode()
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", len(head)))
            fh.write(head)
            fh.write(params.flat.astype("<f8").tobytes())
    elif payload == "csv":
        lines = ["# " + json.dumps(_header(params, "csv"))]
        lines += [repr(float(v)) for v in params.flat]
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown payload kind {payload!r}")


def load_params(path) -> NetworkParams:
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(_MAGIC):
        (n,) = struct.unpack("<I", raw[8:12])
        head = json.loads(raw[12:12 + n])
        flat = np.frombuffer(raw[12 + n:], dtype="<f8").astype(np.float64)
    else:
        text = raw.decode().splitlines()
        if not text or not text[0].startswith("#"):
            raise ShapeError(f"{path}: missing parameter header")
        head = json.loads(text[0][1:])
        flat = np.array([float(v) for v in text[1:] if v.strip()], dtype=np.float64)
    if head.get("format") != "lsnn-params":
        raise ShapeError(f"{path}: not an lsnn parameter file")
    if flat.size != head["count"]:
        raise ShapeError(f"{path}: expected {head['count']} values, found {flat.size}")
    return NetworkParams(NetworkShape(tuple(head["widths"])), flat)
