"""Multilayer perceptron with tanh transfer on every layer.

Implements forward propagation, the backward sensitivity recurrence,
batch gradient assembly, and the per-error-component Jacobian needed by
the Levenberg-Marquardt trainer. Networks are immutable values; training
code produces new parameter sets via the flatten/unflatten helpers.

Parameter flattening order (fixed so Jacobian columns are reproducible):
layer by layer from the input side, each layer's weight matrix in
row-major order followed by its bias vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import ShapeError
from .rng import SplitMix64

SATURATION_BOUND = 20.0  # |n| beyond this: tanh is +-1 to double precision

DEFAULT_LAYER_SIZES = [17, 25, 2]
DEFAULT_CLASS_ORDER = ["success", "failure"]

MODEL_FORMAT_VERSION = 1


def tanh_eval(n: float) -> float:
    """Hyperbolic tangent, saturating to +-1 for large |n| to avoid overflow."""
    if n > SATURATION_BOUND:
        return 1.0
    if n < -SATURATION_BOUND:
        return -1.0
    ep = np.exp(n)
    em = np.exp(-n)
    return float((ep - em) / (ep + em))


def tanh_deriv(n: float) -> float:
    f = tanh_eval(n)
    return 1.0 - f * f


def _tanh_vec(n: np.ndarray) -> np.ndarray:
    clipped = np.clip(n, -SATURATION_BOUND, SATURATION_BOUND)
    ep = np.exp(clipped)
    em = np.exp(-clipped)
    return (ep - em) / (ep + em)


def _tanh_deriv_vec(n: np.ndarray) -> np.ndarray:
    f = _tanh_vec(n)
    return 1.0 - f * f


@dataclass
class Network:
    """Weights/biases plus input normalization and class ordering.

    norm_params holds per-input-feature (min, max) captured from training
    data; inputs are mapped affinely to [-1, 1] and clipped outside the
    training range.
    """

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    norm_params: list[tuple[float, float]] | None = None
    class_order: list[str] = field(default_factory=lambda: list(DEFAULT_CLASS_ORDER))
    seed: int | None = None

    def __post_init__(self):
        if len(self.layer_sizes) < 2 or any(s <= 0 for s in self.layer_sizes):
            raise ValueError(f"invalid layer sizes {self.layer_sizes}")
        n_weighted = len(self.layer_sizes) - 1
        if len(self.weights) != n_weighted or len(self.biases) != n_weighted:
            raise ValueError("weights/biases count must equal layer count - 1")
        for m, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.layer_sizes[m + 1], self.layer_sizes[m])
            if w.shape != expect:
                raise ShapeError(f"layer {m} weight shape {w.shape}, expected {expect}")
            if b.shape != (self.layer_sizes[m + 1],):
                raise ShapeError(f"layer {m} bias shape {b.shape}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {m} has non-finite parameters")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "Network":
        return Network(
            layer_sizes=list(self.layer_sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            norm_params=None if self.norm_params is None else list(self.norm_params),
            class_order=list(self.class_order),
            seed=self.seed,
        )

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        """Map raw features to [-1, 1] using stored per-feature (min, max)."""
        if self.norm_params is None:
            return np.asarray(raw, dtype=np.float64)
        raw = np.asarray(raw, dtype=np.float64)
        out = np.empty_like(raw)
        for i, (lo, hi) in enumerate(self.norm_params):
            span = hi - lo
            if span == 0.0:
                out[i] = 0.0
            else:
                out[i] = 2.0 * (min(max(raw[i], lo), hi) - lo) / span - 1.0
        return out


@dataclass
class ForwardTrace:
    """Per-layer net inputs and activations; activations[0] is the input."""

    net_inputs: list[np.ndarray]
    activations: list[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]


@dataclass
class TrainingPair:
    """Normalized input vector and a +-1 one-hot target."""

    input: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        self.input = np.asarray(self.input, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64)
        # multi-output classification targets are one-hot in {-1, +1};
        # scalar-output targets (e.g. XOR-style fixtures) are exempt
        if self.target.size > 1 and np.sum(self.target == 1.0) != 1:
            raise ValueError("target must have exactly one +1 component")


def init_network(
    layer_sizes: list[int],
    seed: int,
    class_order: list[str] | None = None,
) -> Network:
    """Uniform [-0.5, 0.5] initialization from a splitmix64 stream.

    Draw order is fixed: layer by layer, weight matrix row-major, then the
    bias vector, so the same seed always yields the same network.
    """
    if len(layer_sizes) < 2 or any(s <= 0 for s in layer_sizes):
        raise ValueError(f"invalid layer sizes {layer_sizes}")
    rng = SplitMix64(seed)
    weights, biases = [], []
    for m in range(len(layer_sizes) - 1):
        rows, cols = layer_sizes[m + 1], layer_sizes[m]
        w = np.array(
            [rng.uniform(-0.5, 0.5) for _ in range(rows * cols)]
        ).reshape(rows, cols)
        b = np.array([rng.uniform(-0.5, 0.5) for _ in range(rows)])
        weights.append(w)
        biases.append(b)
    return Network(
        layer_sizes=list(layer_sizes),
        weights=weights,
        biases=biases,
        class_order=list(class_order or DEFAULT_CLASS_ORDER),
        seed=seed,
    )


def forward(net: Network, p: np.ndarray) -> ForwardTrace:
    """Propagate one (already normalized) input, keeping the full trace."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (net.layer_sizes[0],):
        raise ShapeError(
            f"input length {p.shape} does not match first layer ({net.layer_sizes[0]})"
        )
    net_inputs = []
    activations = [p]
    a = p
    for w, b in zip(net.weights, net.biases):
        n = w @ a + b
        a = _tanh_vec(n)
        net_inputs.append(n)
        activations.append(a)
    return ForwardTrace(net_inputs=net_inputs, activations=activations)


def mse(errors: np.ndarray, n: int) -> float:
    """Sum of squared errors over n (the performance function)."""
    errors = np.asarray(errors, dtype=np.float64)
    if n < 1 or n != errors.size:
        raise ValueError(f"count {n} does not match {errors.size} errors")
    return float(np.sum(errors * errors) / n)


def batch_mse(net: Network, batch: list[TrainingPair]) -> float:
    """Mean over samples of the per-sample squared error e^T e."""
    if not batch:
        raise ValueError("empty batch")
    total = 0.0
    for pair in batch:
        e = pair.target - forward(net, pair.input).output
        total += float(e @ e)
    return total / len(batch)


def output_sensitivity(trace: ForwardTrace, target: np.ndarray) -> np.ndarray:
    """Sensitivity at the output layer: -2 f'(n) * (t - a), elementwise."""
    target = np.asarray(target, dtype=np.float64)
    a = trace.output
    if target.shape != a.shape:
        raise ShapeError(f"target shape {target.shape} vs output {a.shape}")
    return -2.0 * _tanh_deriv_vec(trace.net_inputs[-1]) * (target - a)


def backprop_sensitivities(
    net: Network, trace: ForwardTrace, s_out: np.ndarray
) -> list[np.ndarray]:
    """Propagate sensitivities backward: s^m = f'(n^m) * (W^{m+1})^T s^{m+1}.

    Returns one sensitivity vector per weighted layer, input side first.
    """
    s = np.asarray(s_out, dtype=np.float64)
    if s.shape != (net.layer_sizes[-1],):
        raise ShapeError(f"output sensitivity shape {s.shape}")
    sens = [s]
    for m in range(net.n_layers - 1, 0, -1):
        s = _tanh_deriv_vec(trace.net_inputs[m - 1]) * (net.weights[m].T @ s)
        sens.append(s)
    sens.reverse()
    return sens


def gradient(
    net: Network, batch: list[TrainingPair]
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Batch-mean gradient of the MSE objective w.r.t. weights and biases.

    Per sample the weight gradient is s^m (a^{m-1})^T and the bias gradient
    is s^m; both are averaged over the batch.
    """
    if not batch:
        raise ValueError("empty batch")
    gw = [np.zeros_like(w) for w in net.weights]
    gb = [np.zeros_like(b) for b in net.biases]
    for pair in batch:
        trace = forward(net, pair.input)
        sens = backprop_sensitivities(
            net, trace, output_sensitivity(trace, pair.target)
        )
        for m in range(net.n_layers):
            gw[m] += np.outer(sens[m], trace.activations[m])
            gb[m] += sens[m]
    q = float(len(batch))
    return [g / q for g in gw], [g / q for g in gb]


def jacobian_lm(
    net: Network, batch: list[TrainingPair]
) -> tuple[np.ndarray, np.ndarray]:
    """Error vector and its Jacobian for the Levenberg-Marquardt step.

    e stacks per-sample, per-output errors (t_i - a_i). Row r of j holds
    the derivative of that single error component w.r.t. every parameter
    (flattening order as documented at module top). Each row is produced
    by the usual sensitivity recurrence seeded with -f'(n) at the one
    output unit owning the row.
    """
    if not batch:
        raise ValueError("empty batch")
    n_out = net.layer_sizes[-1]
    n_par = net.n_params()
    j = np.zeros((len(batch) * n_out, n_par))
    e = np.zeros(len(batch) * n_out)
    for q, pair in enumerate(batch):
        trace = forward(net, pair.input)
        err = pair.target - trace.output
        fprime_out = _tanh_deriv_vec(trace.net_inputs[-1])
        for i in range(n_out):
            r = q * n_out + i
            e[r] = err[i]
            seed = np.zeros(n_out)
            seed[i] = -fprime_out[i]
            sens = backprop_sensitivities(net, trace, seed)
            col = 0
            for m in range(net.n_layers):
                w_block = np.outer(sens[m], trace.activations[m])
                j[r, col:col + w_block.size] = w_block.ravel()
                col += w_block.size
                j[r, col:col + sens[m].size] = sens[m]
                col += sens[m].size
    return j, e


def params_to_vector(net: Network) -> np.ndarray:
    parts = []
    for w, b in zip(net.weights, net.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def vector_to_params(
    net: Network, x: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    if x.size != net.n_params():
        raise ShapeError(f"vector length {x.size}, expected {net.n_params()}")
    weights, biases = [], []
    col = 0
    for w, b in zip(net.weights, net.biases):
        weights.append(x[col:col + w.size].reshape(w.shape).copy())
        col += w.size
        biases.append(x[col:col + b.size].copy())
        col += b.size
    return weights, biases


def with_params(net: Network, x: np.ndarray) -> Network:
    """New network with the same metadata and parameters taken from x."""
    weights, biases = vector_to_params(net, x)
    out = net.copy()
    out.weights = weights
    out.biases = biases
    return out


def save_model(net: Network, path: str, extra: dict | None = None) -> None:
    """Write the model as JSON; floats round-trip bit-exactly."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "layer_sizes": net.layer_sizes,
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "norm_params": net.norm_params,
        "class_order": net.class_order,
        "seed": net.seed,
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> tuple[Network, dict]:
    """Read a model JSON back; returns (network, full document)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    net = Network(
        layer_sizes=list(doc["layer_sizes"]),
        weights=[np.array(w, dtype=np.float64) for w in doc["weights"]],
        biases=[np.array(b, dtype=np.float64) for b in doc["biases"]],
        norm_params=(
            None
            if doc.get("norm_params") is None
            else [tuple(p) for p in doc["norm_params"]]
        ),
        class_order=list(doc["class_order"]),
        seed=doc.get("seed"),
    )
    return net, doc
