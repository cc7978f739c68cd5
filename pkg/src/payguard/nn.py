"""Dense networks with hand-derived backpropagation and Adam updates.

Layers and optimizer states are immutable values: an update builds new
objects around new parameter tensors instead of mutating in place. Each
layer caches a transposed copy of its weight matrix so the forward pass
and the input-gradient pass both run as row-major matrix products, which
is what the kernel backends are fast at.
"""

import math

from . import backend
from .backend import pykernels as _codes
from .errors import DimensionError, DomainError, NumericError, StateError
from .tensor import Tensor

# probabilities are clamped into [PROB_EPS, 1 - PROB_EPS] before any log
PROB_EPS = 1e-12

_ACT_CODES = {
    "identity": _codes.ACT_IDENTITY,
    "leaky_relu": _codes.ACT_LEAKY_RELU,
    "sigmoid": _codes.ACT_SIGMOID,
    "tanh": _codes.ACT_TANH,
}

ACTIVATIONS = tuple(sorted(_ACT_CODES))


class DenseLayer:
    """Affine map plus pointwise activation: act(x @ weights.T + bias).

    weights has shape [out x in]; bias has shape [out]. alpha is the
    negative-side slope and only affects the leaky_relu activation.
    """

    __slots__ = ("weights", "bias", "activation", "alpha", "_code", "_wt")

    def __init__(self, weights: Tensor, bias: Tensor, activation: str,
                 alpha: float = 0.2):
        if activation not in _ACT_CODES:
            raise DomainError(
                f"unknown activation {activation!r}; expected one of {ACTIVATIONS}")
        if weights.rank != 2:
            raise DimensionError(f"weights must be rank 2, got shape {weights.shape}")
        if bias.shape != (weights.shape[0],):
            raise DimensionError(
                f"bias shape {bias.shape} does not match weights {weights.shape}")
        if not 0.0 < alpha < 1.0:
            raise DomainError(f"leaky slope must lie in (0, 1), got {alpha}")
        self.weights = weights
        self.bias = bias
        self.activation = activation
        self.alpha = float(alpha)
        self._code = _ACT_CODES[activation]
        self._wt = backend.kernels.transpose(
            weights.data, weights.shape[0], weights.shape[1])

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]

    def with_params(self, weights: Tensor, bias: Tensor) -> "DenseLayer":
        """Same activation and slope around replacement parameters."""
        if weights.shape != self.weights.shape or bias.shape != self.bias.shape:
            raise DimensionError(
                f"replacement shapes {weights.shape}/{bias.shape} do not match "
                f"layer shapes {self.weights.shape}/{self.bias.shape}")
        return DenseLayer(weights, bias, self.activation, self.alpha)


class Network:
    """Ordered stack of dense layers with chained dimensions."""

    __slots__ = ("layers",)

    def __init__(self, layers):
        layers = tuple(layers)
        if not layers:
            raise DimensionError("network needs at least one layer")
        for i, (a, b) in enumerate(zip(layers, layers[1:])):
            if a.out_dim != b.in_dim:
                raise DimensionError(
                    f"layer {i} emits {a.out_dim} features but layer {i + 1} "
                    f"expects {b.in_dim}")
        self.layers = layers

    @property
    def input_dim(self):
        return self.layers[0].in_dim

    @property
    def output_dim(self):
        return self.layers[-1].out_dim

    def params(self):
        """Flat parameter list [w0, b0, w1, b1, ...] in layer order."""
        out = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.bias)
        return out

    def set_params(self, params) -> "Network":
        """New network with the same wiring around replacement parameters."""
        if len(params) != 2 * len(self.layers):
            raise DimensionError(
                f"expected {2 * len(self.layers)} parameter tensors, got {len(params)}")
        rebuilt = [layer.with_params(params[2 * i], params[2 * i + 1])
                   for i, layer in enumerate(self.layers)]
        return Network(rebuilt)

    @classmethod
    def initialize(cls, dims, activations, rng, weight_scale=0.02) -> "Network":
        """Fresh network: weights ~ N(0, weight_scale^2), biases zero.

        dims is [in, h1, ..., out]; activations names one activation per
        layer, so len(dims) == len(activations) + 1.
        """
        if len(dims) != len(activations) + 1:
            raise DimensionError(
                f"{len(dims)} dims with {len(activations)} activations; "
                "need exactly one activation per layer")
        layers = []
        for i, act in enumerate(activations):
            fan_in, fan_out = dims[i], dims[i + 1]
            buf = backend.kernels.scale(rng.normals(fan_out * fan_in), weight_scale)
            layers.append(DenseLayer(Tensor._wrap((fan_out, fan_in), buf),
                                     Tensor.zeros((fan_out,)), act))
        return cls(layers)


class GradTape:
    """Per-layer forward intermediates, consumed by exactly one backward pass."""

    __slots__ = ("_net", "_batch", "_entries", "_consumed")

    def __init__(self, net, batch, entries):
        self._net = net
        self._batch = batch
        self._entries = entries
        self._consumed = False

    @property
    def batch(self):
        return self._batch

    def _take(self, net):
        if self._consumed:
            raise StateError("gradient tape already consumed by a backward pass")
        if net is not self._net:
            raise StateError("gradient tape was recorded on a different network")
        self._consumed = True
        return self._entries


def forward(net: Network, x: Tensor):
    """Run the network on a batch; returns (output, tape for backward).

    x is [batch x input_dim]; the output is [batch x output_dim].
    """
    if x.rank != 2 or x.shape[1] != net.input_dim:
        raise DimensionError(
            f"forward expects [batch x {net.input_dim}] input, got {x.shape}")
    k = backend.kernels
    batch = x.shape[0]
    entries = []
    cur = x
    for layer in net.layers:
        buf = k.matmul_nn(cur.data, layer._wt, batch, layer.in_dim, layer.out_dim)
        buf = k.bias_add(buf, layer.bias.data, batch, layer.out_dim)
        pre = Tensor._wrap((batch, layer.out_dim), buf)
        post = Tensor._wrap((batch, layer.out_dim),
                            k.act_forward(layer._code, buf, layer.alpha))
        entries.append((cur, pre, post))
        cur = post
    return cur, GradTape(net, batch, entries)


def backward(net: Network, tape: GradTape, dl_dy: Tensor,
             need_param_grads: bool = True, need_input_grad: bool = False):
    """Backpropagate the output gradient of a scalar loss through the net.

    dl_dy is [batch x output_dim], the gradient of the loss with respect
    to the forward output. Returns (param_grads, input_grad): param_grads
    is one (dW, db) pair per layer (or None when not requested), and
    input_grad is the [batch x input_dim] gradient (or None when not
    requested). The tape must come from the immediately preceding forward
    on the same network.
    """
    entries = tape._take(net)
    if dl_dy.shape != (tape.batch, net.output_dim):
        raise DimensionError(
            f"output gradient shape {dl_dy.shape} does not match forward "
            f"output ({tape.batch}, {net.output_dim})")
    k = backend.kernels
    batch = tape.batch
    grads = [None] * len(net.layers) if need_param_grads else None
    cur = dl_dy
    for idx in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[idx]
        x, pre, post = entries[idx]
        dpre = k.act_backward(layer._code, pre.data, post.data, cur.data,
                              layer.alpha)
        if need_param_grads:
            dw = k.matmul_tn(dpre, x.data, batch, layer.out_dim, layer.in_dim)
            db = k.colsum(dpre, batch, layer.out_dim)
            grads[idx] = (Tensor._wrap((layer.out_dim, layer.in_dim), dw),
                          Tensor._wrap((layer.out_dim,), db))
        if idx > 0 or need_input_grad:
            dx = k.matmul_nn(dpre, layer.weights.data, batch,
                             layer.out_dim, layer.in_dim)
            cur = Tensor._wrap((batch, layer.in_dim), dx)
        else:
            cur = None
    return grads, cur


def flatten_grads(param_grads):
    """[(dw0, db0), ...] -> [dw0, db0, dw1, db1, ...] matching params()."""
    out = []
    for dw, db in param_grads:
        out.append(dw)
        out.append(db)
    return out


def _check_probabilities(p: Tensor):
    if p.size == 0:
        raise DomainError("probability batch is empty")
    for v in p.data:
        if not 0.0 <= v <= 1.0:
            if math.isnan(v) or math.isinf(v):
                raise NumericError(f"non-finite probability {v!r} in batch")
            raise DomainError(f"probability {v!r} outside [0, 1]")


def bce_terms(p: Tensor, target_is_real: bool) -> float:
    """Mean log p (real target) or mean log(1 - p) (fake target).

    Values are clamped into [PROB_EPS, 1 - PROB_EPS] before the log so the
    result stays finite at the endpoints. Sign conventions belong to the
    loss definitions that combine these terms.
    """
    _check_probabilities(p)
    k = backend.kernels
    if target_is_real:
        logs = k.log_clamped(p.data, PROB_EPS)
    else:
        logs = k.log1m_clamped(p.data, PROB_EPS)
    return k.reduce_sum(logs) / p.size


def bce_grad(p: Tensor, target_is_real: bool) -> Tensor:
    """Gradient of bce_terms with respect to p.

    Zero wherever the clamp is active, matching the piecewise-constant
    plateau bce_terms actually computes there.
    """
    _check_probabilities(p)
    k = backend.kernels
    s = 1.0 / p.size
    if target_is_real:
        buf = k.dlog_clamped(p.data, PROB_EPS, s)
    else:
        buf = k.dlog1m_clamped(p.data, PROB_EPS, s)
    return Tensor._wrap(p.shape, buf)


class AdamState:
    """First/second-moment accumulators plus the shared step counter."""

    __slots__ = ("m", "v", "t")

    def __init__(self, m, v, t):
        m = tuple(m)
        v = tuple(v)
        if len(m) != len(v):
            raise DimensionError(f"{len(m)} first moments vs {len(v)} second moments")
        for i, (a, b) in enumerate(zip(m, v)):
            if a.shape != b.shape:
                raise DimensionError(
                    f"moment shapes disagree for parameter {i}: {a.shape} vs {b.shape}")
        if t < 0:
            raise DomainError(f"step counter must be >= 0, got {t}")
        self.m = m
        self.v = v
        self.t = int(t)

    @classmethod
    def fresh(cls, params) -> "AdamState":
        return cls([Tensor.zeros(p.shape) for p in params],
                   [Tensor.zeros(p.shape) for p in params], 0)


def adam_step(params, grads, state: AdamState, lr=2e-4, beta1=0.5,
              beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; returns (new params, new state).

    m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2; with hats m/(1-b1^t),
    v/(1-b2^t) the parameters move by -lr * m_hat / (sqrt(v_hat) + eps).
    """
    if lr <= 0.0:
        raise DomainError(f"learning rate must be positive, got {lr}")
    if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
        raise DomainError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
    if eps <= 0.0:
        raise DomainError(f"eps must be positive, got {eps}")
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DimensionError(
            f"{len(params)} params vs {len(grads)} grads vs "
            f"{len(state.m)} optimizer slots")
    k = backend.kernels
    t = state.t + 1
    new_params, new_m, new_v = [], [], []
    for i, (theta, g) in enumerate(zip(params, grads)):
        if theta.shape != g.shape or theta.shape != state.m[i].shape:
            raise DimensionError(
                f"parameter {i}: param {theta.shape}, grad {g.shape}, "
                f"state {state.m[i].shape}")
        bad = k.first_nonfinite(g.data)
        if bad >= 0:
            raise NumericError(
                f"non-finite gradient for parameter {i} (shape {g.shape}) "
                f"at flat index {bad}")
        th, m, v = k.adam_update(theta.data, g.data, state.m[i].data,
                                 state.v[i].data, t, lr, beta1, beta2, eps)
        new_params.append(Tensor._wrap(theta.shape, th))
        new_m.append(Tensor._wrap(theta.shape, m))
        new_v.append(Tensor._wrap(theta.shape, v))
    return new_params, AdamState(new_m, new_v, t)
