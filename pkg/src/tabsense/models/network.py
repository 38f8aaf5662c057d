"""Feed-forward networks: MLP and tabular ResNet, trained with Adam.

Both architectures are expressed as a stack of ops with explicit forward
caches and hand-written backward passes, which keeps the analytic
gradients checkable against central finite differences. Networks always
train on normalized inputs: the session's normalization is used when one
is configured, otherwise a mean/std transform is fitted internally.
Regression targets are standardized during training and predictions are
mapped back, so the caller always sees raw-scale values.
"""
from __future__ import annotations

import numpy as np

from ..data import NormalizationParams, fit_normalizer
from .base import (
    FeatureFingerprint,
    FeatureSpace,
    ModelError,
    ModelSpec,
    TrainedModel,
    register_family,
    validate_training_inputs,
)


def _he_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class _Linear:
    def __init__(self, W: np.ndarray, b: np.ndarray):
        self.W = W
        self.b = b

    def forward(self, x):
        return x @ self.W + self.b, x

    def backward(self, dy, cache):
        x = cache
        return dy @ self.W.T, [x.T @ dy, dy.sum(axis=0)]

    @property
    def params(self):
        return [self.W, self.b]

    def set_params(self, arrs):
        self.W, self.b = arrs


class _ReLU:
    params: list = []

    def forward(self, x):
        y = np.maximum(x, 0.0)
        return y, (x > 0.0)

    def backward(self, dy, cache):
        return dy * cache, []

    def set_params(self, arrs):
        pass


class _Dropout:
    params: list = []

    def __init__(self, rate: float):
        self.rate = rate
        self.rng: np.random.Generator | None = None  # set during training only

    def forward(self, x):
        if self.rng is None or self.rate <= 0.0:
            return x, None
        keep = 1.0 - self.rate
        mask = (self.rng.random(x.shape) < keep) / keep
        return x * mask, mask

    def backward(self, dy, cache):
        if cache is None:
            return dy, []
        return dy * cache, []

    def set_params(self, arrs):
        pass


class _ResBlock:
    """x + L2(relu(L1(x))), identity skip."""

    def __init__(self, W1, b1, W2, b2):
        self.l1 = _Linear(W1, b1)
        self.l2 = _Linear(W2, b2)

    def forward(self, x):
        z1, c1 = self.l1.forward(x)
        a1 = np.maximum(z1, 0.0)
        z2, c2 = self.l2.forward(a1)
        return x + z2, (c1, z1 > 0.0, c2)

    def backward(self, dy, cache):
        c1, relu_mask, c2 = cache
        da1, g2 = self.l2.backward(dy, c2)
        dz1 = da1 * relu_mask
        dx, g1 = self.l1.backward(dz1, c1)
        return dx + dy, g1 + g2

    @property
    def params(self):
        return self.l1.params + self.l2.params

    def set_params(self, arrs):
        self.l1.set_params(arrs[:2])
        self.l2.set_params(arrs[2:])


def _build_mlp(d_in, d_out, hidden, dropout, rng):
    ops = []
    prev = d_in
    for width in hidden:
        ops.append(_Linear(_he_uniform(rng, prev, width), np.zeros(width)))
        ops.append(_ReLU())
        if dropout > 0.0:
            ops.append(_Dropout(dropout))
        prev = width
    ops.append(_Linear(np.zeros((prev, d_out)), np.zeros(d_out)))  # zero-init head
    return ops


def _build_resnet(d_in, d_out, blocks, size, dropout, rng):
    ops = [_Linear(_he_uniform(rng, d_in, size), np.zeros(size))]
    for _ in range(blocks):
        ops.append(
            _ResBlock(
                _he_uniform(rng, size, size),
                np.zeros(size),
                _he_uniform(rng, size, size),
                np.zeros(size),
            )
        )
        if dropout > 0.0:
            ops.append(_Dropout(dropout))
    ops.append(_Linear(np.zeros((size, d_out)), np.zeros(d_out)))
    return ops


def _forward(ops, x):
    caches = []
    for op in ops:
        x, cache = op.forward(x)
        caches.append(cache)
    return x, caches


def _backward(ops, caches, dy):
    grads: list[np.ndarray] = []
    for op, cache in zip(reversed(ops), reversed(caches)):
        dy, g = op.backward(dy, cache)
        grads = g + grads
    return grads


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(ops, x, y, task):
    """Mean loss over the batch and analytic parameter gradients.

    MSE head for regression, softmax cross-entropy for classification.
    """
    out, caches = _forward(ops, x)
    n = x.shape[0]
    if task == "regression":
        diff = out - y
        loss = float(np.mean(diff * diff))
        dy = 2.0 * diff / diff.size
    else:
        p = _softmax(out)
        loss = float(-np.mean(np.log(np.clip(p[y > 0.5], 1e-12, None))))
        dy = (p - y) / n
    grads = _backward(ops, caches, dy)
    return loss, grads


def flatten_params(ops) -> list[np.ndarray]:
    out = []
    for op in ops:
        out.extend(op.params)
    return out


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)

    def snapshot(self):
        return ([m.copy() for m in self.m], [v.copy() for v in self.v], self.t)

    def restore(self, snap):
        saved_m, saved_v, self.t = snap
        for m, s in zip(self.m, saved_m):
            m[...] = s
        for v, s in zip(self.v, saved_v):
            v[...] = s


def gradient_check(ops, x, y, task, h: float = 1e-5) -> float:
    """Max relative deviation between analytic and central-difference grads.

    Only for small nets (<= 1000 parameters), double precision.
    """
    params = flatten_params(ops)
    total = sum(p.size for p in params)
    if total > 1000:
        raise ModelError(f"gradient check limited to 1000 parameters, got {total}")
    _, analytic = loss_and_grad(ops, x, y, task)
    worst = 0.0
    for arr, g in zip(params, analytic):
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            lp, _ = loss_and_grad(ops, x, y, task)
            flat[i] = keep - h
            lm, _ = loss_and_grad(ops, x, y, task)
            flat[i] = keep
            fd = (lp - lm) / (2.0 * h)
            denom = max(abs(fd) + abs(gflat[i]), 1e-8)
            worst = max(worst, abs(fd - gflat[i]) / denom)
    return worst


def check_model_gradients(model: "_NetworkModel", X: np.ndarray, Y: np.ndarray, h=1e-5) -> float:
    """Gradient check on a trained network's own parameters and loss head."""
    x = model.normalization.apply(X)
    if model.task == "regression":
        y = (Y - model.target_mean) / model.target_std
    else:
        y = Y
    return gradient_check(model.ops, x, y, model.task, h=h)


class _NetworkModel(TrainedModel):
    arch: str = ""

    def __init__(self, spec, fingerprint, normalization, history, space, ops, target_scale):
        super().__init__(spec, fingerprint, normalization, history, space)
        self.ops = ops
        self.target_mean, self.target_std = target_scale

    def predict_values(self, values: np.ndarray) -> np.ndarray:
        x = self.normalization.apply(values)
        out, _ = _forward(self.ops, x)
        if self.task == "classification":
            return _softmax(out)
        return out * self.target_std + self.target_mean

    def parameters_dict(self) -> dict:
        linears = [op for op in self.ops if isinstance(op, _Linear)]
        return {
            "arrays": flatten_params(self.ops),
            "target_mean": self.target_mean,
            "target_std": self.target_std,
            "dims": {
                "d_in": int(linears[0].W.shape[0]),
                "d_out": int(linears[-1].W.shape[1]),
            },
        }

    @classmethod
    def _rebuild_ops(cls, spec, d_in, d_out):
        hp = spec.hyperparameters
        rng = np.random.default_rng(0)  # shapes only; arrays are overwritten
        if cls.arch == "mlp":
            return _build_mlp(d_in, d_out, list(hp["hidden_layers"]), 0.0, rng)
        return _build_resnet(d_in, d_out, int(hp["blocks"]), int(hp["layer_size"]), 0.0, rng)

    @classmethod
    def from_parameters(cls, spec, fingerprint, normalization, history, space, params):
        dims = params["dims"]
        ops = cls._rebuild_ops(spec, dims["d_in"], dims["d_out"])
        arrays = [np.asarray(a, dtype=np.float64) for a in params["arrays"]]
        i = 0
        for op in ops:
            k = len(op.params)
            if k:
                op.set_params(arrays[i : i + k])
                i += k
        model = cls(
            spec,
            fingerprint,
            normalization,
            history,
            space,
            ops,
            (np.asarray(params["target_mean"]), np.asarray(params["target_std"])),
        )
        return model


@register_family("mlp")
class MlpModel(_NetworkModel):
    arch = "mlp"


@register_family("tabular_resnet")
class TabularResnetModel(_NetworkModel):
    arch = "tabular_resnet"


def _build_for_spec(spec: ModelSpec, d_in: int, d_out: int, rng) -> list:
    hp = spec.hyperparameters
    if spec.family == "mlp":
        return _build_mlp(d_in, d_out, list(hp["hidden_layers"]), float(hp["dropout"]), rng)
    return _build_resnet(
        d_in, d_out, int(hp["blocks"]), int(hp["layer_size"]), float(hp["dropout"]), rng
    )


def train_network(
    spec: ModelSpec,
    X: np.ndarray,
    Y: np.ndarray,
    fingerprint: FeatureFingerprint,
    normalization: NormalizationParams | None = None,
    feature_space: FeatureSpace | None = None,
    progress=None,
) -> _NetworkModel:
    """Train an MLP or tabular ResNet.

    ``normalization`` is the input transform to bake into the model; when
    None (session has no normalization) a mean/std transform is fitted on
    the training inputs, because networks always train on normalized data.
    """
    validate_training_inputs(X, Y)
    hp = spec.hyperparameters
    rng = np.random.default_rng(spec.seed)
    if normalization is None or normalization.method == "none":
        normalization = fit_normalizer(X, "mean_std", np.ones(X.shape[0], dtype=bool))
    Xn = normalization.apply(X)

    classification = spec.task == "classification"
    if classification:
        t_mean = np.zeros(Y.shape[1])
        t_std = np.ones(Y.shape[1])
        Yt = Y
    else:
        t_mean = Y.mean(axis=0)
        t_std = Y.std(axis=0)
        t_std = np.where(t_std > 0, t_std, 1.0)
        Yt = (Y - t_mean) / t_std

    ops = _build_for_spec(spec, X.shape[1], Y.shape[1], rng)
    dropout_ops = [op for op in ops if isinstance(op, _Dropout)]
    for op in dropout_ops:
        op.rng = rng
    params = flatten_params(ops)
    adam = _Adam(params, lr=float(hp["learning_rate"]))
    batch = int(hp["batch_size"])
    epochs = int(hp["epochs"])
    n = X.shape[0]
    history = []

    def full_loss() -> float:
        for op in dropout_ops:
            op.rng = None
        value, _ = loss_and_grad(ops, Xn, Yt, spec.task)
        for op in dropout_ops:
            op.rng = rng
        return value

    prev = full_loss()
    for epoch in range(epochs):
        order = rng.permutation(n)
        rng_state = rng.bit_generator.state
        snapshot = ([p.copy() for p in params], adam.snapshot())
        # backtracking keeps the post-epoch train loss non-increasing: on a
        # transient Adam overshoot the epoch is replayed at a halved rate
        for _attempt in range(10):
            for start in range(0, n, batch):
                rows = order[start : start + batch]
                _, grads = loss_and_grad(ops, Xn[rows], Yt[rows], spec.task)
                adam.step(params, grads)
            epoch_loss = full_loss()
            if epoch_loss <= prev + 1e-12 or adam.lr < 1e-12:
                break
            for p, saved in zip(params, snapshot[0]):
                p[...] = saved
            adam.restore(snapshot[1])
            adam.lr *= 0.5
            rng.bit_generator.state = rng_state
        prev = epoch_loss
        history.append(epoch_loss)
        if progress:
            progress((epoch + 1) / epochs)
    for op in dropout_ops:
        op.rng = None  # inference mode

    cls = MlpModel if spec.family == "mlp" else TabularResnetModel
    return cls(spec, fingerprint, normalization, history, feature_space, ops, (t_mean, t_std))
