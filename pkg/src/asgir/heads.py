"""Downstream classifier heads over segment embeddings.

Two heads share the scoring interface (an n_classes score vector whose
argmax, lowest id first on ties, is the prediction):

* one-vs-rest linear SVM, trained with dual coordinate descent on the
  L1 hinge loss (bias handled by feature augmentation);
* per-class diagonal Gaussian mixtures fit by EM, scored as
  log p(x | class) + log prior.

Trained heads persist to the ASGM container together with the label
registry and round-trip bit-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    ArgumentError,
    DegenerateTrainingError,
    ShapeInconsistencyError,
    TruncatedFileError,
)
from .labels import LabelRegistry
from .serialize import open_container, pack_string, read_tensor_table, write_container

ASGM_MAGIC = b"ASGM"
VARIANCE_FLOOR = 1e-6


@dataclass
class SvmModel:
    weight_matrix: np.ndarray  # (n_classes, dim)
    biases: np.ndarray  # (n_classes,)
    C: float
    registry: LabelRegistry

    @property
    def n_classes(self) -> int:
        return self.weight_matrix.shape[0]


@dataclass
class GmmModel:
    means: np.ndarray  # (n_classes, k, dim)
    variances: np.ndarray  # (n_classes, k, dim)
    mix_weights: np.ndarray  # (n_classes, k)
    log_priors: np.ndarray  # (n_classes,)
    registry: LabelRegistry

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]


def predict(scores: np.ndarray) -> int:
    """Argmax with lowest-id tie-break (np.argmax returns the first max)."""
    return int(np.argmax(scores))


def _check_training_inputs(embeddings, labels):
    x = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or len(x) == 0:
        raise ArgumentError("embeddings must be a nonempty 2-D array")
    if len(x) != len(y):
        raise ArgumentError(f"{len(x)} embeddings vs {len(y)} labels")
    return x, y


# ---------------------------------------------------------------------------
# linear SVM, one-vs-rest


def _dual_cd_binary(
    x_aug: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float,
    max_iter: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Dual coordinate descent for one binary L1-hinge SVM.

    Minimizes 0.5*a'Qa - sum(a) over 0 <= a_i <= C with Q_ij =
    y_i y_j x_i'x_j; stops when the largest projected gradient over an
    epoch drops below tol. Returns the augmented weight vector.
    """
    n, d = x_aug.shape
    alpha = np.zeros(n)
    w = np.zeros(d)
    q_diag = np.einsum("ij,ij->i", x_aug, x_aug)
    order = np.arange(n)
    for _ in range(max_iter):
        rng.shuffle(order)
        max_violation = 0.0
        for i in order:
            g = y[i] * (w @ x_aug[i]) - 1.0
            if alpha[i] <= 0.0:
                pg = min(g, 0.0)
            elif alpha[i] >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            max_violation = max(max_violation, abs(pg))
            if pg != 0.0:
                new_alpha = min(max(alpha[i] - g / q_diag[i], 0.0), C)
                w += (new_alpha - alpha[i]) * y[i] * x_aug[i]
                alpha[i] = new_alpha
        if max_violation < tol:
            break
    return w


def svm_train(
    embeddings,
    labels,
    registry: LabelRegistry,
    C: float = 1.0,
    tol: float = 1e-4,
    max_iter: int = 1000,
    seed: int = 0,
) -> SvmModel:
    """Fit one-vs-rest linear SVMs; deterministic for a fixed seed."""
    x, y = _check_training_inputs(embeddings, labels)
    if len(np.unique(y)) < 2:
        raise DegenerateTrainingError("need at least 2 distinct labels to train an SVM")
    if C <= 0:
        raise ArgumentError("C must be positive")

    n_classes = len(registry)
    x_aug = np.hstack([x, np.ones((len(x), 1))])
    weights = np.zeros((n_classes, x.shape[1]))
    biases = np.zeros(n_classes)
    for c in range(n_classes):
        targets = np.where(y == c, 1.0, -1.0)
        rng = np.random.default_rng(seed + c)
        w_aug = _dual_cd_binary(x_aug, targets, C, tol, max_iter, rng)
        weights[c] = w_aug[:-1]
        biases[c] = w_aug[-1]
    # parameters are persisted as float32; quantize now so the model scores
    # identically before and after a save/load round trip
    return SvmModel(
        weight_matrix=weights.astype(np.float32),
        biases=biases.astype(np.float32),
        C=C,
        registry=registry,
    )


def svm_score(model: SvmModel, embedding: np.ndarray) -> np.ndarray:
    """Per-class scores weight_matrix @ e + biases."""
    e = np.asarray(embedding, dtype=np.float64)
    if e.shape != (model.weight_matrix.shape[1],):
        raise ArgumentError(
            f"embedding dim {e.shape} does not match model dim "
            f"{model.weight_matrix.shape[1]}"
        )
    return model.weight_matrix.astype(np.float64) @ e + model.biases.astype(np.float64)


def svm_hinge_loss(model: SvmModel, embeddings, labels) -> float:
    """Total one-vs-rest hinge loss sum over classes and points."""
    x, y = _check_training_inputs(embeddings, labels)
    scores = x @ model.weight_matrix.astype(np.float64).T + model.biases
    total = 0.0
    for c in range(model.n_classes):
        targets = np.where(y == c, 1.0, -1.0)
        total += float(np.maximum(0.0, 1.0 - targets * scores[:, c]).sum())
    return total


# ---------------------------------------------------------------------------
# diagonal-covariance GMM


def _log_gaussian_diag(x: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """(n, k) log densities of n points under k diagonal Gaussians."""
    diff = x[:, None, :] - means[None, :, :]  # (n, k, d)
    quad = np.sum(diff * diff / variances[None, :, :], axis=2)
    log_det = np.sum(np.log(variances), axis=1)  # (k,)
    d = x.shape[1]
    return -0.5 * (d * np.log(2.0 * np.pi) + log_det[None, :] + quad)


def _fit_mixture(
    x: np.ndarray, k: int, max_em_iter: int, tol: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[float]]:
    """EM for one k-component diagonal mixture; returns the LL trace too."""
    n, d = x.shape
    if k == 1:
        means = x.mean(axis=0, keepdims=True)
        variances = np.maximum(x.var(axis=0, keepdims=True), VARIANCE_FLOOR)
        weights = np.ones(1)
        ll = float(np.sum(_log_gaussian_diag(x, means, variances)))
        return means, variances, weights, [ll]

    picks = rng.choice(n, size=k, replace=False)
    means = x[picks].copy()
    variances = np.tile(np.maximum(x.var(axis=0), VARIANCE_FLOOR), (k, 1))
    weights = np.full(k, 1.0 / k)

    trace: list[float] = []
    for _ in range(max_em_iter):
        log_joint = _log_gaussian_diag(x, means, variances) + np.log(weights)[None, :]
        log_norm = logsumexp(log_joint, axis=1)
        trace.append(float(log_norm.sum()))
        resp = np.exp(log_joint - log_norm[:, None])  # (n, k)

        counts = resp.sum(axis=0)  # (k,)
        counts = np.maximum(counts, 1e-300)
        means = (resp.T @ x) / counts[:, None]
        second = (resp.T @ (x * x)) / counts[:, None]
        variances = np.maximum(second - means * means, VARIANCE_FLOOR)
        weights = counts / counts.sum()

        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < tol * (1.0 + abs(trace[-2])):
            break
    log_joint = _log_gaussian_diag(x, means, variances) + np.log(weights)[None, :]
    trace.append(float(logsumexp(log_joint, axis=1).sum()))
    return means, variances, weights, trace


def gmm_train(
    embeddings,
    labels,
    registry: LabelRegistry,
    k: int = 1,
    max_em_iter: int = 100,
    tol: float = 1e-7,
    seed: int = 0,
    ll_trace: dict | None = None,
) -> GmmModel:
    """Per-class diagonal mixtures with empirical-frequency class priors.

    Pass ll_trace={} to receive each class's EM log-likelihood sequence
    (monotone non-decreasing up to float rounding).
    """
    x, y = _check_training_inputs(embeddings, labels)
    if k < 1:
        raise ArgumentError("k must be >= 1")
    n_classes = len(registry)
    d = x.shape[1]

    means = np.zeros((n_classes, k, d))
    variances = np.ones((n_classes, k, d))
    mix_weights = np.full((n_classes, k), 1.0 / k)
    counts = np.zeros(n_classes)
    for c in range(n_classes):
        members = x[y == c]
        counts[c] = len(members)
        if len(members) < k:
            raise ArgumentError(
                f"class {registry.name_of(c)!r} has {len(members)} points, needs >= {k}"
            )
        rng = np.random.default_rng(seed + c)
        m, v, w, trace = _fit_mixture(members, k, max_em_iter, tol, rng)
        means[c], variances[c], mix_weights[c] = m, v, w
        if ll_trace is not None:
            ll_trace[c] = trace

    log_priors = np.log(counts / counts.sum())
    return GmmModel(
        means=means,
        variances=variances,
        mix_weights=mix_weights,
        log_priors=log_priors,
        registry=registry,
    )


def gmm_score(model: GmmModel, embedding: np.ndarray) -> np.ndarray:
    """log p(e | class) + log prior per class, via log-sum-exp."""
    e = np.asarray(embedding, dtype=np.float64)
    if e.shape != (model.means.shape[2],):
        raise ArgumentError(
            f"embedding dim {e.shape} does not match model dim {model.means.shape[2]}"
        )
    scores = np.empty(model.n_classes)
    point = e[None, :]
    for c in range(model.n_classes):
        log_comp = _log_gaussian_diag(
            point, model.means[c].astype(np.float64), model.variances[c].astype(np.float64)
        )[0]
        scores[c] = logsumexp(log_comp + np.log(model.mix_weights[c])) + model.log_priors[c]
    return scores


# ---------------------------------------------------------------------------
# persistence


def _pack_registry(registry: LabelRegistry) -> bytes:
    parts = [struct.pack("<I", len(registry))]
    for label in registry:
        parts.append(struct.pack("<I", label.id))
        parts.append(pack_string(label.name))
    return b"".join(parts)


def save_model(model: SvmModel | GmmModel) -> bytes:
    if isinstance(model, SvmModel):
        kind = "svm"
        tensors = {
            "weight_matrix": model.weight_matrix,
            "biases": model.biases,
            "C": np.asarray(model.C, dtype=np.float32),
        }
    elif isinstance(model, GmmModel):
        kind = "gmm"
        tensors = {
            "means": model.means,
            "variances": model.variances,
            "mix_weights": model.mix_weights,
            "log_priors": model.log_priors,
        }
    else:
        raise ArgumentError(f"cannot persist {type(model).__name__}")
    header = pack_string(kind) + _pack_registry(model.registry)
    return write_container(ASGM_MAGIC, header, tensors)


def save_model_with_extras(model, extras: dict[str, np.ndarray]) -> bytes:
    """Persist a head plus auxiliary tensors (e.g. normalization stats)."""
    data = save_model(model)
    if not extras:
        return data
    # splice the extra tensors into the container by rebuilding it
    kind, registry, tensors, other = _load_parts(data)
    tensors.update(extras)
    header = pack_string(kind) + _pack_registry(registry)
    return write_container(ASGM_MAGIC, header, tensors)


def _load_parts(data: bytes):
    reader = open_container(data, ASGM_MAGIC)
    kind = reader.string("head kind")
    if kind not in ("svm", "gmm"):
        raise ShapeInconsistencyError(f"unknown head kind {kind!r}")
    count = reader.u32("label count")
    names = [""] * count
    for _ in range(count):
        label_id = reader.u32("label id")
        name = reader.string("label name")
        if not 0 <= label_id < count or names[label_id]:
            raise ShapeInconsistencyError(f"bad label id {label_id}")
        names[label_id] = name
    registry = LabelRegistry(names)
    tensors = read_tensor_table(reader)
    if not reader.done():
        raise TruncatedFileError("trailing bytes after tensor table")
    return kind, registry, tensors, None


def load_model(data: bytes) -> tuple[SvmModel | GmmModel, dict[str, np.ndarray]]:
    """Load a head model; returns (model, extra tensors)."""
    kind, registry, tensors, _ = _load_parts(data)
    n = len(registry)
    if kind == "svm":
        required = ("weight_matrix", "biases", "C")
        for name in required:
            if name not in tensors:
                raise ShapeInconsistencyError(f"missing tensor {name}")
        wm = tensors["weight_matrix"]
        if wm.ndim != 2 or wm.shape[0] != n or tensors["biases"].shape != (n,):
            raise ShapeInconsistencyError("svm tensor shapes disagree with registry")
        model = SvmModel(
            weight_matrix=wm,
            biases=tensors["biases"],
            C=float(tensors["C"].reshape(-1)[0]),
            registry=registry,
        )
    else:
        required = ("means", "variances", "mix_weights", "log_priors")
        for name in required:
            if name not in tensors:
                raise ShapeInconsistencyError(f"missing tensor {name}")
        means = tensors["means"]
        if means.ndim != 3 or means.shape[0] != n:
            raise ShapeInconsistencyError("gmm tensor shapes disagree with registry")
        if tensors["variances"].shape != means.shape:
            raise ShapeInconsistencyError("gmm variances shape mismatch")
        model = GmmModel(
            means=means,
            variances=tensors["variances"],
            mix_weights=tensors["mix_weights"],
            log_priors=tensors["log_priors"],
            registry=registry,
        )
    extras = {k: v for k, v in tensors.items() if k not in required}
    return model, extras
