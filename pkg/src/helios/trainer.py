"""Training and evaluation of the I_mp regressor.

Two optimisers share one entry point, :func:`train`:

* ``bayesian_lm`` -- Levenberg-Marquardt on beta*E_D + alpha*E_W with the
  evidence (MacKay) re-estimation of alpha and beta after every accepted step,
  using the Gauss-Newton Hessian for the effective parameter count gamma.
* ``adam`` -- minibatch Adam on the MSE with validation early stopping.

Losses are computed on min-max normalised targets; reports carry both the
normalised MSE and the MSE in A^2.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from helios.dataset import DataSplit, Dataset
from helios.errors import DegenerateVariance, EmptyDataset, NoProgress, SingularHessian
from helios.mlp import MlpModel, NormSpec, forward, forward_normalized


@dataclass(frozen=True)
class TrainConfig:
    algorithm: Literal["bayesian_lm", "adam"] = "bayesian_lm"
    max_epochs: int = 1000
    learning_rate: float = 0.001
    seed: int = 0
    mu_init: float = 0.005
    mu_factor: float = 10.0
    mu_max: float = 1e10
    min_grad: float = 1e-7
    hidden_width: int = 15
    batch_size: int = 32
    patience: int = 50
    init_scale: float = 0.5

    def __post_init__(self):
        if self.algorithm not in ("bayesian_lm", "adam"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.mu_factor <= 1:
            raise ValueError("mu_factor must be > 1")
        if self.hidden_width < 1:
            raise ValueError("hidden_width must be >= 1")


@dataclass
class TrainReport:
    algorithm: str
    mse_train: float
    mse_validation: float
    mse_test: float
    mse_train_norm: float
    mse_validation_norm: float
    mse_test_norm: float
    epochs_run: int
    stop_reason: str
    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None
    history: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1) + "\n"

    def history_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = ["epoch", "mse_train", "mse_val", "alpha", "beta", "gamma"]
        writer.writerow(cols)
        for row in self.history:
            writer.writerow(["" if row.get(c) is None else format(row[c], ".17g") for c in cols])
        return buf.getvalue()


@dataclass(frozen=True)
class ErrorHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    min_error: float
    max_error: float

    @property
    def bin_width(self) -> float:
        return (self.max_error - self.min_error) / (len(self.bin_edges) - 1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            writer.writerow([format(lo, ".17g"), format(hi, ".17g"), int(c)])
        return buf.getvalue()


# --- loss, Jacobian, gradient -------------------------------------------------


def _batch_arrays(model: MlpModel, batch: Dataset):
    x = model.norm.normalize_inputs(batch.t_c, batch.g)
    y = model.norm.normalize_target(batch.i_mp)
    return x, y


def loss(model: MlpModel, batch: Dataset) -> float:
    """MSE in normalised target units."""
    x, y = _batch_arrays(model, batch)
    r = forward_normalized(model, x) - y
    return float(np.mean(r * r))


def jacobian(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """d(output)/d(theta), shape (n_samples, n_params), columns in to_vector order."""
    n, width = x.shape[0], model.width
    a = np.tanh(x @ model.w_hidden.T + model.b_hidden)
    delta = (1.0 - a * a) * model.w_out  # (n, width)
    jac = np.empty((n, 4 * width + 1))
    jac[:, : 2 * width] = (delta[:, :, None] * x[:, None, :]).reshape(n, 2 * width)
    jac[:, 2 * width : 3 * width] = delta
    jac[:, 3 * width : 4 * width] = a
    jac[:, -1] = 1.0
    return jac


def gradient(model: MlpModel, batch: Dataset) -> np.ndarray:
    """Analytic gradient of :func:`loss` with respect to ``model.to_vector()``."""
    if len(batch) == 0:
        raise EmptyDataset("gradient needs a non-empty batch")
    x, y = _batch_arrays(model, batch)
    r = forward_normalized(model, x) - y
    return 2.0 / len(y) * (jacobian(model, x).T @ r)


# --- training -----------------------------------------------------------------


def init_model(width: int, norm: NormSpec, seed: int, scale: float = 0.5) -> MlpModel:
    rng = np.random.default_rng(seed)
    return MlpModel.from_vector(rng.uniform(-scale, scale, 4 * width + 1), width, norm)


def train(split: DataSplit, cfg: TrainConfig = TrainConfig()) -> tuple[MlpModel, TrainReport]:
    if len(split.train) == 0:
        raise EmptyDataset("training set is empty")
    tr = split.train
    norm = NormSpec.fit(tr.t_c, tr.g, tr.i_mp)
    model = init_model(cfg.hidden_width, norm, cfg.seed, cfg.init_scale)
    if cfg.algorithm == "bayesian_lm":
        model, info = _train_bayesian_lm(model, split, cfg)
    else:
        model, info = _train_adam(model, split, cfg)

    scale2 = norm.target_half_range**2

    def mse_norm(ds):
        return loss(model, ds) if len(ds) else float("nan")

    m_tr, m_va, m_te = mse_norm(split.train), mse_norm(split.validation), mse_norm(split.test)
    report = TrainReport(
        algorithm=cfg.algorithm,
        mse_train=m_tr * scale2,
        mse_validation=m_va * scale2,
        mse_test=m_te * scale2,
        mse_train_norm=m_tr,
        mse_validation_norm=m_va,
        mse_test_norm=m_te,
        **info,
    )
    return model, report


E_FLOOR = 1e-20  # keeps alpha, beta finite once a fit becomes exact


def effective_parameters(jtj: np.ndarray, lam: float) -> float:
    """gamma = N_w - 2*alpha*tr(H^-1) with H = 2(beta*J'J + alpha*I), i.e. sum e/(e + alpha/beta)."""
    eig = np.clip(np.linalg.eigvalsh(jtj), 0.0, None)
    denom = eig + lam
    terms = np.divide(eig, denom, out=np.zeros_like(eig), where=denom > 0)
    return float(min(max(terms.sum(), 0.0), jtj.shape[0]))


def _train_bayesian_lm(model: MlpModel, split: DataSplit, cfg: TrainConfig):
    width, norm = model.width, model.norm
    x, y = _batch_arrays(model, split.train)
    val = split.validation
    n, n_params = len(y), model.n_params
    theta = model.to_vector()
    eye = np.eye(n_params)

    def sse(th):
        r = forward_normalized(MlpModel.from_vector(th, width, norm), x) - y
        return float(r @ r)

    # alpha = 0, beta = 1: the first step is a plain LM fit (Foresee-Hagan start)
    alpha, beta = 0.0, 1.0
    gamma = float(n_params)

    mu = cfg.mu_init
    history: list[dict] = []
    accepted_any = False
    stop_reason = "max_epochs"
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        current = MlpModel.from_vector(theta, width, norm)
        jac = jacobian(current, x)
        r = forward_normalized(current, x) - y
        jtj = jac.T @ jac
        lam = alpha / beta
        grad = jac.T @ r + lam * theta
        objective = beta * float(r @ r) + alpha * float(theta @ theta)
        if np.linalg.norm(2.0 * beta * grad) < cfg.min_grad:
            stop_reason = "min_grad"
            epoch -= 1
            break

        accepted = False
        new_objective = objective
        while mu <= cfg.mu_max:
            try:
                step = np.linalg.solve(jtj + (lam + mu) * eye, -grad)
            except np.linalg.LinAlgError:
                mu *= cfg.mu_factor
                continue
            trial = theta + step
            new_objective = beta * sse(trial) + alpha * float(trial @ trial)
            if np.isfinite(new_objective) and new_objective < objective:
                theta = trial
                mu = max(mu / cfg.mu_factor, 1e-20)
                accepted = True
                break
            mu *= cfg.mu_factor
        if not accepted:
            try:
                np.linalg.cholesky(jtj + (lam + cfg.mu_max) * eye)
            except np.linalg.LinAlgError as exc:
                raise SingularHessian("normal equations unsolvable at the damping cap") from exc
            stop_reason = "mu_max"
            history.append(_lm_row(epoch, objective, objective, None, val, alpha, beta, gamma, norm, theta, width))
            break
        accepted_any = True
        alpha_used, beta_used = alpha, beta

        # evidence re-estimation at the accepted point
        current = MlpModel.from_vector(theta, width, norm)
        jac = jacobian(current, x)
        e_d, e_w = sse(theta), float(theta @ theta)
        lam = alpha / beta
        gamma = effective_parameters(jac.T @ jac, lam)
        alpha = gamma / (2.0 * max(e_w, E_FLOOR))
        beta = max(n - gamma, 1.0) / (2.0 * max(e_d, E_FLOOR))
        history.append(
            _lm_row(epoch, objective, new_objective, e_d / n, val, alpha_used, beta_used, gamma, norm, theta, width)
            | {"alpha_next": alpha, "beta_next": beta}
        )

    if not accepted_any:
        raise NoProgress("Levenberg-Marquardt accepted no step")
    info = dict(
        epochs_run=epoch,
        stop_reason=stop_reason,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        history=history,
    )
    return MlpModel.from_vector(theta, width, norm), info


def _lm_row(epoch, obj_before, obj_after, mse_train, val, alpha, beta, gamma, norm, theta, width):
    mse_val = loss(MlpModel.from_vector(theta, width, norm), val) if len(val) else None
    return {
        "epoch": epoch,
        "mse_train": mse_train,
        "mse_val": mse_val,
        "alpha": alpha,
        "beta": beta,
        "gamma": gamma,
        "objective_before": obj_before,
        "objective_after": obj_after,
    }


def _train_adam(model: MlpModel, split: DataSplit, cfg: TrainConfig, b1=0.9, b2=0.999, eps=1e-8):
    width, norm = model.width, model.norm
    rng = np.random.default_rng(cfg.seed + 1)
    train_ds = split.train
    monitor = split.validation if len(split.validation) else split.train
    theta = model.to_vector()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    t = 0
    best_theta, best_val, since_best = theta.copy(), np.inf, 0
    history: list[dict] = []
    stop_reason = "max_epochs"
    n = len(train_ds)
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = train_ds.take(order[start : start + cfg.batch_size])
            g = gradient(MlpModel.from_vector(theta, width, norm), batch)
            t += 1
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            m_hat = m / (1 - b1**t)
            v_hat = v / (1 - b2**t)
            theta = theta - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        current = MlpModel.from_vector(theta, width, norm)
        mse_tr = loss(current, train_ds)
        mse_val = loss(current, monitor)
        history.append(
            {"epoch": epoch, "mse_train": mse_tr, "mse_val": mse_val, "alpha": None, "beta": None, "gamma": None}
        )
        if mse_val < best_val:
            best_theta, best_val, since_best = theta.copy(), mse_val, 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                stop_reason = "early_stopping"
                break
    info = dict(epochs_run=epoch, stop_reason=stop_reason, history=history)
    return MlpModel.from_vector(best_theta, width, norm), info


# --- evaluation ---------------------------------------------------------------


def error_histogram(errors, n_bins: int = 20) -> ErrorHistogram:
    """Uniform bins spanning [min, max]; the top edge belongs to the last bin."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise EmptyDataset("no errors to bin")
    lo, hi = float(errors.min()), float(errors.max())
    width = (hi - lo) / n_bins
    edges = lo + width * np.arange(n_bins + 1)
    edges[-1] = hi
    if width == 0.0:
        idx = np.zeros(errors.size, dtype=int)
    else:
        idx = np.minimum(np.floor((errors - lo) / width).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return ErrorHistogram(bin_edges=edges, counts=counts, min_error=lo, max_error=hi)


@dataclass(frozen=True)
class Evaluation:
    mse: float
    histogram: ErrorHistogram
    r: float
    errors: np.ndarray


def evaluate(model: MlpModel, samples: Dataset) -> Evaluation:
    """MSE (A^2), error histogram and Pearson r of targets vs predictions."""
    if len(samples) == 0:
        raise EmptyDataset("evaluate needs samples")
    pred = forward(model, samples.t_c, samples.g)
    errors = samples.i_mp - pred
    target = samples.i_mp
    if np.all(target == target[0]):
        raise DegenerateVariance("all targets are equal; regression coefficient undefined")
    if np.all(pred == pred[0]):
        r = 0.0
    else:
        r = float(np.corrcoef(target, pred)[0, 1])
    return Evaluation(mse=float(np.mean(errors**2)), histogram=error_histogram(errors), r=r, errors=errors)
