"""The fixed-point generative imputer.

Four networks make up the model: an encoder pair mapping a fully filled row
to the mean and log-variance of a latent Gaussian, and a decoder pair mapping
a latent point back to per-feature means and log-variances. Imputation is a
fixed-point iteration: encode the current row to the latent mean, decode the
per-feature means, overwrite only the masked cells, repeat.

Training alternates two steps over the stored training matrix: gradient
ascent on a single-sample reparameterized estimate of the observed-data
log-likelihood (weights move, fills stay), and an inference pass refreshing
the masked cells of every training row (fills move, weights stay).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .data import Dataset
from .errors import DataError, NumericError
from .masks import FillValues, INIT_POLICIES, apply_fill, fit_fill

LOG_2PI = float(np.log(2.0 * np.pi))

MODEL_FORMAT = "fpimpute-model-1"

CONVERGE_TOL = 1e-5
CONVERGE_CAP = 50


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softplus(x):
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


class GenerativeImputer:
    """Encoder/decoder Gaussian model over one row of K features."""

    def __init__(
        self,
        n_features,
        feature_kinds=None,
        latent_dim=100,
        encoder_hidden=(128, 64),
        decoder_hidden=(64, 128),
        sample_noise_std=0.1,
        seed=0,
    ):
        if n_features < 1:
            raise ValueError("need at least one feature")
        if feature_kinds is None:
            feature_kinds = ["gaussian"] * n_features
        if len(feature_kinds) != n_features:
            raise ValueError("feature_kinds length does not match n_features")
        for kind in feature_kinds:
            if kind not in ("gaussian", "bernoulli"):
                raise ValueError(f"unknown feature kind {kind!r}")

        self.n_features = int(n_features)
        self.latent_dim = int(latent_dim)
        self.feature_kinds = list(feature_kinds)
        self.sample_noise_std = float(sample_noise_std)
        self.seed = int(seed)

        enc_sizes = [n_features, *encoder_hidden, latent_dim]
        dec_sizes = [latent_dim, *decoder_hidden, n_features]
        seeds = np.random.SeedSequence(seed).spawn(4)
        self.encoder_mean = nn.Mlp(enc_sizes, seed=seeds[0])
        self.encoder_logvar = nn.Mlp(enc_sizes, seed=seeds[1])
        self.decoder_mean = nn.Mlp(dec_sizes, seed=seeds[2])
        self.decoder_logvar = nn.Mlp(dec_sizes, seed=seeds[3])

        self.fill: FillValues | None = None  # set by fit; reused by transform
        self.normalization = None  # optional (min, max) list carried for the CLI

    @property
    def bernoulli_columns(self):
        return np.array([k == "bernoulli" for k in self.feature_kinds])

    def networks(self):
        return {
            "encoder_mean": self.encoder_mean,
            "encoder_logvar": self.encoder_logvar,
            "decoder_mean": self.decoder_mean,
            "decoder_logvar": self.decoder_logvar,
        }


def _check_rows(model, rows, name="rows"):
    rows = np.asarray(rows, dtype=float)
    single = rows.ndim == 1
    if single:
        rows = rows[None, :]
    if rows.ndim != 2 or rows.shape[1] != model.n_features:
        raise DataError(f"{name} must have {model.n_features} columns")
    if np.isnan(rows).any():
        raise DataError(f"{name} contain NaN; fill masked cells before calling the model")
    return rows, single


def encode(model, rows):
    """Latent Gaussian parameters for filled rows: (mean, variance)."""
    rows, single = _check_rows(model, rows)
    mu = nn.forward(model.encoder_mean, rows)
    var = np.exp(nn.forward(model.encoder_logvar, rows))
    if not (np.isfinite(mu).all() and np.isfinite(var).all()):
        raise NumericError("encoder produced non-finite outputs")
    if single:
        return mu[0], var[0]
    return mu, var


def decode(model, z):
    """Per-feature Gaussian parameters at a latent point: (mean, variance)."""
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    if single:
        z = z[None, :]
    if z.shape[1] != model.latent_dim:
        raise DataError(f"z must have {model.latent_dim} columns")
    mu = nn.forward(model.decoder_mean, z)
    var = np.exp(nn.forward(model.decoder_logvar, z))
    if not (np.isfinite(mu).all() and np.isfinite(var).all()):
        raise NumericError("decoder produced non-finite outputs")
    if single:
        return mu[0], var[0]
    return mu, var


def imputation_values(model, z):
    """Decoded point predictions: decoder mean, squashed through the logistic
    for bernoulli columns (so those land strictly inside (0, 1))."""
    mu, _ = decode(model, z)
    binary = model.bernoulli_columns
    if binary.any():
        mu = mu.copy()
        mu[..., binary] = _sigmoid(mu[..., binary])
    return mu


def fixed_point_impute(model, rows, missing, n_iters, return_deltas=False):
    """Iterate encode -> decode -> overwrite masked cells, n_iters times.

    Observed positions never change. With ``return_deltas`` the per-iteration
    max absolute change over each row's masked cells comes back as an
    (n_iters, n_rows) array.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    rows, single = _check_rows(model, rows)
    missing = np.asarray(missing, dtype=bool)
    if single:
        missing = missing[None, :]
    if missing.shape != rows.shape:
        raise DataError("mask shape does not match rows")
    current = rows.copy()
    deltas = np.zeros((n_iters, rows.shape[0]))
    for it in range(n_iters):
        z_mean, _ = encode(model, current)
        predicted = imputation_values(model, z_mean)
        updated = np.where(missing, predicted, current)
        if return_deltas:
            change = np.abs(updated - current)
            change[~missing] = 0.0
            deltas[it] = change.max(axis=1, initial=0.0)
        current = updated
    if single:
        current = current[0]
    return (current, deltas) if return_deltas else current


def objective(model, rows, missing=None, seed=0):
    """Single-sample estimate of the training objective, averaged over rows.

    ``missing`` is accepted for interface symmetry but does not enter the
    value: filled rows contribute every feature, observed or imputed.
    """
    rows, _ = _check_rows(model, rows)
    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, model.sample_noise_std, size=(rows.shape[0], model.latent_dim))
    value, _ = objective_and_grads(model, rows, eps, want_grads=False)
    return value


def objective_and_grads(model, rows, eps, want_grads=True):
    """Objective value and exact gradients w.r.t. all four networks.

    Per row: decoder log-density of every feature at the filled value, plus
    the standard-normal log-density of the sampled latent, minus the encoder
    log-density of that same sample. The latent is z = mu + eps * sd with the
    caller's fixed noise draw, so gradients are deterministic given ``eps``.
    """
    rows = np.asarray(rows, dtype=float)
    eps = np.asarray(eps, dtype=float)
    n_rows = rows.shape[0]
    binary = model.bernoulli_columns
    gaussian = ~binary

    h_acts = nn._forward_trace(model.encoder_mean, rows)
    l_acts = nn._forward_trace(model.encoder_logvar, rows)
    mu_z = h_acts[-1]
    lv_z = l_acts[-1]
    sd_z = np.exp(0.5 * lv_z)
    z = mu_z + eps * sd_z

    f_acts = nn._forward_trace(model.decoder_mean, z)
    g_acts = nn._forward_trace(model.decoder_logvar, z)
    mu_x = f_acts[-1]
    lv_x = g_acts[-1]
    var_x = np.exp(lv_x)

    recon = np.zeros((n_rows, model.n_features))
    if gaussian.any():
        resid = rows[:, gaussian] - mu_x[:, gaussian]
        recon[:, gaussian] = (
            -0.5 * LOG_2PI - 0.5 * lv_x[:, gaussian] - resid**2 / (2.0 * var_x[:, gaussian])
        )
    if binary.any():
        r = rows[:, binary]
        m = mu_x[:, binary]
        recon[:, binary] = -r * _softplus(-m) - (1.0 - r) * _softplus(m)

    j = model.latent_dim
    log_prior = -0.5 * j * LOG_2PI - 0.5 * (z**2).sum(axis=1)
    # -log q(z) at the sampled point; (z - mu)^2 / var reduces to eps^2
    neg_log_q = 0.5 * j * LOG_2PI + 0.5 * lv_z.sum(axis=1) + 0.5 * (eps**2).sum(axis=1)

    per_row = recon.sum(axis=1) + log_prior + neg_log_q
    bad = ~np.isfinite(per_row)
    if bad.any():
        raise NumericError(f"objective is non-finite at row {int(np.argmax(bad))}")
    value = float(per_row.mean())
    if not want_grads:
        return value, None

    scale = 1.0 / n_rows
    d_mu_x = np.zeros_like(mu_x)
    d_lv_x = np.zeros_like(lv_x)
    if gaussian.any():
        resid = rows[:, gaussian] - mu_x[:, gaussian]
        d_mu_x[:, gaussian] = resid / var_x[:, gaussian]
        d_lv_x[:, gaussian] = -0.5 + resid**2 / (2.0 * var_x[:, gaussian])
    if binary.any():
        d_mu_x[:, binary] = rows[:, binary] - _sigmoid(mu_x[:, binary])

    f_grads, dz_f = nn._backward_from_trace(model.decoder_mean, f_acts, d_mu_x * scale)
    g_grads, dz_g = nn._backward_from_trace(model.decoder_logvar, g_acts, d_lv_x * scale)
    d_z = dz_f + dz_g - z * scale
    d_mu_z = d_z
    d_lv_z = 0.5 * d_z * eps * sd_z + 0.5 * scale
    h_grads, _ = nn._backward_from_trace(model.encoder_mean, h_acts, d_mu_z)
    l_grads, _ = nn._backward_from_trace(model.encoder_logvar, l_acts, d_lv_z)

    grads = {
        "encoder_mean": h_grads,
        "encoder_logvar": l_grads,
        "decoder_mean": f_grads,
        "decoder_logvar": g_grads,
    }
    return value, grads


@dataclass
class FitConfig:
    """Training hyperparameters; defaults follow the benchmark configuration."""

    epochs: int = 100
    batch_size: int = 50
    learning_rate: float = 1e-3
    inference_count: int = 2
    training_interval: int = 5
    init_policy: str = "mean"
    seed: int = 0

    def __post_init__(self):
        if self.inference_count < 1:
            raise ValueError("inference_count must be >= 1")
        if self.training_interval < 1:
            raise ValueError("training_interval must be >= 1")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.init_policy not in INIT_POLICIES:
            raise ValueError(f"unknown init policy {self.init_policy!r}")


@dataclass
class FitResult:
    imputed: np.ndarray
    epoch_objectives: list = field(default_factory=list)


def fit(model, train, mask, cfg=None):
    """EM training loop. Returns the trained-weights imputation of the train set.

    Masked cells start at the init-policy fill, every mini-batch takes one
    Adam ascent step on the objective, and after every ``training_interval``
    steps the fixed-point pass refreshes the masked cells of all rows. A
    final inference pass runs after the last epoch so the returned matrix
    reflects the final weights.
    """
    cfg = cfg or FitConfig()
    values = train.values if isinstance(train, Dataset) else np.asarray(train, dtype=float)
    missing = mask.missing if hasattr(mask, "missing") else np.asarray(mask, dtype=bool)
    if missing.shape != values.shape:
        raise DataError("mask shape does not match training data")
    if values.shape[1] != model.n_features:
        raise DataError(f"model expects {model.n_features} features, data has {values.shape[1]}")

    fill = fit_fill(values, missing, cfg.init_policy, seed=cfg.seed)
    init_filled = apply_fill(values, missing, fill)
    model.fill = fill

    # every inference pass restarts from the init fill; that keeps the pass a
    # bounded composition of the current decoder and is why the init policy
    # keeps influencing results throughout training
    filled = init_filled
    n = values.shape[0]
    rng = np.random.default_rng(cfg.seed)
    states = {
        name: nn.AdamState.for_params(net.parameters(), learning_rate=cfg.learning_rate)
        for name, net in model.networks().items()
    }

    step = 0
    epoch_objectives = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        batch_values = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            eps = rng.normal(0.0, model.sample_noise_std, size=(len(idx), model.latent_dim))
            try:
                value, grads = objective_and_grads(model, filled[idx], eps)
                for name, net in model.networks().items():
                    descent = [-g for g in grads[name]]
                    net.set_parameters(nn.adam_step(net.parameters(), descent, states[name]))
            except NumericError as exc:
                raise NumericError(f"training diverged at epoch {epoch}, step {step}: {exc}") from exc
            batch_values.append(value)
            step += 1
            if step % cfg.training_interval == 0:
                filled = fixed_point_impute(model, init_filled, missing, cfg.inference_count)
        epoch_objectives.append(float(np.mean(batch_values)))
    filled = fixed_point_impute(model, init_filled, missing, cfg.inference_count)
    return FitResult(imputed=filled, epoch_objectives=epoch_objectives)


def transform(model, rows, missing, n_iters=None):
    """Impute held-out rows with the trained model (mean path, no sampling).

    Masked cells are first filled with the policy fitted during training,
    then refined by fixed-point iteration. ``n_iters`` may be an integer or
    "converge" (stop when the largest masked-cell change drops below 1e-5,
    capped at 50 iterations). Defaults to the training inference count of 2.
    """
    if model.fill is None:
        raise ValueError("model has not been fitted: no fill policy stored")
    rows = np.asarray(rows, dtype=float)
    single = rows.ndim == 1
    if single:
        rows = rows[None, :]
        missing = np.asarray(missing, dtype=bool)[None, :]
    missing = np.asarray(missing, dtype=bool)
    if not missing.any():
        return rows[0].copy() if single else rows.copy()
    filled = apply_fill(rows, missing, model.fill)
    if n_iters == "converge":
        for _ in range(CONVERGE_CAP):
            filled, deltas = fixed_point_impute(model, filled, missing, 1, return_deltas=True)
            if deltas.max() < CONVERGE_TOL:
                break
    else:
        filled = fixed_point_impute(model, filled, missing, 2 if n_iters is None else n_iters)
    return filled[0] if single else filled


def save_model(model, path):
    """JSON checkpoint with hex-encoded floats; round trips bit-exactly."""
    def hex_list(arr):
        return [v.hex() for v in np.asarray(arr, dtype=float).ravel()]

    doc = {
        "format": MODEL_FORMAT,
        "n_features": model.n_features,
        "latent_dim": model.latent_dim,
        "feature_kinds": model.feature_kinds,
        "sample_noise_std": model.sample_noise_std.hex(),
        "seed": model.seed,
        "networks": {name: nn.mlp_to_dict(net) for name, net in model.networks().items()},
        "fill": None
        if model.fill is None
        else {
            "policy": model.fill.policy,
            "constants": None if model.fill.constants is None else hex_list(model.fill.constants),
            "seed": model.fill.seed,
        },
        "normalization": None
        if model.normalization is None
        else [[float(lo).hex(), float(hi).hex()] for lo, hi in model.normalization],
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def load_model(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"unsupported model format {doc.get('format')!r}")
    model = GenerativeImputer(
        n_features=doc["n_features"],
        feature_kinds=doc["feature_kinds"],
        latent_dim=doc["latent_dim"],
        sample_noise_std=float.fromhex(doc["sample_noise_std"]),
        seed=doc["seed"],
    )
    nets = doc["networks"]
    model.encoder_mean = nn.mlp_from_dict(nets["encoder_mean"])
    model.encoder_logvar = nn.mlp_from_dict(nets["encoder_logvar"])
    model.decoder_mean = nn.mlp_from_dict(nets["decoder_mean"])
    model.decoder_logvar = nn.mlp_from_dict(nets["decoder_logvar"])
    if doc["fill"] is not None:
        constants = doc["fill"]["constants"]
        model.fill = FillValues(
            policy=doc["fill"]["policy"],
            constants=None if constants is None else np.array([float.fromhex(v) for v in constants]),
            seed=doc["fill"]["seed"],
        )
    if doc["normalization"] is not None:
        model.normalization = [(float.fromhex(lo), float.fromhex(hi)) for lo, hi in doc["normalization"]]
    return model
