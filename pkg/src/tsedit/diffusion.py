"""Noise schedules, the forward process, the reverse posterior step, and
training of the clean-sample predictor.

Conventions: step 0 is the cleanest step (abar[0] closest to 1), step T-1
the noisiest. The network predicts the clean series x0 directly; the
reverse step then forms the standard posterior mean

    mu = sqrt(abar_prev)*beta/(1-abar) * x0_hat
       + sqrt(alpha)*(1-abar_prev)/(1-abar) * x_t

with variance beta*(1-abar_prev)/(1-abar), where abar_prev at step 0 is 1
(so the last reverse step returns the prediction deterministically).
"""

import json
from dataclasses import dataclass

import numpy as np

from tsedit.autodiff import backward_grad, forward_eval
from tsedit.denoiser import Denoiser, DenoiserConfig, time_embed

X0_CLAMP = (-0.5, 1.5)  # data is min-max normalized to [0,1]
CHECKPOINT_VERSION = 1


class NumericError(RuntimeError):
    """A non-finite value appeared where the math guarantees finiteness."""


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    posterior_vars: np.ndarray
    beta_range: tuple = None

    @property
    def steps(self):
        return len(self.betas)

    def alpha_bar_prev(self, t):
        return 1.0 if t == 0 else self.alpha_bars[t - 1]


def make_schedule(steps, beta_min=1e-4, beta_max=0.02):
    """Linear beta schedule with the derived alpha arrays."""
    if not (0.0 < beta_min <= beta_max < 1.0):
        raise ValueError(f"need 0 < beta_min <= beta_max < 1, got [{beta_min}, {beta_max}]")
    if steps < 2:
        raise ValueError(f"need at least 2 steps, got {steps}")
    betas = np.linspace(beta_min, beta_max, steps)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    abar_prev = np.concatenate([[1.0], alpha_bars[:-1]])
    posterior_vars = betas * (1.0 - abar_prev) / (1.0 - alpha_bars)
    return NoiseSchedule(
        betas=betas,
        alphas=alphas,
        alpha_bars=alpha_bars,
        posterior_vars=posterior_vars,
        beta_range=(beta_min, beta_max),
    )


def q_sample(x0, t, sched, eps):
    """Forward-process draw: sqrt(abar_t)*x0 + sqrt(1-abar_t)*eps."""
    if np.shape(x0) != np.shape(eps):
        raise ValueError(f"noise shape {np.shape(eps)} does not match series {np.shape(x0)}")
    abar = sched.alpha_bars[t]
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def posterior_step(x_t, x0_hat, t, sched, z):
    """One reverse step: posterior mean given the clean prediction, plus noise."""
    if np.shape(x_t) != np.shape(x0_hat) or np.shape(x_t) != np.shape(z):
        raise ValueError("x_t, x0_hat and z must share a shape")
    abar = sched.alpha_bars[t]
    if abar >= 1.0:  # degenerate no-noise step
        return np.array(x0_hat, dtype=float)
    abar_prev = sched.alpha_bar_prev(t)
    beta = sched.betas[t]
    alpha = sched.alphas[t]
    c0 = np.sqrt(abar_prev) * beta / (1.0 - abar)
    ct = np.sqrt(alpha) * (1.0 - abar_prev) / (1.0 - abar)
    sigma = np.sqrt(sched.posterior_vars[t])
    return c0 * x0_hat + ct * x_t + sigma * z


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    steps: int = 3000
    batch_size: int = 64
    seed: int = 0
    momentum: float = 0.9

    def __post_init__(self):
        if min(self.learning_rate, self.steps, self.batch_size) <= 0:
            raise ValueError("learning rate, steps and batch size must be positive")


def _batch_loss_graph(model, batch):
    """Forward graph extended with the mean-squared x0 loss."""
    g = model.build_graph(batch, params_as_leaves=True)
    pred = g.output
    target = g.leaf("target", (batch, model.config.flat_dim))
    loss = g.scale(g.sqdiff(pred, target), 1.0 / (batch * model.config.flat_dim))
    return g, loss


def _noisy_batch(series, sched, rng, model):
    """Draw steps and noise for a batch; returns bindings for the loss graph."""
    batch = series.shape[0]
    flat = series.reshape(batch, -1)
    ts = rng.integers(0, sched.steps, size=batch)
    eps = rng.standard_normal(flat.shape)
    abar = sched.alpha_bars[ts][:, None]
    x_noisy = np.sqrt(abar) * flat + np.sqrt(1.0 - abar) * eps
    emb = np.stack([time_embed(t, model.total_steps, model.config.embed_dim) for t in ts])
    return {"x": x_noisy, "emb": emb, "target": flat}


def eval_loss(model, series_batch, sched, seed=0):
    """Held-out MSE under a fixed noise draw; used to compare training states."""
    rng = np.random.default_rng(seed)
    g, loss_node = _batch_loss_graph(model, series_batch.shape[0])
    bindings = _noisy_batch(np.asarray(series_batch, dtype=float), sched, rng, model)
    bindings.update(model.params)
    ev = forward_eval(g, bindings, output=loss_node)
    return float(ev.value(loss_node)[0])


def train(model, data, sched, cfg):
    """SGD-with-momentum training of the clean-sample predictor.

    data is an (N, L, D) array of series normalized to [0, 1]. Returns a
    new Denoiser; the input model's parameters are left untouched.
    """
    series = np.asarray(data, dtype=float)
    if series.ndim != 3 or series.shape[0] == 0:
        raise ValueError("training data must be a non-empty (N, L, D) array")
    if series.shape[1] != model.config.seq_len or series.shape[2] != model.config.channels:
        raise ValueError(
            f"data shape {series.shape[1:]} does not match model "
            f"({model.config.seq_len}, {model.config.channels})"
        )
    rng = np.random.default_rng(cfg.seed)
    params = {k: v.copy() for k, v in model.params.items()}
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    trained = Denoiser(config=model.config, params=params, total_steps=model.total_steps)
    batch = min(cfg.batch_size, series.shape[0])
    g, loss_node = _batch_loss_graph(trained, batch)
    names = trained.param_names()

    for step in range(cfg.steps):
        idx = rng.integers(0, series.shape[0], size=batch)
        bindings = _noisy_batch(series[idx], sched, rng, trained)
        bindings.update(params)
        ev = forward_eval(g, bindings, output=loss_node)
        loss = float(ev.value(loss_node)[0])
        if not np.isfinite(loss):
            raise NumericError(f"training loss became non-finite at step {step}: {loss}")
        grads = backward_grad(ev, names)
        for name in names:
            v = velocity[name]
            v *= cfg.momentum
            v -= cfg.learning_rate * grads[name]
            params[name] += v
    return trained


def clamp_x0(x0_hat):
    """Bound clean-sample predictions before they are used for guidance."""
    return np.clip(x0_hat, X0_CLAMP[0], X0_CLAMP[1])


# -- checkpoint container ---------------------------------------------------


def save_checkpoint(path, model, sched, meta=None):
    """Versioned JSON checkpoint; round-trips parameters bit-exactly."""
    if sched.beta_range is None:
        raise ValueError("schedule lacks its beta range; build it with make_schedule")
    payload = {
        "version": CHECKPOINT_VERSION,
        "schedule": {
            "steps": sched.steps,
            "beta_min": sched.beta_range[0],
            "beta_max": sched.beta_range[1],
        },
        "denoiser": {
            "seq_len": model.config.seq_len,
            "channels": model.config.channels,
            "hidden": list(model.config.hidden),
            "embed_dim": model.config.embed_dim,
        },
        "params": {k: v.tolist() for k, v in sorted(model.params.items())},
        "meta": meta or {},
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    with open(path, "w") as fh:
        fh.write(text)
        fh.write("\n")


def load_checkpoint(path):
    """Returns (model, schedule, meta)."""
    with open(path) as fh:
        payload = json.load(fh)
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r}")
    s = payload["schedule"]
    sched = make_schedule(s["steps"], s["beta_min"], s["beta_max"])
    d = payload["denoiser"]
    config = DenoiserConfig(
        seq_len=d["seq_len"],
        channels=d["channels"],
        hidden=tuple(d["hidden"]),
        embed_dim=d["embed_dim"],
    )
    params = {k: np.asarray(v, dtype=float) for k, v in payload["params"].items()}
    model = Denoiser(config=config, params=params, total_steps=sched.steps)
    return model, sched, payload.get("meta", {})
