"""A small fully-connected denoising network.

Maps (flattened noisy series, sinusoidal step embedding) to a predicted
clean series. Deliberately tiny: two tanh hidden layers on top of a
concatenated input, built on the in-package autodiff so gradients with
respect to the network *input* are available to the guided sampler.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from tsedit.autodiff import Graph, GraphError, as_tensor, forward_eval


@dataclass(frozen=True)
class DenoiserConfig:
    seq_len: int
    channels: int
    hidden: tuple = (128, 128)
    embed_dim: int = 32

    def __post_init__(self):
        if self.embed_dim % 2 != 0:
            raise ValueError(f"embed_dim must be even, got {self.embed_dim}")
        if not self.hidden:
            raise ValueError("at least one hidden layer is required")

    @property
    def flat_dim(self):
        return self.seq_len * self.channels

    @property
    def layer_dims(self):
        """Width of each layer boundary, input to output."""
        return (self.flat_dim + self.embed_dim, *self.hidden, self.flat_dim)


def time_embed(t, total_steps, dim):
    """Sinusoidal embedding of a diffusion step: interleaved sin/cos pairs."""
    if dim % 2 != 0:
        raise ValueError(f"embedding dim must be even, got {dim}")
    half = dim // 2
    freqs = 10000.0 ** (-2.0 * np.arange(half) / dim)
    args = (t / total_steps) * freqs
    out = np.empty(dim)
    out[0::2] = np.sin(args)
    out[1::2] = np.cos(args)
    return out


@dataclass
class Denoiser:
    """Network parameters plus cached evaluation graphs keyed by batch size."""

    config: DenoiserConfig
    params: dict
    total_steps: int
    _graphs: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def init(cls, config, total_steps, seed=0):
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        dims = config.layer_dims
        params = {}
        for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            params[f"w{i}"] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            params[f"b{i}"] = np.zeros(fan_out)
        return cls(config=config, params=params, total_steps=total_steps)

    @property
    def param_count(self):
        return sum(p.size for p in self.params.values())

    def param_names(self):
        return list(self.params.keys())

    def build_graph(self, batch, params_as_leaves=True):
        """Forward graph for a given batch size; output node is (batch, L*D).

        With params_as_leaves=False the current parameters are frozen into
        the graph as constants, which skips their gradient work during
        input-gradient sampling.
        """
        cfg = self.config
        g = Graph()
        x = g.leaf("x", (batch, cfg.flat_dim))
        emb = g.leaf("emb", (batch, cfg.embed_dim))
        h = g.concat([x, emb], axis=1)
        n_layers = len(cfg.layer_dims) - 1
        for i in range(n_layers):
            if params_as_leaves:
                w = g.leaf(f"w{i}", self.params[f"w{i}"].shape)
                b = g.leaf(f"b{i}", self.params[f"b{i}"].shape)
            else:
                w = g.const(self.params[f"w{i}"])
                b = g.const(self.params[f"b{i}"])
            h = g.badd(g.matmul(h, w), b)
            if i < n_layers - 1:
                h = g.tanh(h)
        return g

    def _cached_graph(self, batch):
        if batch not in self._graphs:
            self._graphs[batch] = self.build_graph(batch, params_as_leaves=True)
        return self._graphs[batch]

    def forward_batch(self, x_flat, ts):
        """Predict clean rows for a batch of flattened noisy rows at steps ts."""
        batch = x_flat.shape[0]
        g = self._cached_graph(batch)
        emb = np.stack([time_embed(t, self.total_steps, self.config.embed_dim) for t in ts])
        bindings = {"x": x_flat, "emb": emb, **self.params}
        ev = forward_eval(g, bindings)
        return ev.value(ev.output)


def predict_x0(model, x_t, t):
    """Predicted clean series for one noisy series at diffusion step t."""
    cfg = model.config
    x_t = as_tensor(x_t)
    if x_t.shape != (cfg.seq_len, cfg.channels):
        raise GraphError(
            f"series shape {x_t.shape} does not match model ({cfg.seq_len}, {cfg.channels})"
        )
    out = model.forward_batch(x_t.reshape(1, cfg.flat_dim), [t])
    return out.reshape(cfg.seq_len, cfg.channels)
