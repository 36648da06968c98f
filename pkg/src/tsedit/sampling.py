"""The guided reverse-diffusion loop.

Each reverse step interleaves three mechanisms on top of the plain DDPM
posterior step:

  1. predict the clean series and refine it against the constraint losses
     (masked anchor error, an optional proximal trust region, and the
     squared segment-statistic penalties) by stepping along the loss
     gradient with respect to the *network input*;
  2. form the posterior step from the refined prediction;
  3. blend forward-noised observed values into the iterate per cell, with
     coefficient omega_t * mask, optionally raising the mask where the
     prediction still misses its target.

The final step blends clean (un-noised) targets and pins confidence-1.0
cells exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from tsedit.autodiff import backward_grad, forward_eval
from tsedit.constraints import ObservedCanvas, adjust_mask, compile_constraints, time_weight
from tsedit.denoiser import time_embed
from tsedit.diffusion import NumericError, clamp_x0, posterior_step, q_sample


@dataclass(frozen=True)
class GuidanceConfig:
    gamma_decay: float = 5.0  # time-weight decay
    eta: float = 0.1  # gradient scale on the refinement
    kappa: float = 0.01  # trade-off weight on the proximal term
    grad_steps: int = 1  # refinement steps per diffusion step
    rho: float = 0.05  # dynamic mask adjustment rate
    dynamic_mask: bool = True
    use_time_weight: bool = True
    grad_clip: float = 10.0
    keep_trace: bool = False

    def __post_init__(self):
        if self.eta < 0 or self.kappa < 0 or self.grad_steps < 1 or self.rho < 0:
            raise ValueError("eta, kappa and rho must be >= 0 and grad_steps >= 1")


@dataclass
class EditResult:
    series: np.ndarray
    trace: list = field(default_factory=list)


def stat_loss_and_grad(x, segments, omega_t=1.0):
    """Weighted squared penalty on segment aggregates, and its exact gradient.

    loss = omega_t * sum_j beta_j * (agg_j(x) - target_j)^2 with agg the
    segment sum (or mean) on the segment's channel. The gradient lives on
    exactly the cells each segment covers.
    """
    x = np.asarray(x, dtype=float)
    loss = 0.0
    grad = np.zeros_like(x)
    for s in segments:
        cells = x[s.start : s.end + 1, s.channel]
        agg = cells.sum()
        if s.stat == "avg":
            agg /= s.width
        resid = agg - s.target
        loss += omega_t * s.weight * resid * resid
        coeff = 2.0 * omega_t * s.weight * resid
        if s.stat == "avg":
            coeff /= s.width
        grad[s.start : s.end + 1, s.channel] += coeff
    return loss, grad


def blend_observed(x_cand, mask, omega_t, x_ob_t):
    """Per-cell convex combination toward observed values.

    out = (omega_t * m) * x_ob_t + (1 - omega_t * m) * x_cand. The mask may
    be given directly or via an ObservedCanvas.
    """
    if isinstance(mask, ObservedCanvas):
        mask = mask.mask
    if not (0.0 < omega_t <= 1.0):
        raise ValueError(f"omega_t must lie in (0, 1], got {omega_t}")
    x_cand = np.asarray(x_cand, dtype=float)
    x_ob_t = np.asarray(x_ob_t, dtype=float)
    if x_cand.shape != x_ob_t.shape or x_cand.shape != mask.shape:
        raise ValueError("candidate, observed and mask shapes must agree")
    coeff = omega_t * mask
    return coeff * x_ob_t + (1.0 - coeff) * x_cand


def build_loss_graph(model, canvas, segments, kappa, with_prox):
    """One forward graph carrying the prediction and every guidance loss term.

    Returns (graph, x0 node, total loss node or None). Leaves: "x", "emb",
    plus "m" when anchor cells exist, "omega" when segments exist, and
    "anchor" when the proximal term is included. Model parameters are
    frozen in as constants so the backward pass only chases the input.
    """
    cfg = model.config
    L, D = cfg.seq_len, cfg.channels
    g = model.build_graph(1, params_as_leaves=False)
    x0 = g.reshape(g.output, (L, D))
    terms = []
    if canvas is not None and canvas.mask.any():
        m = g.leaf("m", (L, D))
        d = g.sub(x0, g.const(canvas.values))
        terms.append(g.reduce_sum(g.mul(m, g.mul(d, d))))
    if with_prox and kappa > 0.0:
        anchor = g.leaf("anchor", (L, D))
        terms.append(g.scale(g.sqdiff(x0, anchor), kappa))
    if segments:
        omega = g.leaf("omega", (1,))
        seg_total = None
        for s in segments:
            agg = g.reduce_sum(x0, region=(s.start, s.end + 1, s.channel, s.channel + 1))
            if s.stat == "avg":
                agg = g.scale(agg, 1.0 / s.width)
            term = g.scale(g.sqdiff(agg, g.const([s.target])), s.weight)
            seg_total = term if seg_total is None else g.add(seg_total, term)
        terms.append(g.mul(omega, seg_total))
    total = None
    for term in terms:
        total = term if total is None else g.add(total, term)
    return g, x0, total


def _clip_norm(grad, max_norm):
    norm = float(np.sqrt((grad * grad).sum()))
    if max_norm > 0.0 and norm > max_norm:
        return grad * (max_norm / norm)
    return grad


def reconstruction_grad(model, x_t, t, canvas, kappa, refine_point=None):
    """Gradient w.r.t. x_t of the masked anchor loss plus the proximal term.

    The proximal term compares the prediction against refine_point; when
    refine_point is omitted it anchors at the prediction itself, where its
    gradient vanishes exactly.
    """
    cfg = model.config
    L, D = cfg.seq_len, cfg.channels
    has_canvas = canvas is not None and canvas.mask.any()
    if not has_canvas and refine_point is None:
        return np.zeros((L, D))
    g, _, total = build_loss_graph(model, canvas if has_canvas else None, [], kappa, refine_point is not None)
    if total is None:
        return np.zeros((L, D))
    from tsedit.denoiser import time_embed

    bindings = {
        "x": np.asarray(x_t, dtype=float).reshape(1, cfg.flat_dim),
        "emb": time_embed(t, model.total_steps, cfg.embed_dim).reshape(1, cfg.embed_dim),
    }
    if has_canvas:
        bindings["m"] = canvas.mask
    if refine_point is not None:
        bindings["anchor"] = np.asarray(refine_point, dtype=float)
    ev = forward_eval(g, bindings, output=total)
    grad = backward_grad(ev, ["x"])["x"].reshape(L, D)
    if not np.isfinite(grad).all():
        raise NumericError(f"non-finite reconstruction gradient at diffusion step {t}")
    return grad


def sample_uncond(model, sched, seed):
    """Plain DDPM sampling: predict, clamp, posterior step. No guidance."""
    cfg = model.config
    L, D = cfg.seq_len, cfg.channels
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((L, D))
    for t in range(sched.steps - 1, -1, -1):
        raw = model.forward_batch(x.reshape(1, cfg.flat_dim), [t]).reshape(L, D)
        x0_hat = clamp_x0(raw)
        z = rng.standard_normal((L, D)) if t > 0 else np.zeros((L, D))
        x = posterior_step(x, x0_hat, t, sched, z)
    return x


def sample_guided(model, sched, constraints, cfg=None, seed=0):
    """Reverse diffusion under a constraint set; see the module docstring.

    With an empty constraint set the loop reduces exactly to
    sample_uncond under the same seed.
    """
    cfg = cfg or GuidanceConfig()
    mcfg = model.config
    L, D = mcfg.seq_len, mcfg.channels
    T = sched.steps
    canvas, mask = compile_constraints(constraints, L, D)
    segments = list(constraints.segments)
    use_blend = bool(canvas.mask.any())
    use_grad = cfg.eta > 0.0 and (use_blend or bool(segments))

    loss_graph = x0_node = loss_node = None
    if use_grad:
        with_prox = cfg.grad_steps > 1
        loss_graph, x0_node, loss_node = build_loss_graph(
            model, canvas if use_blend else None, segments, cfg.kappa, with_prox
        )

    rng = np.random.default_rng(seed)
    x = rng.standard_normal((L, D))
    trace = []
    hard = canvas.mask >= 1.0

    for t in range(T - 1, -1, -1):
        omega_stats = time_weight(t, T, cfg.gamma_decay) if cfg.use_time_weight else 1.0
        step_info = {"t": t}
        emb = time_embed(t, T, mcfg.embed_dim).reshape(1, mcfg.embed_dim)
        x_flat = x.reshape(1, mcfg.flat_dim)

        if use_grad and cfg.grad_steps == 1:
            bindings = {"x": x_flat, "emb": emb}
            if use_blend:
                bindings["m"] = mask
            if segments:
                bindings["omega"] = np.array([omega_stats])
            ev = forward_eval(loss_graph, bindings, output=loss_node)
            raw = ev.value(x0_node)
            refined = clamp_x0(raw)
            grad = backward_grad(ev, ["x"])["x"].reshape(L, D)
            grad = _clip_norm(grad, cfg.grad_clip)
            refined = refined - cfg.eta * grad
            step_info["loss"] = float(ev.value(loss_node)[0])
        elif use_grad:
            raw = model.forward_batch(x_flat, [t]).reshape(L, D)
            refined = clamp_x0(raw)
            for _ in range(cfg.grad_steps):
                bindings = {"x": x_flat, "emb": emb, "anchor": refined}
                if use_blend:
                    bindings["m"] = mask
                if segments:
                    bindings["omega"] = np.array([omega_stats])
                ev = forward_eval(loss_graph, bindings, output=loss_node)
                grad = backward_grad(ev, ["x"])["x"].reshape(L, D)
                grad = _clip_norm(grad, cfg.grad_clip)
                refined = refined - cfg.eta * grad
            step_info["loss"] = float(ev.value(loss_node)[0])
        else:
            raw = model.forward_batch(x_flat, [t]).reshape(L, D)
            refined = clamp_x0(raw)

        z = rng.standard_normal((L, D)) if t > 0 else np.zeros((L, D))
        x_next = posterior_step(x, refined, t, sched, z)

        if use_blend:
            if t > 0:
                eps_ob = rng.standard_normal((L, D))
                x_ob_t = q_sample(canvas.values, t - 1, sched, eps_ob)
                omega_blend = time_weight(t - 1, T, cfg.gamma_decay) if cfg.use_time_weight else 1.0
            else:
                x_ob_t = canvas.values  # clean targets at the last step
                omega_blend = 1.0
            x_next = blend_observed(x_next, mask, omega_blend, x_ob_t)
            if t == 0 and hard.any():
                x_next[hard] = canvas.values[hard]
            if cfg.dynamic_mask and t > 0:
                mask = adjust_mask(mask, clamp_x0(raw), canvas, cfg.rho)
            step_info["omega_blend"] = omega_blend
            step_info["mask_sum"] = float(mask.sum())

        if not np.isfinite(x_next).all():
            raise NumericError(
                f"sampling diverged at diffusion step {t}; last loss: {step_info.get('loss')}"
            )
        x = x_next
        if cfg.keep_trace:
            step_info["omega_stats"] = omega_stats
            trace.append(step_info)

    return EditResult(series=x, trace=trace)
