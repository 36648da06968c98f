#!/usr/bin/env python3
"""Compare the compiled kernels against the numpy fallback.

Times the three hot paths: single-series predict+input-gradient (the
sampler's inner loop), a batched training step, and one full guided
sample. Run after `pip install -e .` so the extension exists; the script
degrades to python-only if it does not.
"""

import time

import numpy as np

from tsedit import backend
from tsedit.autodiff import backward_grad, forward_eval
from tsedit.constraints import ConstraintSet, PointConstraint, SegmentConstraint
from tsedit.data import gen_sines
from tsedit.denoiser import Denoiser, DenoiserConfig, time_embed
from tsedit.diffusion import TrainConfig, make_schedule, train
from tsedit.sampling import build_loss_graph, sample_guided

L, D, T = 24, 5, 200


def timed(fn, repeat, warmup=2):
    for _ in range(warmup):
        fn()
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench_one(name):
    backend.use_backend(name)
    model = Denoiser.init(DenoiserConfig(L, D), total_steps=T, seed=0)
    sched = make_schedule(T)
    rng = np.random.default_rng(0)

    cs = ConstraintSet(
        points=[PointConstraint(t=6, value=0.8, channel=0, confidence=0.5)],
        segments=[SegmentConstraint(start=0, end=L - 1, target=15.0, channel=0, weight=3.0)],
    )
    from tsedit.constraints import compile_constraints

    canvas, mask = compile_constraints(cs, L, D)
    graph, x0_node, loss_node = build_loss_graph(model, canvas, cs.segments, 0.01, False)
    x = rng.standard_normal((1, L * D))
    emb = time_embed(10, T, model.config.embed_dim).reshape(1, -1)
    bindings = {"x": x, "emb": emb, "m": mask, "omega": np.array([1.0])}

    def inner_step():
        ev = forward_eval(graph, bindings, output=loss_node)
        backward_grad(ev, ["x"])

    data = gen_sines(256, L, D, seed=1).series
    cfg = TrainConfig(steps=1, batch_size=64, seed=0)

    def train_step():
        train(model, data, sched, cfg)

    def full_sample():
        sample_guided(model, sched, cs, seed=3)

    return {
        "predict+grad (B=1)": timed(inner_step, 50),
        "train step (B=64)": timed(train_step, 10),
        "guided sample (T=200)": timed(full_sample, 3, warmup=1),
    }


def main():
    names = backend.available_backends()
    results = {name: bench_one(name) for name in names}
    width = max(len(k) for r in results.values() for k in r)
    header = f"{'path':<{width}}  " + "  ".join(f"{n:>12}" for n in names)
    print(header)
    print("-" * len(header))
    for key in next(iter(results.values())):
        cells = "  ".join(f"{results[n][key] * 1e3:>10.2f}ms" for n in names)
        print(f"{key:<{width}}  {cells}")
    if len(names) == 2:
        print()
        for key in next(iter(results.values())):
            ratio = results["python"][key] / results["compiled"][key]
            print(f"{key}: compiled is {ratio:.2f}x the python backend")


if __name__ == "__main__":
    main()
