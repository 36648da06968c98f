import numpy as np
import pytest

from tsedit.data import gen_sines
from tsedit.denoiser import Denoiser, DenoiserConfig
from tsedit.diffusion import TrainConfig, make_schedule, save_checkpoint, train

# tiny: fast unit-test scale; desk: the acceptance scale (L=24, D=5, T=200)
TINY = dict(n=400, seq_len=24, channels=5, timesteps=50, hidden=(64, 64), train_steps=600)
DESK = dict(n=1000, seq_len=24, channels=5, timesteps=200, hidden=(128, 128), train_steps=3000)


def _build(spec):
    data = gen_sines(spec["n"], spec["seq_len"], spec["channels"], seed=1)
    sched = make_schedule(spec["timesteps"])
    model = Denoiser.init(
        DenoiserConfig(spec["seq_len"], spec["channels"], hidden=spec["hidden"]),
        total_steps=sched.steps,
        seed=0,
    )
    trained = train(
        model,
        data.series,
        sched,
        TrainConfig(learning_rate=0.05, steps=spec["train_steps"], batch_size=64, seed=0),
    )
    return trained, sched, data


@pytest.fixture(scope="session")
def tiny_setup():
    return _build(TINY)


@pytest.fixture(scope="session")
def desk_setup():
    return _build(DESK)


@pytest.fixture(scope="session")
def desk_ckpt(desk_setup, tmp_path_factory):
    model, sched, data = desk_setup
    path = tmp_path_factory.mktemp("ckpt") / "sine.json"
    save_checkpoint(path, model, sched, meta={"dataset": data.label, "norm": data.norm.tolist()})
    return path


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
