"""Parity between the numpy fallback and the compiled kernels.

The two backends must agree on every kernel (to float64 round-off) and
on an end-to-end guided sample. Skipped when the extension is absent.
"""

import numpy as np
import pytest

from tsedit import backend

pytestmark = pytest.mark.skipif(
    "compiled" not in backend.available_backends(), reason="compiled kernels not built"
)


@pytest.fixture()
def both():
    from tsedit import _kernels_cy, _kernels_py

    return _kernels_py, _kernels_cy


def test_every_kernel_agrees(both, rng):
    KP, KC = both
    a = rng.standard_normal((7, 5))
    b = rng.standard_normal((5, 9))
    g = rng.standard_normal((7, 9))
    v = rng.standard_normal(5)
    m = rng.standard_normal((7, 5))
    cases = {
        "matmul": (a, b),
        "matmul_at": (a, g),
        "matmul_bt": (g, rng.standard_normal((4, 9))),
        "add": (a, m),
        "sub": (a, m),
        "mul": (a, m),
        "scale": (a, -1.7),
        "badd": (a, v),
        "colsum": (a,),
        "tanh": (a,),
        "tanh_bwd": (np.tanh(a), m),
        "relu": (a,),
        "relu_bwd": (a, m),
        "sin": (a,),
        "sin_bwd": (a, m),
        "cos": (a,),
        "cos_bwd": (a, m),
        "region_sum": (a, 1, 6, 0, 3),
        "sqdiff": (a, m),
        "sqdiff_bwd": (a, m, 2.3),
    }
    for name, args in cases.items():
        p = getattr(KP, name)(*args)
        c = getattr(KC, name)(*args)
        np.testing.assert_allclose(p, c, rtol=1e-12, atol=1e-12, err_msg=name)


def test_inplace_kernels_agree(both, rng):
    KP, KC = both
    base = rng.standard_normal((6, 4))
    inc = rng.standard_normal((6, 4))
    x, y = base.copy(), base.copy()
    KP.iadd(x, inc)
    KC.iadd(y, inc)
    np.testing.assert_array_equal(x, y)
    x, y = base.copy(), base.copy()
    KP.region_add(x, 1, 4, 0, 2, 3.25)
    KC.region_add(y, 1, 4, 0, 2, 3.25)
    np.testing.assert_array_equal(x, y)


def test_guided_sample_agrees_across_backends(tiny_setup):
    from tsedit.constraints import ConstraintSet, PointConstraint, SegmentConstraint
    from tsedit.sampling import sample_guided

    model, sched, _ = tiny_setup
    cs = ConstraintSet(
        points=[PointConstraint(t=5, value=0.8, channel=0, confidence=0.5)],
        segments=[SegmentConstraint(start=0, end=23, target=13.0, channel=0, weight=3.0)],
    )
    previous = backend.kernels.NAME
    try:
        backend.use_backend("python")
        a = sample_guided(model, sched, cs, seed=5).series
        backend.use_backend("compiled")
        b = sample_guided(model, sched, cs, seed=5).series
    finally:
        backend.use_backend(previous)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9)


def test_env_override_selects_python(monkeypatch):
    monkeypatch.setenv("TSEDIT_BACKEND", "python")
    assert backend._select_default().NAME == "python"
