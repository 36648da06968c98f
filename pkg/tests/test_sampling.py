import numpy as np
import pytest

from tsedit.constraints import (
    ConstraintSet,
    ObservedCanvas,
    PointConstraint,
    SegmentConstraint,
    TrendConstraint,
)
from tsedit.denoiser import Denoiser, DenoiserConfig
from tsedit.diffusion import NumericError, make_schedule, q_sample
from tsedit.metrics import mad
from tsedit.sampling import (
    GuidanceConfig,
    blend_observed,
    reconstruction_grad,
    sample_guided,
    sample_uncond,
    stat_loss_and_grad,
)


def seg(start, end, target, stat="sum", weight=1.0, channel=0):
    return SegmentConstraint(start=start, end=end, target=target, channel=channel, stat=stat, weight=weight)


class TestStatLoss:
    def test_met_targets_give_zero(self):
        x = np.ones((6, 2))
        segments = [seg(0, 2, 3.0), seg(3, 5, 1.0, stat="avg")]
        loss, grad = stat_loss_and_grad(x, segments)
        assert loss == 0.0
        assert not grad.any()

    def test_sum_example(self):
        # 4 cells summing to 10, target 4, beta 1, omega 1:
        # loss (10-4)^2 = 36, grad 2*(10-4) = 12 on each covered cell
        x = np.zeros((4, 1))
        x[:, 0] = [1.0, 2.0, 3.0, 4.0]
        loss, grad = stat_loss_and_grad(x, [seg(0, 3, 4.0)], omega_t=1.0)
        assert loss == pytest.approx(36.0)
        np.testing.assert_allclose(grad[:, 0], 12.0)

    def test_empty_segments(self):
        loss, grad = stat_loss_and_grad(np.ones((3, 2)), [])
        assert loss == 0.0 and grad.shape == (3, 2) and not grad.any()

    def test_average_divides_gradient(self):
        x = np.full((4, 1), 2.0)
        loss, grad = stat_loss_and_grad(x, [seg(0, 3, 1.0, stat="avg")])
        assert loss == pytest.approx(1.0)
        np.testing.assert_allclose(grad[:, 0], 2.0 * 1.0 / 4.0)

    def test_omega_scales_both(self):
        x = np.arange(8.0).reshape(4, 2)
        segments = [seg(1, 3, 5.0), seg(0, 2, 2.0, channel=1, stat="avg", weight=3.0)]
        l1, g1 = stat_loss_and_grad(x, segments, omega_t=1.0)
        l2, g2 = stat_loss_and_grad(x, segments, omega_t=0.25)
        assert l2 == pytest.approx(0.25 * l1)
        np.testing.assert_allclose(g2, 0.25 * g1)

    def test_matches_finite_differences(self, rng):
        # central differences of the explicit polynomial; tolerance 1e-8
        for trial in range(10):
            x = rng.uniform(-2, 2, (8, 3))
            segments = [
                seg(int(a), int(b), float(rng.uniform(-5, 5)), stat=st, weight=float(rng.uniform(0.1, 4)), channel=int(c))
                for a, b, st, c in [
                    (0, 3, "sum", 0),
                    (2, 6, "avg", 1),
                    (5, 7, "sum", 2),
                ]
            ]
            omega = float(rng.uniform(0.1, 1.0))
            _, grad = stat_loss_and_grad(x, segments, omega)
            eps = 1e-5
            fd = np.zeros_like(x)
            for i in range(x.shape[0]):
                for j in range(x.shape[1]):
                    xp, xm = x.copy(), x.copy()
                    xp[i, j] += eps
                    xm[i, j] -= eps
                    fd[i, j] = (
                        stat_loss_and_grad(xp, segments, omega)[0]
                        - stat_loss_and_grad(xm, segments, omega)[0]
                    ) / (2 * eps)
            assert np.abs(grad - fd).max() < 1e-8 * max(1.0, np.abs(grad).max())


class TestBlend:
    def test_zero_mask_returns_candidate(self, rng):
        x = rng.standard_normal((5, 2))
        out = blend_observed(x, np.zeros((5, 2)), 1.0, rng.standard_normal((5, 2)))
        np.testing.assert_array_equal(out, x)

    def test_full_mask_returns_observed(self, rng):
        ob = rng.standard_normal((5, 2))
        out = blend_observed(rng.standard_normal((5, 2)), np.ones((5, 2)), 1.0, ob)
        np.testing.assert_array_equal(out, ob)

    def test_half_mask_midpoint(self):
        out = blend_observed(np.zeros((1, 1)), np.full((1, 1), 0.5), 1.0, np.full((1, 1), 2.0))
        assert out[0, 0] == pytest.approx(1.0)

    def test_accepts_canvas(self):
        canvas = ObservedCanvas(values=np.full((2, 1), 2.0), mask=np.full((2, 1), 0.5))
        out = blend_observed(np.zeros((2, 1)), canvas, 1.0, canvas.values)
        np.testing.assert_allclose(out, 1.0)

    def test_convexity(self, rng):
        x = rng.standard_normal((6, 3))
        ob = rng.standard_normal((6, 3))
        m = rng.uniform(0, 1, (6, 3))
        out = blend_observed(x, m, 0.7, ob)
        lo, hi = np.minimum(x, ob), np.maximum(x, ob)
        assert (out >= lo - 1e-12).all() and (out <= hi + 1e-12).all()

    def test_omega_range_checked(self):
        with pytest.raises(ValueError, match="omega"):
            blend_observed(np.zeros((1, 1)), np.zeros((1, 1)), 0.0, np.zeros((1, 1)))


@pytest.fixture(scope="module")
def micro():
    model = Denoiser.init(DenoiserConfig(6, 2, hidden=(16, 16), embed_dim=8), total_steps=12, seed=2)
    sched = make_schedule(12)
    return model, sched


def _canvas(L=6, D=2):
    values = np.zeros((L, D))
    mask = np.zeros((L, D))
    values[1, 0], mask[1, 0] = 0.8, 0.5
    values[4, 1], mask[4, 1] = 0.2, 0.9
    return ObservedCanvas(values=values, mask=mask)


class TestReconstructionGrad:
    def test_empty_canvas_zero_gradient(self, micro, rng):
        model, _ = micro
        empty = ObservedCanvas(values=np.zeros((6, 2)), mask=np.zeros((6, 2)))
        grad = reconstruction_grad(model, rng.standard_normal((6, 2)), 3, empty, kappa=0.5)
        assert not grad.any()

    def test_matches_finite_differences(self, micro, rng):
        model, _ = micro
        canvas = _canvas()
        x_t = rng.standard_normal((6, 2))
        p = rng.uniform(0, 1, (6, 2))
        kappa = 0.3

        def loss(x):
            pred = model.forward_batch(x.reshape(1, -1), [3]).reshape(6, 2)
            l1 = float((canvas.mask * (pred - canvas.values) ** 2).sum())
            return l1 + kappa * float(((pred - p) ** 2).sum())

        grad = reconstruction_grad(model, x_t, 3, canvas, kappa, refine_point=p)
        eps = 1e-5
        fd = np.zeros_like(x_t)
        for i in range(6):
            for j in range(2):
                xp, xm = x_t.copy(), x_t.copy()
                xp[i, j] += eps
                xm[i, j] -= eps
                fd[i, j] = (loss(xp) - loss(xm)) / (2 * eps)
        denom = max(1.0, np.abs(grad).max())
        assert np.abs(grad - fd).max() / denom < 1e-3

    def test_doubling_mask_doubles_gradient_exactly(self, micro, rng):
        model, _ = micro
        canvas = _canvas()
        doubled = ObservedCanvas(values=canvas.values, mask=2.0 * canvas.mask)
        x_t = rng.standard_normal((6, 2))
        g1 = reconstruction_grad(model, x_t, 5, canvas, kappa=0.0)
        g2 = reconstruction_grad(model, x_t, 5, doubled, kappa=0.0)
        assert np.array_equal(g2, 2.0 * g1)

    def test_non_finite_raises(self, micro):
        model, _ = micro
        canvas = _canvas()
        bad = np.full((6, 2), np.nan)
        with pytest.raises(NumericError, match="step 3"):
            reconstruction_grad(model, bad, 3, canvas, kappa=0.0)


class TestSampleGuided:
    def test_empty_constraints_bit_identical_to_uncond(self, micro):
        model, sched = micro
        for seed in (0, 1, 7):
            a = sample_uncond(model, sched, seed=seed)
            b = sample_guided(model, sched, ConstraintSet(), seed=seed).series
            assert np.array_equal(a, b)

    def test_hard_anchors_exact(self, micro):
        model, sched = micro
        pts = [
            PointConstraint(t=1, value=0.75, channel=0, confidence=1.0),
            PointConstraint(t=4, value=0.25, channel=1, confidence=1.0),
        ]
        for seed in (0, 3):
            out = sample_guided(model, sched, ConstraintSet(points=pts), seed=seed).series
            assert out[1, 0] == 0.75
            assert out[4, 1] == 0.25
            assert mad(out, pts) == 0.0

    def test_hard_anchor_exact_even_with_trend_dilution(self, micro):
        model, sched = micro
        cs = ConstraintSet(
            points=[PointConstraint(t=2, value=0.9, channel=0, confidence=1.0)],
            trends=[TrendConstraint(knots=((0, 0.1), (5, 0.5)), channel=0, confidence=0.4)],
        )
        out = sample_guided(model, sched, cs, seed=1).series
        assert out[2, 0] == 0.9

    def test_result_finite_and_shaped(self, micro):
        model, sched = micro
        cs = ConstraintSet(
            points=[PointConstraint(t=0, value=0.5, channel=0, confidence=0.3)],
            segments=[seg(0, 5, 4.0, weight=2.0)],
        )
        res = sample_guided(model, sched, cs, seed=9)
        assert res.series.shape == (6, 2)
        assert np.isfinite(res.series).all()

    def test_trace_records_steps(self, micro):
        model, sched = micro
        cs = ConstraintSet(segments=[seg(0, 5, 3.0)])
        res = sample_guided(model, sched, cs, GuidanceConfig(keep_trace=True), seed=2)
        assert len(res.trace) == sched.steps
        assert {"t", "loss", "omega_stats"} <= set(res.trace[0])

    def test_stats_only_constraints_shift_sum(self, micro):
        model, sched = micro
        base = [sample_uncond(model, sched, seed=s)[:, 0].sum() for s in range(4)]
        target = float(np.mean(base)) + 3.0
        cs = ConstraintSet(segments=[seg(0, 5, target, weight=3.0)])
        pushed = [
            sample_guided(model, sched, cs, seed=s).series[:, 0].sum() for s in range(4)
        ]
        assert np.mean(pushed) > np.mean(base)

    def test_grad_steps_path(self, micro):
        model, sched = micro
        cs = ConstraintSet(points=[PointConstraint(t=3, value=0.6, channel=0, confidence=0.7)])
        res = sample_guided(model, sched, cs, GuidanceConfig(grad_steps=3, kappa=0.05), seed=4)
        assert np.isfinite(res.series).all()

    def test_nan_model_aborts_with_step(self, micro):
        model, sched = micro
        broken = Denoiser.init(model.config, total_steps=sched.steps, seed=0)
        broken.params["w0"] = broken.params["w0"].copy()
        broken.params["w0"][0, 0] = np.inf
        cs = ConstraintSet(points=[PointConstraint(t=0, value=0.5, channel=0, confidence=0.5)])
        with pytest.raises(NumericError, match="step"):
            sample_guided(broken, sched, cs, seed=0)

    def test_eta_zero_still_blends(self, micro):
        model, sched = micro
        pts = [PointConstraint(t=1, value=0.9, channel=0, confidence=1.0)]
        out = sample_guided(model, sched, ConstraintSet(points=pts), GuidanceConfig(eta=0.0), seed=0).series
        assert out[1, 0] == 0.9

    def test_forward_marginal_preservation(self, micro):
        # the in-loop draw is q_sample on the canvas: mean sqrt(abar)*x_ob, 3 SE
        _, sched = micro
        canvas = _canvas()
        rng = np.random.default_rng(23)
        t = 6
        n = 10_000
        acc = np.zeros_like(canvas.values)
        for _ in range(n):
            acc += q_sample(canvas.values, t, sched, rng.standard_normal(canvas.values.shape))
        mean = acc / n
        abar = sched.alpha_bars[t]
        se = np.sqrt((1 - abar) / n)
        assert np.abs(mean - np.sqrt(abar) * canvas.values).max() < 3 * se


class TestGuidanceConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            GuidanceConfig(eta=-0.1)
        with pytest.raises(ValueError):
            GuidanceConfig(grad_steps=0)

def test_random_constraint_sets_stay_finite_and_exact(micro):
    # fuzz: random mixes of anchors (incl. w=0 and w=1 at the edges),
    # trends, and segments must sample finite series with exact hard cells
    model, sched = micro
    for trial in range(30):
        rng = np.random.default_rng(1000 + trial)
        L, D = 6, 2
        points, used = [], set()
        for _ in range(int(rng.integers(0, 4))):
            t, c = int(rng.integers(0, L)), int(rng.integers(0, D))
            if (t, c) in used:
                continue
            used.add((t, c))
            w = float(rng.choice([0.0, 0.3, 0.7, 1.0]))
            points.append(PointConstraint(t=t, value=float(rng.uniform(0, 1)), channel=c, confidence=w))
        trends = []
        if rng.random() < 0.5:
            t0 = int(rng.integers(0, L - 1))
            t1 = int(rng.integers(t0 + 1, L))
            c = int(rng.integers(0, D))
            # overlap with anchors is allowed: explicit points override
            trends.append(
                TrendConstraint(
                    knots=((t0, float(rng.uniform(0, 1))), (t1, float(rng.uniform(0, 1)))),
                    channel=c,
                    confidence=float(rng.uniform(0, 1)),
                )
            )
        segments = []
        for _ in range(int(rng.integers(0, 3))):
            a = int(rng.integers(0, L))
            b = int(rng.integers(a, L))
            segments.append(
                seg(a, b, float(rng.uniform(-10, 10)), stat=str(rng.choice(["sum", "avg"])),
                    weight=float(rng.uniform(0, 5)), channel=int(rng.integers(0, D)))
            )
        cs = ConstraintSet(points=points, trends=trends, segments=segments)
        res = sample_guided(model, sched, cs, seed=trial)
        assert res.series.shape == (L, D)
        assert np.isfinite(res.series).all()
        for p in points:
            if p.confidence == 1.0:
                assert res.series[p.t, p.channel] == p.value

