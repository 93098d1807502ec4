import random

import numpy as np
import pytest

from gaugeint import (
    AnchorOverlapError,
    BudgetExceeded,
    BuildLimits,
    ExceptionalSet,
    Gauge,
    Interval,
    RefinementSchedule,
    SingularFunctionModel,
    StraddleFailure,
    anchored_gauge,
    build_anchored,
    build_cousin,
    build_straddle_verified,
    catalog,
    is_fine,
    schedule_at,
    validate,
)
from gaugeint.builders import anchored_gauge_for
from gaugeint.partition import restriction_mask


def model_from(F, f, points, lo, hi):
    return SingularFunctionModel(
        F=F, f=f, E=ExceptionalSet(points), span=Interval(lo, hi)
    )


class TestSchedule:
    def test_defaults_depth_zero(self):
        sched = RefinementSchedule.for_span(Interval(-1.0, 1.0), [0.0])
        step = schedule_at(sched, 0)
        assert step.h == 2.0
        assert step.r == pytest.approx(min(0.1, 0.5), rel=1e-15)
        assert step.eps == 1e-2

    def test_depth_three(self):
        sched = RefinementSchedule.for_span(Interval(-1.0, 1.0), [0.0])
        step = sched.at(3)
        assert step.h == pytest.approx(0.25, rel=1e-15)
        assert step.r == pytest.approx(0.1 / 8, rel=1e-15)
        assert step.eps == pytest.approx(1e-2 / 64, rel=1e-15)

    def test_strictly_decreasing(self):
        sched = RefinementSchedule.for_span(Interval(0.0, 3.0), [0.5, 1.5, 2.5])
        for n in range(8):
            a, b = sched.at(n), sched.at(n + 1)
            assert b.h < a.h and b.r < a.r and b.eps < a.eps

    def test_r0_respects_min_gap(self):
        # min gap between {0, 0.02, 3} walls is 0.02, so r0 <= 0.01
        sched = RefinementSchedule.for_span(Interval(0.0, 3.0), [0.02])
        assert sched.r0 == pytest.approx(0.01, rel=1e-15)

    def test_anchor_pair_fits_gap(self):
        sched = RefinementSchedule.for_span(Interval(0.0, 1.0), [0.3, 0.4])
        assert 2 * sched.at(0).r <= 0.1 + 1e-15

    def test_negative_depth_rejected(self):
        sched = RefinementSchedule.for_span(Interval(0.0, 1.0))
        with pytest.raises(ValueError):
            sched.at(-1)

    def test_bad_factors_rejected(self):
        with pytest.raises(ValueError):
            RefinementSchedule(h0=1.0, r0=0.1, eps_factor=1.5)


class TestBuildAnchored:
    def test_anchor_cell_present_and_fine(self):
        span = Interval(-1.0, 1.0)
        part = build_anchored(span, [0.0], r=0.25, h=0.5)
        assert validate(part, span).ok
        idx = list(part.tags).index(0.0)
        assert part.los[idx] == -0.25 and part.his[idx] == 0.25
        assert is_fine(part, anchored_gauge_for([0.0], r=0.25, h=0.5))

    def test_empty_points_equal_cells(self):
        span = Interval(0.0, 1.0)
        part = build_anchored(span, [], r=0.1, h=0.25)
        assert len(part) == 4
        assert np.allclose(part.widths, 0.25)
        assert list(part.tags) == list(part.los)

    def test_anchor_overlap_rejected(self):
        with pytest.raises(AnchorOverlapError):
            build_anchored(Interval(-1.0, 1.0), [-0.9, -0.8], r=0.1, h=0.5)

    def test_anchor_leaving_open_span_rejected(self):
        with pytest.raises(AnchorOverlapError):
            build_anchored(Interval(0.0, 1.0), [0.05], r=0.1, h=0.5)

    def test_determinism(self):
        span = Interval(-1.0, 2.0)
        a = build_anchored(span, [0.0, 1.0], r=0.125, h=0.3)
        b = build_anchored(span, [0.0, 1.0], r=0.125, h=0.3)
        assert np.array_equal(a.los, b.los)
        assert np.array_equal(a.his, b.his)
        assert np.array_equal(a.tags, b.tags)

    def test_anchor_isolation(self):
        # the only cell whose closed interval contains an exceptional point
        # is the cell anchored there
        span = Interval(-1.0, 2.0)
        points = [0.0, 1.0]
        part = build_anchored(span, points, r=0.1, h=0.17)
        for e in points:
            holds = (part.los <= e) & (e <= part.his)
            assert np.count_nonzero(holds) == 1
            assert part.tags[np.argmax(holds)] == e

    def test_widths_capped_by_mesh(self):
        part = build_anchored(Interval(0.0, 1.0), [0.5], r=0.0625, h=0.2)
        off = part.tags != 0.5
        assert np.all(part.widths[off] <= 0.2 + 1e-15)

    def test_endpoint_member_one_sided(self):
        span = Interval(0.0, 1.0)
        part = build_anchored(span, [0.0], r=0.125, h=0.25)
        assert validate(part, span).ok
        assert part.los[0] == 0.0 and part.his[0] == 0.125 and part.tags[0] == 0.0


class TestBuildStraddle:
    def test_smooth_model_rewalk(self):
        model = catalog("parabola")
        eps = 1e-3
        part = build_straddle_verified(model, r=0.05, eps=eps)
        span = model.span
        assert validate(part, span).ok
        off = ~restriction_mask(part, tuple(model.E))
        errs = np.abs(
            model.F_values(part.his[off]) - model.F_values(part.los[off])
            - model.f_values(part.tags[off]) * part.widths[off]
        )
        assert np.all(errs <= eps * part.widths[off] * (1 + 1e-12))
        assert errs.sum() <= eps * span.length

    def test_anchor_tags_every_exceptional_point(self):
        model = catalog("reciprocal")
        part = build_straddle_verified(model, r=0.05, eps=1e-2)
        mask = part.tags == 0.0
        assert np.count_nonzero(mask) == 1
        i = int(np.argmax(mask))
        assert part.los[i] == -0.05 and part.his[i] == 0.05
        # anchor isolation: no other closed cell contains the point
        holds = (part.los <= 0.0) & (0.0 <= part.his)
        assert np.count_nonzero(holds) == 1

    def test_reciprocal_width_profile(self):
        # accepted widths obey w <= eps * x^2 * (x + w): the closed form of
        # the per-cell error for F = 1/x
        model = catalog("reciprocal")
        eps = 1e-3
        part = build_straddle_verified(model, r=0.05, eps=eps)
        sel = part.tags >= 0.06
        x = part.tags[sel]
        w = part.widths[sel]
        cap = eps * x**2 * (x + w)
        assert np.all(w <= cap * (1 + 1e-9))
        utilization = w / cap
        assert np.median(utilization) >= 0.2

    def test_wrong_derivative_fails(self):
        model = model_from(
            F=lambda x: np.abs(x), f=lambda x: np.ones_like(np.asarray(x)),
            points=[], lo=-1.0, hi=1.0,
        )
        with pytest.raises(StraddleFailure) as exc:
            build_straddle_verified(model, r=0.05, eps=1e-3)
        assert exc.value.tag < 0

    def test_budget_exceeded(self):
        model = catalog("reciprocal")
        with pytest.raises(BudgetExceeded) as exc:
            build_straddle_verified(
                model, r=0.05, eps=1e-3, limits=BuildLimits(max_pairs=1000)
            )
        assert exc.value.pairs_built > 1000

    def test_piecewise_constant_is_cheap(self):
        model = catalog("heaviside")
        part = build_straddle_verified(model, r=0.1, eps=1e-6)
        assert len(part) <= 5

    def test_mesh_cap_respected(self):
        model = catalog("parabola")
        part = build_straddle_verified(model, r=0.05, eps=1e-2, h=0.001)
        off = ~restriction_mask(part, (0.5,))
        assert np.all(part.widths[off] <= 0.001 * (1 + 1e-12))

    def test_determinism(self):
        model = catalog("sqrt_singular")
        a = build_straddle_verified(model, r=0.01, eps=1e-3)
        b = build_straddle_verified(model, r=0.01, eps=1e-3)
        assert np.array_equal(a.los, b.los) and np.array_equal(a.tags, b.tags)


class TestBuildCousin:
    def test_whole_span_gauge_single_pair_any_policy(self):
        span = Interval(0.0, 1.0)
        gauge = Gauge(lambda x: span.length)
        for policy in ("left", "midpoint", "random"):
            part = build_cousin(span, gauge, tag_policy=policy, seed=9)
            assert len(part) == 1
            assert validate(part, span).ok
            assert is_fine(part, gauge)

    def test_random_policy_hundred_seeds(self):
        span = Interval(-1.0, 1.0)
        gauge = Gauge(lambda x: max(0.1, abs(x)))
        for seed in range(100):
            part = build_cousin(span, gauge, tag_policy="random", seed=seed)
            assert validate(part, span).ok
            assert is_fine(part, gauge)

    def test_left_and_midpoint_policies(self):
        span = Interval(0.0, 2.0)
        gauge = Gauge(lambda x: 0.3)
        for policy in ("left", "midpoint"):
            part = build_cousin(span, gauge, tag_policy=policy)
            assert validate(part, span).ok
            assert is_fine(part, gauge)

    def test_effectively_zero_gauge(self):
        with pytest.raises(BudgetExceeded):
            build_cousin(Interval(0.0, 1.0), Gauge(lambda x: 1e-400))

    def test_pair_budget(self):
        with pytest.raises(BudgetExceeded):
            build_cousin(Interval(0.0, 1.0), Gauge(lambda x: 1e-3),
                         limits=BuildLimits(max_pairs=100))

    def test_seed_determinism(self):
        span = Interval(-1.0, 1.0)
        gauge = Gauge(lambda x: max(0.05, abs(x) / 2))
        a = build_cousin(span, gauge, tag_policy="random", seed=42)
        b = build_cousin(span, gauge, tag_policy="random", seed=42)
        assert np.array_equal(a.tags, b.tags)

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError):
            build_cousin(Interval(0.0, 1.0), Gauge(lambda x: 1.0), tag_policy="best")

    def test_isolating_gauge_forces_anchor_tags(self):
        span = Interval(-1.0, 1.0)
        gauge = anchored_gauge(mesh=0.2, anchor_radii={0.0: 0.05}, isolating=True)
        part = build_cousin(span, gauge, tag_policy="midpoint")
        holds = (part.los <= 0.0) & (0.0 <= part.his)
        assert np.all(part.tags[holds] == 0.0)


class TestBuilderSweep:
    def test_thousand_randomized_builds_validate(self):
        rng = random.Random(4242)
        span = Interval(-1.0, 1.0)
        for i in range(1000):
            kind = i % 3
            if kind == 0:
                e = rng.uniform(-0.6, 0.6)
                r = rng.uniform(0.01, 0.15)
                h = rng.uniform(0.05, 0.8)
                part = build_anchored(span, [e], r=r, h=h)
            elif kind == 1:
                base = rng.uniform(0.05, 0.5)
                part = build_cousin(span, Gauge(lambda x, b=base: b),
                                    tag_policy="random", seed=i)
            else:
                model = catalog("parabola")
                part = build_straddle_verified(model, r=rng.uniform(0.01, 0.2),
                                               eps=rng.choice([1e-1, 1e-2, 1e-3]))
                assert validate(part, model.span).ok
                continue
            assert validate(part, span).ok

    def test_anchored_validate_sweep(self):
        rng = random.Random(11)
        for _ in range(100):
            a = rng.uniform(-5, 5)
            b = a + rng.uniform(0.5, 4.0)
            span = Interval(a, b)
            k = rng.randrange(0, 3)
            points = sorted(rng.uniform(a + 0.2, b - 0.2) for _ in range(k))
            if len(set(points)) != len(points):
                continue
            gap = min(
                (q - p for p, q in zip([a] + points, points + [b])), default=b - a
            )
            r = gap * 0.3
            h = rng.uniform(0.05, 0.5) * (b - a)
            part = build_anchored(span, points, r=r, h=h)
            assert validate(part, span).ok
            assert is_fine(part, anchored_gauge_for(points, r=r, h=h))
