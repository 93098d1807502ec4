"""Constructive delta-fine partition builders and refinement schedules.

Three builders:

* ``build_anchored`` -- uniform mesh cells plus one anchor cell per
  exceptional point, the standard gauge construction that forces exceptional
  points to be tags.
* ``build_straddle_verified`` -- anchors plus off-anchor cells whose widths
  are searched until each cell individually satisfies the one-sided
  differentiability (straddle) inequality |F(x+w) - F(x) - f(x) w| <= eps w
  at its left-endpoint tag.  This realizes, constructively, the gauge whose
  existence the fundamental-theorem argument asserts.
* ``build_cousin`` -- bisection until every piece admits a tag whose gauge
  ball strictly contains it (a constructive proof of nonemptiness for any
  positive gauge).

The straddle builder works in vectorized waves: it proposes a batch of
equal-width cells, checks the inequality on the whole batch, accepts the
passing prefix, and halves or grows the width adaptively.  Width control is
geometric with factor 2 downward; the upward growth is throttled by the
observed error headroom so the accepted widths track the largest passing
width without thrashing.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import AnchorOverlapError, BudgetExceeded, StraddleFailure
from .models import SingularFunctionModel
from .partition import Gauge, Interval, TaggedPartition, anchored_gauge, validate

_WAVE = 4096


class ScheduleStep(NamedTuple):
    h: float
    r: float
    eps: float


@dataclass(frozen=True)
class RefinementSchedule:
    """Depth-indexed gauge parameters: mesh, anchor radius, straddle tolerance.

    Defaults follow the standard geometric family h_n = h0 * 2^-n,
    r_n = r0 * 2^-n, eps_n = eps0 * 4^-n; the decay factors are adjustable
    because deep runs on hard integrands need a slower tolerance decay to
    stay within pair budgets.
    """

    h0: float
    r0: float
    eps0: float = 1e-2
    h_factor: float = 0.5
    r_factor: float = 0.5
    eps_factor: float = 0.25

    def __post_init__(self):
        for name in ("h0", "r0", "eps0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("h_factor", "r_factor", "eps_factor"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie strictly between 0 and 1")

    @classmethod
    def for_span(
        cls,
        span: Interval,
        points: Sequence[float] = (),
        eps0: float = 1e-2,
        h_factor: float = 0.5,
        r_factor: float = 0.5,
        eps_factor: float = 0.25,
    ) -> "RefinementSchedule":
        walls = sorted({span.lo, span.hi, *map(float, points)})
        min_gap = min(b - a for a, b in zip(walls, walls[1:]))
        r0 = min(0.05 * span.length, 0.5 * min_gap)
        return cls(h0=span.length, r0=r0, eps0=eps0,
                   h_factor=h_factor, r_factor=r_factor, eps_factor=eps_factor)

    @classmethod
    def for_model(cls, model: SingularFunctionModel, **kwargs) -> "RefinementSchedule":
        return cls.for_span(model.span, tuple(model.E), **kwargs)

    def at(self, n: int) -> ScheduleStep:
        if n < 0:
            raise ValueError("depth must be nonnegative")
        return ScheduleStep(
            h=self.h0 * self.h_factor**n,
            r=self.r0 * self.r_factor**n,
            eps=self.eps0 * self.eps_factor**n,
        )


def schedule_at(schedule: RefinementSchedule, n: int) -> ScheduleStep:
    return schedule.at(n)


@dataclass(frozen=True)
class BuildLimits:
    max_pairs: int = 10_000_000
    max_halvings: int = 80
    min_width_factor: float = 2.0**-60

    def __post_init__(self):
        if self.max_pairs <= 0 or self.max_halvings <= 0 or self.min_width_factor <= 0:
            raise ValueError("build limits must be positive")

    def min_width(self, span_length: float) -> float:
        return self.min_width_factor * span_length


# ---------------------------------------------------------------------------
# Anchor layout
# ---------------------------------------------------------------------------

def _anchor_layout(span: Interval, points: Sequence[float], r: float):
    """Anchor cells [e-r, e+r] (one-sided at span endpoints), validated:
    pairwise non-overlapping, inside the span, edges off the point set."""
    if r <= 0:
        raise ValueError("anchor radius must be positive")
    pts = sorted(float(p) for p in points if span.lo <= p <= span.hi)
    ptset = set(pts)
    anchors = []
    for e in pts:
        lo = e if e == span.lo else e - r
        hi = e if e == span.hi else e + r
        if lo == hi or (e != span.lo and lo == e) or (e != span.hi and hi == e):
            raise AnchorOverlapError(
                f"anchor radius {r!r} underflows at exceptional point {e!r}"
            )
        if (e != span.lo and lo <= span.lo) or (e != span.hi and hi >= span.hi):
            raise AnchorOverlapError(
                f"anchor [{lo!r}, {hi!r}] around {e!r} leaves the open span"
            )
        if (lo != e and lo in ptset) or (hi != e and hi in ptset):
            raise AnchorOverlapError(
                f"anchor edge of {e!r} lands on another exceptional point"
            )
        anchors.append((lo, hi, e))
    for (l1, h1, e1), (l2, h2, e2) in zip(anchors, anchors[1:]):
        if h1 > l2:
            raise AnchorOverlapError(
                f"anchors around {e1!r} and {e2!r} overlap ([{l1!r},{h1!r}] vs [{l2!r},{h2!r}])"
            )
    return anchors


def _gaps(span: Interval, anchors) -> Iterator[tuple]:
    """Ordered walk of the span: ("gap", g0, g1) and ("anchor", lo, hi, e)."""
    prev = span.lo
    for lo, hi, e in anchors:
        if lo > prev:
            yield ("gap", prev, lo)
        yield ("anchor", lo, hi, e)
        prev = hi
    if span.hi > prev:
        yield ("gap", prev, span.hi)


def _mesh_positions(g0: float, g1: float, h: float) -> np.ndarray:
    """Equal-width breakpoints covering [g0, g1] with width <= h, endpoints
    exact."""
    length = g1 - g0
    n = max(1, math.ceil(length / h))
    if length / n > h:
        n += 1
    positions = g0 + (length / n) * np.arange(n + 1)
    positions[0] = g0
    positions[-1] = g1
    return positions


# ---------------------------------------------------------------------------
# build_anchored
# ---------------------------------------------------------------------------

def build_anchored(
    span: Interval,
    points: Sequence[float],
    r: float,
    h: float,
    limits: BuildLimits | None = None,
) -> TaggedPartition:
    """Uniform-mesh partition with every exceptional point anchored as the
    tag of its own cell.

    Off-anchor cells have width <= h and are tagged at their left endpoint.
    The result is delta-fine for the gauge that is 2h off the points and 2r
    at each point (the non-isolating anchored gauge).
    """
    if h <= 0:
        raise ValueError("mesh width must be positive")
    limits = limits or BuildLimits()
    anchors = _anchor_layout(span, points, r)
    los, his, tags = [], [], []
    for item in _gaps(span, anchors):
        if item[0] == "anchor":
            _, lo, hi, e = item
            los.append(np.asarray([lo]))
            his.append(np.asarray([hi]))
            tags.append(np.asarray([e]))
        else:
            _, g0, g1 = item
            pos = _mesh_positions(g0, g1, h)
            los.append(pos[:-1])
            his.append(pos[1:])
            tags.append(pos[:-1])
    los = np.concatenate(los)
    if len(los) > limits.max_pairs:
        raise BudgetExceeded(
            f"anchored build needs {len(los)} pairs (cap {limits.max_pairs})",
            pairs_built=0,
        )
    part = TaggedPartition(los, np.concatenate(his), np.concatenate(tags), span)
    report = validate(part, span)
    if not report.ok:  # pragma: no cover - construction guarantees validity
        raise AssertionError(f"anchored build produced invalid partition: {report.violations[:3]}")
    return part


def anchored_gauge_for(points: Sequence[float], r: float, h: float,
                       isolating: bool = False) -> Gauge:
    """The gauge a partition from :func:`build_anchored` is fine for."""
    return anchored_gauge(mesh=h, anchor_radii={float(e): r for e in points},
                          isolating=isolating)


# ---------------------------------------------------------------------------
# Straddle-verified construction (wave engine)
# ---------------------------------------------------------------------------

class _Counter:
    __slots__ = ("pairs",)

    def __init__(self):
        self.pairs = 0


def _gap_waves(model, g0, g1, eps, limits, counter, h_cap, min_width):
    """Yield (positions, f_tags, F_positions) for contiguous runs of cells
    covering [g0, g1], every cell passing the straddle check."""
    x = g0
    w = min(h_cap, g1 - g0)
    halvings = 0
    while x < g1:
        remaining = g1 - x
        w = min(w, remaining)
        n_cells = math.ceil(remaining / w)
        if n_cells <= _WAVE + 1:
            # terminate the gap exactly; widths stay within a factor 2 of w,
            # so a full pass never strands a sub-width sliver before g1
            width = remaining / n_cells
            positions = x + width * np.arange(n_cells + 1)
            positions[0] = x
            positions[-1] = g1
        else:
            n_cells = _WAVE
            positions = x + w * np.arange(_WAVE + 1)
        widths = np.diff(positions)
        if not (widths > 0).all():
            raise StraddleFailure(float(x), float(w), math.nan,
                                  "cell width underflows at floating point")
        tags = positions[:-1]
        F_pos = model.F_values(positions)
        f_tags = model.f_values(tags)
        errs = np.abs(np.diff(F_pos) - f_tags * widths)
        bounds = eps * widths
        ok = errs <= bounds
        n_pass = n_cells if bool(ok.all()) else int(np.argmin(ok))
        if n_pass == 0:
            halvings += 1
            half = w * 0.5
            if halvings > limits.max_halvings or half < min_width:
                raise StraddleFailure(
                    float(x), float(w), float(errs[0]),
                    "width search exhausted; declared derivative does not match F here",
                )
            w = half
            continue
        counter.pairs += n_pass
        if counter.pairs > limits.max_pairs:
            raise BudgetExceeded(
                f"straddle build passed {counter.pairs} pairs (cap {limits.max_pairs})",
                pairs_built=counter.pairs,
                position=float(x),
            )
        yield positions[: n_pass + 1], f_tags[:n_pass], F_pos[: n_pass + 1]
        x = float(positions[n_pass])
        halvings = 0
        if n_pass < n_cells:
            w *= 0.5
        else:
            headroom = float(np.max(errs / bounds)) if n_cells else 0.0
            if headroom < 0.25:
                w = min(w * 2.0, h_cap)
            elif headroom < 0.6:
                w = min(w * 1.3, h_cap)


def straddle_chunks(
    model: SingularFunctionModel,
    span: Interval | None = None,
    r: float = 0.05,
    eps: float = 1e-3,
    limits: BuildLimits | None = None,
    h: float | None = None,
) -> Iterator[tuple]:
    """Stream a straddle-verified anchored partition in span order.

    Yields ``("cells", positions, f_tags, F_positions)`` for off-anchor runs
    and ``("anchor", lo, hi, e)`` for anchor cells.  Consumers either
    materialize the cells or fold them into running sums; streaming keeps
    memory flat for multi-million-pair builds.
    """
    span = span or model.span
    if eps <= 0:
        raise ValueError("straddle tolerance must be positive")
    limits = limits or BuildLimits()
    anchors = _anchor_layout(span, tuple(model.E), r)
    counter = _Counter()
    h_cap = h if h is not None else span.length
    if h_cap <= 0:
        raise ValueError("mesh cap must be positive")
    min_width = limits.min_width(span.length)
    for item in _gaps(span, anchors):
        if item[0] == "anchor":
            counter.pairs += 1
            if counter.pairs > limits.max_pairs:
                raise BudgetExceeded(
                    f"straddle build passed {counter.pairs} pairs (cap {limits.max_pairs})",
                    pairs_built=counter.pairs,
                    position=item[1],
                )
            yield item
        else:
            _, g0, g1 = item
            for chunk in _gap_waves(model, g0, g1, eps, limits, counter, h_cap, min_width):
                yield ("cells",) + chunk


def build_straddle_verified(
    model: SingularFunctionModel,
    span: Interval | None = None,
    r: float = 0.05,
    eps: float = 1e-3,
    limits: BuildLimits | None = None,
    h: float | None = None,
) -> TaggedPartition:
    """Materialized form of :func:`straddle_chunks`.

    Every exceptional point tags the cell [e-r, e+r]; every other cell
    passes the straddle inequality individually, so the per-pair error sum is
    bounded by eps times the span length.  Raises ``StraddleFailure`` when
    the width search bottoms out (wrong derivative or undeclared singular
    point) and ``BudgetExceeded`` when the pair cap is passed.
    """
    span = span or model.span
    los, his, tags = [], [], []
    for item in straddle_chunks(model, span, r, eps, limits, h):
        if item[0] == "anchor":
            _, lo, hi, e = item
            los.append(np.asarray([lo]))
            his.append(np.asarray([hi]))
            tags.append(np.asarray([e]))
        else:
            positions = item[1]
            los.append(positions[:-1])
            his.append(positions[1:])
            tags.append(positions[:-1])
    part = TaggedPartition(
        np.concatenate(los), np.concatenate(his), np.concatenate(tags), span
    )
    report = validate(part, span)
    if not report.ok:  # pragma: no cover - construction guarantees validity
        raise AssertionError(f"straddle build produced invalid partition: {report.violations[:3]}")
    return part


# ---------------------------------------------------------------------------
# Cousin bisection
# ---------------------------------------------------------------------------

def build_cousin(
    span: Interval,
    gauge: Gauge,
    tag_policy: str = "midpoint",
    seed: int = 0,
    limits: BuildLimits | None = None,
) -> TaggedPartition:
    """Bisect until every piece strictly fits a candidate tag's gauge ball.

    Candidate tags are tried in order: the policy's pick (left endpoint,
    midpoint, or a seeded-random point), then midpoint, left, right.  A piece
    whose width falls below the minimum relative width raises
    ``BudgetExceeded`` -- the gauge is effectively zero at floating point.
    """
    if tag_policy not in ("left", "midpoint", "random"):
        raise ValueError(f"unknown tag policy {tag_policy!r}")
    limits = limits or BuildLimits()
    rng = random.Random(seed)
    min_width = limits.min_width(span.length)

    los, his, tags = [], [], []
    stack = [(span.lo, span.hi)]
    while stack:
        u, v = stack.pop()
        if v - u < min_width:
            raise BudgetExceeded(
                f"bisection width {v - u:.3e} below minimum {min_width:.3e}; "
                "gauge is effectively zero here",
                pairs_built=len(los),
                position=u,
            )
        if tag_policy == "left":
            first = u
        elif tag_policy == "midpoint":
            first = 0.5 * (u + v)
        else:
            first = rng.uniform(u, v)
        accepted = None
        for x in (first, 0.5 * (u + v), u, v):
            delta = gauge(x)
            if delta > 0 and x - delta < u and v < x + delta:
                accepted = x
                break
        if accepted is None:
            mid = 0.5 * (u + v)
            if not (u < mid < v):
                raise BudgetExceeded(
                    f"cannot bisect [{u!r}, {v!r}] further at floating point",
                    pairs_built=len(los),
                    position=u,
                )
            stack.append((mid, v))
            stack.append((u, mid))
            continue
        los.append(u)
        his.append(v)
        tags.append(accepted)
        if len(los) > limits.max_pairs:
            raise BudgetExceeded(
                f"bisection passed {len(los)} pairs (cap {limits.max_pairs})",
                pairs_built=len(los),
                position=u,
            )
    part = TaggedPartition(np.asarray(los), np.asarray(his), np.asarray(tags), span)
    report = validate(part, span)
    if not report.ok:  # pragma: no cover
        raise AssertionError(f"cousin build produced invalid partition: {report.violations[:3]}")
    return part
