"""Top-level limit processes and reports.

* ``total_kh`` -- the total integral's value is the exact telescoped endpoint
  difference of the extended function; what varies per requested tolerance is
  the *verification*: a straddle-verified partition (fixed anchor radius,
  tolerance-driven widths) whose Riemann sum must track the off-anchor
  increment sum within eps times the span length.
* ``plain_kh`` -- estimates the ordinary gauge integral of the extended
  derivative from Riemann sums over straddle-verified partitions whose mesh,
  anchor radius and tolerance all shrink with depth.
* ``decompose`` -- assembles the total value, the plain-integral verdict, the
  basic-sum verdict and the residual table, and checks the additivity
  identity total = plain + basic-sum when both limits converge.
* ``residue_check`` -- the degenerate case: when the derivative vanishes off
  the exceptional set, the endpoint difference must equal the sum of the
  residuals.

Each depth or tolerance row is an independent pure computation; reports are
assembled deterministically by index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple

import numpy as np

from .builders import BuildLimits, RefinementSchedule, straddle_chunks
from .errors import BuildError, NotLocallyConstant
from .models import SingularFunctionModel, increment, residual_estimate
from .sums import KahanAccumulator, basic_sum_sequence
from .verdicts import (
    Converged,
    ConvergenceVerdict,
    Inconclusive,
    SequenceClassifier,
    classify,
    verdict_to_json,
)

__all__ = [
    "VerificationRow",
    "TotalReport",
    "DecompositionReport",
    "ResidueReport",
    "total_kh",
    "plain_kh",
    "decompose",
    "residue_check",
    "classify",
]


@dataclass(frozen=True)
class _StraddleSums:
    riemann: float       # integrand(tag) * width over all pairs
    off_increments: float  # extended-F increments over off-anchor pairs
    pairs: int


def _straddle_sums(model, r, eps, limits, h=None) -> _StraddleSums:
    """Stream one straddle-verified build into its two sums."""
    xi = KahanAccumulator()
    off = KahanAccumulator()
    pairs = 0
    for item in straddle_chunks(model, model.span, r, eps, limits, h):
        if item[0] == "anchor":
            pairs += 1  # extended derivative vanishes at the anchor tag
        else:
            _, positions, f_tags, F_pos = item
            widths = np.diff(positions)
            xi.add(float(np.sum(f_tags * widths)))
            off.add(float(F_pos[-1] - F_pos[0]))  # run telescopes exactly
            pairs += len(f_tags)
    return _StraddleSums(riemann=xi.total, off_increments=off.total, pairs=pairs)


# ---------------------------------------------------------------------------
# Total integral
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationRow:
    epsilon: float
    residual: float | None
    bound: float
    pairs: int
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.residual is not None and self.residual <= self.bound

    def to_json(self) -> dict:
        doc = {
            "epsilon": self.epsilon,
            "residual": self.residual,
            "bound": self.bound,
            "pairs": self.pairs,
        }
        if self.error is not None:
            doc["error"] = self.error
        return doc


@dataclass(frozen=True)
class TotalReport:
    total: float
    rows: Tuple[VerificationRow, ...]
    verified: bool

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "verification": [row.to_json() for row in self.rows],
            "kh": None,
            "basic_sum": None,
            "residuals": {},
            "identity_gap": None,
        }


def total_kh(
    model: SingularFunctionModel,
    epsilons: Sequence[float] = (1e-2, 1e-3, 1e-4),
    r: float | None = None,
    limits: BuildLimits | None = None,
) -> TotalReport:
    """Total integral with per-tolerance verification rows.

    The value itself never depends on a partition: it is the telescoped
    endpoint difference of the extended function.  Each tolerance row builds
    a straddle-verified partition at fixed anchor radius and checks that the
    Riemann sum stays within eps*(span length) of the off-anchor increment
    sum.  A failed build marks its row and leaves the others standing.
    """
    if r is None:
        r = RefinementSchedule.for_model(model).r0
    limits = limits or BuildLimits()
    total = increment(model, model.span)
    rows = []
    for eps in epsilons:
        bound = eps * model.span.length
        try:
            sums = _straddle_sums(model, r, eps, limits)
        except BuildError as exc:
            rows.append(VerificationRow(eps, None, bound, getattr(exc, "pairs_built", 0),
                                        error=str(exc)))
            continue
        rows.append(VerificationRow(
            eps, abs(sums.riemann - sums.off_increments), bound, sums.pairs
        ))
    return TotalReport(total=total, rows=tuple(rows),
                       verified=bool(rows) and all(row.ok for row in rows))


# ---------------------------------------------------------------------------
# Plain integral
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SequenceRow:
    depth: int
    h: float
    r: float
    epsilon: float
    value: float


def _plain_kh_rows(model, schedule, max_depth, tol, div_threshold, limits):
    """Depth-indexed Riemann sums over shrinking straddle builds, classified
    incrementally so the ladder stops at the first verdict."""
    clf = SequenceClassifier(tol=tol, div_threshold=div_threshold)
    rows: list[SequenceRow] = []
    verdict = None
    diagnostic = None
    for n in range(max_depth + 1):
        step = schedule.at(n)
        try:
            sums = _straddle_sums(model, step.r, step.eps, limits, h=step.h)
        except BuildError as exc:
            diagnostic = f"build failed at depth {n}: {exc}"
            clf.note(diagnostic)
            break
        rows.append(SequenceRow(n, step.h, step.r, step.eps, sums.riemann))
        verdict = clf.push(n, sums.riemann)
        if verdict is not None:
            break
    if verdict is None:
        verdict = clf.finish()
    return rows, verdict, diagnostic


def plain_kh(
    model: SingularFunctionModel,
    schedule: RefinementSchedule | None = None,
    max_depth: int = 20,
    tol: float = 1e-6,
    div_threshold: float = 1e12,
    limits: BuildLimits | None = None,
) -> ConvergenceVerdict:
    """Ordinary gauge-integral estimate of the extended derivative.

    Converged means the Riemann sums settled to the integral's value;
    divergence and budget-limited inconclusiveness are honest outcomes (a
    build failure surfaces in the verdict's note, never as an exception).
    """
    schedule = schedule or RefinementSchedule.for_model(model)
    limits = limits or BuildLimits()
    _, verdict, _ = _plain_kh_rows(model, schedule, max_depth, tol, div_threshold, limits)
    return verdict


# ---------------------------------------------------------------------------
# Decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecompositionReport:
    total: float
    verification: TotalReport
    kh_verdict: ConvergenceVerdict
    basic_sum_verdict: ConvergenceVerdict
    residuals: Mapping[float, ConvergenceVerdict]
    identity_gap: float | None
    identity_tolerance: float
    residue_sum_gap: float | None
    lemma_consistent: bool
    kh_rows: Tuple[SequenceRow, ...] = ()
    bs_rows: Tuple[SequenceRow, ...] = ()
    build_diagnostic: str | None = None

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "verification": [row.to_json() for row in self.verification.rows],
            "kh": verdict_to_json(self.kh_verdict),
            "basic_sum": verdict_to_json(self.basic_sum_verdict),
            "residuals": {repr(e): verdict_to_json(v) for e, v in self.residuals.items()},
            "identity_gap": self.identity_gap,
        }


def decompose(
    model: SingularFunctionModel,
    epsilons: Sequence[float] = (1e-2, 1e-3, 1e-4),
    schedule: RefinementSchedule | None = None,
    max_depth: int = 20,
    tol: float = 1e-6,
    div_threshold: float = 1e12,
    limits: BuildLimits | None = None,
    anchor_r: float | None = None,
    residual_side_ratio: float = 1.0,
) -> DecompositionReport:
    """Full decomposition: total value, plain-integral verdict, basic-sum
    verdict, residual table, and the additivity identity check.

    The identity gap |total - (plain + basic sum)| is reported whenever both
    limits converge and is compared against the combined classifier tolerance
    (one tolerance per limit).  The residual-sum cross-check against the
    basic sum runs when every residual converges.  Builds that die at some
    depth truncate the plain-integral ladder and are recorded, never hidden.
    """
    schedule = schedule or RefinementSchedule.for_model(model)
    limits = limits or BuildLimits()

    total = increment(model, model.span)
    verification = total_kh(model, epsilons=epsilons, r=anchor_r, limits=limits)

    kh_rows, kh_verdict, diagnostic = _plain_kh_rows(
        model, schedule, max_depth, tol, div_threshold, limits
    )

    if len(model.E) > 0:
        bs_trace, bs_verdict = basic_sum_sequence(
            model, schedule, max_depth=max_depth, tol=tol, div_threshold=div_threshold
        )
    else:
        bs_trace, bs_verdict = ((0, 0.0),), Converged(value=0.0, error_estimate=0.0, depth=0)
    bs_rows = tuple(
        SequenceRow(n, schedule.at(n).h, schedule.at(n).r, schedule.at(n).eps, v)
        for n, v in bs_trace
    )

    residuals = {
        e: residual_estimate(
            model, e, schedule, max_depth=max_depth, tol=tol,
            div_threshold=div_threshold, side_ratio=residual_side_ratio,
        )
        for e in model.E
    }

    identity_gap = None
    if isinstance(kh_verdict, Converged) and isinstance(bs_verdict, Converged):
        identity_gap = abs(total - (kh_verdict.value + bs_verdict.value))

    residue_sum_gap = None
    if isinstance(bs_verdict, Converged) and residuals and all(
        isinstance(v, Converged) for v in residuals.values()
    ):
        acc = KahanAccumulator()
        for v in residuals.values():
            acc.add(v.value)
        residue_sum_gap = abs(acc.total - bs_verdict.value)

    one_sided = (
        isinstance(kh_verdict, Converged) != isinstance(bs_verdict, Converged)
        and not isinstance(kh_verdict, Inconclusive)
        and not isinstance(bs_verdict, Inconclusive)
    )

    return DecompositionReport(
        total=total,
        verification=verification,
        kh_verdict=kh_verdict,
        basic_sum_verdict=bs_verdict,
        residuals=residuals,
        identity_gap=identity_gap,
        identity_tolerance=2 * tol,
        residue_sum_gap=residue_sum_gap,
        lemma_consistent=not one_sided,
        kh_rows=tuple(kh_rows),
        bs_rows=bs_rows,
        build_diagnostic=diagnostic,
    )


# ---------------------------------------------------------------------------
# Residue theorem check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidueReport:
    lhs: float                      # F(b) - F(a)
    rhs: float | None               # sum of residuals, when all converge
    gap: float | None
    residuals: Mapping[float, ConvergenceVerdict]

    def to_json(self) -> dict:
        return {
            "total": self.lhs,
            "verification": [],
            "kh": None,
            "basic_sum": None,
            "residuals": {repr(e): verdict_to_json(v) for e, v in self.residuals.items()},
            "identity_gap": self.gap,
        }


def _sample_off_points(model: SingularFunctionModel, count: int) -> np.ndarray:
    """Stratified sample points between adjacent exceptional points (span
    endpoints included as strata walls), excluding the walls themselves."""
    walls = sorted({model.span.lo, model.span.hi, *model.E})
    gaps = list(zip(walls, walls[1:]))
    per_gap = max(1, -(-count // len(gaps)))
    xs = []
    for g0, g1 in gaps:
        xs.append(np.linspace(g0, g1, per_gap + 2)[1:-1])
    return np.concatenate(xs)


def residue_check(
    model: SingularFunctionModel,
    schedule: RefinementSchedule | None = None,
    max_depth: int = 20,
    tol: float = 1e-6,
    div_threshold: float = 1e12,
    samples: int = 256,
) -> ResidueReport:
    """Check F(b) - F(a) against the residual sum when f vanishes off E.

    The precondition (an identically zero derivative off the exceptional
    set) is undecidable for a black box; it is enforced by sampling
    ``samples`` stratified points and raising ``NotLocallyConstant`` on the
    first nonzero values found.
    """
    xs = _sample_off_points(model, samples)
    values = model.f_values(xs)
    nonzero = xs[values != 0.0]
    if nonzero.size:
        raise NotLocallyConstant(nonzero[:4].tolist())

    schedule = schedule or RefinementSchedule.for_model(model)
    lhs = float(model.F_values(np.asarray([model.span.hi]))[0]) - float(
        model.F_values(np.asarray([model.span.lo]))[0]
    )
    residuals = {
        e: residual_estimate(model, e, schedule, max_depth=max_depth, tol=tol,
                             div_threshold=div_threshold)
        for e in model.E
    }
    rhs = None
    gap = None
    if residuals and all(isinstance(v, Converged) for v in residuals.values()):
        acc = KahanAccumulator()
        for v in residuals.values():
            acc.add(v.value)
        rhs = acc.total
        gap = abs(lhs - rhs)
    return ResidueReport(lhs=lhs, rhs=rhs, gap=gap, residuals=residuals)
