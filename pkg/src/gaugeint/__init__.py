"""Numerical gauge-integration toolkit.

Total Kurzweil-Henstock integrals of functions with finitely many singular
or exceptional points, verification of the endpoint-difference identity,
and residue extraction at discontinuities.
"""

from .builders import (
    BuildLimits,
    RefinementSchedule,
    ScheduleStep,
    build_anchored,
    build_cousin,
    build_straddle_verified,
    schedule_at,
)
from .catalog import CATALOG_NAMES, CatalogEntry, catalog, catalog_entry
from .dsl import UNDEFINED, CompiledFunction, FunctionDef, ParseError, evaluate, parse, render
from .errors import (
    AnchorOverlapError,
    BudgetExceeded,
    BuildError,
    EvaluationError,
    GaugeIntError,
    NotLocallyConstant,
    StraddleFailure,
)
from .integrate import (
    DecompositionReport,
    ResidueReport,
    TotalReport,
    VerificationRow,
    decompose,
    plain_kh,
    residue_check,
    total_kh,
)
from .models import (
    ExceptionalSet,
    ResidualVerdict,
    SingularFunctionModel,
    consistency_check,
    evaluate_extended,
    increment,
    residual_estimate,
)
from .partition import (
    Gauge,
    GaugeDescriptor,
    Interval,
    TaggedPair,
    TaggedPartition,
    ValidationReport,
    Violation,
    anchored_gauge,
    is_fine,
    partition_to_csv,
    restrict,
    validate,
)
from .sums import KahanAccumulator, SumBreakdown, basic_sum_sequence, increment_sum, riemann_sum
from .verdicts import Converged, ConvergenceVerdict, Diverged, Inconclusive, classify

__version__ = "0.1.0"
