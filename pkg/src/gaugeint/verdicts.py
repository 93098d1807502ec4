"""Uniform classification of limit sequences: converged, diverged, or neither.

Every limit process in the toolkit (plain integral estimates, basic sums,
residuals) produces a depth-indexed sequence of values.  The classifier turns
such a sequence into a single verdict:

* ``Converged`` -- the last three consecutive deltas ``|s_n - s_{n-1}|`` all
  fell within tolerance; the value is the last sequence element.
* ``Diverged`` -- ``|s_n|`` exceeded the divergence threshold while strictly
  increasing in magnitude over the last five depths.
* ``Inconclusive`` -- neither rule fired before the sequence ran out; the
  verdict carries the full trace for inspection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple, Union

CONVERGE_RUN = 3
DIVERGE_RUN = 5


@dataclass(frozen=True)
class Converged:
    value: float
    error_estimate: float
    depth: int

    kind = "converged"

    def to_json(self) -> dict:
        return {
            "kind": "converged",
            "value": self.value,
            "error_estimate": self.error_estimate,
            "depth": self.depth,
        }

    def describe(self) -> str:
        return f"converged({self.value:.6g} +/- {self.error_estimate:.2g} at depth {self.depth})"


@dataclass(frozen=True)
class Diverged:
    sign: int  # +1 or -1

    kind = "diverged"

    def to_json(self) -> dict:
        return {"kind": "diverged", "sign": self.sign}

    def describe(self) -> str:
        return f"diverged({'+' if self.sign > 0 else '-'})"


@dataclass(frozen=True)
class Inconclusive:
    trace: Tuple[Tuple[int, float], ...]
    note: str = ""

    kind = "inconclusive"

    def to_json(self) -> dict:
        doc = {"kind": "inconclusive", "trace": [[d, v] for d, v in self.trace]}
        if self.note:
            doc["note"] = self.note
        return doc

    def describe(self) -> str:
        msg = f"inconclusive after {len(self.trace)} depths"
        if self.note:
            msg += f" ({self.note})"
        return msg


ConvergenceVerdict = Union[Converged, Diverged, Inconclusive]


class SequenceClassifier:
    """Incremental form of :func:`classify`; lets drivers stop early.

    Push ``(depth, value)`` pairs in order.  ``push`` returns a verdict as
    soon as one of the rules fires, else ``None``.  Call ``finish`` when no
    more depths will be produced.
    """

    def __init__(self, tol: float, div_threshold: float):
        if tol <= 0:
            raise ValueError("tol must be positive")
        if div_threshold <= 0:
            raise ValueError("div_threshold must be positive")
        self.tol = tol
        self.div_threshold = div_threshold
        self.trace: list[tuple[int, float]] = []
        self._deltas: list[float] = []
        self._note = ""

    def push(self, depth: int, value: float) -> ConvergenceVerdict | None:
        if self.trace:
            self._deltas.append(abs(value - self.trace[-1][1]))
        self.trace.append((depth, float(value)))

        if len(self._deltas) >= CONVERGE_RUN and all(
            d <= self.tol for d in self._deltas[-CONVERGE_RUN:]
        ):
            return Converged(
                value=float(value),
                error_estimate=max(self._deltas[-CONVERGE_RUN:]),
                depth=depth,
            )

        mags = [abs(v) for _, v in self.trace[-DIVERGE_RUN:]]
        if (
            len(mags) == DIVERGE_RUN
            and abs(value) > self.div_threshold
            and all(a < b for a, b in zip(mags, mags[1:]))
        ):
            return Diverged(sign=1 if value > 0 else -1)
        return None

    def note(self, text: str) -> None:
        self._note = text

    def finish(self) -> ConvergenceVerdict:
        return Inconclusive(trace=tuple(self.trace), note=self._note)


def classify(
    sequence: Sequence[Tuple[int, float]],
    tol: float,
    div_threshold: float,
) -> ConvergenceVerdict:
    """Classify a complete depth/value sequence.

    The verdict fires at the earliest depth where its rule is satisfied;
    trailing elements never un-fire an earlier verdict.
    """
    if not sequence:
        raise ValueError("cannot classify an empty sequence")
    clf = SequenceClassifier(tol=tol, div_threshold=div_threshold)
    for depth, value in sequence:
        verdict = clf.push(depth, value)
        if verdict is not None:
            return verdict
    return clf.finish()


def verdict_to_json(verdict: ConvergenceVerdict | None) -> dict | None:
    return None if verdict is None else verdict.to_json()
