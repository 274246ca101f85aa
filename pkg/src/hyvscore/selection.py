"""Score traces and model choice across a set of candidate linear models."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import HyvScoreError, InsufficientDataError, InvalidInputError
from .linear_model import (
    LinearModelSpec,
    multivariate_score_known,
    multivariate_score_unknown,
    rls_sweep,
)

__all__ = [
    "Mode",
    "AlignmentPolicy",
    "ScoreTrace",
    "SelectionResult",
    "argmin_with_ties",
    "run_multivariate",
    "run_prequential",
    "score_gap_trace",
    "head_score",
]

TIE_RTOL = 1e-12


class Mode(str, enum.Enum):
    MULTIVARIATE = "multivariate"
    PREQUENTIAL = "prequential"
    HYBRID = "hybrid"


class AlignmentPolicy(str, enum.Enum):
    """How models of different dimension are put on a common index set.

    SKIP_HEAD scores only observations beyond the largest model dimension;
    HYBRID_HEAD additionally adds each model's multivariate score on that
    initial block.
    """

    SKIP_HEAD = "skip_head"
    HYBRID_HEAD = "hybrid_head"


@dataclass(frozen=True)
class ScoreTrace:
    model_id: str
    mode: Mode
    index: np.ndarray
    increments: np.ndarray
    cumulative: np.ndarray
    head_score: Optional[float] = None

    @property
    def final(self) -> float:
        return float(self.cumulative[-1])


@dataclass(frozen=True)
class SelectionResult:
    chosen: str
    final_scores: dict
    traces: dict
    infeasible: dict = field(default_factory=dict)


def argmin_with_ties(scores: Sequence[float]) -> int:
    """Index of the smallest score; near-ties go to the earliest entry."""
    scores = np.asarray(scores, dtype=float)
    ok = np.isfinite(scores)
    if not ok.any():
        raise InsufficientDataError("no feasible model to choose from")
    best = scores[ok].min()
    tol = TIE_RTOL * max(abs(best), 1e-300)
    for j, s in enumerate(scores):
        if ok[j] and s - best <= tol:
            return j
    raise AssertionError("unreachable")


def _model_ids(models):
    ids = [m.name or f"M{j + 1}" for j, m in enumerate(models)]
    if len(set(ids)) != len(ids):
        raise InvalidInputError(f"duplicate model ids: {ids}")
    return ids


def _select(ids, scores, traces, infeasible):
    finals = {mid: scores[mid] for mid in ids if mid in scores}
    vec = [scores.get(mid, np.nan) for mid in ids]
    chosen = ids[argmin_with_ties(vec)]
    return SelectionResult(chosen, finals, traces, infeasible)


def run_multivariate(y, models: Sequence[LinearModelSpec]) -> SelectionResult:
    """Score each model once on the whole data vector and pick the smallest.

    Unknown-variance models need ``nu > 4``: below that the score no longer
    orders models the way ``J = s^2 / (nu - 4)`` does, so they are reported
    as infeasible.
    """
    if not models:
        raise InvalidInputError("no candidate models")
    y = np.asarray(y, dtype=float).ravel()
    ids = _model_ids(models)
    scores, traces, infeasible = {}, {}, {}
    for mid, model in zip(ids, models):
        try:
            if model.variance_known:
                s = multivariate_score_known(y, model)
            else:
                if model.nu <= 4:
                    raise InsufficientDataError(f"unknown-variance score needs nu > 4, got nu={model.nu}")
                s = multivariate_score_unknown(y, model)
        except HyvScoreError as exc:
            infeasible[mid] = str(exc)
            continue
        scores[mid] = s
        idx = np.array([model.n])
        traces[mid] = ScoreTrace(mid, Mode.MULTIVARIATE, idx, np.array([s]), np.array([s]))
    return _select(ids, scores, traces, infeasible)


def head_score(sweep, model: LinearModelSpec, m: int) -> float:
    """Multivariate score of ``model`` on the first ``m`` observations.

    Uses the residual sums already accumulated by ``sweep``. When ``m``
    equals the model dimension the residual space is empty and the score
    is zero.
    """
    nu = m - model.p
    if nu < 0:
        raise InsufficientDataError(f"head block of {m} is shorter than p={model.p}")
    if nu == 0:
        return 0.0
    rss = float(sweep.rss[nu - 1])
    if model.variance_known:
        s2 = model.sigma_sq
        return (rss - 2.0 * nu * s2) / (s2 * s2)
    if rss <= 0.0:
        raise InsufficientDataError("head block fitted exactly; unknown-variance score undefined")
    return -(nu - 4) * nu / rss


def run_prequential(
    y,
    models: Sequence[LinearModelSpec],
    align: AlignmentPolicy = AlignmentPolicy.SKIP_HEAD,
) -> SelectionResult:
    """Cumulate one-step-ahead Hyvarinen scores over a shared index set."""
    if not models:
        raise InvalidInputError("no candidate models")
    align = AlignmentPolicy(align)
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    p_max = max(m.p for m in models)
    need = p_max + (2 if any(not m.variance_known for m in models) else 0)
    if n <= need:
        raise InsufficientDataError(f"need n > {need} observations, got {n}")
    ids = _model_ids(models)
    mode = Mode.HYBRID if align is AlignmentPolicy.HYBRID_HEAD else Mode.PREQUENTIAL
    scores, traces, infeasible = {}, {}, {}
    for mid, model in zip(ids, models):
        if model.n != n:
            raise InvalidInputError(f"model {mid} has {model.n} rows, data has {n}")
        try:
            sweep = rls_sweep(y, model)
            off = p_max - model.p
            inc = sweep.incremental_scores(model.sigma_sq)[off:]
            head = head_score(sweep, model, p_max) if mode is Mode.HYBRID else None
        except HyvScoreError as exc:
            infeasible[mid] = str(exc)
            continue
        cum = np.cumsum(inc) + (head or 0.0)
        traces[mid] = ScoreTrace(mid, mode, sweep.index[off:], inc, cum, head)
        scores[mid] = float(cum[-1])
    return _select(ids, scores, traces, infeasible)


def score_gap_trace(a: ScoreTrace, b: ScoreTrace) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise ``a.cumulative - b.cumulative`` over their shared indices."""
    if a.index.shape != b.index.shape or not np.array_equal(a.index, b.index):
        raise InvalidInputError("traces are not over the same index set")
    return a.index.copy(), a.cumulative - b.cumulative
