"""Monte Carlo experiments on prequential and multivariate selection.

Every replication draws its own design and noise from a generator keyed by
``(seed, replication, stream)``, so results do not depend on the order in
which replications are run.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import HyvScoreError, InvalidInputError
from .linear_model import LinearModelSpec, RlsSweep, rls_sweep
from .selection import AlignmentPolicy, Mode, argmin_with_ties, head_score, run_multivariate

__all__ = [
    "Truth",
    "Candidate",
    "Scenario",
    "ScenarioResult",
    "GapStudy",
    "Regressor",
    "RateEstimate",
    "generate_data",
    "run_scenario",
    "estimate_rate",
    "aic_inconsistency_probability",
    "gap_multivariate_vs_prequential",
    "gap_unknown_vs_known",
    "DESIGN_STREAM",
    "NOISE_STREAM",
]

DESIGN_STREAM = 0
NOISE_STREAM = 1
MIN_RATE_N = 100


@dataclass(frozen=True)
class Truth:
    """Data-generating linear model.

    The design has an all-ones first column when ``intercept`` is set; every
    other column is i.i.d. standard normal. ``theta`` multiplies the first
    ``p`` columns.
    """

    p: int
    theta: tuple
    sigma_sq: float
    intercept: bool = True

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        if self.p < 0 or len(theta) != self.p:
            raise InvalidInputError(f"truth.theta must have length p={self.p}, got {len(theta)}")
        if not (self.sigma_sq > 0 and math.isfinite(self.sigma_sq)):
            raise InvalidInputError(f"truth.sigma_sq must be positive, got {self.sigma_sq}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma_sq", float(self.sigma_sq))

    @property
    def support(self) -> int:
        """Number of leading columns actually needed to express the mean."""
        nz = [j for j, t in enumerate(self.theta) if t != 0.0]
        return nz[-1] + 1 if nz else 0


@dataclass(frozen=True)
class Candidate:
    """A candidate model using the first ``p`` design columns.

    ``sigma_sq=None`` marks the variance as unknown.
    """

    name: str
    p: int
    sigma_sq: Optional[float] = None

    def __post_init__(self):
        if not self.name:
            raise InvalidInputError("candidate name must be non-empty")
        if self.p < 0:
            raise InvalidInputError(f"candidate {self.name}: p must be >= 0")
        if self.sigma_sq is not None:
            if not (self.sigma_sq > 0 and math.isfinite(self.sigma_sq)):
                raise InvalidInputError(f"candidate {self.name}: variance must be positive")
            object.__setattr__(self, "sigma_sq", float(self.sigma_sq))

    def contains(self, truth: Truth) -> bool:
        return self.p >= truth.support and (
            self.sigma_sq is None or self.sigma_sq == truth.sigma_sq
        )

    def model(self, X) -> LinearModelSpec:
        return LinearModelSpec(X[:, : self.p], self.sigma_sq, self.name)


@dataclass(frozen=True)
class Scenario:
    name: str
    truth: Truth
    candidates: tuple
    n_grid: tuple
    replications: int = 500
    seed: int = 0
    mode: Mode = Mode.PREQUENTIAL
    alignment: AlignmentPolicy = AlignmentPolicy.SKIP_HEAD
    reference: Optional[str] = None
    challenger: Optional[str] = None
    expected: Optional[str] = None

    def __post_init__(self):
        cands = tuple(self.candidates)
        if not cands:
            raise InvalidInputError("scenario needs at least one candidate")
        names = [c.name for c in cands]
        if len(set(names)) != len(names):
            raise InvalidInputError(f"duplicate candidate names: {names}")
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidInputError(f"n_grid must be strictly increasing positive integers, got {grid}")
        if self.replications < 1:
            raise InvalidInputError("replications must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise InvalidInputError("seed must be a 64-bit unsigned integer")
        mode = Mode(self.mode)
        if mode is Mode.HYBRID:
            mode = Mode.PREQUENTIAL
            object.__setattr__(self, "alignment", AlignmentPolicy.HYBRID_HEAD)
        for field_name in ("reference", "challenger", "expected"):
            v = getattr(self, field_name)
            if v is not None and v not in names:
                raise InvalidInputError(f"{field_name} '{v}' is not a candidate name")
        if grid[-1] <= self.width:
            raise InvalidInputError("largest checkpoint must exceed the design width")
        object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "alignment", AlignmentPolicy(self.alignment))

    @property
    def width(self) -> int:
        return max([self.truth.p] + [c.p for c in self.candidates])

    @property
    def n_max(self) -> int:
        return self.n_grid[-1]

    @property
    def names(self) -> tuple:
        return tuple(c.name for c in self.candidates)

    @property
    def reference_name(self) -> str:
        return self.reference or self.candidates[0].name

    @property
    def challenger_name(self) -> str:
        if self.challenger:
            return self.challenger
        others = [n for n in self.names if n != self.reference_name]
        return others[0] if others else self.reference_name

    def correct_name(self) -> Optional[str]:
        """The simplest candidate containing the truth (or the declared one)."""
        if self.expected:
            return self.expected
        ok = [(c.p, c.sigma_sq is None, j) for j, c in enumerate(self.candidates) if c.contains(self.truth)]
        if not ok:
            return None
        return self.candidates[min(ok)[2]].name


def _generator(seed: int, rep: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(rep, stream))
    return np.random.Generator(np.random.PCG64(ss))


def generate_data(scenario: Scenario, rep: int, n: Optional[int] = None):
    """Design matrix (n x width) and response for one replication."""
    n = scenario.n_max if n is None else int(n)
    truth, width = scenario.truth, scenario.width
    X = np.empty((n, width))
    start = 0
    if truth.intercept and width:
        X[:, 0] = 1.0
        start = 1
    if width > start:
        X[:, start:] = _generator(scenario.seed, rep, DESIGN_STREAM).standard_normal((n, width - start))
    noise = _generator(scenario.seed, rep, NOISE_STREAM).standard_normal(n)
    y = X[:, : truth.p] @ np.asarray(truth.theta) + math.sqrt(truth.sigma_sq) * noise
    return X, y


def _checkpoint_scores(sweep: RlsSweep, model: LinearModelSpec, n_grid, mode, alignment, p_max, any_unknown):
    """Cumulative score of one model at each checkpoint; NaN where infeasible."""
    out = np.full(len(n_grid), np.nan)
    reasons = {}
    p = model.p
    if mode is Mode.MULTIVARIATE:
        for c, n in enumerate(n_grid):
            nu = n - p
            if nu < 1 or (not model.variance_known and nu <= 4):
                reasons[c] = f"nu={nu} too small for the multivariate score"
                continue
            rss = float(sweep.rss[nu - 1])
            if model.variance_known:
                s2 = model.sigma_sq
                out[c] = (rss - 2.0 * nu * s2) / (s2 * s2)
            elif rss > 0:
                out[c] = -(nu - 4) * nu / rss
            else:
                reasons[c] = "RSS is zero"
        return out, reasons
    need = p_max + (2 if any_unknown else 0)
    off = p_max - p
    try:
        inc = sweep.incremental_scores(model.sigma_sq)[off:]
        head = head_score(sweep, model, p_max) if alignment is AlignmentPolicy.HYBRID_HEAD else 0.0
    except HyvScoreError as exc:
        return out, {c: str(exc) for c in range(len(n_grid))}
    cum = np.cumsum(inc) + head
    for c, n in enumerate(n_grid):
        if n <= need:
            reasons[c] = f"n={n} does not exceed {need}"
            continue
        out[c] = cum[n - p_max - 1]
    return out, reasons


@dataclass
class ScenarioResult:
    """Per-replication, per-checkpoint outcomes of a scenario.

    ``scores`` has shape (R, C, M) for R replications, C checkpoints and M
    candidates; ``chosen`` holds candidate indices (-1 when nothing was
    feasible) and ``gaps`` the challenger-minus-reference score.
    """

    scenario: Scenario
    scores: np.ndarray
    chosen: np.ndarray
    gaps: np.ndarray
    infeasible: dict = field(default_factory=dict)

    @property
    def n_grid(self) -> np.ndarray:
        return np.asarray(self.scenario.n_grid)

    @property
    def model_ids(self) -> tuple:
        return self.scenario.names

    def mean_gap(self) -> np.ndarray:
        return self.gaps.mean(axis=0)

    def stderr_gap(self) -> np.ndarray:
        R = self.gaps.shape[0]
        if R < 2:
            return np.zeros(self.gaps.shape[1])
        return self.gaps.std(axis=0, ddof=1) / math.sqrt(R)

    def frac_chosen(self, name: str) -> np.ndarray:
        j = self.model_ids.index(name)
        return (self.chosen == j).mean(axis=0)

    def frac_correct(self) -> np.ndarray:
        name = self.scenario.correct_name()
        if name is None:
            return np.full(len(self.n_grid), np.nan)
        return self.frac_chosen(name)

    def rate(self, regressor="log_n", min_n: int = MIN_RATE_N) -> "RateEstimate":
        return estimate_rate(self.n_grid, self.mean_gap(), regressor, min_n=min_n)


def run_scenario(scenario: Scenario) -> ScenarioResult:
    names = scenario.names
    R, C, M = scenario.replications, len(scenario.n_grid), len(names)
    p_max = max(c.p for c in scenario.candidates)
    any_unknown = any(c.sigma_sq is None for c in scenario.candidates)
    scores = np.full((R, C, M), np.nan)
    infeasible = {}
    for r in range(R):
        X, y = generate_data(scenario, r)
        for j, cand in enumerate(scenario.candidates):
            try:
                model = cand.model(X)
                sweep = rls_sweep(y, model)
            except HyvScoreError as exc:
                for c, n in enumerate(scenario.n_grid):
                    infeasible[(r, n, cand.name)] = str(exc)
                continue
            row, reasons = _checkpoint_scores(
                sweep, model, scenario.n_grid, scenario.mode, scenario.alignment, p_max, any_unknown
            )
            scores[r, :, j] = row
            for c, why in reasons.items():
                infeasible[(r, scenario.n_grid[c], cand.name)] = why
    chosen = np.full((R, C), -1, dtype=int)
    for r in range(R):
        for c in range(C):
            if np.isfinite(scores[r, c]).any():
                chosen[r, c] = argmin_with_ties(scores[r, c])
    a = names.index(scenario.challenger_name)
    b = names.index(scenario.reference_name)
    gaps = scores[:, :, a] - scores[:, :, b]
    return ScenarioResult(scenario, scores, chosen, gaps, infeasible)


class Regressor(str, enum.Enum):
    LOG_N = "log_n"
    N = "n"


@dataclass(frozen=True)
class RateEstimate:
    slope: float
    intercept: float
    r_squared: float
    regressor: Regressor


def estimate_rate(n_values, mean_gaps, regressor="log_n", min_n: int = 0) -> RateEstimate:
    """Least-squares line through ``(log n or n, mean gap)``.

    Checkpoints below ``min_n`` are dropped first; at least four must remain.
    """
    regressor = Regressor(regressor)
    n_values = np.asarray(n_values, dtype=float)
    g = np.asarray(mean_gaps, dtype=float)
    keep = n_values >= min_n
    n_values, g = n_values[keep], g[keep]
    if n_values.size < 4:
        raise InvalidInputError(f"need at least 4 checkpoints, got {n_values.size}")
    if not np.all(np.isfinite(g)):
        raise InvalidInputError("gaps contain non-finite values")
    x = np.log(n_values) if regressor is Regressor.LOG_N else n_values
    xc = x - x.mean()
    slope = float(xc @ (g - g.mean()) / (xc @ xc))
    intercept = float(g.mean() - slope * x.mean())
    resid = g - (intercept + slope * x)
    ss_tot = float(((g - g.mean()) ** 2).sum())
    ss_res = float(resid @ resid)
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return RateEstimate(slope, intercept, r2, regressor)


def aic_inconsistency_probability(n: int, R: int, seed: int, variance: str = "known") -> float:
    """Fraction of replications in which the multivariate score prefers the
    intercept model when the data are i.i.d. N(0, 1).

    With ``variance="known"`` both models use sigma^2 = 1 (the AIC case); with
    ``"unknown"`` the variance-free score, i.e. the J criterion, is used.
    """
    if R < 1000:
        raise InvalidInputError("need at least 1000 replications")
    if variance not in ("known", "unknown"):
        raise InvalidInputError(f"variance must be 'known' or 'unknown', got {variance!r}")
    s2 = 1.0 if variance == "known" else None
    m1 = LinearModelSpec.null(n, s2, "M1")
    m2 = LinearModelSpec.intercept_only(n, s2, "M2")
    wrong = 0
    for r in range(R):
        y = _generator(seed, r, NOISE_STREAM).standard_normal(n)
        if run_multivariate(y, [m1, m2]).chosen == "M2":
            wrong += 1
    return wrong / R


@dataclass
class GapStudy:
    """Per-replication score differences at each checkpoint for one model."""

    n_grid: np.ndarray
    gaps: np.ndarray
    target_slope: float

    def mean(self) -> np.ndarray:
        return self.gaps.mean(axis=0)

    def stderr(self) -> np.ndarray:
        R = self.gaps.shape[0]
        return self.gaps.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(len(self.n_grid))

    def rate(self, min_n: int = MIN_RATE_N) -> RateEstimate:
        return estimate_rate(self.n_grid, self.mean(), Regressor.LOG_N, min_n=min_n)

    def growth_spread(self) -> np.ndarray:
        """Std. dev. across replications of the gap accrued since the first checkpoint."""
        d = self.gaps[:, 1:] - self.gaps[:, :1]
        return d.std(axis=0, ddof=1)


def _pick_candidate(scenario, model):
    if model is None:
        return scenario.candidates[0]
    if isinstance(model, int):
        return scenario.candidates[model]
    return scenario.candidates[scenario.names.index(model)]


def _check_grid(scenario, p, extra=0):
    if scenario.n_grid[0] <= p + extra:
        raise InvalidInputError(f"every checkpoint must exceed {p + extra}")


def gap_multivariate_vs_prequential(scenario: Scenario, model=None) -> GapStudy:
    """Cumulative prequential score (over i > p) minus multivariate score.

    Computed as ``sum((1/k_i^2 - 1) T_i) / sigma^2`` with ``T_i = Z_i^2/sigma^2 - 2``,
    which equals the difference of the two scores term by term. Expected to grow like ``p log(n) / sigma^2`` when the model is true.
    """
    cand = _pick_candidate(scenario, model)
    if cand.sigma_sq is None:
        raise InvalidInputError("needs a known-variance candidate")
    p, s2 = cand.p, cand.sigma_sq
    _check_grid(scenario, p)
    idx = np.asarray(scenario.n_grid) - p - 1
    out = np.empty((scenario.replications, len(scenario.n_grid)))
    for r in range(scenario.replications):
        X, y = generate_data(scenario, r)
        sweep = rls_sweep(y, cand.model(X))
        # summing the per-step differences avoids cancelling two O(n) totals,
        # and is exactly zero when every k^2 is one
        t = sweep.z * sweep.z / s2 - 2.0
        out[r] = np.cumsum((1.0 / sweep.k_sq - 1.0) * t)[idx] / s2
    return GapStudy(np.asarray(scenario.n_grid), out, p / s2)


def gap_unknown_vs_known(scenario: Scenario, model=None) -> GapStudy:
    """Prequential score with the variance unknown minus the same with it known.

    The known-variance version uses the true sigma^2; both sum over i > p.
    Expected growth is ``2 log(n) / sigma^2``.
    """
    cand = _pick_candidate(scenario, model)
    p, s2 = cand.p, scenario.truth.sigma_sq
    _check_grid(scenario, p, 2)
    idx = np.asarray(scenario.n_grid) - p - 1
    out = np.empty((scenario.replications, len(scenario.n_grid)))
    for r in range(scenario.replications):
        X, y = generate_data(scenario, r)
        sweep = rls_sweep(y, LinearModelSpec(X[:, :p], None, cand.name))
        d = sweep.incremental_scores(None) - sweep.incremental_scores(s2)
        out[r] = np.cumsum(d)[idx]
    return GapStudy(np.asarray(scenario.n_grid), out, 2.0 / s2)
