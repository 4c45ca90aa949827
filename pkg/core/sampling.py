#!/usr/bin/env python3
"""
Randomized sparsification: categorical draws of decomposition members,
empirical averages and Monte Carlo error estimates.

Every random quantity is derived from an integer master seed. Replicate
(or attempt) ``r`` runs on its own generator seeded with
``derive_seed(master, r)``, so results do not depend on execution order.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from core.decompositions import (
    ContactPairDecomposition,
    Guarantees,
    PsdDecomposition,
    extract_guarantees,
    lift_pairs,
)
from core.linalg import effective_p, operator_norm, psd_sqrt_schatten, schatten_norm
from core.multiset import Multiset
from utils.logger import get_logger

logger = get_logger(__name__)

RNG_NAME = "PCG64"
DEFAULT_REPLICATES = 200
DEFAULT_Z = 1.96

__all__ = [
    "Multiset", "RNG_NAME", "ExperimentReport", "SearchResult", "NonsymmetricSearchResult",
    "SymmetrizationCheck", "ScalingFit", "derive_seed", "make_rng", "draw_multiset",
    "sample_error", "rudelson_experiment", "find_good_multiset", "nonsymm_find_multiset",
    "lust_piquard_diagnostic", "symmetrization_check", "scaling_fit", "summarize_errors",
]


def derive_seed(master: int, stream: int) -> int:
    """64-bit seed of stream ``stream`` under ``master`` (SeedSequence hashing)."""
    state = np.random.SeedSequence([int(master), int(stream)]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def make_rng(seed: int) -> np.random.Generator:
    """The named generator used for every draw."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def _probabilities(weights) -> np.ndarray:
    p = np.asarray(weights, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("weights must be a non-empty 1-D array")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("weights must be finite and non-negative")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights must form a probability vector, they sum to {total!r}")
    return p / total


def draw_multiset(weights, k: int, rng: np.random.Generator) -> Multiset:
    """k independent categorical draws from ``weights``."""
    if k < 1:
        raise ValueError(f"sample size k must be >= 1, got {k}")
    p = _probabilities(weights)
    return Multiset.from_counts(rng.multinomial(k, p))


def _average(dec: PsdDecomposition, sigma: Multiset) -> np.ndarray:
    if not sigma:
        raise ValueError("sample error of an empty multiset is undefined")
    counts = sigma.counts(dec.count).astype(np.float64)
    return np.tensordot(counts / counts.sum(), dec.matrices, axes=1)


def sample_error(dec: PsdDecomposition, sigma: Multiset) -> float:
    """||(1/|sigma|) sum_{i in sigma} Q_i - A||."""
    return operator_norm(_average(dec, sigma) - dec.target)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def summarize_errors(errors: Sequence[float], z: float = DEFAULT_Z) -> Dict[str, float]:
    """Mean, sample standard deviation and normal-approximation CI."""
    values = np.asarray(errors, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot summarise an empty error list")
    mean = float(values.mean())
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    half = z * std / math.sqrt(values.size)
    return {"mean": mean, "std": std, "ci_low": mean - half, "ci_high": mean + half}


@dataclass
class ExperimentReport:
    """Per-replicate errors of a Monte Carlo run with summary statistics."""
    params: Dict[str, Any]
    seeds: List[int]
    errors: List[float]
    mean: float
    std: float
    ci_low: float
    ci_high: float

    @property
    def replicates(self) -> int:
        return len(self.errors)

    @classmethod
    def from_errors(cls, params: Dict[str, Any], seeds: List[int], errors: List[float],
                    z: float = DEFAULT_Z) -> "ExperimentReport":
        stats = summarize_errors(errors, z)
        return cls(params=dict(params), seeds=list(seeds), errors=[float(e) for e in errors], **stats)

    def quantile(self, q: float) -> float:
        return float(np.quantile(np.asarray(self.errors), q))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": dict(self.params),
            "replicates": self.replicates,
            "mean": self.mean,
            "std": self.std,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "seeds": list(self.seeds),
            "errors": list(self.errors),
        }

    def csv_rows(self) -> List[List[Any]]:
        return [[r, seed, err] for r, (seed, err) in enumerate(zip(self.seeds, self.errors))]


def _run_replicates(task, seeds: List[int], workers: int) -> List[float]:
    if workers <= 1:
        return [task(seed) for seed in seeds]
    # map() yields in submission order, so aggregation stays sorted by replicate
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, seeds))


def rudelson_experiment(dec: PsdDecomposition, k: int, replicates: int = DEFAULT_REPLICATES,
                        seed: int = 0, z: float = DEFAULT_Z, workers: int = 1,
                        eps: Optional[float] = None) -> ExperimentReport:
    """Monte Carlo estimate of E||(1/k) sum Q_i - A|| over ``replicates`` independent samples."""
    if k < 1:
        raise ValueError(f"sample size k must be >= 1, got {k}")
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")

    def task(replicate_seed: int) -> float:
        return sample_error(dec, draw_multiset(dec.weights, k, make_rng(replicate_seed)))

    seeds = [derive_seed(seed, r) for r in range(replicates)]
    errors = _run_replicates(task, seeds, workers)
    params = {"d": dec.dim, "k": k, "eps": eps, "replicates": replicates, "seed": seed, "rng": RNG_NAME}
    report = ExperimentReport.from_errors(params, seeds, errors, z)
    logger.debug(f"rudelson d={dec.dim} k={k}: mean={report.mean:.4g} +/- {report.ci_high - report.mean:.2g}")
    return report


# ---------------------------------------------------------------------------
# Searches
# ---------------------------------------------------------------------------

@dataclass
class SearchResult:
    """Outcome of repeated sampling; failure is a value, not an exception."""
    success: bool
    attempts: int
    multiset: Optional[Multiset]
    error: Optional[float]
    best_multiset: Multiset
    best_error: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "success": self.success,
            "attempts": self.attempts,
            "multiset": self.multiset.to_dict() if self.multiset is not None else None,
            "error": self.error,
            "best_multiset": self.best_multiset.to_dict(),
            "best_error": self.best_error,
        }


def find_good_multiset(dec: PsdDecomposition, k: int, eps: float, max_attempts: int = 100,
                       seed: int = 0) -> SearchResult:
    """First sampled multiset of size k whose error is at most ``eps``."""
    if k < 1:
        raise ValueError(f"sample size k must be >= 1, got {k}")
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")

    best: Optional[Multiset] = None
    best_error = math.inf
    for attempt in range(max_attempts):
        sigma = draw_multiset(dec.weights, k, make_rng(derive_seed(seed, attempt)))
        err = sample_error(dec, sigma)
        if err < best_error:
            best, best_error = sigma, err
        if err <= eps:
            logger.debug(f"found multiset of size {k} with error {err:.4g} on attempt {attempt + 1}")
            return SearchResult(True, attempt + 1, sigma, err, sigma, err)
    logger.info(f"no multiset of size {k} within eps={eps} after {max_attempts} attempts (best {best_error:.4g})")
    return SearchResult(False, max_attempts, None, None, best, best_error)


@dataclass
class NonsymmetricSearchResult:
    """Search over lifted contact pairs plus the guarantees read off the winner."""
    success: bool
    attempts: int
    multiset: Optional[Multiset]
    guarantees: Optional[Guarantees]
    best_multiset: Multiset
    best_guarantees: Guarantees
    eps: float
    dim: int

    @property
    def within_bounds(self) -> bool:
        if self.guarantees is None:
            return False
        g = self.guarantees
        slack = 1e-12
        bal_limit = self.eps / math.sqrt(self.dim) + slack
        return g.err_a <= self.eps + slack and g.bal_u <= bal_limit and g.bal_v <= bal_limit

    def to_dict(self) -> Dict[str, Any]:
        return {
            "success": self.success,
            "attempts": self.attempts,
            "eps": self.eps,
            "dim": self.dim,
            "multiset": self.multiset.to_dict() if self.multiset is not None else None,
            "guarantees": self.guarantees._asdict() if self.guarantees is not None else None,
            "within_bounds": self.within_bounds,
            "best_multiset": self.best_multiset.to_dict(),
            "best_guarantees": self.best_guarantees._asdict(),
        }


def nonsymm_find_multiset(cpd: ContactPairDecomposition, k: int, eps: float, max_attempts: int = 100,
                          seed: int = 0, tol: float = 1e-9) -> NonsymmetricSearchResult:
    """Sample lifted pairs in dimension d+1 until the lifted error is at most ``eps``."""
    if k < 1:
        raise ValueError(f"sample size k must be >= 1, got {k}")
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")
    lifted = lift_pairs(cpd, tol)
    d = cpd.dim

    best: Optional[Multiset] = None
    best_g: Optional[Guarantees] = None
    for attempt in range(max_attempts):
        sigma = draw_multiset(lifted.weights, k, make_rng(derive_seed(seed, attempt)))
        g = extract_guarantees(lifted, sigma, d)
        if best_g is None or g.lifted_error < best_g.lifted_error:
            best, best_g = sigma, g
        if g.lifted_error <= eps:
            return NonsymmetricSearchResult(True, attempt + 1, sigma, g, sigma, g, eps, d)
    logger.info(f"lifted search failed after {max_attempts} attempts (best lifted error {best_g.lifted_error:.4g})")
    return NonsymmetricSearchResult(False, max_attempts, None, None, best, best_g, eps, d)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def lust_piquard_diagnostic(matrices, p: Optional[float] = None, trials: int = 200, seed: int = 0) -> float:
    """
    Empirical ratio [E_r ||sum r_j Q_j||_{S_p}^p]^{1/p} /
    (sqrt(p) ||(sum Q_j Q_j^T + Q_j^T Q_j)^{1/2}||_{S_p}).

    ``p`` defaults to max(2, ln d).
    """
    q = np.asarray(matrices, dtype=np.float64)
    if q.ndim == 2:
        q = q[None, :, :]
    if q.ndim != 3 or q.shape[0] < 1:
        raise ValueError("need at least one square matrix")
    p = effective_p(q.shape[1]) if p is None else float(p)
    if p < 2:
        raise ValueError(f"the Rademacher moment inequality needs p >= 2, got p={p}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    qt = np.transpose(q, (0, 2, 1))
    core = np.sum(q @ qt + qt @ q, axis=0)
    denominator = math.sqrt(p) * psd_sqrt_schatten(core, p)
    if denominator == 0.0:
        raise ValueError("all matrices are zero: the diagnostic ratio is 0/0")

    rng = make_rng(seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(trials, q.shape[0]))
    values = np.array([schatten_norm(np.tensordot(r, q, axes=1), p) for r in signs])
    top = float(values.max())
    if top == 0.0:
        return 0.0
    numerator = top * float(np.mean((values / top) ** p)) ** (1.0 / p)
    return numerator / denominator


@dataclass
class SymmetrizationCheck:
    """Both sides of the Rademacher symmetrization bound, estimated on the same draws."""
    lhs: float
    rhs: float
    stderr: float
    replicates: int

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 3.0 * self.stderr

    def to_dict(self) -> Dict[str, Any]:
        return {"lhs": self.lhs, "rhs": self.rhs, "stderr": self.stderr,
                "replicates": self.replicates, "holds": self.holds}


def symmetrization_check(dec: PsdDecomposition, k: int, replicates: int = DEFAULT_REPLICATES,
                         seed: int = 0) -> SymmetrizationCheck:
    """E||(1/k) sum q_l - q|| against (2/k) E||sum r_l q_l||."""
    if k < 1 or replicates < 1:
        raise ValueError(f"need k >= 1 and replicates >= 1, got k={k}, replicates={replicates}")
    lhs = np.empty(replicates)
    rhs = np.empty(replicates)
    for r in range(replicates):
        rng = make_rng(derive_seed(seed, r))
        sigma = draw_multiset(dec.weights, k, rng)
        counts = sigma.counts(dec.count)
        lhs[r] = sample_error(dec, sigma)
        # sum of c_i independent signs is 2 Bin(c_i, 1/2) - c_i
        net = 2.0 * rng.binomial(counts, 0.5) - counts
        rhs[r] = 2.0 / k * operator_norm(np.tensordot(net, dec.matrices, axes=1))
    var = (lhs.var(ddof=1) + rhs.var(ddof=1)) / replicates if replicates > 1 else 0.0
    return SymmetrizationCheck(float(lhs.mean()), float(rhs.mean()), math.sqrt(var), replicates)


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares line through (log k, log mean error)."""
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self) -> Dict[str, float]:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared}


def scaling_fit(ks: Sequence[float], means: Sequence[float]) -> ScalingFit:
    """Fit log(mean) = slope log(k) + intercept."""
    x = np.log(np.asarray(ks, dtype=np.float64))
    y = np.log(np.asarray(means, dtype=np.float64))
    if x.size < 2:
        raise ValueError("a scaling fit needs at least two points")
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(float(slope), float(intercept), r_squared)
