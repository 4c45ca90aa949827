#!/usr/bin/env python3
"""
Lower-bound verifiers.

Three questions are answered at desk scale:

* how small the l_1 distance between a multiset average of e_i/2 and the
  centre a can get (``l1_center_gap``, ``l1_gap_exhaustive``);
* whether any multiset below the size bound approximates the identity for
  a log-needed instance (``min_error_over_multisets``);
* how well a restricted support of cube-simplex pairs can approximate the
  identity with free coefficients (``best_beta_error``, ``bm_certificate``,
  ``support_lower_bound``).

A search result is ``certified`` only when every candidate was examined.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.constructions import CubeSimplexInstance, LogNeededInstance, cube_simplex_construction
from core.linalg import identity, operator_norm, top_singular_pair
from core.multiset import Multiset
from core.sampling import make_rng, sample_error
from utils.logger import get_logger

logger = get_logger(__name__)

EXHAUSTIVE_THRESHOLD = 1_000_000
RANDOM_SAMPLES = 100_000
SUBGRADIENT_ITERATIONS = 5000
SEARCH_MODES = ("auto", "exhaustive", "random")
_CHUNK = 20_000

Support = List[Tuple[int, int]]


# ---------------------------------------------------------------------------
# l_1 gap
# ---------------------------------------------------------------------------

def _gap_exact(t: int, k: int, counts: Sequence[int]) -> Fraction:
    s = sum(counts)
    a = Fraction(1, 12 * k)
    return sum((abs(Fraction(counts[i], 2 * s) - a) for i in range(t)), Fraction(0))


def _check_gap_args(t: int, k: int):
    if t < 1 or k < 1:
        raise ValueError(f"need t >= 1 and k >= 1, got t={t}, k={k}")


def l1_center_gap(t: int, k: int, sigma0: Multiset) -> float:
    """||(1/s) sum_{i in sigma0} e_i/2 - a||_1 with a = (1/(12k))(1..1); index t is the zero vector."""
    _check_gap_args(t, k)
    s = sigma0.size
    if s == 0:
        raise ValueError("sigma0 must be non-empty")
    if s > 3 * k:
        raise ValueError(f"|sigma0| = {s} exceeds 3k = {3 * k}")
    return float(_gap_exact(t, k, sigma0.counts(t + 1)))


@dataclass
class GapReport:
    """Exhaustive check of the l_1 gap bound t/(12k)."""
    t: int
    k: int
    bound: Fraction
    minimum: Fraction
    witness: Multiset
    examined: int
    violations: int

    @property
    def holds(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "k": self.k,
            "bound": float(self.bound),
            "minimum": float(self.minimum),
            "bound_exact": str(self.bound),
            "minimum_exact": str(self.minimum),
            "witness": self.witness.to_dict(),
            "examined": self.examined,
            "violations": self.violations,
            "holds": self.holds,
        }


def l1_gap_exhaustive(t: int, k: int) -> GapReport:
    """Evaluate the gap exactly for every multiset of [t+1] with 1 <= s <= 3k."""
    _check_gap_args(t, k)
    bound = Fraction(t, 12 * k)
    minimum: Optional[Fraction] = None
    witness: Optional[Multiset] = None
    examined = violations = 0
    for s in range(1, 3 * k + 1):
        for combo in itertools.combinations_with_replacement(range(t + 1), s):
            counts = [0] * (t + 1)
            for i in combo:
                counts[i] += 1
            gap = _gap_exact(t, k, counts)
            examined += 1
            if gap < bound:
                violations += 1
            if minimum is None or gap < minimum:
                minimum, witness = gap, Multiset.from_indices(combo)
    logger.debug(f"l1 gap t={t} k={k}: {examined} multisets, minimum {minimum} vs bound {bound}")
    return GapReport(t, k, bound, minimum, witness, examined, violations)


# ---------------------------------------------------------------------------
# Multisets of a log-needed instance
# ---------------------------------------------------------------------------

@dataclass
class SizeResult:
    size: int
    min_error: float
    witness: Multiset


@dataclass
class LowerBoundReport:
    """Smallest sample error found over multisets of bounded size."""
    mode: str
    sizes: List[int]
    minimum: float
    witness: Multiset
    certified: bool
    eps: float
    examined: int
    per_size: List[SizeResult] = field(default_factory=list)
    samples: Optional[int] = None

    @property
    def holds(self) -> bool:
        return self.minimum >= self.eps

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "samples": self.samples,
            "sizes": list(self.sizes),
            "min_error": self.minimum,
            "witness": self.witness.to_dict(),
            "certified": self.certified,
            "eps": self.eps,
            "holds": self.holds,
            "examined": self.examined,
            "per_size": [
                {"size": r.size, "min_error": r.min_error, "witness": r.witness.to_dict()} for r in self.per_size
            ],
        }

    def csv_rows(self) -> List[List[Any]]:
        return [[r.size, r.min_error, " ".join(str(i) for i in r.witness.indices())] for r in self.per_size]


def multiset_count(m: int, max_size: int) -> int:
    """Number of multisets of [m] with 1 <= size <= max_size."""
    return sum(math.comb(m + s - 1, s) for s in range(1, max_size + 1))


def _errors_for_counts(diag: np.ndarray, target: np.ndarray, counts: np.ndarray) -> np.ndarray:
    sizes = counts.sum(axis=1, keepdims=True).astype(np.float64)
    return np.max(np.abs(counts @ diag / sizes - target), axis=1)


def diagonal_sample_error(inst: LogNeededInstance, sigma: Multiset) -> float:
    """Sample error through the largest absolute diagonal entry; every member is diagonal."""
    counts = sigma.counts(inst.count)[None, :].astype(np.float64)
    return float(_errors_for_counts(inst.diagonal_array(), inst.target_diagonal(), counts)[0])


def _counts_of(combos: np.ndarray, m: int) -> np.ndarray:
    counts = np.zeros((combos.shape[0], m), dtype=np.float64)
    rows = np.repeat(np.arange(combos.shape[0]), combos.shape[1])
    np.add.at(counts, (rows, combos.ravel()), 1.0)
    return counts


def _exhaustive(inst: LogNeededInstance, diag: np.ndarray, target: np.ndarray) -> Tuple[List[SizeResult], int]:
    results: List[SizeResult] = []
    examined = 0
    m = inst.count
    for s in range(1, inst.max_size + 1):
        best_err, best_counts = math.inf, None
        combos = itertools.combinations_with_replacement(range(m), s)
        while True:
            chunk = list(itertools.islice(combos, _CHUNK))
            if not chunk:
                break
            counts = _counts_of(np.array(chunk, dtype=np.int64), m)
            errors = _errors_for_counts(diag, target, counts)
            j = int(np.argmin(errors))
            if errors[j] < best_err:
                best_err, best_counts = float(errors[j]), counts[j]
            examined += len(chunk)
        results.append(SizeResult(s, best_err, Multiset.from_counts(best_counts)))
    return results, examined


def _greedy(diag: np.ndarray, target: np.ndarray, start: np.ndarray) -> Tuple[np.ndarray, float]:
    """One-swap descent: move one unit of multiplicity between indices while the error drops."""
    m = start.size
    current = start.copy()
    current_err = float(_errors_for_counts(diag, target, current[None, :])[0])
    while True:
        moves = [(i, j) for i in range(m) if current[i] > 0 for j in range(m) if j != i]
        if not moves:
            return current, current_err
        candidates = np.repeat(current[None, :], len(moves), axis=0)
        for row, (i, j) in enumerate(moves):
            candidates[row, i] -= 1
            candidates[row, j] += 1
        errors = _errors_for_counts(diag, target, candidates)
        best = int(np.argmin(errors))
        if errors[best] >= current_err:
            return current, current_err
        current, current_err = candidates[best], float(errors[best])


def _random_search(inst: LogNeededInstance, diag: np.ndarray, target: np.ndarray, samples: int,
                   seed: int) -> Tuple[List[SizeResult], int]:
    rng = make_rng(seed)
    m, max_size = inst.count, inst.max_size
    best: Dict[int, Tuple[float, np.ndarray]] = {}
    drawn = 0
    while drawn < samples:
        n = min(_CHUNK, samples - drawn)
        sizes = rng.integers(1, max_size + 1, size=n)
        counts = np.zeros((n, m), dtype=np.float64)
        for s in np.unique(sizes):
            rows = np.flatnonzero(sizes == s)
            counts[rows] = rng.multinomial(int(s), np.full(m, 1.0 / m), size=rows.size)
        errors = _errors_for_counts(diag, target, counts)
        for s in np.unique(sizes):
            rows = np.flatnonzero(sizes == s)
            j = rows[int(np.argmin(errors[rows]))]
            if int(s) not in best or errors[j] < best[int(s)][0]:
                best[int(s)] = (float(errors[j]), counts[j].copy())
        drawn += n

    results = []
    for s in sorted(best):
        counts, err = _greedy(diag, target, best[s][1])
        results.append(SizeResult(s, err, Multiset.from_counts(counts)))
    return results, drawn


def min_error_over_multisets(inst: LogNeededInstance, mode: str = "auto",
                             threshold: int = EXHAUSTIVE_THRESHOLD, samples: int = RANDOM_SAMPLES,
                             seed: int = 0) -> LowerBoundReport:
    """
    Minimum sample error over multisets of [t+2] with 1 <= size <= floor(size_bound).

    ``auto`` enumerates exhaustively when there are at most ``threshold``
    candidates and otherwise draws ``samples`` random multisets followed by
    one-swap greedy descent; only exhaustive runs are certified. Forcing
    ``exhaustive`` above the threshold raises ``ValueError``.
    """
    if mode not in SEARCH_MODES:
        raise ValueError(f"mode must be one of {SEARCH_MODES}, got {mode!r}")
    diag = inst.diagonal_array()
    target = inst.target_diagonal()
    total = multiset_count(inst.count, inst.max_size)
    exhaustive = mode == "exhaustive" or (mode == "auto" and total <= threshold)
    if mode == "exhaustive" and total > threshold:
        raise ValueError(f"exhaustive search over {total} multisets exceeds the threshold {threshold}; "
                         "use mode='random' or raise the threshold")

    if exhaustive:
        per_size, examined = _exhaustive(inst, diag, target)
        run_mode, drawn = "exhaustive", None
    else:
        per_size, examined = _random_search(inst, diag, target, samples, seed)
        run_mode, drawn = "random+greedy", samples

    winner = min(per_size, key=lambda r: r.min_error)
    report = LowerBoundReport(
        mode=run_mode,
        sizes=[r.size for r in per_size],
        minimum=winner.min_error,
        witness=winner.witness,
        certified=exhaustive,
        eps=float(inst.eps),
        examined=examined,
        per_size=per_size,
        samples=drawn,
    )
    logger.info(f"{run_mode} search over {examined} multisets: min error {report.minimum:.6g} (eps {report.eps:.6g})")
    return report


def cross_check_diagonal_path(inst: LogNeededInstance, trials: int = 100, seed: int = 0) -> float:
    """Largest gap between the diagonal fast path and the general operator norm on random multisets."""
    rng = make_rng(seed)
    dec = inst.decomposition()
    worst = 0.0
    for _ in range(trials):
        size = int(rng.integers(1, max(inst.max_size, 1) + 1))
        sigma = Multiset.from_counts(rng.multinomial(size, np.full(inst.count, 1.0 / inst.count)))
        worst = max(worst, abs(diagonal_sample_error(inst, sigma) - sample_error(dec, sigma)))
    return worst


# ---------------------------------------------------------------------------
# Restricted supports of cube-simplex pairs
# ---------------------------------------------------------------------------

def normalize_support(inst: CubeSimplexInstance, support: Iterable[Tuple[int, int]]) -> Support:
    pairs = sorted({(int(i), int(j)) for i, j in support})
    if not pairs:
        raise ValueError("support must be non-empty")
    for i, j in pairs:
        if not (0 <= i < inst.d and 0 <= j < inst.d_prime):
            raise ValueError(f"support pair ({i}, {j}) outside [0, {inst.d}) x [0, {inst.d_prime})")
    return pairs


def _mask(inst: CubeSimplexInstance, support: Support) -> np.ndarray:
    mask = np.zeros((inst.d, inst.d_prime), dtype=bool)
    for i, j in support:
        mask[i, j] = True
    return mask


def beta_residual(inst: CubeSimplexInstance, beta: np.ndarray) -> np.ndarray:
    """sum_ij beta_ij d w_i^j (x) e_i - I; row i is d sum_j beta_ij w_i^j - e_i."""
    return inst.d * np.einsum("ij,ijc->ic", beta, inst.points) - identity(inst.d)


def frobenius_beta(inst: CubeSimplexInstance, support: Iterable[Tuple[int, int]]) -> np.ndarray:
    """Least-squares beta in the Frobenius norm, solved row by row; zeros off the support."""
    mask = _mask(inst, normalize_support(inst, support))
    beta = np.zeros((inst.d, inst.d_prime))
    for i in range(inst.d):
        cols = np.flatnonzero(mask[i])
        if cols.size == 0:
            continue
        design = inst.d * inst.points[i, cols].T
        solution, _, rank, _ = np.linalg.lstsq(design, identity(inst.d)[i], rcond=None)
        if rank < cols.size:
            logger.debug(f"row {i}: rank-deficient support, starting from zero")
            continue
        beta[i, cols] = solution
    return beta


@dataclass
class BetaResult:
    error: float
    beta: np.ndarray
    frobenius_error: float
    iterations: int


def optimize_beta(inst: CubeSimplexInstance, support: Iterable[Tuple[int, int]],
                  iterations: int = SUBGRADIENT_ITERATIONS, eta0: Optional[float] = None) -> BetaResult:
    """
    Subgradient descent on ||sum beta Q - I|| over beta supported on ``support``.

    Starts from the Frobenius least-squares beta, steps eta0/sqrt(iter) with
    eta0 = 1/(d d') by default and returns the best iterate, so the value is
    an upper bound on the true minimum.
    """
    support = normalize_support(inst, support)
    mask = _mask(inst, support).astype(np.float64)
    eta0 = 1.0 / (inst.d * inst.d_prime) if eta0 is None else eta0

    beta = frobenius_beta(inst, support)
    sigma, left, right = top_singular_pair(beta_residual(inst, beta))
    frobenius_error = best_error = sigma
    best_beta = beta.copy()
    for it in range(1, iterations + 1):
        if best_error == 0.0:
            break
        # d/d beta_ij of left^T R right = left_i d <w_i^j, right>
        grad = inst.d * left[:, None] * (inst.points @ right) * mask
        beta = beta - eta0 / math.sqrt(it) * grad
        sigma, left, right = top_singular_pair(beta_residual(inst, beta))
        if sigma < best_error:
            best_error, best_beta = sigma, beta.copy()
    return BetaResult(error=best_error, beta=best_beta, frobenius_error=frobenius_error, iterations=iterations)


def best_beta_error(inst: CubeSimplexInstance, support: Iterable[Tuple[int, int]],
                    iterations: int = SUBGRADIENT_ITERATIONS) -> float:
    """Upper bound on min_beta ||sum_{(i,j) in M} beta_ij Q_ij - I||."""
    return optimize_beta(inst, support, iterations).error


def _minimal_row(inst: CubeSimplexInstance, support: Support) -> Tuple[int, List[int]]:
    rows: List[List[int]] = [[] for _ in range(inst.d)]
    for i, j in support:
        rows[i].append(j)
    row = min(range(inst.d), key=lambda i: len(rows[i]))
    return row, rows[row]


def _x_coefficient(inst: CubeSimplexInstance, ell: int) -> float:
    """<w_i^j, x> for j in the row support, x the normalised sum of the row's offsets."""
    return inst.delta / math.sqrt(ell) * math.sqrt((inst.d_prime - ell) / (inst.d_prime - 1))


@dataclass
class Certificate:
    """Explicit lower bound on ||sum beta Q - I|| from the two test vectors of a minimal row."""
    value: float
    row: int
    row_support: int
    e_test: float
    x_test: Optional[float]
    coefficient_sum: float
    analytic_bound: Optional[float]
    consistent: Optional[bool]

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def bm_certificate(inst: CubeSimplexInstance, support: Iterable[Tuple[int, int]], beta: np.ndarray,
                   eps: float) -> Certificate:
    """
    max(|<(A-I)e_i, e_i>|, |<(A-I)x, e_i>|) for the row i with fewest support entries.

    Coefficients off the support are taken as zero. When the row support
    is below d'/2 and d sum_j beta_ij >= 1 - eps, the value is compared with
    delta/(4 sqrt(l)).
    """
    support = normalize_support(inst, support)
    beta = np.asarray(beta, dtype=np.float64) * _mask(inst, support)
    residual = beta_residual(inst, beta)
    row, cols = _minimal_row(inst, support)
    ell = len(cols)
    coefficient_sum = inst.d * float(beta[row].sum())

    e_test = abs(float(residual[row, row]))
    x_test = None
    y = inst.points[row, cols].sum(axis=0) - ell * identity(inst.d)[row] if ell else None
    if y is not None and np.linalg.norm(y) > 1e-12:
        x = y / np.linalg.norm(y)
        x_test = abs(float(residual[row] @ x))
    value = max(e_test, x_test or 0.0)

    analytic = consistent = None
    if 0 < ell < inst.d_prime / 2 and coefficient_sum >= 1.0 - eps:
        analytic = inst.delta / (4.0 * math.sqrt(ell))
        consistent = value + 1e-12 >= analytic
    return Certificate(value, row, ell, e_test, x_test, coefficient_sum, analytic, consistent)


def support_lower_bound(inst: CubeSimplexInstance, support: Iterable[Tuple[int, int]]) -> float:
    """
    Certified lower bound valid for every beta on ``support``.

    With S = d sum_j beta_ij on a minimal row, the two tests give
    max(|S - 1|, |S| c), minimised at S = 1/(1 + c).
    """
    support = normalize_support(inst, support)
    _, cols = _minimal_row(inst, support)
    ell = len(cols)
    if ell == 0:
        return 1.0
    c = _x_coefficient(inst, ell)
    return c / (1.0 + c)


def bm_lower_bound(d: int, delta: float, eps: float) -> float:
    """d * min(d/4, (delta/(4 eps))^2): supports smaller than this cannot be eps-close."""
    if d <= 2:
        raise ValueError(f"d must exceed 2, got {d}")
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    limit = math.sqrt(d / 2.0 - 1.0)
    if not 0 < delta < limit:
        raise ValueError(f"delta must lie in (0, sqrt(d/2 - 1)) = (0, {limit:.6g}), got {delta}")
    return d * min(d / 4.0, (delta / (4.0 * eps)) ** 2)


def random_support(inst: CubeSimplexInstance, size: int, rng: np.random.Generator) -> Support:
    """``size`` distinct (i, j) pairs chosen uniformly."""
    if not 1 <= size <= inst.count:
        raise ValueError(f"support size must lie in [1, {inst.count}], got {size}")
    flat = rng.choice(inst.count, size=size, replace=False)
    return sorted(inst.pair_of(int(f)) for f in flat)


@dataclass
class SupportTrial:
    support: Support
    error: float
    frobenius_error: float
    certificate: Certificate
    support_bound: float
    norm_at_beta: float


@dataclass
class BmReport:
    """Full-support check plus optimisation and certificates on random sub-threshold supports."""
    d: int
    delta: float
    eps: float
    bound: float
    support_size: int
    full_support_error: float
    trials: List[SupportTrial]

    @property
    def all_above_eps(self) -> bool:
        return all(t.error > self.eps for t in self.trials)

    @property
    def certificates_sound(self) -> bool:
        return all(t.certificate.value <= t.norm_at_beta + 1e-9 for t in self.trials)

    @property
    def certificates_consistent(self) -> bool:
        """No certificate fell below its analytic bound where that bound applies."""
        return all(t.certificate.consistent is not False for t in self.trials)

    @property
    def holds(self) -> bool:
        return self.full_support_error <= 1e-9 and self.all_above_eps and self.certificates_sound

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d": self.d,
            "delta": self.delta,
            "eps": self.eps,
            "bound": self.bound,
            "support_size": self.support_size,
            "full_support_error": self.full_support_error,
            "all_above_eps": self.all_above_eps,
            "certificates_sound": self.certificates_sound,
            "certificates_consistent": self.certificates_consistent,
            "holds": self.holds,
            "min_error": min((t.error for t in self.trials), default=None),
            "trials": [
                {
                    "support": [list(p) for p in t.support],
                    "error": t.error,
                    "frobenius_error": t.frobenius_error,
                    "support_bound": t.support_bound,
                    "norm_at_beta": t.norm_at_beta,
                    "certificate": t.certificate.to_dict(),
                }
                for t in self.trials
            ],
        }

    def csv_rows(self) -> List[List[Any]]:
        return [[len(t.support), t.error, t.certificate.value, t.support_bound] for t in self.trials]


def verify_support_bound(d: int, delta: float, eps: float, supports: int = 200,
                         support_size: Optional[int] = None, seed: int = 0,
                         iterations: int = SUBGRADIENT_ITERATIONS) -> BmReport:
    """Run the support-size lower bound check on ``supports`` random supports below the bound."""
    bound = bm_lower_bound(d, delta, eps)
    inst = cube_simplex_construction(d, delta)
    size = support_size if support_size is not None else max(1, math.ceil(bound) - 1)
    full = [(i, j) for i in range(inst.d) for j in range(inst.d_prime)]
    full_error = best_beta_error(inst, full, iterations)

    rng = make_rng(seed)
    trials = []
    for n in range(supports):
        support = random_support(inst, size, rng)
        result = optimize_beta(inst, support, iterations)
        cert = bm_certificate(inst, support, result.beta, eps)
        norm = operator_norm(beta_residual(inst, result.beta * _mask(inst, support)))
        trials.append(SupportTrial(support, result.error, result.frobenius_error, cert,
                                   support_lower_bound(inst, support), norm))
        logger.debug(f"support {n + 1}/{supports}: error {result.error:.4g}, certificate {cert.value:.4g}")
    return BmReport(d, float(delta), float(eps), bound, size, full_error, trials)
