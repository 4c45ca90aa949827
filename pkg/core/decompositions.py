#!/usr/bin/env python3
"""
Decompositions of a target matrix and their validators.

A ``PsdDecomposition`` is a convex combination sum_i alpha_i Q_i = A. A
``ContactPairDecomposition`` carries weighted pairs (u_i, v_i) with
sum_i alpha_i u_i (x) v_i = I/d, optionally balanced (sum alpha_i u_i =
sum alpha_i v_i = 0). Lifting maps contact pairs into dimension d+1 so one
identity approximation there controls both the diad error and the balances.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np

from core.linalg import (
    DimensionMismatchError,
    LinalgError,
    as_matrix,
    identity,
    is_psd,
    operator_norm,
)
from core.multiset import Multiset
from utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_TOLERANCE = 1e-9
WEIGHT_SUM_TOLERANCE = 1e-12
RENORMALIZATION_WINDOW = 1e-9
CEIL_WINDOW = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def normalize_weights(weights, window: float = RENORMALIZATION_WINDOW) -> np.ndarray:
    """Renormalise weights whose sum is within ``window`` of 1; reject anything else."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-D array")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0):
        raise ValueError(f"weights must be non-negative, found {float(w.min())}")
    total = float(w.sum())
    if abs(total - 1.0) > window:
        raise ValueError(f"weights sum to {total!r}, outside the renormalisation window of 1 +/- {window}")
    return w / total


def diads(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Stack of u_i (x) v_i = v_i u_i^T."""
    return np.einsum("ir,ic->irc", v, u)


# ---------------------------------------------------------------------------
# Validation reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    """One violated invariant and its measured residual."""
    name: str
    residual: float
    message: str


@dataclass
class ValidationReport:
    """Residuals measured by a validator; valid iff no violations."""
    checked: Dict[str, float] = field(default_factory=dict)
    violations: List[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid

    def record(self, name: str, residual: float, limit: float, message: str):
        self.checked[name] = float(residual)
        if not residual <= limit:
            self.violations.append(Violation(name, float(residual), message))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "valid": self.valid,
            "checked": dict(self.checked),
            "violations": [
                {"name": v.name, "residual": v.residual, "message": v.message} for v in self.violations
            ],
        }


# ---------------------------------------------------------------------------
# Matrix decompositions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PsdDecomposition:
    """
    Weights alpha_i and square matrices Q_i with target A = sum alpha_i Q_i.

    ``psd`` marks decompositions whose members must be positive
    semi-definite; non-symmetric decompositions (contact-pair diads, lifted
    pairs) use the same carrier with ``psd=False``.
    """

    weights: np.ndarray
    matrices: np.ndarray
    target: np.ndarray
    psd: bool = True

    def __post_init__(self):
        weights = _frozen(self.weights)
        matrices = _frozen(self.matrices)
        target = _frozen(self.target)
        if matrices.ndim != 3 or matrices.shape[1] != matrices.shape[2]:
            raise DimensionMismatchError(f"matrices must have shape (m, d, d), got {matrices.shape}")
        if weights.shape != (matrices.shape[0],):
            raise DimensionMismatchError(f"{weights.shape[0]} weights for {matrices.shape[0]} matrices")
        if target.shape != matrices.shape[1:]:
            raise DimensionMismatchError(f"target shape {target.shape} does not match members {matrices.shape[1:]}")
        if not (np.all(np.isfinite(matrices)) and np.all(np.isfinite(target)) and np.all(np.isfinite(weights))):
            raise LinalgError("decomposition has non-finite entries")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "matrices", matrices)
        object.__setattr__(self, "target", target)

    @property
    def dim(self) -> int:
        return int(self.matrices.shape[1])

    @property
    def count(self) -> int:
        return int(self.matrices.shape[0])

    @classmethod
    def build(cls, weights, matrices, target=None, psd: bool = True,
              window: float = RENORMALIZATION_WINDOW) -> "PsdDecomposition":
        """Construct with renormalised weights; the target defaults to sum alpha_i Q_i."""
        w = normalize_weights(weights, window)
        q = np.asarray(matrices, dtype=np.float64)
        a = np.tensordot(w, q, axes=1) if target is None else as_matrix(target, "target")
        return cls(weights=w, matrices=q, target=a, psd=psd)

    def weighted_sum(self) -> np.ndarray:
        return np.tensordot(self.weights, self.matrices, axes=1)


def validate_psd_decomposition(dec: PsdDecomposition, tol: float = DEFAULT_TOLERANCE,
                               psd_tol: float = 1e-10) -> ValidationReport:
    """Check weights, the identity sum alpha_i Q_i = A and (if flagged) PSD members."""
    if dec.weights.shape[0] != dec.matrices.shape[0] or dec.target.shape != dec.matrices.shape[1:]:
        raise DimensionMismatchError("decomposition dimensions are inconsistent")

    report = ValidationReport()
    report.record("min_weight", max(0.0, -float(dec.weights.min())), 0.0, "weights must be non-negative")
    report.record("weight_sum", abs(float(dec.weights.sum()) - 1.0), WEIGHT_SUM_TOLERANCE, "weights sum != 1")
    residual = operator_norm(dec.weighted_sum() - dec.target)
    report.record("target_residual", residual, tol, "sum alpha_i Q_i != A")
    if dec.psd:
        bad = [i for i in range(dec.count) if not is_psd(dec.matrices[i], psd_tol)]
        report.record("non_psd_members", float(len(bad)), 0.0,
                      f"members not positive semi-definite: {bad[:10]}")
    if not report.valid:
        logger.debug(f"decomposition invalid: {[v.name for v in report.violations]}")
    return report


def gamma_of(dec: PsdDecomposition) -> float:
    """Largest operator norm over the members."""
    if dec.count == 0:
        raise ValueError("gamma of an empty decomposition is undefined")
    return max(operator_norm(q) for q in dec.matrices)


@dataclass(frozen=True)
class SymmetrizationData:
    """gamma, U_i = (Q_i Q_i^T + Q_i^T Q_i)/(2 gamma), B = sum alpha_i U_i and b = ||B||."""
    gamma: float
    matrices: np.ndarray
    B: np.ndarray
    b: float


def symmetrize(dec: PsdDecomposition) -> SymmetrizationData:
    """Replace every member by its PSD symmetrisation."""
    gamma = gamma_of(dec)
    if gamma == 0.0:
        raise ValueError("cannot symmetrize: every member is zero (gamma = 0)")
    q = dec.matrices
    qt = np.transpose(q, (0, 2, 1))
    u = (q @ qt + qt @ q) / (2.0 * gamma)
    b_matrix = np.tensordot(dec.weights, u, axes=1)
    return SymmetrizationData(gamma=gamma, matrices=_frozen(u), B=_frozen(b_matrix), b=operator_norm(b_matrix))


def symmetrized_decomposition(data: SymmetrizationData, weights) -> PsdDecomposition:
    """The U_i as a PSD decomposition of B."""
    return PsdDecomposition(weights=weights, matrices=data.matrices, target=data.B, psd=True)


# ---------------------------------------------------------------------------
# John decompositions and contact pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JohnDecomposition:
    """Unit vectors u_i with weights alpha_i such that sum alpha_i u_i (x) u_i = I/d."""
    weights: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights))
        object.__setattr__(self, "vectors", _frozen(self.vectors))
        if self.vectors.ndim != 2 or self.weights.shape != (self.vectors.shape[0],):
            raise DimensionMismatchError("John decomposition needs m weights and an (m, d) vector array")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


def validate_john_decomposition(jd: JohnDecomposition, tol: float = DEFAULT_TOLERANCE,
                                balanced: bool = False) -> ValidationReport:
    """Unit lengths, the identity, and optionally the centring condition."""
    d = jd.dim
    report = ValidationReport()
    report.record("weight_sum", abs(float(jd.weights.sum()) - 1.0), WEIGHT_SUM_TOLERANCE, "weights sum != 1")
    report.record("min_weight", max(0.0, -float(jd.weights.min())), 0.0, "weights must be non-negative")
    lengths = np.linalg.norm(jd.vectors, axis=1)
    report.record("unit_length", float(np.max(np.abs(lengths - 1.0))), tol, "vectors are not unit length")
    gram = np.einsum("i,ir,ic->rc", jd.weights, jd.vectors, jd.vectors)
    report.record("identity_residual", operator_norm(gram - identity(d) / d), tol, "sum alpha_i u_i (x) u_i != I/d")
    if balanced:
        report.record("centre", float(np.linalg.norm(jd.weights @ jd.vectors)), tol, "sum alpha_i u_i != 0")
    return report


def john_to_psd(jd: JohnDecomposition) -> PsdDecomposition:
    """Q_i = d u_i (x) u_i with target I."""
    d = jd.dim
    matrices = d * np.einsum("ir,ic->irc", jd.vectors, jd.vectors)
    return PsdDecomposition(weights=jd.weights, matrices=matrices, target=identity(d), psd=True)


def cross_polytope_john(d: int) -> JohnDecomposition:
    """+-e_i with weight 1/(2d) each."""
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    vectors = np.vstack([np.eye(d), -np.eye(d)])
    return JohnDecomposition(weights=np.full(2 * d, 1.0 / (2 * d)), vectors=vectors)


def cross_polytope_decomposition(d: int) -> PsdDecomposition:
    """Q = d e_i (x) e_i for every +-e_i, alpha = 1/(2d), A = I."""
    return john_to_psd(cross_polytope_john(d))


@dataclass(frozen=True)
class ContactPairDecomposition:
    """Weighted pairs (u_i, v_i) realising sum alpha_i u_i (x) v_i = I/d."""
    weights: np.ndarray
    u: np.ndarray
    v: np.ndarray
    balanced: bool = True

    def __post_init__(self):
        for name in ("weights", "u", "v"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.u.ndim != 2 or self.u.shape != self.v.shape:
            raise DimensionMismatchError(f"u and v must be equal (m, d) arrays, got {self.u.shape} and {self.v.shape}")
        if self.weights.shape != (self.u.shape[0],):
            raise DimensionMismatchError(f"{self.weights.shape[0]} weights for {self.u.shape[0]} pairs")

    @property
    def dim(self) -> int:
        return int(self.u.shape[1])

    @property
    def count(self) -> int:
        return int(self.u.shape[0])

    @classmethod
    def build(cls, weights, u, v, balanced: bool = True,
              window: float = RENORMALIZATION_WINDOW) -> "ContactPairDecomposition":
        return cls(weights=normalize_weights(weights, window), u=u, v=v, balanced=balanced)


def validate_johns_position(cpd: ContactPairDecomposition, tol: float = DEFAULT_TOLERANCE) -> ValidationReport:
    """Check (H1), (H2) when the balanced flag is set, and <u_i, v_i> = 1."""
    d = cpd.dim
    report = ValidationReport()
    report.record("weight_sum", abs(float(cpd.weights.sum()) - 1.0), WEIGHT_SUM_TOLERANCE, "weights sum != 1")
    report.record("min_weight", max(0.0, -float(cpd.weights.min())), 0.0, "weights must be non-negative")
    h1 = np.tensordot(cpd.weights, diads(cpd.u, cpd.v), axes=1)
    report.record("h1_residual", operator_norm(h1 - identity(d) / d), tol, "sum alpha_i u_i (x) v_i != I/d")
    if cpd.balanced:
        report.record("h2_u", float(np.linalg.norm(cpd.weights @ cpd.u)), tol, "sum alpha_i u_i != 0")
        report.record("h2_v", float(np.linalg.norm(cpd.weights @ cpd.v)), tol, "sum alpha_i v_i != 0")
    pairing = np.einsum("ij,ij->i", cpd.u, cpd.v)
    report.record("pairing", float(np.max(np.abs(pairing - 1.0))), tol, "<u_i, v_i> != 1")
    return report


def ball_in_cube_pairs(d: int) -> ContactPairDecomposition:
    """u_i = v_i = +-e_i with weight 1/(2d): the ball in John's position in the cube."""
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    vectors = np.vstack([np.eye(d), -np.eye(d)])
    return ContactPairDecomposition(weights=np.full(2 * d, 1.0 / (2 * d)), u=vectors, v=vectors, balanced=True)


def symmetrize_contact_pairs(cpd: ContactPairDecomposition) -> ContactPairDecomposition:
    """Append the opposite of every pair with halved weights, so (H2) holds."""
    return ContactPairDecomposition(
        weights=np.concatenate([cpd.weights, cpd.weights]) / 2.0,
        u=np.vstack([cpd.u, -cpd.u]),
        v=np.vstack([cpd.v, -cpd.v]),
        balanced=True,
    )


def contact_pair_decomposition(cpd: ContactPairDecomposition) -> PsdDecomposition:
    """Q_i = d u_i (x) v_i with the contact weights; target I."""
    d = cpd.dim
    return PsdDecomposition(weights=cpd.weights, matrices=d * diads(cpd.u, cpd.v), target=identity(d), psd=False)


# ---------------------------------------------------------------------------
# Lifting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LiftedPairs:
    """a_i = (v_i, 1/sqrt d) and b_i = (u_i, 1/sqrt d) in R^{d+1}."""
    weights: np.ndarray
    a: np.ndarray
    b: np.ndarray
    base_dim: int

    @property
    def dim(self) -> int:
        return self.base_dim + 1

    def decomposition(self) -> PsdDecomposition:
        """Q_i = d a_i (x) b_i with target I_{d+1}."""
        d = self.base_dim
        return PsdDecomposition(weights=self.weights, matrices=d * diads(self.a, self.b),
                                target=identity(d + 1), psd=False)


def lift_pairs(cpd: ContactPairDecomposition, tol: float = DEFAULT_TOLERANCE) -> LiftedPairs:
    """Lift contact pairs satisfying (H1) and (H2) into dimension d+1."""
    d = cpd.dim
    h1 = np.tensordot(cpd.weights, diads(cpd.u, cpd.v), axes=1)
    h1_residual = operator_norm(h1 - identity(d) / d)
    h2_residual = max(float(np.linalg.norm(cpd.weights @ cpd.u)), float(np.linalg.norm(cpd.weights @ cpd.v)))
    if h1_residual > tol:
        raise ValueError(f"cannot lift: (H1) residual {h1_residual:.3e} exceeds {tol:.1e}")
    if h2_residual > tol:
        raise ValueError(f"cannot lift: (H2) residual {h2_residual:.3e} exceeds {tol:.1e}")
    tail = np.full((cpd.count, 1), 1.0 / math.sqrt(d))
    return LiftedPairs(weights=_frozen(cpd.weights), a=_frozen(np.hstack([cpd.v, tail])),
                       b=_frozen(np.hstack([cpd.u, tail])), base_dim=d)


class Guarantees(NamedTuple):
    """Quantities read off a lifted approximation."""
    err_a: float
    bal_u: float
    bal_v: float
    lifted_error: float


def extract_guarantees(lifted: LiftedPairs, sigma: Multiset, d: Optional[int] = None) -> Guarantees:
    """
    Diad error and balances of the original pairs selected by ``sigma``.

    Each of err_a, sqrt(d) bal_u and sqrt(d) bal_v is a block of the lifted
    residual, so none exceeds the lifted error.
    """
    d = lifted.base_dim if d is None else d
    if d != lifted.base_dim:
        raise DimensionMismatchError(f"d={d} does not match the lifted base dimension {lifted.base_dim}")
    if not sigma:
        raise ValueError("extract_guarantees needs a non-empty multiset")
    counts = sigma.counts(lifted.a.shape[0]).astype(np.float64)
    k = float(counts.sum())
    u = lifted.b[:, :d]
    v = lifted.a[:, :d]
    diad_avg = (d / k) * np.einsum("i,ir,ic->rc", counts, v, u)
    err_a = operator_norm(diad_avg - identity(d))
    bal_u = float(np.linalg.norm(counts @ u)) / k
    bal_v = float(np.linalg.norm(counts @ v)) / k
    lifted_avg = (d / k) * np.einsum("i,ir,ic->rc", counts, lifted.b, lifted.a)
    lifted_error = operator_norm(lifted_avg - identity(d + 1))
    return Guarantees(err_a=err_a, bal_u=bal_u, bal_v=bal_v, lifted_error=lifted_error)


@dataclass(frozen=True)
class LiftedBounds:
    """Measured gamma and b of the lifted decomposition next to their analytic bounds."""
    gamma: float
    b: float
    gamma_bound: float
    b_bound: Optional[float]

    @property
    def within(self) -> bool:
        ok = self.gamma <= self.gamma_bound + 1e-9
        if self.b_bound is not None:
            ok = ok and self.b <= self.b_bound + 1e-9
        return ok


def lifted_symmetrization_bounds(lifted: LiftedPairs, r: float) -> LiftedBounds:
    """gamma <= d r (1 + 1/d) always; b <= 4 d sqrt(r - 1) + 1 when r <= 2."""
    if r < 1:
        raise ValueError(f"the distance to the ball is at least 1, got r={r}")
    d = lifted.base_dim
    data = symmetrize(lifted.decomposition())
    b_bound = 4.0 * d * math.sqrt(r - 1.0) + 1.0 if r <= 2 else None
    return LiftedBounds(gamma=data.gamma, b=data.b, gamma_bound=d * r * (1.0 + 1.0 / d), b_bound=b_bound)


# ---------------------------------------------------------------------------
# Sample-size rules
# ---------------------------------------------------------------------------

def _ceil(x: float) -> int:
    # absorbs float noise such as ln(e^2) = 2 + 1ulp
    return int(math.ceil(x - CEIL_WINDOW * max(1.0, abs(x))))


def _check_size_params(d: float, eps: float, c: float):
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if c <= 0:
        raise ValueError(f"constant c must be positive, got {c}")


def required_sample_size(d: float, gamma: float, norm_a: float, eps: float, c: float) -> int:
    """ceil(c gamma (1 + ||A||) ln d / eps^2)."""
    _check_size_params(d, eps, c)
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if norm_a < 0:
        raise ValueError(f"||A|| must be non-negative, got {norm_a}")
    return _ceil(c * gamma * (1.0 + norm_a) * math.log(d) / eps ** 2)


def nonsymmetric_sample_size(d: float, gamma: float, b: float, eps: float, c: float) -> int:
    """ceil(c gamma (1 + b) ln d / eps^2) for non-symmetric members."""
    _check_size_params(d, eps, c)
    if gamma <= 0 or b < 0:
        raise ValueError(f"need gamma > 0 and b >= 0, got gamma={gamma}, b={b}")
    return _ceil(c * gamma * (1.0 + b) * math.log(d) / eps ** 2)


def bm_stability_sample_size(d: float, r: float, eps: float, c: float) -> int:
    """ceil(c d ln d r (d sqrt(r - 1) + 1) / eps^2) for contact pairs of a body with r <= 2."""
    _check_size_params(d, eps, c)
    if not 1 <= r <= 2:
        raise ValueError(f"the near-ball rule needs 1 <= r <= 2, got r={r}")
    return _ceil(c * d * math.log(d) * r * (d * math.sqrt(r - 1.0) + 1.0) / eps ** 2)
