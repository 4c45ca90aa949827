#!/usr/bin/env python3
"""
Generators for the explicit families the harness studies.

- ``walsh`` / ``sign_sequences`` / ``l1_to_linf_embed``: exact integer
  building blocks.
- ``log_needed_construction``: diagonal PSD matrices for which no multiset
  smaller than gamma*t/(96 eps) approximates the identity.
- ``cube_simplex_construction``: regular simplices around the cube's facet
  centres, the contact data of a body that needs large supports.
- ``symmetrization_counterexample``: a family whose PSD symmetrisation has
  ``b`` well above 1.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from core.decompositions import (
    ContactPairDecomposition,
    PsdDecomposition,
    diads,
    symmetrize_contact_pairs,
)
from core.linalg import identity
from utils.logger import get_logger

logger = get_logger(__name__)

PADDING_MODES = ("zero", "identity")

Number = Union[int, float, Fraction]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def walsh(size: int) -> np.ndarray:
    """Walsh matrix H_size (size a power of two) as an int64 array."""
    if not isinstance(size, (int, np.integer)) or not _is_power_of_two(int(size)):
        raise ValueError(f"Walsh matrices exist for powers of two only, got {size}")
    h = np.ones((1, 1), dtype=np.int64)
    while h.shape[0] < size:
        h = np.block([[h, h], [h, -h]])
    return h


def sign_sequences(t: int) -> np.ndarray:
    """
    All 2^t sequences of +-1 of length t, one per row.

    Rows are in lexicographic order with +1 before -1, so row j carries -1
    exactly where the binary expansion of j (most significant bit first)
    has a one.
    """
    if t < 1:
        raise ValueError(f"sequence length must be >= 1, got {t}")
    j = np.arange(2 ** t, dtype=np.int64)[:, None]
    bits = (j >> np.arange(t - 1, -1, -1, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int64)


def l1_to_linf_embed(x) -> np.ndarray:
    """Isometric image of x in l_1^t inside l_inf^{2^t}: entry j is <x, s_j>."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("x must be a non-empty vector")
    return sign_sequences(x.size) @ x


def _exact(value: Number) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    # shortest repr, so 0.03125 and 0.01 both mean what was typed
    return Fraction(repr(float(value)))


# ---------------------------------------------------------------------------
# Diagonal family with a logarithmic sample-size lower bound
# ---------------------------------------------------------------------------

def log_needed_parameters(d: int, gamma: Number, eps: Number) -> Tuple[int, int]:
    """
    Return (t, k) for the log-needed family or raise with the violated precondition.

    t = floor(log2 d), k = floor(t / (96 eps)).
    """
    if not isinstance(d, (int, np.integer)) or d < 8:
        raise ValueError(f"log-needed construction needs an integer d >= 8, got {d}")
    g = _exact(gamma)
    e = _exact(eps)
    if g < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    if not 0 < e < Fraction(1, 16):
        raise ValueError(f"eps must lie in (0, 1/16), got {eps}")
    t = int(d).bit_length() - 1
    k = math.floor(Fraction(t) / (96 * e))
    if k < 1:
        raise ValueError(f"k = floor(t/(96 eps)) = 0 for t={t}, eps={eps}; decrease eps")
    if 6 * k < t:
        raise ValueError(f"weight 1 - t/(6k) is negative for t={t}, k={k}; decrease eps")
    return t, k


@dataclass(frozen=True)
class LogNeededInstance:
    """
    Diagonal PSD matrices Q_1..Q_{t+2} with sum_i w_i Q_i = target.

    Q_i = gamma (phi(e_i/2 - a) + I) for i <= t+1 (e_{t+1} = 0) and
    Q_{t+2} = 0, where phi maps l_1^t isometrically into the diagonal
    matrices of size 2^t. ``diagonals`` hold the exact rational entries.
    """

    t: int
    k: int
    gamma: Fraction
    eps: Fraction
    dim_out: int
    padding: str
    diagonals: Tuple[Tuple[Fraction, ...], ...]
    weights_exact: Tuple[Fraction, ...]
    requested_dim: int = 0

    @property
    def dim(self) -> int:
        """Power-of-two dimension 2^t of the unpadded block."""
        return 2 ** self.t

    @property
    def count(self) -> int:
        return self.t + 2

    @property
    def a(self) -> np.ndarray:
        return np.full(self.t, 1.0 / (12 * self.k))

    @property
    def lambdas(self) -> Tuple[Fraction, ...]:
        lam = Fraction(1, 6 * self.k)
        return tuple([lam] * self.t + [1 - self.t * lam])

    @property
    def size_bound(self) -> float:
        """gamma t / (96 eps): no multiset of at most this size is eps-close."""
        return float(self.gamma * self.t / (96 * self.eps))

    @property
    def max_size(self) -> int:
        return math.floor(self.gamma * self.t / (96 * self.eps))

    def diagonal_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.diagonals], dtype=np.float64)

    def target_diagonal(self) -> np.ndarray:
        target = np.zeros(self.dim_out)
        target[: self.dim] = 1.0
        if self.padding == "identity":
            target[:] = 1.0
        return target

    def exact_traces(self) -> List[Fraction]:
        return [sum(row, Fraction(0)) for row in self.diagonals]

    def decomposition(self) -> PsdDecomposition:
        diag = self.diagonal_array()
        matrices = np.zeros((self.count, self.dim_out, self.dim_out))
        idx = np.arange(self.dim_out)
        matrices[:, idx, idx] = diag
        return PsdDecomposition(
            weights=np.array([float(w) for w in self.weights_exact]),
            matrices=matrices,
            target=np.diag(self.target_diagonal()),
            psd=True,
        )

    def params(self) -> Dict[str, Any]:
        return {
            "d": self.requested_dim or self.dim_out,
            "gamma": float(self.gamma),
            "eps": float(self.eps),
            "t": self.t,
            "k": self.k,
            "padding": self.padding,
            "size_bound": self.size_bound,
        }


def log_needed_construction(d: int, gamma: Number, eps: Number, padding: str = "zero") -> LogNeededInstance:
    """
    Build the log-needed family for dimension d (padded when d is not a power of two).

    ``padding="zero"`` places every Q_i in the upper-left 2^t block with
    zeros elsewhere (target I_{2^t} (+) 0); ``padding="identity"`` fills
    the complement of Q_1..Q_{t+1} with gamma I so the target is I_d.
    """
    if padding not in PADDING_MODES:
        raise ValueError(f"padding must be one of {PADDING_MODES}, got {padding!r}")
    t, k = log_needed_parameters(d, gamma, eps)
    g = _exact(gamma)
    e = _exact(eps)
    size = 2 ** t
    signs = sign_sequences(t).tolist()
    a = Fraction(1, 12 * k)

    rows: List[Tuple[Fraction, ...]] = []
    for i in range(t + 1):
        # x = e_i/2 - a with e_{t+1} = 0
        x = [(Fraction(1, 2) if c == i else Fraction(0)) - a for c in range(t)]
        block = [g * (sum((s * xc for s, xc in zip(seq, x)), Fraction(0)) + 1) for seq in signs]
        fill = g if padding == "identity" else Fraction(0)
        rows.append(tuple(block + [fill] * (d - size)))
    rows.append(tuple([Fraction(0)] * d))

    lam = Fraction(1, 6 * k)
    lambdas = [lam] * t + [1 - t * lam]
    weights = tuple([li / g for li in lambdas] + [1 - 1 / g])

    instance = LogNeededInstance(t=t, k=k, gamma=g, eps=e, dim_out=d, padding=padding,
                                 diagonals=tuple(rows), weights_exact=weights, requested_dim=d)
    logger.debug(f"log-needed instance d={d} t={t} k={k} size_bound={instance.size_bound:.4g}")
    return instance


# ---------------------------------------------------------------------------
# Simplex-in-cube contact pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CubeSimplexInstance:
    """
    Points w_i^j = e_i + delta/sqrt(d'-1) * embed_i(p^j - e_1), p^j the columns of H_{d'}.

    ``points[i, j]`` is w_i^j (0-based). Pair index i*d' + j carries
    u = w_i^j and v = e_i with weight 1/(d d').
    """

    d: int
    d_prime: int
    delta: float
    points: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return self.d * self.d_prime

    def pair_index(self, i: int, j: int) -> int:
        return i * self.d_prime + j

    def pair_of(self, index: int) -> Tuple[int, int]:
        return divmod(index, self.d_prime)

    def pairs(self) -> ContactPairDecomposition:
        u = self.points.reshape(self.count, self.d)
        v = np.repeat(np.eye(self.d), self.d_prime, axis=0)
        weights = np.full(self.count, 1.0 / self.count)
        return ContactPairDecomposition(weights=weights, u=u, v=v, balanced=False)

    def matrices(self) -> np.ndarray:
        """Q_ij = d w_i^j (x) e_i stacked in pair-index order."""
        cpd = self.pairs()
        return self.d * diads(cpd.u, cpd.v)

    def decomposition(self) -> PsdDecomposition:
        return PsdDecomposition(weights=np.full(self.count, 1.0 / self.count), matrices=self.matrices(),
                                target=identity(self.d), psd=False)

    def params(self) -> Dict[str, Any]:
        return {"d": self.d, "d_prime": self.d_prime, "delta": self.delta}


def cube_simplex_construction(d: int, delta: float) -> CubeSimplexInstance:
    """Regular simplices of radius delta centred at the facet centres e_i of the cube."""
    if not isinstance(d, (int, np.integer)) or d <= 2:
        raise ValueError(f"cube-simplex construction needs an integer d > 2, got {d}")
    limit = math.sqrt(d / 2.0 - 1.0)
    if not 0 < delta < limit:
        raise ValueError(f"delta must lie in (0, sqrt(d/2 - 1)) = (0, {limit:.6g}), got {delta}")
    d = int(d)
    d_prime = 2 ** (d.bit_length() - 1)
    h = walsh(d_prime).astype(np.float64)
    # column j minus e_1, coordinates 2..d'
    offsets = (h - np.eye(d_prime)[:, [0]])[1:, :].T
    scale = delta / math.sqrt(d_prime - 1)

    points = np.zeros((d, d_prime, d))
    for i in range(d):
        others = [c for c in range(d) if c != i][: d_prime - 1]
        points[i, :, i] = 1.0
        points[i][:, others] = scale * offsets
    points.setflags(write=False)
    return CubeSimplexInstance(d=d, d_prime=d_prime, delta=float(delta), points=points)


def cube_simplex_invariants(inst: CubeSimplexInstance) -> Dict[str, float]:
    """Largest violation of each defining property of the points w_i^j (all zero up to rounding)."""
    eye = np.eye(inst.d)
    offsets = inst.points - eye[:, None, :]
    return {
        "pairing": float(np.max(np.abs(np.einsum("ijc,ic->ij", inst.points, eye) - 1.0))),
        "radius": float(np.max(np.abs(np.linalg.norm(offsets, axis=2) - inst.delta))),
        "cube": float(max(0.0, np.max(np.abs(inst.points)) - 1.0)),
        "centroid": float(np.max(np.abs(inst.points.sum(axis=1) - inst.d_prime * eye))),
    }


def near_ball_contact_pairs(d: int, delta: float) -> Tuple[ContactPairDecomposition, float]:
    """Sign-symmetrised cube-simplex pairs and the distance r = sqrt(1 + delta^2) of their body."""
    instance = cube_simplex_construction(d, delta)
    return symmetrize_contact_pairs(instance.pairs()), math.sqrt(1.0 + delta * delta)


# ---------------------------------------------------------------------------
# Symmetrisation counterexample
# ---------------------------------------------------------------------------

def _counterexample_vectors(d: int, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    eye = np.eye(d)
    u = [eye[0], eye[1]]
    v = [eye[0], eye[1]]
    for i in range(2, d):
        for s in (1.0, -1.0):
            for r in (1.0, -1.0):
                u.append(eye[i] + s * delta * eye[0])
                v.append(eye[i] + r * delta * eye[1])
    return np.array(u), np.array(v)


def symmetrization_counterexample(d: int, delta: float) -> PsdDecomposition:
    """
    Q_1 = 4d e_1 (x) e_1, Q_2 = 4d e_2 (x) e_2, Q_i^{+-+-} = d u_i^+- (x) v_i^+-.

    Every member has weight 1/(4d); a zero member carries the remaining
    6/(4d) so the weights form a probability vector. The sum is I.
    """
    if not isinstance(d, (int, np.integer)) or d < 3:
        raise ValueError(f"symmetrization counterexample needs an integer d >= 3, got {d}")
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    u, v = _counterexample_vectors(int(d), float(delta))
    matrices = d * diads(u, v)
    matrices[:2] *= 4.0
    matrices = np.concatenate([matrices, np.zeros((1, d, d))])
    weights = np.full(matrices.shape[0], 1.0 / (4 * d))
    weights[-1] = 6.0 / (4 * d)
    return PsdDecomposition(weights=weights, matrices=matrices, target=identity(d), psd=False)


def symmetrization_counterexample_pairs(d: int, delta: float) -> ContactPairDecomposition:
    """The same family as contact pairs (alpha = 1/d on e_1, e_2; 1/(4d) on the rest), sign-symmetrised."""
    if not isinstance(d, (int, np.integer)) or d < 3:
        raise ValueError(f"symmetrization counterexample needs an integer d >= 3, got {d}")
    u, v = _counterexample_vectors(int(d), float(delta))
    weights = np.full(u.shape[0], 1.0 / (4 * d))
    weights[:2] = 1.0 / d
    base = ContactPairDecomposition(weights=weights, u=u, v=v, balanced=False)
    return symmetrize_contact_pairs(base)
