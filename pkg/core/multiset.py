"""
Multisets of decomposition indices.

Indices are 0-based throughout the code base.
"""

from collections import Counter
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Tuple

import numpy as np


@dataclass(frozen=True)
class Multiset:
    """Sorted (index, multiplicity) pairs; every multiplicity is at least 1."""

    items: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        previous = -1
        for index, multiplicity in self.items:
            if index <= previous:
                raise ValueError("multiset items must be sorted by strictly increasing index")
            if index < 0:
                raise ValueError(f"multiset index must be non-negative, got {index}")
            if multiplicity < 1:
                raise ValueError(f"multiplicity must be >= 1, got {multiplicity} for index {index}")
            previous = index

    @property
    def size(self) -> int:
        return sum(multiplicity for _, multiplicity in self.items)

    @property
    def support(self) -> List[int]:
        return [index for index, _ in self.items]

    def __len__(self) -> int:
        return self.size

    def __bool__(self) -> bool:
        return bool(self.items)

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> "Multiset":
        counter = Counter(int(i) for i in indices)
        return cls(tuple(sorted(counter.items())))

    @classmethod
    def from_counts(cls, counts) -> "Multiset":
        counts = np.asarray(counts, dtype=np.int64)
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        return cls(tuple((int(i), int(c)) for i, c in enumerate(counts) if c > 0))

    def counts(self, m: int) -> np.ndarray:
        """Dense multiplicity vector of length ``m``."""
        out = np.zeros(m, dtype=np.int64)
        for index, multiplicity in self.items:
            if index >= m:
                raise ValueError(f"multiset index {index} out of range for {m} members")
            out[index] = multiplicity
        return out

    def indices(self) -> List[int]:
        """Every index repeated by its multiplicity, ascending."""
        return [index for index, multiplicity in self.items for _ in range(multiplicity)]

    def to_dict(self) -> Dict[str, Any]:
        return {"items": [[index, multiplicity] for index, multiplicity in self.items], "size": self.size}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Multiset":
        return cls(tuple((int(i), int(c)) for i, c in data["items"]))
