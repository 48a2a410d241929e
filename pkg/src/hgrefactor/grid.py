"""Dyadic level structure over per-dimension node coordinates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAX_DIMS = 3


def _dyadic_exponent(n: int) -> int | None:
    """Return k if n == 2**k + 1, else None."""
    m = n - 1
    if m < 1 or m & (m - 1):
        return None
    return m.bit_length() - 1


@dataclass(frozen=True)
class GridHierarchy:
    """Nested node sets on a tensor-product grid.

    Level ``levels`` is the full grid; each coarser level keeps every other
    node along every dimension, so level ``l`` uses index stride
    ``2**(levels - l)`` in all dimensions.  Dimensions with more refinement
    than the shallowest one simply keep more nodes at level 0.
    """

    coords: tuple[np.ndarray, ...]
    exponents: tuple[int, ...]
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @property
    def ndim(self) -> int:
        return len(self.coords)

    @property
    def levels(self) -> int:
        return min(self.exponents)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.coords)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def _check_level(self, l: int) -> None:
        if not 0 <= l <= self.levels:
            raise ValueError(f"level {l} out of range [0, {self.levels}]")

    def stride(self, l: int) -> int:
        self._check_level(l)
        return 1 << (self.levels - l)

    def level_shape(self, l: int) -> tuple[int, ...]:
        s = self.stride(l)
        return tuple((n - 1) // s + 1 for n in self.shape)

    def level_indices(self, l: int, d: int) -> np.ndarray:
        """Finest-grid indices of the level-``l`` nodes along dimension ``d``."""
        return np.arange(0, self.shape[d], self.stride(l))

    def level_slices(self, l: int) -> tuple[slice, ...]:
        """Strided view selector for the level-``l`` nodes of a finest array."""
        s = self.stride(l)
        return tuple(slice(None, None, s) for _ in range(self.ndim))

    def level_coords(self, l: int, d: int) -> np.ndarray:
        return self.coords[d][:: self.stride(l)]

    def spacings(self, l: int, d: int) -> np.ndarray:
        key = ("h", l, d)
        if key not in self._cache:
            h = np.diff(self.level_coords(l, d))
            h.setflags(write=False)
            self._cache[key] = h
        return self._cache[key]

    def class_count(self) -> int:
        return self.levels + 1

    def class_size(self, l: int) -> int:
        """Number of nodes introduced at level ``l`` (all of N_0 for l == 0)."""
        n = int(np.prod(self.level_shape(l)))
        if l == 0:
            return n
        return n - int(np.prod(self.level_shape(l - 1)))


def build_hierarchy(coords_per_dim: Sequence[Sequence[float]]) -> GridHierarchy:
    """Validate per-dimension coordinates and build the level structure."""
    if isinstance(coords_per_dim, np.ndarray) and coords_per_dim.ndim == 1:
        coords_per_dim = [coords_per_dim]
    coords_per_dim = list(coords_per_dim)
    if not 1 <= len(coords_per_dim) <= MAX_DIMS:
        raise ValueError(f"expected 1 to {MAX_DIMS} dimensions, got {len(coords_per_dim)}")
    coords = []
    exponents = []
    for d, c in enumerate(coords_per_dim):
        a = np.array(c, dtype=np.float64).reshape(-1)
        k = _dyadic_exponent(a.size)
        if k is None:
            raise ValueError(
                f"dimension size must be 2^k+1 (dimension {d} has {a.size} nodes)"
            )
        if not np.all(np.isfinite(a)):
            raise ValueError(f"coordinates along dimension {d} must be finite")
        if np.any(np.diff(a) <= 0):
            raise ValueError(f"coordinates along dimension {d} must be strictly increasing")
        a.setflags(write=False)
        coords.append(a)
        exponents.append(k)
    return GridHierarchy(tuple(coords), tuple(exponents))


def uniform_hierarchy(shape: Sequence[int]) -> GridHierarchy:
    """Hierarchy with coordinates 0..n-1 along each dimension."""
    return build_hierarchy([np.arange(n, dtype=np.float64) for n in shape])


def level_spacings(h: GridHierarchy, l: int, d: int) -> np.ndarray:
    """Spacings between consecutive level-``l`` nodes along dimension ``d``."""
    if not 0 <= d < h.ndim:
        raise ValueError(f"dimension {d} out of range for {h.ndim}-D grid")
    return h.spacings(l, d)
