"""Sampling trees of squared magnitudes: logarithmic updates and exact L2 sampling.

Each tree is a flat heap padded to a power of two. Node ``1`` is the root,
node ``i`` has children ``2i`` and ``2i + 1`` and leaves start at
``capacity``. Leaves hold ``value**2`` with the sign kept alongside.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np


class SamplingTree:
    def __init__(self, size: int):
        if size < 1:
            raise ValueError("tree needs at least one leaf")
        self.size = size
        self.depth = max(1, int(np.ceil(np.log2(size)))) if size > 1 else 0
        self.capacity = 1 << self.depth
        self.nodes = np.zeros(2 * self.capacity)
        self.signs = np.ones(size, dtype=np.int8)

    @classmethod
    def build(cls, v) -> "SamplingTree":
        """Tree over ``v`` built bottom-up in ``O(n log n)``."""
        v = np.asarray(v, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("tree entries must be finite")
        tree = cls(v.size)
        cap = tree.capacity
        tree.nodes[cap : cap + v.size] = v * v
        tree.signs[:] = np.where(v < 0, -1, 1)
        for level in range(tree.depth - 1, -1, -1):
            lo, hi = 1 << level, 1 << (level + 1)
            tree.nodes[lo:hi] = tree.nodes[2 * lo : 2 * hi : 2] + tree.nodes[2 * lo + 1 : 2 * hi : 2]
        return tree

    @property
    def root(self) -> float:
        return float(self.nodes[1])

    def leaf(self, i: int) -> tuple[float, int]:
        """``(value**2, sign)`` stored at leaf ``i``."""
        self._check_index(i)
        return float(self.nodes[self.capacity + i]), int(self.signs[i])

    def value(self, i: int) -> float:
        sq, sign = self.leaf(i)
        return sign * float(np.sqrt(sq))

    def values(self) -> np.ndarray:
        cap = self.capacity
        return self.signs * np.sqrt(self.nodes[cap : cap + self.size])

    def update(self, i: int, value: float) -> int:
        """Store ``value`` at leaf ``i``; returns the number of nodes written.

        That is the leaf plus its ``depth`` ancestors.
        """
        self._check_index(i)
        value = float(value)
        if not np.isfinite(value):
            raise ValueError("tree entries must be finite")
        node = self.capacity + i
        self.nodes[node] = value * value
        self.signs[i] = -1 if value < 0 else 1
        touched = 1
        node >>= 1
        while node >= 1:
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1]
            touched += 1
            node >>= 1
        return touched

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        """Leaf index drawn with probability ``value_i**2 / root``.

        Descends from the root comparing a uniform draw against left-child
        partial sums. With ``size`` given, returns an array of draws.
        """
        total = self.nodes[1]
        if total <= 0:
            raise ValueError("cannot sample from a zero-norm tree")
        count = 1 if size is None else int(size)
        u = rng.random(count) * total
        node = np.ones(count, dtype=np.int64)
        for _ in range(self.depth):
            left = 2 * node
            left_mass = self.nodes[left]
            # Never branch into a zero-mass subtree, even when rounding says so.
            go_right = (u >= left_mass) & (self.nodes[left + 1] > 0)
            u = np.where(go_right, u - left_mass, u)
            node = np.where(go_right, left + 1, left)
        idx = node - self.capacity
        return int(idx[0]) if size is None else idx

    def check_invariant(self, rtol: float = 1e-12) -> bool:
        """Every internal node equals the sum of its two children."""
        for level in range(self.depth):
            lo, hi = 1 << level, 1 << (level + 1)
            parents = self.nodes[lo:hi]
            sums = self.nodes[2 * lo : 2 * hi : 2] + self.nodes[2 * lo + 1 : 2 * hi : 2]
            if not np.allclose(parents, sums, rtol=rtol, atol=0.0):
                return False
        return True

    def _check_index(self, i: int):
        if not 0 <= i < self.size:
            raise IndexError(f"leaf index {i} out of range for tree of size {self.size}")


class MatrixStore:
    """One sampling tree per row plus a tree over squared row norms."""

    def __init__(self, M):
        M = np.asarray(M, dtype=float)
        if M.ndim != 2:
            raise ValueError("MatrixStore expects a 2-D matrix")
        self.shape = M.shape
        self.row_trees = [SamplingTree.build(row) for row in M]
        self.norm_tree = SamplingTree.build(np.sqrt([t.root for t in self.row_trees]))

    def entry(self, i: int, j: int) -> float:
        return self.row_trees[i].value(j)

    def to_dense(self) -> np.ndarray:
        return np.vstack([t.values() for t in self.row_trees])

    def update(self, i: int, j: int, value: float) -> None:
        self.row_trees[i].update(j, value)
        self.norm_tree.update(i, np.sqrt(self.row_trees[i].root))

    def bulk_update(self, entries: Iterable[tuple[int, int, float]]) -> int:
        """Write several entries, refreshing each touched row norm once.

        Returns the number of leaves written.
        """
        touched = 0
        dirty_rows = set()
        for i, j, value in entries:
            self.row_trees[i].update(j, value)
            dirty_rows.add(i)
            touched += 1
        for i in sorted(dirty_rows):
            self.norm_tree.update(i, np.sqrt(self.row_trees[i].root))
        return touched

    @property
    def frobenius_squared(self) -> float:
        return self.norm_tree.root

    def frobenius(self) -> float:
        return float(np.sqrt(self.norm_tree.root))

    def row_sample(self, rng: np.random.Generator, size: Optional[int] = None):
        """Draw ``(row, col)`` with probability ``M_ij**2 / ||M||_F**2``."""
        if self.norm_tree.root <= 0:
            raise ValueError("cannot sample from a zero matrix")
        rows = self.norm_tree.sample(rng, size=1 if size is None else size)
        rows = np.atleast_1d(rows)
        cols = np.empty_like(rows)
        for r in np.unique(rows):
            mask = rows == r
            cols[mask] = self.row_trees[r].sample(rng, size=int(mask.sum()))
        if size is None:
            return int(rows[0]), int(cols[0])
        return rows, cols
