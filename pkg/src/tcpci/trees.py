"""Least-squares regression trees grown best-first to a leaf budget.

The tree is the shared weak learner for both the ranking model and the
commit classifier.  Growth is best-first: candidate splits across all open
leaves sit in one priority queue keyed by sum-of-squared-error reduction,
and the leaf with the largest reduction is split next until ``max_leaves``
is reached.  Split finding is vectorized over features with per-column
argsort and prefix sums.  Everything is deterministic for a fixed input.
"""

from __future__ import annotations

import heapq

import numpy as np


def _best_split(X: np.ndarray, y: np.ndarray) -> tuple[float, int, float] | None:
    """Best (gain, feature, threshold) for one node, or None if unsplittable.

    Gain is the SSE reduction.  Ties resolve to the lowest (sorted-position,
    feature) pair, which is deterministic.
    """
    n, d = X.shape
    if n < 2:
        return None
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    ys = y[order]
    csum = np.cumsum(ys, axis=0)
    total = csum[-1]
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    s_left = csum[:-1]
    s_right = total[None, :] - s_left
    score = s_left**2 / n_left + s_right**2 / (n - n_left)
    valid = xs[1:] != xs[:-1]
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    flat = int(np.argmax(score))
    i, j = divmod(flat, d)
    parent = float(total[j]) ** 2 / n
    gain = float(score[i, j]) - parent
    if gain <= 1e-12:
        return None
    threshold = float(xs[i, j] + xs[i + 1, j]) / 2.0
    return gain, j, threshold


class RegressionTree:
    """A fitted tree; nodes stored as parallel arrays, JSON-serializable."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray, max_leaves: int) -> "RegressionTree":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if max_leaves < 1:
            raise ValueError("max_leaves must be >= 1")
        feature = [-1]
        threshold = [0.0]
        left = [-1]
        right = [-1]
        value = [float(y.mean()) if len(y) else 0.0]

        heap: list = []
        counter = 0

        def consider(node: int, rows: np.ndarray):
            nonlocal counter
            split = _best_split(X[rows], y[rows])
            if split is not None:
                gain, feat, thr = split
                heapq.heappush(heap, (-gain, counter, node, feat, thr, rows))
                counter += 1

        consider(0, np.arange(len(y)))
        n_leaves = 1
        while heap and n_leaves < max_leaves:
            _, _, node, feat, thr, rows = heapq.heappop(heap)
            mask = X[rows, feat] <= thr
            l_rows, r_rows = rows[mask], rows[~mask]
            if len(l_rows) == 0 or len(r_rows) == 0:
                # midpoint collapsed onto a data value (adjacent floats)
                continue
            for child_rows in (l_rows, r_rows):
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(float(y[child_rows].mean()))
            feature[node] = feat
            threshold[node] = thr
            left[node] = len(feature) - 2
            right[node] = len(feature) - 1
            n_leaves += 1
            consider(left[node], l_rows)
            consider(right[node], r_rows)
        return cls(feature, threshold, left, right, value)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(len(X), dtype=np.float64)
        stack = [(0, np.arange(len(X)))]
        while stack:
            node, idx = stack.pop()
            if self.feature[node] < 0:
                out[idx] = self.value[node]
                continue
            mask = X[idx, self.feature[node]] <= self.threshold[node]
            stack.append((self.left[node], idx[mask]))
            stack.append((self.right[node], idx[~mask]))
        return out

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def split_counts(self, n_features: int) -> np.ndarray:
        """How often each feature index is used as a split."""
        counts = np.zeros(n_features, dtype=np.int64)
        for f in self.feature:
            if f >= 0:
                counts[f] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])
