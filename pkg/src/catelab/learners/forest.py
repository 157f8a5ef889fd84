"""Honest random-forest regression.

Each tree draws a subsample without replacement and splits it into a
*structure* half and an *estimation* half.  The tree shape (greedy
variance-reduction splits over a random feature subset, midpoint thresholds)
is chosen using structure rows only; leaf predictions are means over the
estimation rows routed into each leaf, so the partition is independent of the
values it predicts.  Estimation-empty leaves inherit the nearest ancestor's
estimation mean.

Trees are stored as flat arrays (feature < 0 marks a leaf) and grown inside
numba kernels; growth is parallel over trees and deterministic for a fixed
seed regardless of thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit, prange

from ..errors import InvalidDataError
from ..rng import child_rng

__all__ = ["ForestParams", "HonestForest", "honest_forest", "Forest"]


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 500
    min_leaf: int = 5
    mtry: int | None = None  # defaults to ceil(d / 3) at fit time
    honesty_fraction: float = 0.5
    subsample_fraction: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.n_trees < 1:
            raise InvalidDataError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_leaf < 1:
            raise InvalidDataError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if not 0.0 < self.honesty_fraction < 1.0:
            raise InvalidDataError(
                f"honesty_fraction must be in (0, 1), got {self.honesty_fraction}"
            )
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise InvalidDataError(
                f"subsample_fraction must be in (0, 1], got {self.subsample_fraction}"
            )
        if self.mtry is not None and self.mtry < 1:
            raise InvalidDataError(f"mtry must be >= 1, got {self.mtry}")


# ---------------------------------------------------------------------------
# numba kernels


@njit(cache=True, inline="always")
def _mix_next(state):
    # splitmix64 step; uint64 arithmetic wraps like C
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True)
def _grow_tree(
    X,
    y,
    struct_idx,
    min_leaf,
    mtry,
    seed,
    feature,
    threshold,
    left,
    right,
    parent,
):
    n_struct = struct_idx.shape[0]
    d = X.shape[1]
    buf = struct_idx.copy()

    max_nodes = feature.shape[0]
    stack_node = np.empty(max_nodes, np.int32)
    stack_lo = np.empty(max_nodes, np.int32)
    stack_hi = np.empty(max_nodes, np.int32)

    feat_pool = np.arange(d).astype(np.int32)
    cand = np.empty(mtry, np.int32)
    vals = np.empty(n_struct, np.float64)
    ys = np.empty(n_struct, np.float64)

    rng = np.uint64(seed)

    n_nodes = 1
    parent[0] = -1
    sp = 0
    stack_node[sp] = 0
    stack_lo[sp] = 0
    stack_hi[sp] = n_struct
    sp += 1

    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        lo = stack_lo[sp]
        hi = stack_hi[sp]
        size = hi - lo

        feature[node] = -1  # leaf unless a usable split is found
        if size < 2 * min_leaf:
            continue

        # draw mtry distinct candidate features, then visit them in ascending
        # order so gain ties resolve to the lowest feature index
        for j in range(mtry):
            rng, z = _mix_next(rng)
            swap = j + int(z % np.uint64(d - j))
            tmp = feat_pool[j]
            feat_pool[j] = feat_pool[swap]
            feat_pool[swap] = tmp
            cand[j] = feat_pool[j]
        cand[:mtry].sort()

        total = 0.0
        for i in range(size):
            total += y[buf[lo + i]]
        parent_score = total * total / size

        best_score = parent_score
        best_feat = -1
        best_thr = 0.0

        for cj in range(mtry):
            f = cand[cj]
            for i in range(size):
                row = buf[lo + i]
                vals[i] = X[row, f]
                ys[i] = y[row]
            order = np.argsort(vals[:size])
            left_sum = 0.0
            for i in range(size - 1):
                left_sum += ys[order[i]]
                cnt = i + 1
                if cnt < min_leaf:
                    continue
                if size - cnt < min_leaf:
                    break
                vlo = vals[order[i]]
                vhi = vals[order[i + 1]]
                if vhi > vlo:
                    rest = total - left_sum
                    score = left_sum * left_sum / cnt + rest * rest / (size - cnt)
                    if score > best_score:
                        best_score = score
                        best_feat = f
                        best_thr = 0.5 * (vlo + vhi)

        if best_feat < 0:
            continue  # no variance-reducing split; stays a leaf

        # partition buf[lo:hi] around the chosen threshold
        i = lo
        j = hi - 1
        while i <= j:
            if X[buf[i], best_feat] <= best_thr:
                i += 1
            else:
                tmp2 = buf[i]
                buf[i] = buf[j]
                buf[j] = tmp2
                j -= 1
        mid = i

        if mid == lo or mid == hi:
            # midpoint of two adjacent floats can round onto the upper value,
            # leaving one side empty; treat the node as a leaf rather than
            # recurse on a non-partition
            continue

        lchild = n_nodes
        rchild = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = lchild
        right[node] = rchild
        parent[lchild] = node
        parent[rchild] = node

        stack_node[sp] = lchild
        stack_lo[sp] = lo
        stack_hi[sp] = mid
        sp += 1
        stack_node[sp] = rchild
        stack_lo[sp] = mid
        stack_hi[sp] = hi
        sp += 1

    return n_nodes


@njit(cache=True)
def _leaf_values(X, y, est_idx, feature, threshold, left, right, parent, value, n_nodes):
    sums = np.zeros(n_nodes, np.float64)
    counts = np.zeros(n_nodes, np.int64)
    for e in range(est_idx.shape[0]):
        row = est_idx[e]
        node = 0
        while True:
            sums[node] += y[row]
            counts[node] += 1
            f = feature[node]
            if f < 0:
                break
            if X[row, f] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
    for node in range(n_nodes):
        anc = node
        while anc >= 0 and counts[anc] == 0:
            anc = parent[anc]
        if anc >= 0:
            value[node] = sums[anc] / counts[anc]
        else:
            value[node] = 0.0


@njit(cache=True, parallel=True)
def _fit_forest(
    X,
    y,
    struct_mat,
    est_mat,
    min_leaf,
    mtry,
    seeds,
    features,
    thresholds,
    lefts,
    rights,
    parents,
    values,
    n_nodes_out,
):
    n_trees = struct_mat.shape[0]
    for t in prange(n_trees):
        n_nodes = _grow_tree(
            X,
            y,
            struct_mat[t],
            min_leaf,
            mtry,
            seeds[t],
            features[t],
            thresholds[t],
            lefts[t],
            rights[t],
            parents[t],
        )
        n_nodes_out[t] = n_nodes
        _leaf_values(
            X,
            y,
            est_mat[t],
            features[t],
            thresholds[t],
            lefts[t],
            rights[t],
            parents[t],
            values[t],
            n_nodes,
        )


@njit(cache=True, parallel=True)
def _predict_forest(Xq, features, thresholds, lefts, rights, values):
    # trees in the outer (parallel) loop keeps each tree's arrays cache-hot
    n_q = Xq.shape[0]
    n_trees = features.shape[0]
    acc = np.zeros((n_trees, n_q), np.float64)
    for t in prange(n_trees):
        for q in range(n_q):
            node = 0
            while features[t, node] >= 0:
                if Xq[q, features[t, node]] <= thresholds[t, node]:
                    node = lefts[t, node]
                else:
                    node = rights[t, node]
            acc[t, q] = values[t, node]
    out = np.zeros(n_q, np.float64)
    for t in range(n_trees):
        for q in range(n_q):
            out[q] += acc[t, q]
    return out / n_trees


@njit(cache=True, parallel=True)
def _fraction_without_feature(Xq, features, thresholds, lefts, rights, feat):
    n_q = Xq.shape[0]
    n_trees = features.shape[0]
    out = np.empty(n_trees, np.float64)
    for t in prange(n_trees):
        clean = 0
        for q in range(n_q):
            node = 0
            used = False
            while features[t, node] >= 0:
                f = features[t, node]
                if f == feat:
                    used = True
                    break
                if Xq[q, f] <= thresholds[t, node]:
                    node = lefts[t, node]
                else:
                    node = rights[t, node]
            if not used:
                clean += 1
        out[t] = clean / n_q
    return out


# ---------------------------------------------------------------------------
# model


@dataclass
class HonestForest:
    params: ForestParams
    dim: int
    features_arr: np.ndarray  # (n_trees, max_nodes) int32, -1 for leaves
    thresholds_arr: np.ndarray
    lefts_arr: np.ndarray
    rights_arr: np.ndarray
    values_arr: np.ndarray
    n_nodes: np.ndarray
    target_min: float
    target_max: float
    feature_min: np.ndarray
    feature_max: np.ndarray

    @property
    def n_trees(self) -> int:
        return self.features_arr.shape[0]

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=float)))
        if x.shape[1] != self.dim:
            raise InvalidDataError(
                f"query has {x.shape[1]} columns, model was fit with {self.dim}"
            )
        # chunk queries so the per-tree accumulator stays small
        chunk = 16384
        if x.shape[0] <= chunk:
            return _predict_forest(
                x,
                self.features_arr,
                self.thresholds_arr,
                self.lefts_arr,
                self.rights_arr,
                self.values_arr,
            )
        parts = [
            _predict_forest(
                x[lo : lo + chunk],
                self.features_arr,
                self.thresholds_arr,
                self.lefts_arr,
                self.rights_arr,
                self.values_arr,
            )
            for lo in range(0, x.shape[0], chunk)
        ]
        return np.concatenate(parts)

    def fraction_paths_without_feature(self, probes: np.ndarray, feat: int) -> np.ndarray:
        """Per tree: share of probe points whose root-to-leaf path never tests ``feat``."""
        probes = np.ascontiguousarray(np.atleast_2d(np.asarray(probes, dtype=float)))
        if probes.shape[1] != self.dim:
            raise InvalidDataError(
                f"probes have {probes.shape[1]} columns, model was fit with {self.dim}"
            )
        if not 0 <= feat < self.dim:
            raise InvalidDataError(f"feature index {feat} out of range [0, {self.dim})")
        return _fraction_without_feature(
            probes,
            self.features_arr,
            self.thresholds_arr,
            self.lefts_arr,
            self.rights_arr,
            feat,
        )


def honest_forest(
    features: np.ndarray, targets: np.ndarray, params: ForestParams | None = None
) -> HonestForest:
    """Fit an honest random forest (see module docstring for the protocol)."""
    params = params or ForestParams()
    params.validate()
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(features, dtype=float)))
    y = np.ascontiguousarray(np.asarray(targets, dtype=float))
    n, d = x.shape
    if y.shape != (n,):
        raise InvalidDataError(f"{n} rows vs {y.shape} targets")
    if n < 2:
        # the only hard requirement: enough rows for a nonempty structure and
        # estimation half (a min_leaf larger than the structure half is legal
        # and yields single-leaf trees)
        raise InvalidDataError("need at least 2 rows to fit an honest forest")

    n_sub = max(2, int(round(n * params.subsample_fraction)))
    n_est = min(n_sub - 1, max(1, int(round(n_sub * params.honesty_fraction))))
    n_struct = n_sub - n_est
    mtry = params.mtry if params.mtry is not None else max(1, math.ceil(d / 3))
    mtry = min(mtry, d)

    n_trees = params.n_trees
    struct_mat = np.empty((n_trees, n_struct), np.int32)
    est_mat = np.empty((n_trees, n_est), np.int32)
    seeds = np.empty(n_trees, np.uint64)
    for t in range(n_trees):
        rng = child_rng(params.seed, t)
        perm = rng.permutation(n)[:n_sub]
        struct_mat[t] = perm[:n_struct]
        est_mat[t] = perm[n_struct:]
        seeds[t] = rng.integers(0, 2**63, dtype=np.uint64)

    max_nodes = 2 * max(1, n_struct // params.min_leaf) + 1
    features_arr = np.full((n_trees, max_nodes), -1, np.int32)
    thresholds_arr = np.zeros((n_trees, max_nodes), np.float64)
    lefts_arr = np.zeros((n_trees, max_nodes), np.int32)
    rights_arr = np.zeros((n_trees, max_nodes), np.int32)
    parents_arr = np.full((n_trees, max_nodes), -1, np.int32)
    values_arr = np.zeros((n_trees, max_nodes), np.float64)
    n_nodes = np.zeros(n_trees, np.int64)

    _fit_forest(
        x,
        y,
        struct_mat,
        est_mat,
        params.min_leaf,
        mtry,
        seeds,
        features_arr,
        thresholds_arr,
        lefts_arr,
        rights_arr,
        parents_arr,
        values_arr,
        n_nodes,
    )

    return HonestForest(
        params=params,
        dim=d,
        features_arr=features_arr,
        thresholds_arr=thresholds_arr,
        lefts_arr=lefts_arr,
        rights_arr=rights_arr,
        values_arr=values_arr,
        n_nodes=n_nodes,
        target_min=float(y.min()),
        target_max=float(y.max()),
        feature_min=x.min(axis=0),
        feature_max=x.max(axis=0),
    )


@dataclass(frozen=True)
class Forest:
    """Base-learner factory for :func:`honest_forest`."""

    params: ForestParams = ForestParams()

    def fit(self, features: np.ndarray, targets: np.ndarray) -> HonestForest:
        return honest_forest(features, targets, self.params)

    def reseeded(self, seed: int) -> "Forest":
        return Forest(params=replace(self.params, seed=seed))
