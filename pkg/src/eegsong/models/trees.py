"""Decision trees grown on presorted features, plus gradient boosting.

Trees are stored as flat parallel arrays (feature, threshold, left, right,
value) so prediction is a vectorized walk and serialization is plain numpy.
Split ties are broken toward the smallest feature index, then the smallest
threshold, so training is deterministic for a fixed input.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .common import FitError, one_hot, softmax

LEAF = -1


@dataclass(frozen=True)
class FlatTree:
    feature: np.ndarray  # int, LEAF at leaves
    threshold: np.ndarray  # float, 0.0 at leaves
    left: np.ndarray  # int child ids, LEAF at leaves
    right: np.ndarray
    value: np.ndarray  # (n_nodes,) regression mean or (n_nodes, C) class fractions

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]


def _node_rows_sorted(sorted_idx: np.ndarray, member: np.ndarray) -> np.ndarray:
    """Row indices of one node, one column per feature, each column sorted by
    that feature.  sorted_idx is the global (n, d) presort."""
    keep = member[sorted_idx]
    m = int(member.sum())
    d = sorted_idx.shape[1]
    return sorted_idx.T[keep.T].reshape(d, m).T


def _best_split_gini(
    X: np.ndarray,
    y_idx: np.ndarray,
    rows_sorted: np.ndarray,
    n_classes: int,
    min_leaf: int,
) -> tuple[int, float, float] | None:
    m, d = rows_sorted.shape
    if m < 2 * min_leaf:
        return None
    total = np.bincount(y_idx[rows_sorted[:, 0]], minlength=n_classes).astype(float)
    parent_impurity = 1.0 - np.sum((total / m) ** 2)
    if parent_impurity == 0.0:
        return None
    best = None
    best_gain = 0.0
    positions = np.arange(min_leaf, m - min_leaf + 1)
    for j in range(d):
        order = rows_sorted[:, j]
        vals = X[order, j]
        prefix = np.cumsum(one_hot(y_idx[order], n_classes), axis=0)
        left = prefix[positions - 1]
        right = total - left
        n_left = positions.astype(float)
        n_right = m - n_left
        gini_left = 1.0 - np.sum(left**2, axis=1) / n_left**2
        gini_right = 1.0 - np.sum(right**2, axis=1) / n_right**2
        weighted = (n_left * gini_left + n_right * gini_right) / m
        gain = parent_impurity - weighted
        # a split must separate distinct values
        splittable = vals[positions - 1] < vals[positions]
        gain[~splittable] = -np.inf
        if not splittable.any():
            continue
        at = int(np.argmax(gain))
        if gain[at] > best_gain + 1e-12:
            best_gain = gain[at]
            cut = positions[at]
            best = (j, 0.5 * (vals[cut - 1] + vals[cut]), best_gain)
    return best


def _best_split_mse(
    X: np.ndarray,
    g: np.ndarray,
    rows_sorted: np.ndarray,
    min_leaf: int,
) -> tuple[int, float, float] | None:
    m, d = rows_sorted.shape
    if m < 2 * min_leaf:
        return None
    G = g[rows_sorted]  # (m, d): node targets ordered per feature
    vals = X[rows_sorted, np.arange(d)[None, :]]
    total = float(G[:, 0].sum())
    base_score = total * total / m
    prefix = np.cumsum(G, axis=0)
    positions = np.arange(min_leaf, m - min_leaf + 1)
    s_left = prefix[positions - 1]  # (P, d)
    n_left = positions[:, None].astype(float)
    n_right = m - n_left
    # minimizing squared error == maximizing sum of per-side sum^2/count
    score = s_left**2 / n_left + (total - s_left) ** 2 / n_right
    score[vals[positions - 1] >= vals[positions]] = -np.inf
    flat = score.T.ravel()  # feature-major so argmax honors the tie order
    at = int(np.argmax(flat))
    if not np.isfinite(flat[at]) or flat[at] <= base_score + 1e-12:
        return None
    j, pos_at = divmod(at, positions.shape[0])
    cut = positions[pos_at]
    return j, 0.5 * (vals[cut - 1, j] + vals[cut, j]), float(flat[at])


def grow_tree(
    X: np.ndarray,
    target: np.ndarray,
    mode: str,
    max_depth: int,
    min_leaf: int,
    n_classes: int = 0,
    sorted_idx: np.ndarray | None = None,
) -> FlatTree:
    """Grow one CART tree.  mode 'gini' classifies integer class indices in
    target; mode 'mse' regresses on float targets.  Callers fitting many trees
    on one matrix should presort it once and pass sorted_idx."""
    n = X.shape[0]
    if n == 0:
        raise FitError("cannot grow a tree on an empty sample")
    if sorted_idx is None:
        sorted_idx = np.argsort(X, axis=0, kind="stable")
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[np.ndarray | float] = []

    def leaf_value(member: np.ndarray):
        if mode == "gini":
            counts = np.bincount(target[member], minlength=n_classes).astype(float)
            return counts / counts.sum()
        return float(target[member].mean())

    # (member mask, depth, slot in the child arrays to patch)
    root_member = np.ones(n, dtype=bool)
    stack = [(root_member, 0, None, None)]
    while stack:
        member, depth, parent, side = stack.pop()
        node_id = len(feature)
        if parent is not None:
            if side == "L":
                left[parent] = node_id
            else:
                right[parent] = node_id
        split = None
        if depth < max_depth:
            rows_sorted = _node_rows_sorted(sorted_idx, member)
            if mode == "gini":
                split = _best_split_gini(X, target, rows_sorted, n_classes, min_leaf)
            else:
                split = _best_split_mse(X, target, rows_sorted, min_leaf)
        if split is None:
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(leaf_value(member))
            continue
        j, cut, _ = split
        feature.append(j)
        threshold.append(cut)
        left.append(LEAF)
        right.append(LEAF)
        value.append(leaf_value(member))
        go_left = member & (X[:, j] <= cut)
        go_right = member & ~(X[:, j] <= cut)
        # push right first so the left child is materialized first
        stack.append((go_right, depth + 1, node_id, "R"))
        stack.append((go_left, depth + 1, node_id, "L"))

    value_arr = np.asarray(value, dtype=np.float64)
    return FlatTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=value_arr,
    )


def tree_apply(tree: FlatTree, X: np.ndarray) -> np.ndarray:
    """Leaf node id for each row, computed as a vectorized level walk."""
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        feat = tree.feature[node]
        active = feat != LEAF
        if not active.any():
            return node
        rows = np.nonzero(active)[0]
        f = feat[rows]
        goes_left = X[rows, f] <= tree.threshold[node[rows]]
        node[rows] = np.where(
            goes_left, tree.left[node[rows]], tree.right[node[rows]]
        )


def tree_predict_value(tree: FlatTree, X: np.ndarray) -> np.ndarray:
    return tree.value[tree_apply(tree, X)]


def trees_to_arrays(trees: list[FlatTree]) -> dict[str, np.ndarray]:
    """Pack a forest into flat arrays with an offset index."""
    counts = np.asarray([t.n_nodes for t in trees], dtype=np.int64)
    return {
        "tree_counts": counts,
        "feature": np.concatenate([t.feature for t in trees]),
        "threshold": np.concatenate([t.threshold for t in trees]),
        "left": np.concatenate([t.left for t in trees]),
        "right": np.concatenate([t.right for t in trees]),
        "value": np.concatenate(
            [np.atleast_1d(t.value).reshape(t.n_nodes, -1) for t in trees]
        ),
    }


def arrays_to_trees(arrays: dict[str, np.ndarray]) -> list[FlatTree]:
    counts = arrays["tree_counts"]
    offsets = np.concatenate([[0], np.cumsum(counts)])
    trees = []
    for i in range(counts.shape[0]):
        lo, hi = offsets[i], offsets[i + 1]
        value = arrays["value"][lo:hi]
        if value.shape[1] == 1:
            value = value[:, 0]
        trees.append(
            FlatTree(
                feature=arrays["feature"][lo:hi],
                threshold=arrays["threshold"][lo:hi],
                left=arrays["left"][lo:hi],
                right=arrays["right"][lo:hi],
                value=value,
            )
        )
    return trees


def fit_classification_tree(
    X: np.ndarray, y_idx: np.ndarray, n_classes: int, max_depth: int, min_leaf: int
) -> FlatTree:
    return grow_tree(X, y_idx, "gini", max_depth, min_leaf, n_classes=n_classes)


def _newton_leaf_values(
    tree: FlatTree, leaf_ids: np.ndarray, residual: np.ndarray, n_classes: int
) -> FlatTree:
    """Replace leaf means with the one-step Newton estimate for the softmax
    cross-entropy objective: (K-1)/K * sum(r) / sum(|r|(1-|r|))."""
    value = tree.value.copy()
    scale = (n_classes - 1) / n_classes
    for leaf in np.unique(leaf_ids):
        r = residual[leaf_ids == leaf]
        denom = float(np.sum(np.abs(r) * (1.0 - np.abs(r))))
        value[leaf] = 0.0 if denom < 1e-150 else scale * float(r.sum()) / denom
    return replace(tree, value=value)


def fit_gradient_boosting(
    X: np.ndarray,
    y_idx: np.ndarray,
    n_classes: int,
    rounds: int,
    depth: int,
    learning_rate: float,
) -> tuple[list[list[FlatTree]], np.ndarray]:
    """Additive model on the softmax cross-entropy objective.

    Each round fits one shallow regression tree per class to the negative
    gradient (one-hot minus predicted probability), then sets each leaf by a
    single Newton step on that objective.  Returns the forest as rounds x
    classes and the training loss after each round.
    """
    n = X.shape[0]
    targets = one_hot(y_idx, n_classes)
    logits = np.zeros((n, n_classes))
    forest: list[list[FlatTree]] = []
    losses = np.empty(rounds)
    sorted_idx = np.argsort(X, axis=0, kind="stable")
    for r in range(rounds):
        proba = softmax(logits)
        residual = targets - proba
        round_trees = []
        for c in range(n_classes):
            t = grow_tree(X, residual[:, c], "mse", depth, 1, sorted_idx=sorted_idx)
            leaf_ids = tree_apply(t, X)
            t = _newton_leaf_values(t, leaf_ids, residual[:, c], n_classes)
            logits[:, c] += learning_rate * t.value[leaf_ids]
            round_trees.append(t)
        forest.append(round_trees)
        proba = softmax(logits)
        losses[r] = -np.mean(
            np.log(np.clip(proba[np.arange(n), y_idx], 1e-300, None))
        )
    return forest, losses


def gboost_logits(
    forest: list[list[FlatTree]], learning_rate: float, X: np.ndarray, n_classes: int
) -> np.ndarray:
    logits = np.zeros((X.shape[0], n_classes))
    for round_trees in forest:
        for c, t in enumerate(round_trees):
            logits[:, c] += learning_rate * tree_predict_value(t, X)
    return logits
