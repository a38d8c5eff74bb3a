"""Weighted-Gini CART classifier with weakest-link (cost-complexity) pruning.

Nodes are stored in depth-first pre-order, so the descendants of node ``t``
occupy the contiguous index range ``t + 1 .. end[t] - 1``.  A point goes to
the left child when ``x[feature] <= threshold``.

Resubstitution risk of a node is its misclassified weighted mass divided by
the root mass; the complexity parameter ``alpha`` is in the same units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import ClassWeights, LabeledDataset
from ..errors import DomainError
from .base import TrainConfig, _as_points

__all__ = ["TreeModel", "train_tree", "grow_tree", "prune_tree", "pruning_path", "select_ccp_alpha"]

_REL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TreeModel:
    kind = "tree"

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    mass_plus: np.ndarray
    mass_minus: np.ndarray
    dim: int
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("feature", "left", "right"):
            a = np.array(getattr(self, name), dtype=np.int64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        for name in ("threshold", "mass_plus", "mass_minus"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        leaves = self.feature < 0
        if np.any(self.mass_plus[leaves] + self.mass_minus[leaves] <= 0):
            raise DomainError("every leaf needs positive weighted mass")

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature < 0))

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X, _ = _as_points(X, self.dim)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            internal = f >= 0
            if not np.any(internal):
                return node
            r, nd = rows[internal], node[internal]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[internal] = np.where(go_left, self.left[nd], self.right[nd])

    def decision_function(self, X) -> np.ndarray:
        leaf = self.apply(X)
        p, m = self.mass_plus[leaf], self.mass_minus[leaf]
        return (p - m) / (p + m)

    def to_dict(self) -> dict:
        return {
            "kind": "tree",
            "dim": self.dim,
            "nodes": [
                {
                    "feature": int(self.feature[t]),
                    "threshold": float(self.threshold[t]),
                    "left": int(self.left[t]),
                    "right": int(self.right[t]),
                    "mass_plus": float(self.mass_plus[t]),
                    "mass_minus": float(self.mass_minus[t]),
                }
                for t in range(self.n_nodes)
            ],
            "info": {k: v for k, v in self.info.items() if isinstance(v, (int, float, bool, str))},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        nodes = d["nodes"]
        cols = {k: [n[k] for n in nodes] for k in ("feature", "threshold", "left", "right", "mass_plus", "mass_minus")}
        return cls(dim=int(d["dim"]), info=dict(d.get("info", {})), **cols)


# -- growing -----------------------------------------------------------------


def _best_split(X, wp, wm, min_leaf):
    """Lowest child Gini cost over all (feature, threshold) pairs.

    Ties go to the lowest feature index, then the lowest threshold.
    Returns ``(cost, feature, threshold)`` or ``None``.
    """
    P, N = wp.sum(), wm.sum()
    M = P + N
    best = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        lp = np.cumsum(wp[order])[:-1]
        lm = np.cumsum(wm[order])[:-1]
        rp, rm = P - lp, N - lm
        lt, rt = lp + lm, rp + rm
        ok = (xs[:-1] < xs[1:]) & (lt >= min_leaf) & (rt >= min_leaf)
        if not np.any(ok):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            cost = (lt - (lp * lp + lm * lm) / lt) + (rt - (rp * rp + rm * rm) / rt)
        cost = np.where(ok, cost, np.inf)
        cmin = cost.min()
        k = int(np.flatnonzero(cost <= cmin + _REL_TOL * M)[0])
        if best is None or cost[k] < best[0] - _REL_TOL * M:
            thr = xs[k] + 0.5 * (xs[k + 1] - xs[k])
            if thr >= xs[k + 1]:
                thr = xs[k]
            best = (float(cost[k]), f, float(thr))
    return best


def grow_tree(dataset: LabeledDataset, weights: ClassWeights | None = None, config: TrainConfig | None = None) -> TreeModel:
    """Greedy unpruned tree; splits only on strict Gini decrease."""
    config = config or TrainConfig()
    X = dataset.points
    w = dataset.point_weights(weights)
    pos = dataset.labels == 1
    wp_all = np.where(pos, w, 0.0)
    wm_all = np.where(pos, 0.0, w)

    feature, threshold, left, right, mp, mm = [], [], [], [], [], []
    # nodes are created when popped, which numbers them in pre-order
    stack = [(np.arange(len(X)), 0, -1, False)]
    while stack:
        idx, depth, parent, is_right = stack.pop()
        t = len(feature)
        P, N = float(wp_all[idx].sum()), float(wm_all[idx].sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        mp.append(P)
        mm.append(N)
        if parent >= 0:
            (right if is_right else left)[parent] = t
        M = P + N
        if P == 0 or N == 0:
            continue
        if config.tree_max_depth is not None and depth >= config.tree_max_depth:
            continue
        split = _best_split(X[idx], wp_all[idx], wm_all[idx], config.tree_min_leaf_weight)
        if split is None:
            continue
        cost, f, thr = split
        if (M - (P * P + N * N) / M) - cost <= _REL_TOL * M:
            continue
        feature[t], threshold[t] = f, thr
        go_left = X[idx, f] <= thr
        stack.append((idx[~go_left], depth + 1, t, True))
        stack.append((idx[go_left], depth + 1, t, False))
    return TreeModel(np.array(feature), np.array(threshold), np.array(left), np.array(right), np.array(mp), np.array(mm), X.shape[1])


# -- cost-complexity pruning ---------------------------------------------------


def _structure(tree: TreeModel):
    n = tree.n_nodes
    parent = np.full(n, -1, dtype=np.int64)
    end = np.arange(1, n + 1, dtype=np.int64)
    for t in range(n - 1, -1, -1):
        if tree.feature[t] >= 0:
            parent[tree.left[t]] = t
            parent[tree.right[t]] = t
            end[t] = end[tree.right[t]]
    return parent, end


def _weakest_links(tree: TreeModel) -> list[tuple[float, int]]:
    """Weakest-link pruning sequence as ``(effective alpha, node)`` pairs."""
    P, N = tree.mass_plus, tree.mass_minus
    root_mass = P[0] + N[0]
    internal = tree.feature >= 0
    parent, end = _structure(tree)
    r_node = np.minimum(P, N) / root_mass
    r_sub = np.where(internal, 0.0, r_node)
    leaves = np.where(internal, 0, 1).astype(np.int64)
    for t in range(tree.n_nodes - 1, -1, -1):
        if internal[t]:
            r_sub[t] = r_sub[tree.left[t]] + r_sub[tree.right[t]]
            leaves[t] = leaves[tree.left[t]] + leaves[tree.right[t]]
    active = internal.copy()
    seq = []
    last = 0.0
    while np.any(active):
        idx = np.flatnonzero(active)
        g = np.maximum(r_node[idx] - r_sub[idx], 0.0) / (leaves[idx] - 1)
        k = int(np.argmin(g))
        t = int(idx[k])
        last = max(last, float(g[k]))
        seq.append((last, t))
        dr, dl = r_node[t] - r_sub[t], 1 - leaves[t]
        active[t:end[t]] = False
        r_sub[t], leaves[t] = r_node[t], 1
        a = parent[t]
        while a >= 0:
            r_sub[a] += dr
            leaves[a] += dl
            a = parent[a]
    return seq


def pruning_path(tree: TreeModel) -> np.ndarray:
    """Distinct effective alphas at which the pruned subtree changes, from 0."""
    alphas = [0.0] + [a for a, _ in _weakest_links(tree)]
    return np.unique(np.asarray(alphas))


def _collapse(tree: TreeModel, pruned: list[int]) -> TreeModel:
    _, end = _structure(tree)
    keep = np.ones(tree.n_nodes, dtype=bool)
    feature = np.array(tree.feature)
    for t in pruned:
        keep[t + 1:end[t]] = False
        feature[t] = -1
    new_id = np.cumsum(keep) - 1
    left = np.where(feature >= 0, new_id[np.maximum(tree.left, 0)], -1)
    right = np.where(feature >= 0, new_id[np.maximum(tree.right, 0)], -1)
    threshold = np.where(feature >= 0, tree.threshold, 0.0)
    return TreeModel(
        feature[keep], threshold[keep], left[keep], right[keep],
        tree.mass_plus[keep], tree.mass_minus[keep], tree.dim, dict(tree.info),
    )


def prune_tree(tree: TreeModel, alpha: float) -> TreeModel:
    """Smallest minimising subtree for complexity ``alpha`` (prunes while g <= alpha)."""
    pruned = [t for a, t in _weakest_links(tree) if a <= alpha]
    return _collapse(tree, pruned)


def _stratified_folds(labels: np.ndarray, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    fold = np.empty(len(labels), dtype=np.int64)
    for cls in (1, -1):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        fold[idx] = np.arange(len(idx)) % k
    return fold


def select_ccp_alpha(dataset: LabeledDataset, weights: ClassWeights | None = None, config: TrainConfig | None = None) -> float:
    """Pick the pruning strength by stratified weighted k-fold cross-validation.

    Candidates are the geometric midpoints of the full tree's pruning path.
    The held-out loss is the weighted misclassification mass; ties go to the
    larger alpha (the simpler tree).
    """
    config = config or TrainConfig()
    path = pruning_path(grow_tree(dataset, weights, config))
    if len(path) == 1:
        return 0.0
    cands = np.concatenate([[0.0], np.sqrt(path[1:-1] * path[2:]), [path[-1]]]) if len(path) > 2 else np.array([0.0, path[-1]])
    k = min(config.tree_cv_folds, dataset.n_plus, dataset.n_minus)
    if k < 2:
        return float(cands[0])
    fold = _stratified_folds(dataset.labels, k, config.tree_cv_seed)
    w = dataset.point_weights(weights)
    loss = np.zeros(len(cands))
    for f in range(k):
        train = fold != f
        if len(set(dataset.labels[train].tolist())) < 2:
            continue
        full = grow_tree(dataset.subset(train), weights, config)
        seq = _weakest_links(full)
        Xv, yv, wv = dataset.points[~train], dataset.labels[~train], w[~train]
        for c, a in enumerate(cands):
            sub = _collapse(full, [t for at, t in seq if at <= a])
            pred = np.where(sub.decision_function(Xv) >= 0, 1, -1)
            loss[c] += float(np.sum(wv[pred != yv]))
    best = loss.min()
    tied = np.flatnonzero(loss <= best + _REL_TOL * max(w.sum(), 1.0))
    return float(cands[tied[-1]])


def train_tree(dataset: LabeledDataset, weights: ClassWeights | None = None, config: TrainConfig | None = None) -> TreeModel:
    """Grow on weighted Gini, then prune at ``config.tree_ccp_alpha``.

    With ``tree_ccp_alpha=None`` the strength is chosen by
    :func:`select_ccp_alpha` for these very weights.
    """
    config = config or TrainConfig()
    alpha = config.tree_ccp_alpha
    if alpha is None:
        alpha = select_ccp_alpha(dataset, weights, config)
    tree = prune_tree(grow_tree(dataset, weights, config), alpha)
    info = dict(tree.info, ccp_alpha=float(alpha), n_leaves=tree.n_leaves)
    return TreeModel(tree.feature, tree.threshold, tree.left, tree.right, tree.mass_plus, tree.mass_minus, tree.dim, info)
